"""Order parameter of the superintegrable chiral Potts model.

Exact cyclotomic combinatorics, form-factor evaluation, and finite-lattice
cross-checks for the spontaneous magnetization.
"""

__version__ = "0.1.0"
