"""Exception types shared across the package."""


class SizeGuardError(Exception):
    """An exact-enumeration request exceeds the configured size guard."""


class NonRealRootError(Exception):
    """A counts polynomial produced a root that could not be certified real."""


class RootClusterTooTightError(Exception):
    """Two roots could not be separated at the working precision."""


class OrthogonalityViolationError(Exception):
    """The Cauchy-kernel matrix failed its exact orthogonality identity,
    signalling insufficient working precision."""


class DomainError(Exception):
    """A derived quantity left its proven domain (k' outside (0,1),
    lambda outside (1-k', 1+k'), a non-positive square-root argument)."""


class SingularConfigurationError(Exception):
    """A subset overlap hit coincident roots across sectors, so a
    denominator of the closed product form vanished."""


class CurveMismatchError(Exception):
    """A rapidity point failed the spectral-curve residual check."""


class DegenerateMaxEigenvalueError(Exception):
    """A sector transfer matrix has no isolated top eigenvalue at the
    working tolerance, so the overlap of interest is ill-defined."""


class EigenbasisMismatchError(Exception):
    """The dominant transfer eigenvector and the Hamiltonian ground state
    of the same sector failed their proportionality check."""
