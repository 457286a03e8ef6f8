"""Reproducible command-line runs over every check and computation.

Reports are JSON by default (CSV where a table is the natural artifact)
and byte-identical across repeated runs of the same configuration except
for the generated_at timestamp.  High-precision numbers are serialized
as decimal strings so nothing round-trips through binary floats.

Exit codes: 0 success, 2 invalid configuration, 3 size guard, 4
verification failure (the failing tuples are printed to stderr).

The lattice module is imported inside the commands that need it, after
the optional THREADS environment variable has been applied, so the BLAS
pool can be capped before numpy first loads.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import sys
import time
from dataclasses import asdict, dataclass

import click
import mpmath

from .combi import (
    EdgeConfig,
    compositions,
    gen_function_pair,
    ibi_check,
    identity_check,
    uqp_check,
)
from .drinfeld import drinfeld_projection, lambda_counts, root_transforms, solve_roots
from .errors import SizeGuardError
from .formfactor import (
    couplings,
    dhat_closed,
    dhat_det,
    dhat_sum,
    order_param_sq,
    overlap_product_closed,
)

ORACLE_TOL = 1e-8
ROUTE_TOL = 1e-10
FLOAT_BITS = 53


@dataclass(frozen=True)
class RunConfig:
    """One validated run: the command plus every parameter it consumes."""

    command: str
    N: int
    L: int | None = None
    Q: int | None = None
    P: int | None = None
    r: int | None = None
    kp: str | None = None
    prec: int | None = None
    method: str | None = None
    out: str | None = None
    format: str = "json"

    def public(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _check_kp(kp: str | None, required: bool = True) -> str | None:
    if kp is None:
        if required:
            raise click.UsageError("--kp is required")
        return None
    try:
        value = mpmath.mpf(kp)
    except Exception:
        raise click.UsageError(f"--kp must be a decimal number, got {kp!r}")
    if not 0 < value < 1:
        raise click.UsageError(f"--kp must lie strictly inside (0, 1), got {kp}")
    return kp


def _check_sector(name: str, value: int | None, N: int) -> None:
    if value is not None and not 0 <= value < N:
        raise click.UsageError(f"--{name} must lie in [0, {N}), got {value}")


def _dps(bits: int) -> int:
    return max(int(bits * 0.30103) + 2, 17)


def _num(value, bits: int) -> str:
    if isinstance(value, float):
        return repr(value)
    if not isinstance(value, mpmath.mpf):
        with mpmath.workprec(bits):
            value = mpmath.mpf(value)
    return mpmath.nstr(value, _dps(bits), strip_zeros=False)


def _rec(value, bits: int, **residuals) -> dict:
    return {
        "value": _num(value, bits),
        "precision_bits": bits,
        "residuals": {k: _num(v, bits) for k, v in residuals.items()},
    }


def _emit(config: RunConfig, payload: dict, csv_rows: list[dict] | None = None):
    if config.format == "csv":
        if csv_rows is None:
            raise click.UsageError(
                f"command {config.command} has no CSV representation"
            )
        buffer = io.StringIO()
        writer = csv.DictWriter(
            buffer, fieldnames=list(csv_rows[0].keys()), lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(csv_rows)
        text = buffer.getvalue()
    else:
        report = {
            "schema": 1,
            "command": config.command,
            "config": config.public(),
            "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        report.update(payload)
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if config.out:
        with open(config.out, "w") as handle:
            handle.write(text)
        click.echo(f"wrote {config.out}")
    else:
        click.echo(text, nl=False)


def _verification_failed(failures: list) -> None:
    for item in failures:
        click.echo(f"FAIL {item}", err=True)
    sys.exit(4)


def _size_guard(exc: SizeGuardError, hint: str | None = None) -> None:
    message = str(exc)
    if hint:
        message += f"; {hint}"
    click.echo(message, err=True)
    sys.exit(3)


@click.group()
def main():
    """Exact and numerical toolkit for the superintegrable chiral Potts
    order parameter."""
    threads = os.environ.get("THREADS")
    if threads and "numpy" not in sys.modules:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)


# ---------------------------------------------------------------------------
# exact suites


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def identity(n, width, out, fmt):
    """Exact overlap-table identity over all sectors and indices."""
    config = RunConfig(command="identity", N=n, L=width, out=out, format=fmt)
    try:
        report = identity_check(n, width)
    except SizeGuardError as exc:
        _size_guard(exc)
    payload = {
        "dim": report["dim"],
        "n_configs": report["n_configs"],
        "checked": report["checked"],
        "symmetric": report["symmetric"],
        "pass": report["ok"],
    }
    _emit(config, payload)
    if not report["ok"]:
        _verification_failed(report["failures"])


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--samples", type=int, default=40, show_default=True,
              help="Seeded sample size for the alternating-sum identity "
                   "when exhaustive enumeration is too large.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def appendix(n, width, samples, out, fmt):
    """Exact generating-function, recursion and alternating-sum checks."""
    config = RunConfig(command="appendix", N=n, L=width, out=out, format=fmt)
    failures = []

    genfun_checked = 0
    for digits in compositions(n, width, n - 1):
        definition, closed = gen_function_pair(EdgeConfig(n, width, digits))
        genfun_checked += 1
        if definition != closed:
            failures.append(("genfun", digits))

    try:
        recursion = uqp_check(n, width)
    except SizeGuardError as exc:
        _size_guard(exc)
    failures.extend(("recursion", f) for f in recursion["failures"])

    all_configs = [
        digits
        for total in range(n * (width - 1) + 1)
        for digits in compositions(total, width, n - 1)
    ]
    upper = [d for d in all_configs if sum(d) >= n]
    exhaustive = len(upper) * len(all_configs) <= 4096
    if exhaustive:
        pairs = [(mu, lam) for mu in upper for lam in all_configs]
    else:
        rng = random.Random(0x5EED)
        pairs = [
            (rng.choice(upper), rng.choice(all_configs)) for _ in range(samples)
        ]
    for mu, lam in pairs:
        if not ibi_check(n, width, mu, lam)["ok"]:
            failures.append(("alternating_sum", mu, lam))

    payload = {
        "genfun_checked": genfun_checked,
        "recursion_checked": recursion["checked"],
        "alternating_sum_checked": len(pairs),
        "alternating_sum_exhaustive": exhaustive,
        "pass": not failures,
    }
    _emit(config, payload)
    if failures:
        _verification_failed(failures)


# ---------------------------------------------------------------------------
# root data and form factors


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--Q", "charge", type=int, required=True)
@click.option("--kp", type=str, default=None,
              help="Modulus; include to report the transformed root data.")
@click.option("--prec", type=int, default=192, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def drinfeld(n, width, charge, kp, prec, out, fmt):
    """Sector counting polynomial, certified roots, optional transforms."""
    _check_sector("Q", charge, n)
    kp = _check_kp(kp, required=False)
    config = RunConfig(
        command="drinfeld", N=n, L=width, Q=charge, kp=kp, prec=prec,
        out=out, format=fmt,
    )
    poly = lambda_counts(n, width, charge)
    projection = drinfeld_projection(n, width, charge)
    projection_ok = projection == tuple(n * v for v in poly.lam)
    roots = solve_roots(poly, precision=prec)
    with mpmath.workprec(2 * prec):
        residuals = []
        for root in roots:
            value = mpmath.mpf(0)
            for coeff in reversed(poly.lam):
                value = value * root + coeff
            residuals.append(abs(value))
    payload = {
        "polynomial": poly.to_json(),
        "projection_matches_counts": projection_ok,
        "roots": [
            _rec(root, prec, polynomial_value=res)
            for root, res in zip(roots, residuals)
        ],
        "pass": projection_ok,
    }
    if kp is not None:
        payload["transforms"] = root_transforms(poly, kp, prec).to_json()
    _emit(config, payload)
    if not projection_ok:
        _verification_failed([("projection", n, width, charge)])


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--Q", "charge", type=int, required=True)
@click.option("--P", "charge_p", type=int, required=True)
@click.option("--kp", type=str, required=True)
@click.option("--prec", type=int, default=192, show_default=True)
@click.option("--method", type=click.Choice(["sum", "det", "closed", "all"]),
              default="all", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def formfactor(n, width, charge, charge_p, kp, prec, method, out, fmt):
    """Squared form factor of one sector pair by the requested routes."""
    _check_sector("Q", charge, n)
    _check_sector("P", charge_p, n)
    if charge == charge_p:
        raise click.UsageError("--Q and --P must name distinct sectors")
    kp = _check_kp(kp)
    config = RunConfig(
        command="formfactor", N=n, L=width, Q=charge, P=charge_p, kp=kp,
        prec=prec, method=method, out=out, format=fmt,
    )
    inp = couplings(n, width, Q=charge, P=charge_p, kp=kp, precision=prec)
    routes = {}
    route_residuals = {}
    try:
        with mpmath.workprec(inp.working):
            if method in ("closed", "all"):
                routes["closed"] = dhat_closed(inp)
            if method in ("det", "all"):
                value, orth = dhat_det(inp)
                routes["det"] = value
                route_residuals["orthogonality"] = orth
            if method in ("sum", "all"):
                routes["sum"] = dhat_sum(inp)
    except SizeGuardError as exc:
        _size_guard(exc, hint="use --method det for large root counts")
    names = sorted(routes)
    disagreements = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            diff = abs(routes[a] - routes[b])
            route_residuals[f"{a}_vs_{b}"] = diff
            if diff > ROUTE_TOL:
                disagreements.append((a, b, _num(diff, prec)))
    dhat = routes[names[0]]
    with mpmath.workprec(inp.working):
        overlap = inp.cc_product * dhat**2
        overlap_alt = overlap_product_closed(inp)
        rearranged = abs(overlap - overlap_alt)
    payload = {
        "m": inp.m,
        "mp": inp.mp,
        "swapped": inp.swapped,
        "cc_product": _num(inp.cc_product, prec),
        "dhat": {name: _rec(routes[name], prec) for name in names},
        "overlap": _rec(overlap, prec, rearranged_product=rearranged,
                        **route_residuals),
        "pass": not disagreements,
    }
    _emit(config, payload)
    if disagreements:
        _verification_failed(disagreements)


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--r", "offset", type=int, required=True)
@click.option("--kp", type=str, required=True)
@click.option("--prec", type=int, default=192, show_default=True)
@click.option("--method", type=click.Choice(["sum", "det", "closed", "all"]),
              default="closed", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def order(n, width, offset, kp, prec, method, out, fmt):
    """Squared magnetization of charge r at one width, plus its limit."""
    kp = _check_kp(kp)
    if not 1 <= offset < n:
        raise click.UsageError(f"--r must lie in [1, {n}), got {offset}")
    config = RunConfig(
        command="order", N=n, L=width, r=offset, kp=kp, prec=prec,
        method=method, out=out, format=fmt,
    )
    try:
        result = order_param_sq(n, offset, kp, width, precision=prec, method=method)
    except SizeGuardError as exc:
        _size_guard(
            exc,
            hint="use --method det for large widths" if method == "sum" else None,
        )
    payload = _order_payload(result, prec)
    _emit(config, payload)


def _order_payload(result: dict, prec: int) -> dict:
    per_sector = []
    for entry in result["per_sector"]:
        row = {
            "Q": entry["Q"],
            "P": entry["P"],
            "m": entry["m"],
            "mp": entry["mp"],
            "swapped": entry["swapped"],
            "cc_product": _num(entry["cc_product"], prec),
            "dhat": _rec(
                entry["dhat"], prec,
                **{f"route_{k}": abs(v - entry["dhat"])
                   for k, v in entry["routes"].items()},
                **({"orthogonality": entry["orthogonality_residual"]}
                   if "orthogonality_residual" in entry else {}),
            ),
            "value": _num(entry["value"], prec),
            "ratio_low": _num(entry["r_low"], prec),
            "ratio_low_limit": _num(entry["r_low_limit"], prec),
            "ratio_high": _num(entry["r_high"], prec),
            "ratio_high_limit": _num(entry["r_high_limit"], prec),
        }
        per_sector.append(row)
    return {
        "per_sector": per_sector,
        "finite_L": _rec(result["finite_L"], prec, sector_spread=result["spread"]),
        "limit": _rec(result["limit"], prec),
        "abs_error": _num(result["abs_error"], prec),
    }


# ---------------------------------------------------------------------------
# lattice oracle


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--kp", type=str, required=True)
@click.option("--Q", "charge", type=int, default=None,
              help="Restrict to one bra sector (requires --P).")
@click.option("--P", "charge_p", type=int, default=None)
@click.option("--prec", type=int, default=192, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def oracle(n, width, kp, charge, charge_p, prec, out, fmt):
    """Lattice overlap products against the closed form, pair by pair."""
    kp = _check_kp(kp)
    _check_sector("Q", charge, n)
    _check_sector("P", charge_p, n)
    if (charge is None) != (charge_p is None):
        raise click.UsageError("--Q and --P must be given together")
    config = RunConfig(
        command="oracle", N=n, L=width, Q=charge, P=charge_p, kp=kp,
        prec=prec, out=out, format=fmt,
    )
    from . import lattice

    kp_float = float(kp)
    try:
        spectra = lattice.product_spectra(n, width, kp_float)
    except SizeGuardError as exc:
        _size_guard(exc)
    if charge is None:
        pairs = [(q, p) for q in range(n) for p in range(n) if p != q]
    else:
        if charge == charge_p:
            raise click.UsageError("--Q and --P must name distinct sectors")
        pairs = [(charge, charge_p)]
    rows = []
    failures = []
    biorth = max(spec.biorth_residual for spec in spectra)
    recon = max(spec.reconstruction_residual for spec in spectra)
    for q, p in pairs:
        lat = lattice.overlap_product(n, width, kp_float, q, p, spectra=spectra)
        closed = overlap_product_closed(
            couplings(n, width, Q=q, P=p, kp=kp, precision=prec)
        )
        diff = abs(lat - float(closed))
        rows.append({
            "Q": q,
            "P": p,
            "lattice": _num(lat, FLOAT_BITS),
            "closed": _num(closed, prec),
            "abs_diff": _num(diff, FLOAT_BITS),
        })
        if diff > ORACLE_TOL:
            failures.append((q, p, _num(diff, FLOAT_BITS)))
    payload = {
        "pairs": [
            {
                "Q": row["Q"],
                "P": row["P"],
                "lattice": _rec(float(row["lattice"]), FLOAT_BITS,
                                biorthonormality=biorth, reconstruction=recon),
                "closed": {"value": row["closed"], "precision_bits": prec,
                           "residuals": {}},
                "abs_diff": row["abs_diff"],
            }
            for row in rows
        ],
        "tolerance": repr(ORACLE_TOL),
        "pass": not failures,
    }
    _emit(config, payload, csv_rows=rows)
    if failures:
        _verification_failed(failures)


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--L", "width", type=int, required=True)
@click.option("--kp", type=str, required=True)
@click.option("--r", "offset", type=int, required=True)
@click.option("--ell", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              help="CSV emits the spectral dump instead of the separation table.")
def correlate(n, width, kp, offset, ell, out, fmt):
    """Pair correlation against separation, with its large-distance limit.

    The JSON table records every separation up to --ell; the CSV format
    dumps per-sector spectra: one row per contributing eigenvector with
    its eigenvalue modulus and its overlap weight with the dominant
    vector of the bra sector.
    """
    kp = _check_kp(kp)
    if not 1 <= offset < n:
        raise click.UsageError(f"--r must lie in [1, {n}), got {offset}")
    if ell < 0:
        raise click.UsageError(f"--ell must be nonnegative, got {ell}")
    config = RunConfig(
        command="correlate", N=n, L=width, r=offset, kp=kp, out=out, format=fmt,
    )
    from . import lattice

    kp_float = float(kp)
    try:
        spectra = lattice.product_spectra(n, width, kp_float)
    except SizeGuardError as exc:
        _size_guard(exc)
    table = [
        {
            "ell": sep,
            "value": _num(
                lattice.pair_correlation(
                    n, width, kp_float, offset, sep, spectra=spectra
                ),
                FLOAT_BITS,
            ),
        }
        for sep in range(ell + 1)
    ]
    limit = sum(
        lattice.overlap_product(n, width, kp_float, q, (q - offset) % n,
                                spectra=spectra)
        for q in range(n)
    ) / n
    deviation = abs(float(table[-1]["value"]) - limit)
    csv_rows = []
    for q in range(n):
        p = (q - offset) % n
        forward = spectra[q].left[0] @ spectra[p].right
        backward = spectra[p].left @ spectra[q].right[:, 0]
        weights = (forward * backward).real
        moduli = abs(spectra[p].eigenvalues)
        for j in range(spectra[p].dim):
            csv_rows.append({
                "Q": q,
                "j": j,
                "eigenvalue_modulus": repr(float(moduli[j])),
                "overlap_with_maxQ": repr(float(weights[j])),
            })
    payload = {
        "separations": table,
        "limit": _rec(limit, FLOAT_BITS),
        "final_deviation": repr(deviation),
    }
    _emit(config, payload, csv_rows=csv_rows)


@main.command()
@click.option("--N", "n", type=int, required=True)
@click.option("--r", "offset", type=int, required=True)
@click.option("--kp", type=str, required=True)
@click.option("--L", "widths", type=int, multiple=True, required=True,
              help="Repeat for each width, ascending.")
@click.option("--prec", type=int, default=192, show_default=True)
@click.option("--method", type=click.Choice(["sum", "det", "closed", "all"]),
              default="det", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv",
              show_default=True)
def sweep(n, offset, kp, widths, prec, method, out, fmt):
    """Magnetization convergence across widths; one row per width.

    The reported m and m' are the root counts of the charge-0 pair.
    Runtimes appear only in the CSV artifact so the JSON stays
    reproducible byte for byte.
    """
    kp = _check_kp(kp)
    if not 1 <= offset < n:
        raise click.UsageError(f"--r must lie in [1, {n}), got {offset}")
    if list(widths) != sorted(set(widths)):
        raise click.UsageError("--L values must be strictly ascending")
    config = RunConfig(
        command="sweep", N=n, r=offset, kp=kp, prec=prec, method=method,
        out=out, format=fmt,
    )
    rows = []
    errors = []
    for width in widths:
        started = time.perf_counter()
        try:
            result = order_param_sq(
                n, offset, kp, width, precision=prec, method=method
            )
        except SizeGuardError as exc:
            _size_guard(
                exc,
                hint="use --method det for large widths" if method == "sum" else None,
            )
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        lead = result["per_sector"][0]
        errors.append(result["abs_error"])
        rows.append({
            "L": width,
            "m": lead["m"],
            "mp": lead["mp"],
            "finite_L": _num(result["finite_L"], prec),
            "limit": _num(result["limit"], prec),
            "abs_error": _num(result["abs_error"], prec),
            "runtime_ms": f"{elapsed_ms:.1f}",
        })
    monotone = all(a >= b for a, b in zip(errors, errors[1:]))
    payload = {
        "rows": [{k: v for k, v in row.items() if k != "runtime_ms"}
                 for row in rows],
        "abs_error_monotone": monotone,
    }
    _emit(config, payload, csv_rows=rows)


if __name__ == "__main__":
    main()
