"""Monte Carlo estimates and statistical verification of the identities.

Every identity check evaluates both sides on the same path ensemble
(common random numbers): where the algebra forces pathwise equality
(null shift, constant functionals) the discrepancy is exactly zero, and
elsewhere the variance of the difference is what sets the reported
standard error.  Estimates stream over fixed path blocks, so memory
stays bounded and results are independent of batching; accumulation
uses numpy's pairwise summation over per-path values, which is
deterministic for a given (seed, grid, n).

Integrability of the compared functionals is a hypothesis of the
identities, not something a sampler can certify; reports carry an
``assumptions`` field naming what was taken on faith.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .cameron_martin import CMElement, SuppElement, as_cm, cm_inner, inner_with_a, odot
from .errors import BadDomain, ProfileMismatch, UnsupportedFunctional
from .feynman import (
    CosLinear,
    ExpLinear,
    FunctionalSpec,
    Monomial,
    MonomialSpec,
    _linear_factors,
)
from .paths import DEFAULT_GRID_N, TimeGrid, left_density, stream_increments

DEFAULT_SIGMA_THRESHOLD = 3.0
_EXACT_TOL = 1e-12


@dataclass(frozen=True)
class MCReport:
    """One Monte Carlo estimate with its combined standard error."""

    estimate: complex
    std_error: float
    n_paths: int
    grid_size: int
    seed: int
    wall_time: float
    assumptions: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "estimate": {"re": self.estimate.real, "im": self.estimate.imag},
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "grid_size": self.grid_size,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "assumptions": list(self.assumptions),
        }


@dataclass(frozen=True)
class IdentityReport:
    """Two coupled estimates and their sigma-distance."""

    lhs: MCReport
    rhs: MCReport
    discrepancy: float
    sigma_ratio: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.sigma_ratio < self.threshold

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "discrepancy": self.discrepancy,
            "sigma_ratio": self.sigma_ratio,
            "threshold": self.threshold,
            "pass": self.passed,
        }


def _mean_se(vals: np.ndarray):
    n = vals.shape[0]
    mean = complex(vals.mean())
    if n < 2:
        return mean, 0.0
    centered = vals - mean
    var = float(np.mean(centered.real**2) + np.mean(centered.imag**2)) * n / (n - 1)
    return mean, float(np.sqrt(var / n))


def _pwz_columns(elements, profile, grid: TimeGrid, n: int, seed: int) -> np.ndarray:
    """U[i, j] = stochastic integral of elements[j] along path i, streamed."""
    dens = np.column_stack([left_density(e, grid) for e in elements])
    out = np.empty((n, dens.shape[1]))
    for p0, inc in stream_increments(profile, grid, n, seed):
        out[p0 : p0 + inc.shape[0]] = inc @ dens
    return out


def _functional_profile(F: FunctionalSpec):
    factors = _linear_factors(F)
    return as_cm(factors[0]).profile if factors else F.spec.theta.profile


def _functional_assumptions(F: FunctionalSpec) -> tuple[str, ...]:
    notes = ["integrability of the compared functionals is assumed, not tested"]
    if isinstance(F, ExpLinear) and abs(complex(F.c).real) > 0.0:
        notes.append("unbounded exponential accepted via allow_unbounded; heavy tails possible")
    return tuple(notes)


def _factor_values(F: FunctionalSpec, cols: np.ndarray, consts, scale: float):
    """Per-factor path values scale*cols[:, j] + consts[j]."""
    m = cols.shape[1]
    return [scale * cols[:, j] + consts[j] for j in range(m)]


def _functional_of(F: FunctionalSpec, factor_vals, n: int):
    if isinstance(F, Monomial):
        out = np.ones(n)
        for v in factor_vals:
            out = out * v
        return out
    v = factor_vals[0]
    if isinstance(F, ExpLinear):
        return np.exp(F.c * v)
    if isinstance(F, CosLinear):
        return np.cos(v)
    raise UnsupportedFunctional("unknown functional %r" % (F,))


def _variation_of(F: FunctionalSpec, factor_vals, dir_consts, dir_scale: float, n: int):
    """Per-path first variation with precomputed direction scalars."""
    if isinstance(F, Monomial):
        m = len(factor_vals)
        total = np.zeros(n)
        for l in range(m):
            term = np.full(n, dir_scale * dir_consts[l])
            for j in range(m):
                if j != l:
                    term = term * factor_vals[j]
            total += term
        return total
    v = factor_vals[0]
    d = dir_scale * dir_consts[0]
    if isinstance(F, ExpLinear):
        return F.c * d * np.exp(F.c * v)
    if isinstance(F, CosLinear):
        return -np.sin(v) * d
    raise UnsupportedFunctional("unknown functional %r" % (F,))


def _report(vals, n, grid, seed, t0, assumptions=()):
    mean, se = _mean_se(vals)
    return MCReport(
        estimate=mean,
        std_error=se,
        n_paths=n,
        grid_size=grid.N,
        seed=seed,
        wall_time=time.perf_counter() - t0,
        assumptions=tuple(assumptions),
    )


def _identity_report(lhs_vals, rhs_vals, n, grid, seed, threshold, t0, assumptions=()):
    lhs = _report(lhs_vals, n, grid, seed, t0, assumptions)
    rhs = _report(rhs_vals, n, grid, seed, t0, assumptions)
    diff_mean, diff_se = _mean_se(lhs_vals - rhs_vals)
    discrepancy = abs(diff_mean)
    scale = max(1.0, abs(lhs.estimate), abs(rhs.estimate))
    if diff_se == 0.0:
        sigma = 0.0 if discrepancy <= _EXACT_TOL * scale else np.inf
    else:
        sigma = discrepancy / diff_se
    return IdentityReport(
        lhs=lhs, rhs=rhs, discrepancy=discrepancy, sigma_ratio=float(sigma),
        threshold=threshold,
    )


def _default_grid(profile, F: FunctionalSpec, extra, grid, n=DEFAULT_GRID_N):
    if grid is not None:
        return grid
    elements = list(_linear_factors(F)) + [as_cm(e) for e in extra]
    return TimeGrid.build(profile, elements, n=n)


def mc_fsi(
    F: FunctionalSpec,
    k: SuppElement,
    lambda_real: float,
    n: int,
    seed: int,
    grid: TimeGrid | None = None,
) -> MCReport:
    """Monte Carlo estimate of E[F(lambda^{-1/2} Z_k(x, .))] for real
    lambda > 0."""
    lam = float(lambda_real)
    if not lam > 0.0:
        raise BadDomain("lambda must be a positive real, got %r" % lambda_real)
    profile = _functional_profile(F)
    if as_cm(k).profile != profile:
        raise ProfileMismatch("k lives over a different profile than F")
    grid = _default_grid(profile, F, [k], grid)
    factors = [odot(u, k) for u in _linear_factors(F)]
    t0 = time.perf_counter()
    if not factors:
        vals = np.ones(n)
    else:
        cols = _pwz_columns(factors, profile, grid, n, seed)
        fv = _factor_values(F, cols, np.zeros(len(factors)), lam**-0.5)
        vals = _functional_of(F, fv, n)
    return _report(vals, n, grid, seed, t0, _functional_assumptions(F))


def verify_translation(
    F: FunctionalSpec,
    theta: CMElement,
    k1: SuppElement,
    k2: SuppElement,
    n: int,
    seed: int,
    grid: TimeGrid | None = None,
    threshold: float = DEFAULT_SIGMA_THRESHOLD,
) -> IdentityReport:
    """Translation identity: shifting Z_{k1}-paths by the deterministic
    path Z_{k2}(theta (.) k1, .) equals an exponentially reweighted
    expectation, with the densities' exact inner products in the weight.
    Both sides share one ensemble.
    """
    profile = _functional_profile(F)
    _require_profiles(profile, theta, k1, k2)
    grid = _default_grid(profile, F, [theta, k1, k2], grid)
    factors = _linear_factors(F)
    theta_k1 = odot(theta, k1)
    theta_k2 = as_cm(odot(theta, k2))
    shift_consts = [cm_inner(odot(u, k2), theta_k1) for u in factors]
    weight = float(np.exp(-0.5 * cm_inner(theta_k2, theta_k2) - inner_with_a(theta_k2)))

    t0 = time.perf_counter()
    elements = [odot(u, k1) for u in factors] + [theta_k2]
    cols = _pwz_columns(elements, profile, grid, n, seed)
    m = len(factors)
    lhs_vals = _functional_of(F, _factor_values(F, cols[:, :m], shift_consts, 1.0), n)
    plain = _functional_of(F, _factor_values(F, cols[:, :m], np.zeros(m), 1.0), n)
    rhs_vals = weight * plain * np.exp(cols[:, m])
    return _identity_report(
        lhs_vals, rhs_vals, n, grid, seed, threshold, t0, _functional_assumptions(F)
    )


def verify_parts(
    F: FunctionalSpec,
    theta: CMElement,
    k1: SuppElement,
    k2: SuppElement,
    rho: float,
    n: int,
    seed: int,
    grid: TimeGrid | None = None,
    threshold: float = DEFAULT_SIGMA_THRESHOLD,
) -> IdentityReport:
    """Integration-by-parts identity at path scale rho > 0: the mean of
    the first variation of F at rho-scaled Z_{k1}-paths (direction
    rho Z_{k2}(theta (.) k1, .)) against the product-minus-mean form."""
    rho = float(rho)
    if not rho > 0.0:
        raise BadDomain("rho must be positive, got %r" % rho)
    return _parts_engine(F, theta, k1, k2, rho, rho, 1.0, n, seed, grid, threshold)


def verify_cs_precursor(
    F,
    theta: CMElement,
    k1: SuppElement,
    k2: SuppElement,
    lambda_real: float,
    n: int,
    seed: int,
    grid: TimeGrid | None = None,
    threshold: float = DEFAULT_SIGMA_THRESHOLD,
) -> IdentityReport:
    """Real-lambda precursor of the Cameron-Storvick identity: the
    variation at lambda^{-1/2}-scaled paths (direction unscaled) against
    lambda-weighted product and lambda^{1/2}-weighted plain means.
    Reduces to verify_parts at lambda = 1."""
    lam = float(lambda_real)
    if not lam > 0.0:
        raise BadDomain("lambda must be a positive real, got %r" % lambda_real)
    if isinstance(F, MonomialSpec):
        F = Monomial(F)
    if not isinstance(F, Monomial):
        raise UnsupportedFunctional("the precursor check is defined for monomials")
    return _parts_engine(
        F, theta, k1, k2, lam**-0.5, 1.0, lam**0.5, n, seed, grid, threshold
    )


def _parts_engine(
    F, theta, k1, k2, arg_scale, dir_scale, rhs_prefactor, n, seed, grid, threshold
):
    profile = _functional_profile(F)
    _require_profiles(profile, theta, k1, k2)
    grid = _default_grid(profile, F, [theta, k1, k2], grid)
    factors = _linear_factors(F)
    theta_k1 = odot(theta, k1)
    theta_k2 = as_cm(odot(theta, k2))
    dir_consts = [cm_inner(odot(u, k2), theta_k1) for u in factors]
    pairing_a = inner_with_a(theta_k2)

    t0 = time.perf_counter()
    elements = [odot(u, k1) for u in factors] + [theta_k2]
    cols = _pwz_columns(elements, profile, grid, n, seed)
    m = len(factors)
    fv = _factor_values(F, cols[:, :m], np.zeros(m), arg_scale)
    lhs_vals = _variation_of(F, fv, dir_consts, dir_scale, n)
    rhs_vals = rhs_prefactor * (cols[:, m] - pairing_a) * _functional_of(F, fv, n)
    return _identity_report(
        lhs_vals, rhs_vals, n, grid, seed, threshold, t0, _functional_assumptions(F)
    )


def _require_profiles(profile, *elements):
    for e in elements:
        if as_cm(e).profile != profile:
            raise ProfileMismatch("all elements must share the functional's profile")


# ---------------------------------------------------------------------------
# CSV ledger.

LEDGER_COLUMNS = [
    "check",
    "config_hash",
    "n",
    "grid",
    "seed",
    "lhs_re",
    "lhs_im",
    "rhs_re",
    "rhs_im",
    "se",
    "sigma_ratio",
    "pass",
]


def ledger_row(
    name: str,
    config_hash: str,
    *,
    lhs: complex,
    rhs: complex,
    n: int = 0,
    grid: int = 0,
    seed: int = 0,
    se: float = 0.0,
    sigma_ratio: float = 0.0,
    passed: bool,
) -> list[str]:
    fmt = lambda x: "%.17g" % float(x)
    return [
        name,
        config_hash,
        str(int(n)),
        str(int(grid)),
        str(int(seed)),
        fmt(complex(lhs).real),
        fmt(complex(lhs).imag),
        fmt(complex(rhs).real),
        fmt(complex(rhs).imag),
        fmt(se),
        fmt(sigma_ratio),
        "true" if passed else "false",
    ]


def identity_ledger_row(name: str, config_hash: str, report: IdentityReport) -> list[str]:
    return ledger_row(
        name,
        config_hash,
        lhs=report.lhs.estimate,
        rhs=report.rhs.estimate,
        n=report.lhs.n_paths,
        grid=report.lhs.grid_size,
        seed=report.lhs.seed,
        se=report.lhs.std_error,
        sigma_ratio=report.sigma_ratio,
        passed=report.passed,
    )


def append_ledger(path, rows):
    """Append rows, writing the header when the file does not exist yet."""
    new_file = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new_file:
            writer.writerow(LEDGER_COLUMNS)
        writer.writerows(rows)
