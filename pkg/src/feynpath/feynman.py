"""Closed-form analytic Feynman integrals of monomial functionals.

A monomial functional is a product of stochastic integrals
prod_j (theta (.) k_j, x)~.  Those integrals are jointly Gaussian, with
means paired against the mean function a and covariances given by the
db inner products, so every closed form in this module is driven by one
:class:`GaussianSummary`.

Two independent evaluation routes are provided on purpose:

* :func:`feynman_monomial` peels off the last factor with the
  integration-by-parts recurrence (memoized over index subsets), and
* :func:`wick_moment` enumerates all partitions of the factor indices
  into singletons and pairs (the Gaussian moment expansion).

Agreement of the two routes is the library's central self-check.

All square roots of the complex parameter use the principal branch with
nonnegative real part, and lambda^{-1/2} is computed as the principal
root of 1/lambda, so the Feynman limit lambda -> -iq stays on the
correct sheet.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .cameron_martin import (
    CMElement,
    SuppElement,
    as_cm,
    cm_inner,
    inner_with_a,
    odot,
)
from .errors import (
    BadDomain,
    ProfileMismatch,
    TooLargeDegree,
    UnsupportedFunctional,
    ZeroParameter,
)
from .paths import TimeGrid, pwz_integral

MAX_MONOMIAL_DEGREE = 12
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class ComplexParam:
    """Scaling parameter: either lambda with Re > 0, or Feynman q != 0."""

    mode: str
    value: complex

    @classmethod
    def analytic(cls, lam) -> "ComplexParam":
        lam = complex(lam)
        if not (lam.real > 0.0 and cmath.isfinite(lam)):
            raise BadDomain("lambda must have positive real part, got %r" % lam)
        return cls("lambda", lam)

    @classmethod
    def feynman(cls, q: float) -> "ComplexParam":
        q = float(q)
        if q == 0.0 or not np.isfinite(q):
            raise ZeroParameter("q must be a non-zero real number, got %r" % q)
        return cls("q", complex(q))

    @property
    def effective_lambda(self) -> complex:
        """lambda itself, or -iq in Feynman mode."""
        if self.mode == "lambda":
            return self.value
        return -1j * self.value

    @property
    def sqrt_lambda(self) -> complex:
        return cmath.sqrt(self.effective_lambda)

    @property
    def inv_sqrt_lambda(self) -> complex:
        return cmath.sqrt(1.0 / self.effective_lambda)


@dataclass(frozen=True)
class MonomialSpec:
    """Product functional prod_{j<m} (theta (.) ks[j], x)~; m = 0 is 1."""

    theta: CMElement
    ks: tuple[SuppElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(self.ks))
        for k in self.ks:
            if as_cm(k).profile != self.theta.profile:
                raise ProfileMismatch("monomial factors over different profiles")

    @property
    def m(self) -> int:
        return len(self.ks)

    def elements(self) -> list[CMElement]:
        return [as_cm(odot(self.theta, k)) for k in self.ks]


@dataclass(frozen=True)
class Monomial:
    spec: MonomialSpec


@dataclass(frozen=True)
class ExpLinear:
    """F(x) = exp(c * (w0, x)~); bounded when c is purely imaginary.

    A real part in c makes the functional unbounded along paths; pass
    allow_unbounded=True to accept that (heavy tails are on the caller).
    """

    w0: CMElement
    c: complex
    allow_unbounded: bool = field(default=False)

    def __post_init__(self):
        if abs(complex(self.c).real) > 0.0 and not self.allow_unbounded:
            raise UnsupportedFunctional(
                "exp-linear with a real exponent part needs allow_unbounded=True"
            )


@dataclass(frozen=True)
class CosLinear:
    """F(x) = cos((w0, x)~)."""

    w0: CMElement


FunctionalSpec = Monomial | ExpLinear | CosLinear


@dataclass(frozen=True)
class GaussianSummary:
    """Means and covariances of the factor integrals of a monomial."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        cov = cov.reshape(mean.size, mean.size) if cov.size else np.zeros((0, 0))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if mean.size:
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise ValueError("covariance must be symmetric")
            w = np.linalg.eigvalsh(0.5 * (cov + cov.T))
            if w.min() < -_PSD_TOL * max(1.0, abs(w).max()):
                raise ValueError(
                    "covariance is not positive semidefinite (min eig %r)" % w.min()
                )

    @property
    def m(self) -> int:
        return self.mean.size


def summary_of_elements(elements) -> GaussianSummary:
    """Gaussian summary of arbitrary Cameron-Martin elements: means from
    the pairing with a, covariances from the db inner product."""
    els = [as_cm(e) for e in elements]
    m = len(els)
    mean = np.array([inner_with_a(e) for e in els])
    cov = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            cov[i, j] = cov[j, i] = cm_inner(els[i], els[j])
    return GaussianSummary(mean=mean, cov=cov)


def monomial_summary(spec: MonomialSpec) -> GaussianSummary:
    return summary_of_elements(spec.elements())


# ---------------------------------------------------------------------------
# Route 1: Gaussian moment expansion (partition enumeration).


def _partial_pairings(indices):
    """All ways to split the index tuple into disjoint pairs plus
    singletons, yielded as (pairs, singles)."""
    if not indices:
        yield (), ()
        return
    first, rest = indices[0], indices[1:]
    for pairs, singles in _partial_pairings(rest):
        yield pairs, (first,) + singles
    for pos in range(len(rest)):
        other = rest[pos]
        remaining = rest[:pos] + rest[pos + 1 :]
        for pairs, singles in _partial_pairings(remaining):
            yield ((first, other),) + pairs, singles


def gaussian_moment(summary: GaussianSummary) -> float:
    """E[prod X_j] for the summarized Gaussian vector, by enumerating
    partitions into pair covariances and singleton means."""
    if summary.m > MAX_MONOMIAL_DEGREE:
        raise TooLargeDegree(
            "moment enumeration capped at m = %d" % MAX_MONOMIAL_DEGREE
        )
    mean, cov = summary.mean, summary.cov
    total = 0.0
    for pairs, singles in _partial_pairings(tuple(range(summary.m))):
        term = 1.0
        for i, j in pairs:
            term *= cov[i, j]
        for i in singles:
            term *= mean[i]
        total += term
    return total


def wick_moment(summary: GaussianSummary, param: ComplexParam) -> complex:
    """lambda^{-m/2} times the plain Gaussian moment; in Feynman mode
    lambda = -iq on the principal branch."""
    return param.inv_sqrt_lambda ** summary.m * gaussian_moment(summary)


# ---------------------------------------------------------------------------
# Route 2: the integration-by-parts recurrence.


def _recurrence_value(summary: GaussianSummary, param: ComplexParam) -> complex:
    if summary.m > MAX_MONOMIAL_DEGREE:
        raise TooLargeDegree(
            "recurrence memoization capped at m = %d" % MAX_MONOMIAL_DEGREE
        )
    mean, cov = summary.mean, summary.cov
    inv = param.inv_sqrt_lambda
    i_over_q = inv * inv  # equals 1/lambda = i/q in Feynman mode
    memo: dict[int, complex] = {}

    def ev(mask: int) -> complex:
        if mask == 0:
            return 1.0 + 0.0j
        got = memo.get(mask)
        if got is not None:
            return got
        idx = [i for i in range(summary.m) if mask >> i & 1]
        last = idx[-1]
        if len(idx) == 1:
            val = inv * mean[last]
        elif len(idx) == 2:
            a, b = idx
            val = i_over_q * (cov[a, b] + mean[a] * mean[b])
        else:
            rest = mask & ~(1 << last)
            val = inv * mean[last] * ev(rest)
            for l in idx[:-1]:
                val += i_over_q * cov[l, last] * ev(rest & ~(1 << l))
        memo[mask] = val
        return val

    return ev((1 << summary.m) - 1)


def feynman_monomial(spec: MonomialSpec, q: float, audit: list | None = None) -> complex:
    """Analytic Feynman integral of the monomial at parameter q, by the
    subset-memoized peel-off recurrence."""
    param = ComplexParam.feynman(q)
    summary = monomial_summary(spec)
    value = _recurrence_value(summary, param)
    _audit(audit, "feynman_monomial", summary, {"q": q}, value)
    return value


def analytic_fsi_monomial(spec: MonomialSpec, lam, audit: list | None = None) -> complex:
    """Analytic function-space integral at lambda in the right half
    plane: lambda^{-m/2} times the plain Gaussian moment (a polynomial in
    lambda^{-1/2}, so restriction to real lambda matches Monte Carlo)."""
    param = ComplexParam.analytic(lam)
    summary = monomial_summary(spec)
    value = wick_moment(summary, param)
    _audit(audit, "analytic_fsi_monomial", summary, {"lambda": complex(lam)}, value)
    return value


def feynman_elements(
    elements, param: ComplexParam, method: str = "recurrence"
) -> complex:
    """Feynman/analytic integral of a product of stochastic integrals of
    arbitrary elements, selecting the evaluation route."""
    summary = summary_of_elements(elements)
    if method == "recurrence":
        return _recurrence_value(summary, param)
    if method == "wick":
        return wick_moment(summary, param)
    raise ValueError("method must be 'recurrence' or 'wick'")


# ---------------------------------------------------------------------------
# First variation and the Cameron-Storvick identity.


def _linear_factors(F: FunctionalSpec) -> list[CMElement]:
    if isinstance(F, Monomial):
        return F.spec.elements()
    if isinstance(F, (ExpLinear, CosLinear)):
        return [F.w0]
    raise UnsupportedFunctional("unknown functional %r" % (F,))


def functional_value(F: FunctionalSpec, path_values, grid: TimeGrid):
    """Evaluate a functional on concrete path values (row or stack)."""
    shape = np.shape(path_values)[:-1]
    if isinstance(F, Monomial):
        out = np.ones(shape) if shape else 1.0
        for u in F.spec.elements():
            out = out * pwz_integral(u, path_values, grid)
        return out
    if isinstance(F, (ExpLinear, CosLinear)):
        v = pwz_integral(F.w0, path_values, grid)
        return np.exp(F.c * v) if isinstance(F, ExpLinear) else np.cos(v)
    raise UnsupportedFunctional("unknown functional %r" % (F,))


def first_variation(
    F: FunctionalSpec,
    k1: SuppElement,
    k2: SuppElement,
    x_path,
    w: CMElement,
    grid: TimeGrid | None = None,
    audit: list | None = None,
):
    """Directional derivative of F along Gaussian paths.

    Differentiates alpha -> F(Z_{k1}(x, .) + alpha Z_{k2}(w, .)) at 0.
    The direction enters only through the exact scalars
    (u (.) k2, w) per linear factor u of F; the path argument enters
    through (u (.) k1, x)~.  For functionals whose variation does not
    depend on x (monomials of degree <= 1) x_path may be None and a
    scalar is returned; otherwise per-path values are returned.
    """
    factors = _linear_factors(F)
    dir_consts = [cm_inner(odot(u, k2), w) for u in factors]
    if audit is not None:
        audit.append({"op": "first_variation", "direction_scalars": list(dir_consts)})
    if isinstance(F, Monomial):
        m = F.spec.m
        if m == 0:
            return 0.0
        if m == 1:
            return dir_consts[0]
        if x_path is None or grid is None:
            raise ValueError("a path and grid are required for degree >= 2")
        u_vals = np.stack(
            [pwz_integral(odot(u, k1), x_path, grid) for u in factors], axis=-1
        )
        total = np.zeros(u_vals.shape[:-1])
        for l in range(m):
            term = np.full(u_vals.shape[:-1], dir_consts[l])
            for j in range(m):
                if j != l:
                    term = term * u_vals[..., j]
            total = total + term
        return float(total) if total.ndim == 0 else total
    if x_path is None or grid is None:
        raise ValueError("a path and grid are required for this functional")
    u_val = pwz_integral(odot(factors[0], k1), x_path, grid)
    if isinstance(F, ExpLinear):
        return F.c * dir_consts[0] * np.exp(F.c * u_val)
    return -np.sin(u_val) * dir_consts[0]


def cameron_storvick_residual(
    F,
    theta: CMElement,
    k1: SuppElement,
    k2: SuppElement,
    q: float,
    method: str = "recurrence",
    audit: list | None = None,
) -> complex:
    """Both sides of the Cameron-Storvick identity in closed form;
    returns LHS - RHS (zero up to rounding when the identity holds).

    LHS is the Feynman integral of the first variation of F along
    Z_{k1}-paths in the direction Z_{k2}(theta (.) k1, .); RHS combines
    the Feynman integrals of (theta, Z_{k2}(x, .))~ F(Z_{k1}(x, .)) and
    of F(Z_{k1}(x, .)).  Every expectation reduces to a monomial in
    stochastic integrals of explicit elements via the kernel-transport
    identity, so both sides are exact finite expressions.
    """
    spec = F.spec if isinstance(F, Monomial) else F
    if not isinstance(spec, MonomialSpec):
        raise UnsupportedFunctional("closed-form residual needs a monomial")
    param = ComplexParam.feynman(q)
    els = spec.elements()
    base = [as_cm(odot(u, k1)) for u in els]
    theta_k2 = as_cm(odot(theta, k2))
    theta_k1 = odot(theta, k1)

    lhs = 0.0 + 0.0j
    for l in range(spec.m):
        c_l = cm_inner(odot(els[l], k2), theta_k1)
        rest = base[:l] + base[l + 1 :]
        lhs += c_l * feynman_elements(rest, param, method)

    t_prod = feynman_elements([theta_k2] + base, param, method)
    t_plain = feynman_elements(base, param, method)
    pairing_a = inner_with_a(theta_k2)
    minus_iq = param.effective_lambda
    rhs = minus_iq * t_prod - param.sqrt_lambda * pairing_a * t_plain

    if audit is not None:
        audit.append(
            {
                "op": "cameron_storvick_residual",
                "q": q,
                "method": method,
                "pairing_a": pairing_a,
                "lhs": lhs,
                "rhs": rhs,
            }
        )
    return lhs - rhs


def _audit(audit, op, summary: GaussianSummary, params: dict, value: complex):
    if audit is None:
        return
    rec = {
        "op": op,
        "means": summary.mean.tolist(),
        "cov": summary.cov.tolist(),
        "value": value,
    }
    rec.update(params)
    audit.append(rec)
