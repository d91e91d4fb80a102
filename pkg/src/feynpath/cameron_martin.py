"""The Cameron-Martin space of a profile pair.

Elements w are stored through their density Dw = w'/b'; the path itself
is recovered as w(t) = integral of Dw db over [0, t].  The module
provides the density operators D and D^{-1}, the product
w (.) k = D^{-1}(Dw Dk) (a commutative algebra whose identity is b, the
variance function), the inner product against db, the pairing with the
mean function a, indicator elements, and Gram-Schmidt orthonormalization
against the db inner product.

Kernel elements (admissible for building Gaussian processes from paths)
are wrapped in :class:`SuppElement`, which certifies a density of bounded
variation that is nonzero almost everywhere.  For piecewise polynomials
both conditions reduce to "no piece is identically zero"; isolated zeros
are fine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatch, ProfileMismatch, SupportViolation
from .measure import MeasureKind, ProfilePair, stieltjes_integral
from .piecewise import PiecewisePoly

GRAM_SCHMIDT_DROP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CMElement:
    """Cameron-Martin element, stored as its density over a profile."""

    density: PiecewisePoly
    profile: ProfilePair

    def __post_init__(self):
        if self.density.T != self.profile.T:
            raise DomainMismatch(
                "density lives on [0, %r], profile on [0, %r]"
                % (self.density.T, self.profile.T)
            )

    def norm_sq(self) -> float:
        return cm_inner(self, self)

    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_sq(), 0.0)))

    def path_values(self, ts):
        """w(t) = integral of the density db over [0, t], exactly."""
        prim = (self.density * self.profile.b_prime).antiderivative()
        return prim(ts)

    def __eq__(self, other):
        if not isinstance(other, CMElement):
            return NotImplemented
        return self.density == other.density and self.profile == other.profile

    __hash__ = None

    def to_dict(self) -> dict:
        return {"density": self.density.to_dict()}


@dataclass(frozen=True, eq=False)
class SuppElement:
    """Kernel element: density of bounded variation, nonzero a.e."""

    base: CMElement
    bv_certificate: bool = field(default=True)

    def __post_init__(self):
        if self.base.density.has_zero_piece():
            raise SupportViolation(
                "density vanishes identically on a piece of positive length"
            )

    @property
    def density(self) -> PiecewisePoly:
        return self.base.density

    @property
    def profile(self) -> ProfilePair:
        return self.base.profile

    def __eq__(self, other):
        if not isinstance(other, SuppElement):
            return NotImplemented
        return self.base == other.base

    __hash__ = None


def as_cm(x) -> CMElement:
    return x.base if isinstance(x, SuppElement) else x


def _require_same_profile(*xs):
    profiles = [as_cm(x).profile for x in xs]
    first = profiles[0]
    for p in profiles[1:]:
        if p != first:
            raise ProfileMismatch("elements live over different profiles")
    return first


def apply_D(w) -> PiecewisePoly:
    """The density operator; representational for stored elements."""
    return as_cm(w).density


def apply_D_inverse(z: PiecewisePoly, profile: ProfilePair) -> CMElement:
    """Element with density z, i.e. the path t -> integral of z db."""
    return CMElement(z, profile)


def identity_element(profile: ProfilePair) -> SuppElement:
    """The variance function b: unit density, identity of the product."""
    return SuppElement(CMElement(PiecewisePoly.constant(1.0, profile.T), profile))


def odot(w, k: SuppElement):
    """Product with density Dw * Dk.

    Returns a SuppElement when both factors are kernel elements (products
    of a.e.-nonzero densities stay a.e. nonzero), else a CMElement.
    """
    if not isinstance(k, SuppElement):
        raise TypeError("right factor must be a SuppElement")
    profile = _require_same_profile(w, k)
    out = CMElement(as_cm(w).density * k.density, profile)
    if isinstance(w, SuppElement):
        return SuppElement(out)
    return out


def cm_inner(w1, w2) -> float:
    """Inner product: integral of Dw1 Dw2 db."""
    profile = _require_same_profile(w1, w2)
    return stieltjes_integral(
        as_cm(w1).density * as_cm(w2).density, MeasureKind.DB, profile
    )


def inner_with_a(w) -> float:
    """Pairing with the mean function: integral of Dw da.

    The mean function a is generally not a Cameron-Martin element, so
    this is a standalone Stieltjes functional rather than cm_inner.
    """
    w = as_cm(w)
    return stieltjes_integral(w.density, MeasureKind.DA, w.profile)


def phi_t(t: float, profile: ProfilePair) -> CMElement:
    """Indicator element: density is the indicator of [0, t]."""
    return CMElement(PiecewisePoly.indicator(t, profile.T), profile)


def gram_schmidt(ws, drop_tol: float = GRAM_SCHMIDT_DROP_TOL) -> list[CMElement]:
    """Orthonormalize against the db inner product.

    Near-dependent inputs (residual norm below drop_tol times the input
    norm) are dropped.  Each vector is projected twice before
    normalization, which keeps the output Gram matrix within ~1e-12 of
    the identity even for badly conditioned inputs.
    """
    if not ws:
        return []
    profile = _require_same_profile(*ws)
    out: list[CMElement] = []
    for w in ws:
        v = as_cm(w).density
        input_norm = np.sqrt(
            max(stieltjes_integral(v * v, MeasureKind.DB, profile), 0.0)
        )
        if input_norm == 0.0:
            continue
        for _ in range(2):
            for g in out:
                proj = stieltjes_integral(v * g.density, MeasureKind.DB, profile)
                v = v - proj * g.density
        res = np.sqrt(max(stieltjes_integral(v * v, MeasureKind.DB, profile), 0.0))
        if res < drop_tol * input_norm:
            continue
        out.append(CMElement(v * (1.0 / res), profile))
    return out
