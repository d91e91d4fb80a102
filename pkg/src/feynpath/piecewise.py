"""Piecewise polynomial scalar functions on a closed interval [0, T].

Every scalar function the library consumes (derivative profiles a', b',
Cameron-Martin densities, indicator densities) is a polynomial between
breakpoints, with coefficients stored in ascending powers of the global
time variable.  The class is closed under addition, products, exact
antiderivatives, and absolute value (pieces are split at interior sign
changes), which keeps every weighted integral downstream exactly
computable by fixed-order quadrature.

Evaluation at a breakpoint takes the value of the piece on the right;
at the right endpoint T it takes the value of the last piece.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainMismatch

# Tolerances for root classification inside ``abs``.  Roots count as real
# when their imaginary part is below _ROOT_IMAG_TOL relative to scale, and
# as interior when further than _ROOT_EDGE_TOL * piece width from an edge.
_ROOT_IMAG_TOL = 1e-9
_ROOT_EDGE_TOL = 1e-12


def _as_coeffs(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficient lists must be non-empty 1-D sequences")
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1].copy() if nz.size else np.zeros(1)


class PiecewisePoly:
    """Immutable piecewise polynomial on [0, T].

    Parameters
    ----------
    breakpoints : strictly increasing reals, first 0, last T.
    coeffs : one coefficient list per piece, ascending powers of t.
    """

    def __init__(self, breakpoints, coeffs):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if bp[0] != 0.0:
            raise DomainMismatch("domain must start at 0, got %r" % bp[0])
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(coeffs) != bp.size - 1:
            raise ValueError(
                "expected %d coefficient lists, got %d" % (bp.size - 1, len(coeffs))
            )
        self.breakpoints = bp
        self.coeffs = tuple(_as_coeffs(c) for c in coeffs)

    # -- construction helpers -------------------------------------------

    @classmethod
    def constant(cls, value, T):
        return cls([0.0, float(T)], [[float(value)]])

    @classmethod
    def from_coeffs(cls, coeffs, T):
        """Single-piece polynomial on [0, T]."""
        return cls([0.0, float(T)], [coeffs])

    @classmethod
    def indicator(cls, upto, T):
        """Indicator of [0, upto] as a piecewise constant on [0, T]."""
        T = float(T)
        upto = float(upto)
        if not 0.0 <= upto <= T:
            raise DomainMismatch("indicator cut %r outside [0, %r]" % (upto, T))
        if upto == 0.0:
            return cls.constant(0.0, T)
        if upto == T:
            return cls.constant(1.0, T)
        return cls([0.0, upto, T], [[1.0], [0.0]])

    # -- basic queries ----------------------------------------------------

    @property
    def T(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return max(c.size - 1 for c in self.coeffs)

    def is_zero(self) -> bool:
        return all(not np.any(c) for c in self.coeffs)

    def has_zero_piece(self) -> bool:
        """True if some piece of positive length is identically zero."""
        return any(not np.any(c) for c in self.coeffs)

    def __call__(self, tau):
        tau_arr = np.asarray(tau, dtype=float)
        tol = 4 * np.finfo(float).eps * max(1.0, self.T)
        if np.any(tau_arr < -tol) or np.any(tau_arr > self.T + tol):
            raise DomainMismatch("evaluation outside [0, %r]" % self.T)
        t = np.clip(tau_arr, 0.0, self.T)
        idx = np.clip(
            np.searchsorted(self.breakpoints, t, side="right") - 1,
            0,
            self.n_pieces - 1,
        )
        out = np.empty_like(t)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = npoly.polyval(t[mask], self.coeffs[i])
        return float(out) if np.isscalar(tau) or tau_arr.ndim == 0 else out

    # -- algebra ----------------------------------------------------------

    def _merged_pieces(self, other: "PiecewisePoly"):
        if self.T != other.T:
            raise DomainMismatch(
                "domains differ: [0, %r] vs [0, %r]" % (self.T, other.T)
            )
        bp = np.union1d(self.breakpoints, other.breakpoints)
        mids = 0.5 * (bp[:-1] + bp[1:])
        ia = np.clip(
            np.searchsorted(self.breakpoints, mids) - 1, 0, self.n_pieces - 1
        )
        ib = np.clip(
            np.searchsorted(other.breakpoints, mids) - 1, 0, other.n_pieces - 1
        )
        return bp, ia, ib

    def __add__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        bp, ia, ib = self._merged_pieces(other)
        return PiecewisePoly(
            bp,
            [npoly.polyadd(self.coeffs[i], other.coeffs[j]) for i, j in zip(ia, ib)],
        )

    def __sub__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return PiecewisePoly(self.breakpoints, [-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, PiecewisePoly):
            bp, ia, ib = self._merged_pieces(other)
            return PiecewisePoly(
                bp,
                [
                    npoly.polymul(self.coeffs[i], other.coeffs[j])
                    for i, j in zip(ia, ib)
                ],
            )
        if isinstance(other, (int, float)):
            return PiecewisePoly(self.breakpoints, [c * float(other) for c in self.coeffs])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        return (
            self.breakpoints.shape == other.breakpoints.shape
            and np.array_equal(self.breakpoints, other.breakpoints)
            and all(np.array_equal(a, b) for a, b in zip(self.coeffs, other.coeffs))
        )

    __hash__ = None

    def __repr__(self):
        return "PiecewisePoly(breakpoints=%s, coeffs=%s)" % (
            self.breakpoints.tolist(),
            [c.tolist() for c in self.coeffs],
        )

    def refined(self, points) -> "PiecewisePoly":
        """Same function with extra breakpoints inserted."""
        pts = np.asarray(points, dtype=float)
        if pts.size and (pts.min() < 0.0 or pts.max() > self.T):
            raise DomainMismatch("refinement points outside [0, %r]" % self.T)
        bp = np.union1d(self.breakpoints, pts)
        mids = 0.5 * (bp[:-1] + bp[1:])
        idx = np.clip(
            np.searchsorted(self.breakpoints, mids) - 1, 0, self.n_pieces - 1
        )
        return PiecewisePoly(bp, [self.coeffs[i] for i in idx])

    def coeff_error(self, other: "PiecewisePoly") -> float:
        """Max absolute coefficient difference on the common refinement."""
        bp, ia, ib = self._merged_pieces(other)
        err = 0.0
        for i, j in zip(ia, ib):
            a, b = self.coeffs[i], other.coeffs[j]
            n = max(a.size, b.size)
            d = np.zeros(n)
            d[: a.size] += a
            d[: b.size] -= b
            err = max(err, float(np.abs(d).max()))
        return err

    # -- calculus ---------------------------------------------------------

    def antiderivative(self) -> "PiecewisePoly":
        """Continuous primitive anchored at F(0) = 0."""
        out = []
        running = 0.0
        for i, c in enumerate(self.coeffs):
            ci = npoly.polyint(c)
            ci = np.asarray(ci, dtype=float)
            ci[0] += running - npoly.polyval(self.breakpoints[i], ci)
            out.append(ci)
            running = npoly.polyval(self.breakpoints[i + 1], ci)
        return PiecewisePoly(self.breakpoints, out)

    def definite_integral(self, lo=0.0, hi=None) -> float:
        hi = self.T if hi is None else float(hi)
        F = self.antiderivative()
        return F(hi) - F(lo)

    def __abs__(self) -> "PiecewisePoly":
        """Exact |f|: pieces split at interior real roots, signs flipped
        where the polynomial is negative."""
        new_bp = [0.0]
        new_coeffs = []
        for i, c in enumerate(self.coeffs):
            lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
            cuts = [lo] + _real_roots_inside(c, lo, hi) + [hi]
            for a, b in zip(cuts[:-1], cuts[1:]):
                new_bp.append(b)
                new_coeffs.append(c if _piece_sign(c, a, b) >= 0 else -c)
        return PiecewisePoly(new_bp, new_coeffs)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "coeffs": [c.tolist() for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePoly":
        return cls(d["breakpoints"], d["coeffs"])


def _real_roots_inside(c, lo, hi):
    """Sorted, deduplicated real roots of the polynomial strictly inside
    (lo, hi).  Degree <= 2 by closed form, higher degrees via the
    companion-matrix roots."""
    deg = c.size - 1
    if deg <= 0:
        return []
    if deg == 1:
        cand = np.array([-c[0] / c[1]])
    elif deg == 2:
        disc = c[1] * c[1] - 4.0 * c[2] * c[0]
        if disc < 0:
            return []
        s = np.sqrt(disc)
        cand = np.array([(-c[1] - s) / (2 * c[2]), (-c[1] + s) / (2 * c[2])])
    else:
        r = npoly.polyroots(c)
        scale = max(1.0, abs(lo), abs(hi))
        cand = r.real[np.abs(r.imag) <= _ROOT_IMAG_TOL * scale]
    edge = _ROOT_EDGE_TOL * max(1.0, hi - lo)
    cand = np.sort(cand[(cand > lo + edge) & (cand < hi - edge)])
    roots = []
    for x in cand:
        if not roots or x - roots[-1] > edge:
            roots.append(float(x))
    return roots


def _piece_sign(c, lo, hi):
    """Sign of the polynomial on (lo, hi), sampled away from the roots at
    the edges.  Ties (identically zero pieces) report +1."""
    xs = lo + (hi - lo) * np.array([0.5, 0.25, 0.75, 0.1, 0.9])
    vals = npoly.polyval(xs, c)
    best = vals[np.argmax(np.abs(vals))]
    return 1 if best >= 0 else -1
