"""Hyperrectangular input domains and the boundary mirror transform.

The estimator smooths with a kernel supported on ``[0, 1/2]^d`` in kernel
coordinates.  Near the upper half of an axis the kernel window is reflected
inward by flipping the sign of the corresponding displacement coordinate:
``sigma_at`` computes the per-axis signs, ``apply_mirror`` applies them, and
``check_mirror_condition`` is the geometric guard that the scaled window
``[0, h/2]^d`` fits inside the domain when anchored at any point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolationError, MirrorSobolError

__all__ = [
    "Domain",
    "MirrorSigns",
    "sigma_at",
    "apply_mirror",
    "check_mirror_condition",
]


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box [B_1, C_1] x ... x [B_p, C_p]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise MirrorSobolError("domain bounds must be 1-D arrays of equal length")
        if lo.size == 0:
            raise MirrorSobolError("domain must have at least one axis")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise MirrorSobolError("domain bounds must be finite")
        if not np.all(lo < hi):
            bad = np.nonzero(~(lo < hi))[0].tolist()
            raise MirrorSobolError(f"domain requires lower < upper on every axis, violated at axes {bad}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def subdomain(self, mask) -> "Domain":
        """Domain restricted to the axes listed in `mask` (0-based, in order)."""
        idx = np.asarray(list(mask), dtype=int)
        if idx.size == 0:
            raise MirrorSobolError("subdomain mask must be nonempty")
        if idx.min() < 0 or idx.max() >= self.dim:
            raise MirrorSobolError(f"mask {list(mask)} out of range for dimension {self.dim}")
        return Domain(self.lower[idx], self.upper[idx])

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Componentwise membership test for a point (d,) or rows (n, d)."""
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)

    def to_json(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @staticmethod
    def from_json(obj: dict) -> "Domain":
        try:
            return Domain(np.asarray(obj["lower"], dtype=float), np.asarray(obj["upper"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise MirrorSobolError(f"invalid domain spec {obj!r}") from exc


@dataclass(frozen=True)
class MirrorSigns:
    """Per-axis signs of the diagonal reflection A_x (each entry is +1 or -1)."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.signs, dtype=float))
        if not np.all(np.abs(s) == 1.0):
            raise MirrorSobolError("mirror signs must all be +1 or -1")
        s.flags.writeable = False
        object.__setattr__(self, "signs", s)

    @property
    def dim(self) -> int:
        return self.signs.size


def sigma_at(domain: Domain, x) -> MirrorSigns:
    """Mirror signs at a point: +1 on the closed lower half of each axis, -1 above.

    The midpoint itself maps to +1; the upper boundary maps to -1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != domain.lower.shape:
        raise MirrorSobolError(f"point has dimension {x.size}, domain has {domain.dim}")
    if not domain.contains(x):
        raise DomainViolationError(f"point {x.tolist()} lies outside the domain")
    return MirrorSigns(np.where(x <= domain.midpoints, 1.0, -1.0))


def apply_mirror(signs: MirrorSigns, u) -> np.ndarray:
    """Apply the diagonal reflection: u -> (s_1 u_1, ..., s_d u_d).

    The map is its own inverse (each diagonal entry is +-1).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape[-1] != signs.dim:
        raise MirrorSobolError(f"vector has dimension {u.shape[-1]}, signs have {signs.dim}")
    return signs.signs * u


def check_mirror_condition(domain: Domain, h: float) -> bool:
    """True iff the scaled kernel window [0, h/2]^d fits inside the domain.

    Reflected from any anchor point, the window stays inside the box exactly
    when h/2 <= (C_i - B_i)/2 on every axis, i.e. h <= min_i (C_i - B_i).
    The inequality is inclusive.
    """
    if not (np.isfinite(h) and h > 0):
        raise MirrorSobolError(f"bandwidth must be a positive real, got {h!r}")
    return bool(h <= np.min(domain.widths))


def sign_matrix(domain: Domain, x_rows: np.ndarray) -> np.ndarray:
    """Vectorized sigma_at over rows: (n, d) points -> (n, d) array of +-1.

    Rows are assumed to lie in the domain; callers validate membership once.
    """
    return np.where(np.asarray(x_rows, dtype=float) <= domain.midpoints, 1.0, -1.0)
