"""Independent input marginals, subset densities, and seeded sampling.

An `InputModel` is a product of univariate marginals (uniform, beta on
[0, 1], or custom).  It exposes the product density over any subset of
coordinates and draws reproducible samples via inverse-CDF transforms of a
counter-based generator.  Densities are reported exactly (including exact
zeros); the division floor is applied by callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .domain import Domain
from .errors import MirrorSobolError

__all__ = [
    "Uniform",
    "Beta",
    "Custom",
    "InputModel",
    "density_subset",
    "subset_density_fn",
    "sample",
    "input_model_from_json",
]


@dataclass(frozen=True)
class Uniform:
    """Uniform marginal on [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise MirrorSobolError(f"uniform marginal requires a < b, got [{self.a}, {self.b}]")

    @property
    def support(self) -> tuple:
        return (self.a, self.b)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def transform(self, u) -> np.ndarray:
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    def to_json(self) -> dict:
        return {"uniform": [self.a, self.b]}


@dataclass(frozen=True)
class Beta:
    """Beta(a, b) marginal on [0, 1]; sampled through the incomplete-beta inverse."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise MirrorSobolError(f"beta marginal requires positive shapes, got ({self.a}, {self.b})")

    @property
    def support(self) -> tuple:
        return (0.0, 1.0)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        xc = np.clip(x, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = xc ** (self.a - 1.0) * (1.0 - xc) ** (self.b - 1.0) / special.beta(self.a, self.b)
        return np.where(inside, vals, 0.0)

    def transform(self, u) -> np.ndarray:
        return special.betaincinv(self.a, self.b, np.asarray(u, dtype=float))

    def to_json(self) -> dict:
        return {"beta": [self.a, self.b]}


@dataclass(frozen=True)
class Custom:
    """User-supplied marginal: vectorized density, bounded support, sampler(n, rng)."""

    density: Callable[[np.ndarray], np.ndarray]
    support_interval: tuple
    sampler: Callable[[int, np.random.Generator], np.ndarray]

    def __post_init__(self):
        from scipy.integrate import quad

        a, b = float(self.support_interval[0]), float(self.support_interval[1])
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise MirrorSobolError(f"custom marginal support {self.support_interval!r} must be bounded")
        mass, _ = quad(lambda x: float(self.density(np.asarray(x))), a, b, limit=200)
        if abs(mass - 1.0) > 1e-8:
            raise MirrorSobolError(f"custom marginal density integrates to {mass!r}, not 1 within 1e-8")
        object.__setattr__(self, "support_interval", (a, b))

    @property
    def support(self) -> tuple:
        return self.support_interval

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = self.support_interval
        return np.where((x >= a) & (x <= b), self.density(x), 0.0)

    transform = None

    def to_json(self) -> dict:
        raise MirrorSobolError("custom marginals are not JSON-serializable")


@dataclass(frozen=True)
class InputModel:
    """Product of independent marginals; the domain is the box of their supports."""

    marginals: tuple

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) == 0:
            raise MirrorSobolError("input model needs at least one marginal")

    @property
    def p(self) -> int:
        return len(self.marginals)

    @property
    def domain(self) -> Domain:
        lo = np.array([m.support[0] for m in self.marginals])
        hi = np.array([m.support[1] for m in self.marginals])
        return Domain(lo, hi)

    def to_json(self) -> dict:
        return {"marginals": [m.to_json() for m in self.marginals]}


def _check_mask(mask, p: int, allow_empty: bool = False) -> tuple:
    idx = tuple(int(i) for i in mask)
    if len(idx) == 0 and not allow_empty:
        raise MirrorSobolError("mask must be nonempty")
    if len(set(idx)) != len(idx):
        raise MirrorSobolError(f"mask {list(mask)} has duplicate axes")
    if any(i < 0 or i >= p for i in idx):
        raise MirrorSobolError(f"mask {list(mask)} out of range for {p} inputs (axes are 0-based)")
    return idx


def density_subset(model: InputModel, mask, x) -> float:
    """Product density of the masked coordinates at a single point.

    Out-of-support coordinates give an exact 0; the empty mask gives 1.
    """
    idx = _check_mask(mask, model.p, allow_empty=True)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(idx) == 0:
        return 1.0
    if x.size != len(idx):
        raise MirrorSobolError(f"point has {x.size} coordinates, mask selects {len(idx)}")
    out = 1.0
    for j, i in enumerate(idx):
        out *= float(model.marginals[i].pdf(x[j]))
    return out


def subset_density_fn(model: InputModel, mask) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized subset density: (n, d) rows -> (n,) density values."""
    idx = _check_mask(mask, model.p)
    margs = [model.marginals[i] for i in idx]

    def f_x(rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(margs):
            raise MirrorSobolError(f"expected rows of shape (n, {len(margs)}), got {rows.shape}")
        out = np.ones(rows.shape[0])
        for j, marg in enumerate(margs):
            out *= marg.pdf(rows[:, j])
        return out

    return f_x


def sample(model: InputModel, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Draw n i.i.d. rows from the product law, deterministically in (seed, stream).

    One PCG64 generator is derived from SeedSequence((seed, stream)); each
    column is filled by the inverse-CDF transform of a shared uniform block,
    custom samplers consuming the generator in column order.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise MirrorSobolError(f"sample size must be a positive integer, got {n!r}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed), int(stream)))))
    u = rng.random((int(n), model.p))
    cols = []
    for i, marg in enumerate(model.marginals):
        if marg.transform is not None:
            cols.append(marg.transform(u[:, i]))
        else:
            cols.append(np.asarray(marg.sampler(int(n), rng), dtype=float))
    return np.column_stack(cols)


def input_model_from_json(obj: dict) -> InputModel:
    """Parse {"marginals": [{"uniform": [a, b]} | {"beta": [a, b]}, ...]}."""
    try:
        specs = obj["marginals"]
    except (KeyError, TypeError) as exc:
        raise MirrorSobolError(f"invalid input model spec {obj!r}") from exc
    margs = []
    for spec in specs:
        if not isinstance(spec, dict) or len(spec) != 1:
            raise MirrorSobolError(f"invalid marginal spec {spec!r}")
        (kind, params), = spec.items()
        if kind == "uniform":
            margs.append(Uniform(float(params[0]), float(params[1])))
        elif kind == "beta":
            margs.append(Beta(float(params[0]), float(params[1])))
        else:
            raise MirrorSobolError(f"unknown marginal kind {kind!r}")
    return InputModel(tuple(margs))
