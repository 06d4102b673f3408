"""Pilot-based automatic bandwidth selection.

A Gaussian-kernel pilot regressor (never mirror-corrected) supplies both a
closed-form target for E[g1(X)^2] and virtual outputs; the selected h makes
the kernel U-statistic on the virtual outputs match the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .domain import Domain, check_mirror_condition
from .errors import (
    BandwidthTooLargeError,
    InsufficientSampleError,
    MirrorSobolError,
)
from .estimator import FullSample, SubsetSpec, estimate_t
from .inputs import Uniform
from .kernels import KernelD

__all__ = [
    "PilotConfig",
    "BetaTables",
    "rule_of_thumb_h0",
    "compute_beta_pair",
    "compute_beta_single",
    "build_beta_tables",
    "target_functional",
    "virtual_outputs",
    "pilot_target_mc",
    "default_grid",
    "select_bandwidth",
    "bandwidth_curve",
]

# below this pilot bandwidth the virtual outputs blow up like K(0)^p / h0^p;
# every consumer of h0 clips at this floor
H0_FLOOR = 1e-3

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PilotConfig:
    """Pilot bandwidths and the candidate grid for the main bandwidth."""

    h0: tuple
    grid: tuple
    pilot_kernel: str = "gaussian"

    def __post_init__(self):
        h0 = tuple(float(v) for v in np.asarray(self.h0, dtype=float).ravel())
        grid = tuple(float(v) for v in np.asarray(self.grid, dtype=float).ravel())
        if len(h0) == 0:
            raise MirrorSobolError("pilot config needs at least one h0 entry")
        if any(not (np.isfinite(v) and v > 0) for v in h0):
            raise MirrorSobolError(f"pilot bandwidths must be positive reals, got {h0}")
        if len(grid) == 0:
            raise MirrorSobolError("the candidate grid is empty")
        if any(not (np.isfinite(v) and v > 0) for v in grid):
            raise MirrorSobolError(f"grid entries must be positive reals, got {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise MirrorSobolError("the candidate grid must be strictly ascending")
        if self.pilot_kernel != "gaussian":
            raise MirrorSobolError(f"the pilot kernel is fixed to gaussian, got {self.pilot_kernel!r}")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class BetaTables:
    """Pilot overlap integrals: pair matrices on mask axes, vectors elsewhere."""

    mask: tuple
    pair: tuple  # one symmetric (n, n) matrix per mask axis, in mask order
    single: tuple  # one n-vector per off-mask axis, ascending axis order

    def __post_init__(self):
        for mat in self.pair:
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise MirrorSobolError("pair tables must be square matrices")
            if not np.all(np.isfinite(mat)):
                raise MirrorSobolError("pair table has non-finite entries")
            if not np.allclose(mat, mat.T, rtol=0, atol=1e-12):
                raise MirrorSobolError("pair table is not symmetric")
        for vec in self.single:
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise MirrorSobolError("single tables must be finite vectors")


def _clipped_h0(h0) -> np.ndarray:
    h0 = np.asarray(h0, dtype=float).ravel()
    if h0.size == 0 or not np.all(np.isfinite(h0)) or np.any(h0 <= 0):
        raise MirrorSobolError(f"pilot bandwidths must be positive reals, got {h0}")
    return np.maximum(h0, H0_FLOOR)


def rule_of_thumb_h0(sample: FullSample) -> np.ndarray:
    """Scott-type pilot bandwidths h0_i = std(V_i) * n^(-1/(4+p))."""
    n, p = sample.V.shape
    if n < 2:
        raise InsufficientSampleError(f"pilot bandwidths need n >= 2, got {n}")
    spread = np.ptp(sample.V, axis=0)
    if np.any(spread == 0.0):
        bad = np.nonzero(spread == 0.0)[0].tolist()
        raise MirrorSobolError(f"constant input column(s) {bad}: rule-of-thumb bandwidth undefined")
    stds = sample.V.std(axis=0)
    return stds * n ** (-1.0 / (4.0 + p))


def compute_beta_pair(sample: FullSample, i: int, h0_i: float, marginal) -> np.ndarray:
    """Pair overlap matrix for axis i: integral of the two pilot kernels over
    the marginal support, weighted by 1/f.

    Uniform marginals use the exact Gaussian closed form; anything else goes
    through adaptive quadrature at 1e-9 relative tolerance.
    """
    h0_i = float(_clipped_h0([h0_i])[0])
    v = np.asarray(sample.V[:, i], dtype=float)
    if isinstance(marginal, Uniform):
        a, b = marginal.support
        diff = v[:, None] - v[None, :]
        mid = 0.5 * (v[:, None] + v[None, :])
        s = h0_i / _SQRT2
        gauss = norm.pdf(diff / (_SQRT2 * h0_i)) / (_SQRT2 * h0_i)
        masswin = norm.cdf((b - mid) / s) - norm.cdf((a - mid) / s)
        return (b - a) * gauss * masswin
    return _beta_pair_quadrature(v, h0_i, marginal)


def _beta_pair_quadrature(v: np.ndarray, h0_i: float, marginal) -> np.ndarray:
    a, b = marginal.support
    n = v.shape[0]
    out = np.empty((n, n))

    def integrand(x, vj, vk):
        f = float(marginal.pdf(np.array([x]))[0])
        if f <= 0.0:
            return 0.0
        kj = math.exp(-0.5 * ((vj - x) / h0_i) ** 2) / (h0_i * math.sqrt(2 * math.pi))
        kk = math.exp(-0.5 * ((vk - x) / h0_i) ** 2) / (h0_i * math.sqrt(2 * math.pi))
        return kj * kk / f

    for j in range(n):
        for k in range(j, n):
            val, err = integrate.quad(
                integrand, a, b, args=(v[j], v[k]), epsabs=1e-13, epsrel=1e-9, limit=200
            )
            if not np.isfinite(val) or err > 1e-6 * max(abs(val), 1.0):
                raise MirrorSobolError(
                    f"pair-table quadrature did not converge on axis pair ({j}, {k}): "
                    f"value {val}, error estimate {err}"
                )
            out[j, k] = out[k, j] = val
    return out


def compute_beta_single(sample: FullSample, i: int, h0_i: float, support=(0.0, 1.0)) -> np.ndarray:
    """Off-mask mass vector for axis i: pilot kernel mass over the support.

    For an interval support this is exactly a difference of normal cdfs, so
    no quadrature is needed.
    """
    h0_i = float(_clipped_h0([h0_i])[0])
    a, b = float(support[0]), float(support[1])
    if not (b > a):
        raise MirrorSobolError(f"support must be a nondegenerate interval, got ({a}, {b})")
    v = np.asarray(sample.V[:, i], dtype=float)
    return norm.cdf((b - v) / h0_i) - norm.cdf((a - v) / h0_i)


def build_beta_tables(sample: FullSample, spec: SubsetSpec, h0, input_model=None) -> BetaTables:
    """All pilot tables for one mask; h0 is the full length-p vector."""
    n, p = sample.V.shape
    h0 = _clipped_h0(h0)
    if h0.size != p:
        raise MirrorSobolError(f"h0 has {h0.size} entries for {p} input axes")
    mask = tuple(spec.mask)
    if input_model is not None and len(input_model.marginals) != p:
        raise MirrorSobolError("input model dimension does not match the sample")
    pair, single = [], []
    for i in range(p):
        marg = input_model.marginals[i] if input_model is not None else Uniform(0.0, 1.0)
        if i in mask:
            pair.append(compute_beta_pair(sample, i, h0[i], marg))
        else:
            single.append(compute_beta_single(sample, i, h0[i], support=marg.support))
    return BetaTables(mask=mask, pair=tuple(pair), single=tuple(single))


def _target_sums(y: np.ndarray, betas: BetaTables):
    n = y.shape[0]
    prod_pair = np.ones((n, n))
    for mat in betas.pair:
        prod_pair = prod_pair * mat
    s = np.ones(n)
    for vec in betas.single:
        s = s * vec
    u = y * s
    terms = u[:, None] * u[None, :] * prod_pair
    iu = np.triu_indices(n)
    upper = math.fsum(terms[iu])
    diag = math.fsum(np.diagonal(terms))
    return upper, diag


def target_functional(sample: FullSample, betas: BetaTables, convention: str = "printed") -> float:
    """Pilot estimate of E[g1(X)^2] from the beta tables.

    convention "printed" keeps the half-open double sum (1/n^2) sum_{j<=j'};
    "full" counts every ordered pair, which is what squaring the pilot
    regressor actually produces (see pilot_target_mc).  Both are exposed;
    the selector default is set by the Monte Carlo cross-check.
    """
    if len(betas.pair) + len(betas.single) != sample.V.shape[1]:
        raise MirrorSobolError("beta tables do not cover every input axis")
    upper, diag = _target_sums(np.asarray(sample.Y, dtype=float), betas)
    n = sample.n
    if convention == "printed":
        return upper / n**2
    if convention == "full":
        return (2.0 * upper - diag) / n**2
    raise MirrorSobolError(f"unknown target convention {convention!r}")


_VIRT_BLOCK = 512


def virtual_outputs(
    sample: FullSample, h0, f_v: Optional[Callable] = None, loo: bool = False
) -> np.ndarray:
    """Virtual outputs: the Gaussian pilot regressor at the sample points.

    Y~_j = (1/n) (1/f_V(V_j)) sum_{j'} Y_{j'} prod_i K~_{h0_i}(V_{i,j'} - V_{i,j}),
    self-term included.  f_v = None means the uniform unit-cube density 1.
    loo=True drops the j-th term and divides by n-1 instead; that variant
    centers the selection objective (the self-term couples the virtual
    U-statistic to its own target otherwise) and is what the selector uses.
    """
    v = np.asarray(sample.V, dtype=float)
    y = np.asarray(sample.Y, dtype=float)
    n, p = v.shape
    h0 = _clipped_h0(h0)
    if h0.size != p:
        raise MirrorSobolError(f"h0 has {h0.size} entries for {p} input axes")
    if f_v is None:
        fvals = np.ones(n)
    else:
        fvals = np.asarray(f_v(v), dtype=float).ravel()
        if fvals.shape[0] != n:
            raise MirrorSobolError("f_v must return one value per sample row")
        if np.any(fvals <= 0.0) or not np.all(np.isfinite(fvals)):
            raise MirrorSobolError("f_v must be positive and finite at all sample points")
    inv_h = 1.0 / h0
    log_norm = -np.sum(np.log(h0)) - 0.5 * p * math.log(2 * math.pi)
    out = np.empty(n)
    for start in range(0, n, _VIRT_BLOCK):
        blk = slice(start, min(start + _VIRT_BLOCK, n))
        expo = np.zeros((blk.stop - blk.start, n))
        for i in range(p):
            z = (v[None, :, i] - v[blk, i][:, None]) * inv_h[i]
            expo -= 0.5 * z * z
        out[blk] = np.exp(expo + log_norm) @ y
    if loo:
        if n < 2:
            raise InsufficientSampleError("leave-one-out virtual outputs need n >= 2")
        out = (out - y * math.exp(log_norm)) / ((n - 1) * fvals)
    else:
        out = out / (n * fvals)
    return out


def pilot_target_mc(
    sample: FullSample,
    spec: SubsetSpec,
    h0,
    input_model=None,
    draws: int = 100_000,
    seed: int = 0,
) -> float:
    """Monte Carlo value of E[g1~(X~)^2] for the pilot regressor.

    Direct average of the squared conditional pilot regressor over fresh
    uniform draws of the mask coordinates; used to pin down which summation
    convention of the closed-form target is correctly normalized.
    """
    v = np.asarray(sample.V, dtype=float)
    y = np.asarray(sample.Y, dtype=float)
    n, p = v.shape
    h0 = _clipped_h0(h0)
    mask = tuple(spec.mask)
    if input_model is not None:
        for i in mask:
            if not isinstance(input_model.marginals[i], Uniform):
                raise MirrorSobolError("pilot_target_mc supports uniform mask marginals only")
    rng = np.random.default_rng(seed)
    # per-point single-axis masses on the off-mask axes
    s = np.ones(n)
    for i in range(p):
        if i in mask:
            continue
        sup = input_model.marginals[i].support if input_model is not None else (0.0, 1.0)
        s = s * compute_beta_single(sample, i, h0[i], support=sup)
    w = y * s
    acc = 0.0
    done = 0
    block = max(1, 2_000_000 // max(1, n))
    while done < draws:
        take = min(block, draws - done)
        g1 = np.zeros((take, n))
        for i in mask:
            sup = input_model.marginals[i].support if input_model is not None else (0.0, 1.0)
            x = rng.uniform(sup[0], sup[1], size=take)
            fi = 1.0 / (sup[1] - sup[0])
            z = (v[None, :, i] - x[:, None]) / h0[i]
            g1 += -0.5 * z * z - math.log(h0[i] * math.sqrt(2 * math.pi)) - math.log(fi)
        vals = (np.exp(g1) @ w) / n
        acc += float(np.sum(vals**2))
        done += take
    return acc / draws


def default_grid(n: int, d: int, domain: Domain, size: int = 25) -> np.ndarray:
    """Log-spaced candidate bandwidths from (0.05 n)^(-1/d) up to the mirror limit.

    The lower endpoint keeps every candidate above the pair-informative
    threshold n^(-1/d) / 20^(1/d); below roughly n^(-1/d) the pair windows
    are almost all empty and the selection objective is pure noise.
    """
    widths = domain.upper - domain.lower
    hi = float(widths.min())
    lo = (0.05 * n) ** (-1.0 / d)
    if lo >= hi:
        lo = hi / 100.0
    return np.geomspace(lo, hi, size)


def _objective(h, sample_virtual, spec, kernel, f_x, domain, target):
    t_tilde = estimate_t(sample_virtual, spec, kernel, h, f_x, domain=domain)
    return abs(t_tilde - target)


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def bandwidth_curve(
    sample: FullSample,
    spec: SubsetSpec,
    kernel: KernelD,
    config: PilotConfig,
    f_x,
    *,
    domain: Optional[Domain] = None,
    input_model=None,
    f_v: Optional[Callable] = None,
    convention: str = "full",
    pilot: str = "loo",
    refine: bool = False,
) -> dict:
    """Evaluate the selection objective on the grid and pick h*.

    Returns {"h_star", "target", "curve": [(h, |T~ - target|)]}.  The
    objective compares the U-statistic on virtual outputs to the pilot
    target; ties go to the smaller h, and refine=True runs three
    golden-section iterations between the grid neighbors of the minimizer.

    pilot "loo" (default) uses leave-one-out virtual outputs so that the
    U-statistic is centered on the closed-form target; "self" keeps the
    self-terms, which shifts the objective by a systematic offset.
    """
    if domain is None:
        if input_model is not None:
            domain = input_model.domain
        else:
            p = sample.V.shape[1]
            domain = Domain(np.zeros(p), np.ones(p))
    grid = np.asarray(config.grid, dtype=float)
    for h in grid:
        if not check_mirror_condition(domain, float(h)):
            raise BandwidthTooLargeError(f"grid entry {h} violates the mirror condition")
    if pilot not in ("loo", "self"):
        raise MirrorSobolError(f"pilot must be 'loo' or 'self', got {pilot!r}")
    betas = build_beta_tables(sample, spec, config.h0, input_model)
    target = target_functional(sample, betas, convention=convention)
    y_virtual = virtual_outputs(sample, config.h0, f_v, loo=(pilot == "loo"))
    sample_virtual = FullSample(V=sample.V, Y=y_virtual)
    values = np.array(
        [_objective(float(h), sample_virtual, spec, kernel, f_x, domain, target) for h in grid]
    )
    idx = int(np.argmin(values))  # first minimum = smallest h on an ascending grid
    h_star = float(grid[idx])
    best = float(values[idx])
    if refine and grid.size > 1:
        lo = float(grid[max(idx - 1, 0)])
        hi = float(grid[min(idx + 1, grid.size - 1)])
        a, b = lo, hi
        c = b - _INV_GOLDEN * (b - a)
        d_pt = a + _INV_GOLDEN * (b - a)
        fc = _objective(c, sample_virtual, spec, kernel, f_x, domain, target)
        fd = _objective(d_pt, sample_virtual, spec, kernel, f_x, domain, target)
        for _ in range(3):
            if fc <= fd:
                b, d_pt, fd = d_pt, c, fc
                c = b - _INV_GOLDEN * (b - a)
                fc = _objective(c, sample_virtual, spec, kernel, f_x, domain, target)
            else:
                a, c, fc = c, d_pt, fd
                d_pt = a + _INV_GOLDEN * (b - a)
                fd = _objective(d_pt, sample_virtual, spec, kernel, f_x, domain, target)
        for h_cand, val in ((c, fc), (d_pt, fd)):
            if val < best or (val == best and h_cand < h_star):
                h_star, best = float(h_cand), float(val)
    return {
        "h_star": h_star,
        "target": float(target),
        "curve": [(float(h), float(v)) for h, v in zip(grid, values)],
    }


def select_bandwidth(
    sample: FullSample,
    spec: SubsetSpec,
    kernel: KernelD,
    config: PilotConfig,
    f_x,
    **kwargs,
) -> float:
    """The selected bandwidth h*; see bandwidth_curve for the machinery."""
    return bandwidth_curve(sample, spec, kernel, config, f_x, **kwargs)["h_star"]
