"""Seeded Monte Carlo and grid measure estimation, the covering-measure
scaling study in (eps, K), and the non-torus budget table.

Sampling uses the counter-based Philox generator with per-chunk keys derived
from the master seed, so estimates are bit-reproducible and independent of
how chunks are partitioned across workers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .resonance import CoveringParams, classify_batch

__all__ = [
    "MeasureEstimate",
    "mc_measure",
    "grid_measure",
    "zone_fractions",
    "CoveringViolation",
    "ScalingStudy",
    "scaling_study",
    "BudgetRow",
    "BudgetTable",
    "budget_shape",
]

_BLOCK = 1 << 16       # logical stream granularity: point i sits in block i >> 16
_CHUNK = 1 << 20       # processing batch size (never affects the draws)


class CoveringViolation(ValueError):
    """The requested parameters leave the covering regime (alpha >= 1)."""


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    method: str            # "MonteCarlo" or "Grid"

    def ci(self, sigmas: float = 3.0) -> tuple[float, float]:
        return (self.value - sigmas * self.std_error,
                self.value + sigmas * self.std_error)


def _block_points(seed: int, stream: int, block: int, count: int,
                  box) -> np.ndarray:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF,
                    (stream << 32) ^ block], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = lo + (hi - lo) * rng.random((_BLOCK, len(box)))
    return pts[:count]


def _batched_points(seed: int, stream: int, samples: int, box):
    """Yield point batches; the draw for point i depends only on
    (seed, stream, i), so any partition across workers reproduces the
    same totals."""
    n_blocks = (samples + _BLOCK - 1) // _BLOCK
    per_batch = max(1, _CHUNK // _BLOCK)
    for start in range(0, n_blocks, per_batch):
        parts = []
        for block in range(start, min(start + per_batch, n_blocks)):
            count = min(_BLOCK, samples - block * _BLOCK)
            parts.append(_block_points(seed, stream, block, count, box))
        yield np.vstack(parts)


def mc_measure(predicate, box, samples: int, seed: int,
               stream: int = 0) -> MeasureEstimate:
    """Hit-or-miss estimate of the measure of {predicate} inside a box.

    ``predicate`` maps an (N, d) array of points to a boolean array.  The
    estimate is deterministic in (seed, stream) and independent of how the
    fixed logical blocks are partitioned into batches; the standard error is
    sqrt(p (1 - p) / N) times the box volume.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    box = [(float(lo), float(hi)) for lo, hi in box]
    volume = math.prod(hi - lo for lo, hi in box)
    hits = 0
    for pts in _batched_points(seed, stream, samples, box):
        hits += int(np.count_nonzero(predicate(pts)))
    p = hits / samples
    return MeasureEstimate(
        value=p * volume,
        std_error=math.sqrt(max(p * (1.0 - p), 0.0) / samples) * volume,
        samples=samples, seed=seed, method="MonteCarlo")


def grid_measure(predicate, box, per_dim: int) -> MeasureEstimate:
    """Midpoint-grid measure of {predicate}; deterministic companion of the
    Monte Carlo estimator for low dimensions."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    axes = [lo + (hi - lo) * (np.arange(per_dim) + 0.5) / per_dim
            for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    volume = math.prod(hi - lo for lo, hi in box)
    frac = float(np.count_nonzero(predicate(pts))) / pts.shape[0]
    return MeasureEstimate(value=frac * volume, std_error=0.0,
                           samples=pts.shape[0], seed=0, method="Grid")


# ---------------------------------------------------------------------------
# Zone measures
# ---------------------------------------------------------------------------


def zone_fractions(p: CoveringParams, samples: int, seed: int,
                   stream: int = 0) -> dict[str, MeasureEstimate]:
    """Monte Carlo measures of the three covering zones inside the unit
    ball, one shared point stream for all three."""
    box = [(-1.0, 1.0)] * p.n
    volume = 2.0 ** p.n
    counts = {0: 0, 1: 0, 2: 0}
    ball = 0
    for pts in _batched_points(seed, stream, samples, box):
        inside = np.linalg.norm(pts, axis=1) < 1.0
        ball += int(np.count_nonzero(inside))
        codes = classify_batch(pts[inside], p)
        for code in (0, 1, 2):
            counts[code] += int(np.count_nonzero(codes == code))
    out = {}
    names = {0: "non-resonant", 1: "simply-resonant", 2: "doubly-resonant"}
    for code, name in names.items():
        frac = counts[code] / samples
        out[name] = MeasureEstimate(
            value=frac * volume,
            std_error=math.sqrt(max(frac * (1 - frac), 0.0) / samples) * volume,
            samples=samples, seed=seed, method="MonteCarlo")
    out["ball"] = MeasureEstimate(
        value=ball / samples * volume,
        std_error=math.sqrt(max(ball / samples * (1 - ball / samples), 0.0)
                            / samples) * volume,
        samples=samples, seed=seed, method="MonteCarlo")
    return out


# ---------------------------------------------------------------------------
# Scaling study of the doubly-resonant measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingStudy:
    n: int
    K0: int
    K: int
    epsilons: tuple[float, ...]
    alphas: tuple[float, ...]
    measures: tuple[MeasureEstimate, ...]
    slope: float
    intercept: float
    c2_fit: float               # max measure / (eps K^gamma)
    gamma: float
    bound_ok: tuple[bool, ...]  # measure <= c2 eps K^gamma per point
    c2_used: float
    seed: int
    samples: int

    def as_rows(self):
        for eps, alpha, est, ok in zip(self.epsilons, self.alphas,
                                       self.measures, self.bound_ok):
            yield {"eps": eps, "alpha": alpha, "measure": est.value,
                   "std_error": est.std_error, "bound_ok": ok}


def scaling_study(n: int, K0: int, K: int, epsilons, samples: int, seed: int,
                  alpha_scale: float = 1.0, c2: float | None = None,
                  ell_multiplier: float = 3.0) -> ScalingStudy:
    """Log-log regression of the doubly-resonant measure against eps.

    The covering is evaluated at alpha = alpha_scale * sqrt(eps); the study
    refuses (CoveringViolation) whenever that alpha reaches 1, where the
    zones stop being thin and the measure law is void.  The fitted constant
    is the largest observed measure / (eps K^gamma) ratio.
    """
    epsilons = sorted(float(e) for e in epsilons)
    if len(epsilons) < 3:
        raise ValueError("need at least 3 epsilon values")
    if epsilons[-1] / epsilons[0] < 100.0 * (1 - 1e-9):
        raise ValueError("epsilon values must span at least two decades")
    gamma = 11.0 * n + 4.0
    alphas, measures = [], []
    for i, eps in enumerate(epsilons):
        alpha = alpha_scale * math.sqrt(eps)
        if alpha >= 1.0:
            raise CoveringViolation(
                f"alpha = {alpha:.3g} >= 1 at eps = {eps:.3g}; "
                "covering hypotheses violated")
        params = CoveringParams(n=n, eps=eps, K0=K0, K=K, alpha=alpha,
                                ell_multiplier=ell_multiplier)
        box = [(-1.0, 1.0)] * n

        def r2_predicate(pts, _params=params):
            inside = np.linalg.norm(pts, axis=1) < 1.0
            out = np.zeros(pts.shape[0], dtype=bool)
            out[inside] = classify_batch(pts[inside], _params) == 2
            return out

        alphas.append(alpha)
        measures.append(mc_measure(r2_predicate, box, samples, seed, stream=i))
    vals = np.array([m.value for m in measures])
    if np.any(vals <= 0):
        raise ArithmeticError("degenerate regression: empty zone measured")
    slope, intercept = np.polyfit(np.log(epsilons), np.log(vals), 1)
    ratios = vals / (np.array(epsilons) * K ** gamma)
    c2_fit = float(np.max(ratios))
    c2_used = c2 if c2 is not None else c2_fit
    bound = tuple(bool(v <= c2_used * e * K ** gamma * (1 + 1e-12))
                  for v, e in zip(vals, epsilons))
    return ScalingStudy(n=n, K0=K0, K=K, epsilons=tuple(epsilons),
                        alphas=tuple(alphas), measures=tuple(measures),
                        slope=float(slope), intercept=float(intercept),
                        c2_fit=c2_fit, gamma=gamma, bound_ok=bound,
                        c2_used=float(c2_used), seed=seed, samples=samples)


# ---------------------------------------------------------------------------
# Non-torus budget shape
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BudgetRow:
    K: float
    poly_term: float       # (2 pi)^n c2 eps K^gamma
    exp_term: float        # exp(-K / c)

    @property
    def total(self) -> float:
        return self.poly_term + self.exp_term


@dataclass(frozen=True)
class BudgetTable:
    eps: float
    gamma: float
    rows: tuple[BudgetRow, ...]
    crossover_K: float
    special_K: dict = field(default_factory=dict)


def _budget_terms(eps: float, K: float, n: int, c2: float, c: float,
                  gamma: float) -> BudgetRow:
    return BudgetRow(K=K,
                     poly_term=(2.0 * math.pi) ** n * c2 * eps * K ** gamma,
                     exp_term=math.exp(-K / c))


def budget_shape(eps: float, K_list, constants: dict) -> BudgetTable:
    """Tabulate both terms of the non-torus budget per K, locate their
    crossover, and evaluate the canonical K choices.

    ``constants`` needs n, c2, c; the optional exponent split a (default
    1/2) feeds the power-law choice K = eps^{-(1-a)/gamma}.
    """
    n = int(constants["n"])
    c2 = float(constants["c2"])
    c = float(constants["c"])
    a = float(constants.get("a", 0.5))
    if min(eps, c2, c) <= 0:
        raise ValueError("eps and the constants must be positive")
    gamma = 11.0 * n + 4.0
    rows = tuple(_budget_terms(eps, float(K), n, c2, c, gamma)
                 for K in K_list)

    # log(poly) + K/c is increasing in K, so the crossover is unique
    def gap(K: float) -> float:
        return (math.log((2 * math.pi) ** n * c2 * eps) + gamma * math.log(K)
                + K / c)

    lo, hi = 1e-9, 10.0
    while gap(hi) < 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    crossover = 0.5 * (lo + hi)
    lneps = abs(math.log(eps))
    special = {
        "K=c|ln eps|": _budget_terms(eps, c * lneps, n, c2, c, gamma),
        "K=(ln eps)^2": _budget_terms(eps, lneps ** 2, n, c2, c, gamma),
        "K=eps^-(1-a)/gamma": _budget_terms(eps, eps ** (-(1.0 - a) / gamma),
                                            n, c2, c, gamma),
    }
    return BudgetTable(eps=eps, gamma=gamma, rows=rows, crossover_K=crossover,
                       special_K=special)
