"""Twist non-degeneracy analysis over simple-resonance blocks.

Covers the normalized twist profile of an inner region (the second
derivative of the energy function rescaled to the unit action interval),
grid-verified derivative certificates, sublevel measure bounds of
non-degenerate functions, the quartic Birkhoff coefficient at an elliptic
point, the block twist determinant over region x transverse form, and the
positive-definite determinant perturbation bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

from .actions import ActionProfile, action, energy_from_action, twist_1d
from .potential import OneDSeries
from .resonance import TransverseForm

__all__ = [
    "NormalizedTwist",
    "normalized_F",
    "NondegeneracyCert",
    "CertificateNotFound",
    "certify_nondegeneracy",
    "sublevel_bound",
    "empirical_sublevel",
    "BirkhoffData",
    "birkhoff_delta",
    "MuCorrections",
    "TwistField",
    "twist_field",
    "PDDetBound",
    "pd_det_bound",
]


class CertificateNotFound(RuntimeError):
    """No derivative order up to the requested maximum bounds the function
    away from degeneracy on the sampled grid."""


# ---------------------------------------------------------------------------
# Normalized twist profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalizedTwist:
    """Samples of F(x) = (d2E/dI2)(a + (b - a) x) for x in (0, 1), where
    (a, b) is the action range of an inner region between its critical
    energies.  F is scale-invariant: multiplying the potential by lambda > 0
    leaves it unchanged pointwise."""

    region_index: int
    xs: np.ndarray
    values: np.ndarray
    action_lo: float
    action_hi: float


def normalized_F(profile, xs=None, count: int = 41,
                 x_lo: float = 0.02, x_hi: float = 0.98) -> NormalizedTwist:
    """Sample the normalized twist of an inner region on a grid avoiding the
    endpoints {0, 1} (by default Chebyshev-clustered on [x_lo, x_hi])."""
    region = profile.region if isinstance(profile, ActionProfile) else profile
    if region.is_outer:
        raise ValueError("the normalized twist is defined on inner regions")
    a = 0.0 if region.kind == "inner_odd" else action(region, region.e_lo)
    b = action(region, region.e_hi)
    if xs is None:
        t = 0.5 * (1.0 - np.cos(np.pi * np.arange(count) / (count - 1)))
        xs = x_lo + (x_hi - x_lo) * t
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0.0) or np.any(xs >= 1.0):
        raise ValueError("grid must avoid x = 0 and x = 1")
    values = np.empty_like(xs)
    for i, x in enumerate(xs):
        target = a + (b - a) * float(x)
        E = energy_from_action(region, target)
        values[i] = twist_1d(region, E)
    return NormalizedTwist(region_index=region.index, xs=xs, values=values,
                           action_lo=a, action_hi=b)


# ---------------------------------------------------------------------------
# Derivative certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NondegeneracyCert:
    """Grid-verified lower bound: max_{1<=j<=m} |F^(j)(x)| >= xi at every
    grid point.  xi is the verified value, not a rigorous infimum."""

    xi: float
    m: int
    grid: np.ndarray
    derivative_method: str
    error_estimate: float


def _spline_min_max_derivative(xs, values, m: int, eval_grid) -> float:
    k = min(5, len(xs) - 1)
    spline = make_interp_spline(xs, values, k=k)
    best = np.zeros_like(eval_grid)
    for j in range(1, m + 1):
        dj = np.abs(spline.derivative(j)(eval_grid))
        best = np.maximum(best, dj)
    return float(np.min(best))


def certify_nondegeneracy(F: NormalizedTwist, m_max: int = 4) -> NondegeneracyCert:
    """Smallest order m <= m_max and largest grid-verified xi with
    min_x max_{1<=j<=m} |F^(j)(x)| >= xi.

    Derivatives come from a quintic interpolating spline through the samples;
    the error estimate is the defect against the half-grid spline.  Raises
    CertificateNotFound when every order up to m_max stays at noise level.
    """
    xs, vals = F.xs, F.values
    if len(xs) < 8:
        raise ValueError("need at least 8 samples to certify")
    eval_grid = np.linspace(xs[0], xs[-1], 4 * len(xs))
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    for m in range(1, m_max + 1):
        xi = _spline_min_max_derivative(xs, vals, m, eval_grid)
        xi_half = _spline_min_max_derivative(xs[::2], vals[::2], m, eval_grid)
        err = abs(xi - xi_half)
        if xi > max(2.0 * err, 1e-8 * scale):
            return NondegeneracyCert(xi=xi, m=m, grid=xs,
                                     derivative_method="quintic-spline",
                                     error_estimate=err)
    raise CertificateNotFound(
        f"no (xi, m) certificate up to order {m_max} above noise level")


# ---------------------------------------------------------------------------
# Sublevel measure
# ---------------------------------------------------------------------------


def sublevel_bound(xi: float, m: int, M: float, length: float, eta: float,
                   c_m: float | None = None) -> float:
    """Measure bound (c_m / xi^{1/m}) (M length / xi + 1) eta^{1/m} for the
    sublevel set {|f| <= eta} of a (xi, m)-non-degenerate function.

    The constant c_m is configuration; the default 2^m m matches the desk
    checks."""
    if min(xi, M, length, eta) <= 0 or m < 1:
        raise ValueError("all bound inputs must be positive, m >= 1")
    if c_m is None:
        c_m = 2.0 ** m * m
    return (c_m / xi ** (1.0 / m)) * (M * length / xi + 1.0) * eta ** (1.0 / m)


def empirical_sublevel(values, eta: float, length: float) -> float:
    """Measured size of {|f| <= eta} from uniformly spaced samples over an
    interval of the given length."""
    values = np.asarray(values, dtype=float)
    if eta <= 0 or length <= 0:
        raise ValueError("eta and length must be positive")
    return float(np.count_nonzero(np.abs(values) <= eta)) / values.size * length


# ---------------------------------------------------------------------------
# Birkhoff coefficient at an elliptic point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BirkhoffData:
    """Jet data of the potential at a nondegenerate minimum and the quartic
    frequency coefficient of p^2 + G(q) there: omega0 = sqrt(2 d2) and
    c = (1/4)(d4/d2 - 5 d3^2 / (3 d2^2)); delta = 3 d2 d4 - 5 d3^2 carries
    the sign of c."""

    d2: float
    d3: float
    d4: float
    delta: float
    omega0: float
    c: float


def birkhoff_delta(g: OneDSeries, minimum: float) -> BirkhoffData:
    """Exact-coefficient derivatives of the series at a local minimum."""
    scale = g.max_abs()
    if abs(g.derivative_at(minimum, 1)) > 1e-8 * max(scale, 1e-300):
        raise ValueError("point is not critical")
    d2 = g.derivative_at(minimum, 2)
    if d2 <= 0:
        raise ValueError("point is not a nondegenerate minimum")
    d3 = g.derivative_at(minimum, 3)
    d4 = g.derivative_at(minimum, 4)
    delta = 3.0 * d2 * d4 - 5.0 * d3 ** 2
    c = 0.25 * (d4 / d2 - 5.0 * d3 ** 2 / (3.0 * d2 ** 2))
    return BirkhoffData(d2=d2, d3=d3, d4=d4, delta=delta,
                        omega0=math.sqrt(2.0 * d2), c=c)


# ---------------------------------------------------------------------------
# Block twist determinant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MuCorrections:
    """Declared sup bounds of the perturbed Hessian blocks: the mixed
    action derivatives (border vector) and the transverse block defect."""

    cross_bound: float = 0.0
    block_bound: float = 0.0


@dataclass(frozen=True)
class TwistField:
    """det of the secular Hessian over a region x transverse-form block.

    At mu = 0 the determinant factorizes exactly into the scalar twist times
    the constant transverse determinant; with declared mu corrections the
    field carries worst-case enclosures from the bordered-determinant and
    positive-definite perturbation bounds."""

    region_index: int
    k: tuple[int, ...]
    actions: np.ndarray
    energies: np.ndarray
    twist_values: np.ndarray
    transverse_det: float
    det_values: np.ndarray
    det_lo: np.ndarray
    det_hi: np.ndarray
    bordered_bound: float

    @property
    def factorized(self) -> bool:
        return self.bordered_bound == 0.0


def twist_field(profile: ActionProfile, form: TransverseForm,
                mu_corrections: MuCorrections | None = None) -> TwistField:
    """Evaluate the block determinant over the profile's action grid."""
    H = np.asarray(form.hessian, dtype=float)
    eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
    if np.min(eigs) <= 0:
        raise ValueError("transverse form must be positive definite")
    det_h = float(np.linalg.det(H))
    twists = -profile.d2 / profile.d1 ** 3
    dets = twists * det_h
    d = H.shape[0]
    if mu_corrections is None or (mu_corrections.cross_bound == 0.0 and
                                  mu_corrections.block_bound == 0.0):
        lo = hi = dets
        border = 0.0
    else:
        lam = float(np.linalg.norm(np.linalg.inv(H), 2)) * mu_corrections.block_bound
        if lam >= 1.0:
            raise ValueError("transverse perturbation too large for an enclosure")
        big = float(np.linalg.norm(H, 2)) + mu_corrections.block_bound
        border = d * mu_corrections.cross_bound ** 2 * big ** (d - 1)
        scale_lo = (1.0 - lam) ** d
        scale_hi = (1.0 + lam) ** d
        main_lo = np.where(twists >= 0, twists * det_h * scale_lo,
                           twists * det_h * scale_hi)
        main_hi = np.where(twists >= 0, twists * det_h * scale_hi,
                           twists * det_h * scale_lo)
        lo = main_lo - border
        hi = main_hi + border
    return TwistField(region_index=profile.region.index, k=form.k,
                      actions=profile.actions, energies=profile.energies,
                      twist_values=twists, transverse_det=det_h,
                      det_values=dets, det_lo=lo, det_hi=hi,
                      bordered_bound=border)


# ---------------------------------------------------------------------------
# Positive-definite determinant perturbation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PDDetBound:
    lam: float
    det_p: float
    det_sum: float
    bound: float     # (1 - lam)^d det P
    holds: bool


def pd_det_bound(P, Q) -> PDDetBound:
    """Check det(P + Q) >= (1 - lam)^d det P with lam = |P^-1| |Q| < 1 for
    symmetric positive-definite P, Q (operator norms)."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    for name, M in (("P", P), ("Q", Q)):
        if not np.allclose(M, M.T, rtol=1e-12, atol=1e-12):
            raise ValueError(f"{name} must be symmetric")
        if np.min(np.linalg.eigvalsh(M)) <= 0:
            raise ValueError(f"{name} must be positive definite")
    lam = float(np.linalg.norm(np.linalg.inv(P), 2) * np.linalg.norm(Q, 2))
    if lam >= 1.0:
        raise ValueError(f"lam = {lam:.6g} >= 1: bound does not apply")
    d = P.shape[0]
    det_p = float(np.linalg.det(P))
    det_sum = float(np.linalg.det(P + Q))
    bound = (1.0 - lam) ** d * det_p
    return PDDetBound(lam=lam, det_p=det_p, det_sum=det_sum, bound=bound,
                      holds=det_sum >= bound * (1.0 - 1e-12))
