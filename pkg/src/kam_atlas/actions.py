"""Action functions of standard-form Hamiltonians by singular-endpoint
quadrature.

The action of a region at energy E is (1/2pi) times the integral of
sqrt(E - G) over the oscillation interval (inner regions) or over one full
period (outer regions); with this normalization inner and outer actions meet
at the separatrix.  Turning-point square-root singularities are removed by
the substitution q = q_turn +- u^2, and the difference E - G(q) is evaluated
in anchored form to avoid cancellation next to critical points.

Energy derivatives of the action come from quadrature of differentiated
integrands where those stay proper (first derivative everywhere, all orders
on outer regions) and from Richardson-extrapolated central differences of
the quadrature-exact first derivative otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .portrait import Region
from .potential import OneDSeries

__all__ = [
    "OutsideRegionError",
    "action",
    "action_derivative",
    "action_second_derivative",
    "action_third_derivative",
    "ActionProfile",
    "build_profile",
    "energy_from_action",
    "twist_1d",
    "SeparatrixFit",
    "separatrix_fit",
]

TWO_PI = 2.0 * math.pi


class OutsideRegionError(ValueError):
    """Requested energy lies outside the region's energy interval."""


# ---------------------------------------------------------------------------
# Stable evaluation of G(q_ref) - G(q) for trigonometric polynomials
# ---------------------------------------------------------------------------


def _g_diff(g: OneDSeries, q_ref: float, q: float) -> float:
    """G(q_ref) - G(q) without cancellation for q near q_ref.

    Uses cos A - cos B = -2 sin((A+B)/2) sin((A-B)/2) and the sine analogue
    term by term, so the result is accurate relative to |q - q_ref|.
    """
    total = 0.0
    half_sum = 0.5 * (q_ref + q)
    half_diff = 0.5 * (q_ref - q)
    for j, c in g.coeffs.items():
        if j < 0:
            continue
        sh = math.sin(j * half_diff)
        total += -4.0 * sh * (c.real * math.sin(j * half_sum)
                              + c.imag * math.cos(j * half_sum))
    return total


# ---------------------------------------------------------------------------
# Orbit geometry: anchored pieces of the integration interval
# ---------------------------------------------------------------------------

_TOUCH_REL = 1e-12      # |G(c) - E| below this (times scale) counts as exact
_BRENT_XTOL = 1e-14


def _extended_criticals(region: Region):
    angles, values = [], []
    for off in (-TWO_PI, 0.0, TWO_PI):
        for a, v in zip(region.crit_angles, region.crit_values):
            angles.append(a + off)
            values.append(v)
    order = np.argsort(angles)
    return [angles[i] for i in order], [values[i] for i in order]


def _ensure_inside(g: OneDSeries, E: float, q: float, toward: float) -> float:
    """Nudge a turning point toward the well until E - G(q) >= 0."""
    direction = 1.0 if toward > q else -1.0
    for _ in range(16):
        deficit = E - float(g(q))
        if deficit >= 0.0:
            return q
        slope = abs(g.derivative_at(q, 1))
        step = max(2.0 * abs(deficit) / max(slope, 1e-300),
                   4.0 * float(np.spacing(abs(q) + 1e-30)))
        q = q + direction * step
    raise ArithmeticError("turning point could not be stabilized")


def _well(region: Region, E: float):
    """Oscillation interval of an inner region at energy E on the lifted
    line: (q_lo, q_hi, interior anchor angles, delta_lo, delta_hi).

    The interval is the connected component of {G < E} containing the
    region's marker; its endpoints are regular turning points, or critical
    points themselves when E equals the wall's critical value."""
    g = region.potential
    tol = _TOUCH_REL * region.energy_scale
    angles, values = _extended_criticals(region)
    m = region.marker
    if not float(g(m)) < E + tol:
        raise OutsideRegionError("marker above requested energy")
    i0 = min(range(len(angles)), key=lambda i: abs(angles[i] - m))

    def walk(direction: int):
        passed: list[float] = []
        inner_side = angles[i0]
        j = i0 + direction
        while True:
            a, v = angles[j], values[j]
            if v >= E - tol:
                if abs(v - E) <= tol:
                    return a, E - v, passed
                lo, hi = (inner_side, a) if direction > 0 else (a, inner_side)
                q = brentq(lambda t: float(g(t)) - E, lo, hi,
                           xtol=_BRENT_XTOL, rtol=8.882e-16)
                q = _ensure_inside(g, E, q, inner_side)
                return q, E - float(g(q)), passed
            passed.append(a)
            inner_side = a
            j += direction

    q_hi, d_hi, right = walk(+1)
    q_lo, d_lo, left = walk(-1)
    anchors = list(reversed(left)) + [angles[i0]] + right
    return q_lo, q_hi, anchors, d_lo, d_hi


def _pieces(region: Region, E: float):
    """List of (a, b, delta_a, delta_b) intervals with anchored endpoints."""
    g = region.potential
    if region.is_outer:
        angles = list(region.crit_angles) + [region.crit_angles[0] + TWO_PI]
        values = list(region.crit_values) + [region.crit_values[0]]
        return [(angles[i], angles[i + 1], E - values[i], E - values[i + 1])
                for i in range(len(angles) - 1)]
    q_lo, q_hi, anchors, d_lo, d_hi = _well(region, E)
    pts = [q_lo] + anchors + [q_hi]
    deltas = [d_lo] + [E - float(g(a)) for a in anchors] + [d_hi]
    return [(pts[i], pts[i + 1], deltas[i], deltas[i + 1])
            for i in range(len(pts) - 1)]


def _anchored_piece(g: OneDSeries, a: float, b: float, da: float, db: float,
                    power: float, epsabs: float) -> float:
    """integral over [a, b] of (E - G)^power with E - G = delta + local
    difference, endpoints regularized by q = anchor +- u^2."""
    mid = 0.5 * (a + b)
    total = 0.0
    for anchor, delta, sign, umax in ((a, da, 1.0, math.sqrt(mid - a)),
                                      (b, db, -1.0, math.sqrt(b - mid))):
        if umax == 0.0:
            continue

        def integrand(u, _anchor=anchor, _delta=delta, _sign=sign):
            q = _anchor + _sign * u * u
            d = _delta + _g_diff(g, _anchor, q)
            if d <= 0.0:
                d = 0.0 if power > 0 else 1e-300
            return 2.0 * u * d ** power

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _err = quad(integrand, 0.0, umax, epsabs=epsabs,
                             epsrel=1e-10, limit=200)
        total += val
    return total


def _orbit_integral(region: Region, E: float, power: float) -> float:
    # the integrand scales like eps_bar^power under potential rescaling, so
    # the absolute tolerance must follow it for scale-invariant subdivision
    epsabs = 1e-13 * region.energy_scale ** power
    return sum(_anchored_piece(region.potential, a, b, da, db, power, epsabs)
               for a, b, da, db in _pieces(region, E))


def _require_in_interval(region: Region, E: float, closed_top: bool,
                         closed_bottom: bool = False) -> None:
    top_ok = E <= region.e_hi if closed_top else E < region.e_hi
    bottom = region.e_lo
    bottom_ok = E >= bottom if (closed_bottom or region.is_outer) else E > bottom
    if not (top_ok and bottom_ok):
        raise OutsideRegionError(
            f"E={E} outside region {region.index} interval "
            f"({region.e_lo}, {region.e_hi})")


# ---------------------------------------------------------------------------
# Action and its energy derivatives
# ---------------------------------------------------------------------------


def action(region: Region, E: float) -> float:
    """I(E) = (1/2pi) integral of sqrt(E - G) over the orbit interval.

    Both interval endpoints are allowed: the integral stays convergent at
    critical energies (the elliptic bottom of an odd region carries zero
    action, and separatrix values give the limiting action).
    """
    _require_in_interval(region, E, closed_top=True, closed_bottom=True)
    if region.kind == "inner_odd" and E <= region.e_lo:
        return 0.0
    return _orbit_integral(region, E, 0.5) / TWO_PI


def action_derivative(region: Region, E: float) -> float:
    """dI/dE = (1/4pi) integral of (E - G)^(-1/2); interior energies only."""
    _require_in_interval(region, E, closed_top=False)
    if region.is_outer and not E > region.e_lo:
        raise OutsideRegionError("derivative diverges at the separatrix")
    return _orbit_integral(region, E, -0.5) / (2.0 * TWO_PI)


def _richardson_d2(region: Region, E: float) -> float:
    d = min(E - region.e_lo, region.e_hi - E)
    h = d / 16.0
    def diff(hh):
        return (action_derivative(region, E + hh)
                - action_derivative(region, E - hh)) / (2.0 * hh)
    d1, d2, d3 = diff(h), diff(h / 2.0), diff(h / 4.0)
    r1 = (4.0 * d2 - d1) / 3.0
    r2 = (4.0 * d3 - d2) / 3.0
    return (16.0 * r2 - r1) / 15.0


def _richardson_d3(region: Region, E: float) -> float:
    d = min(E - region.e_lo, region.e_hi - E)
    h = d / 12.0
    def diff(hh):
        return (action_derivative(region, E + hh) - 2.0 * action_derivative(region, E)
                + action_derivative(region, E - hh)) / (hh * hh)
    d1, d2 = diff(h), diff(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def action_second_derivative(region: Region, E: float) -> float:
    """d2I/dE2: proper quadrature -(1/8pi) int (E-G)^(-3/2) on outer regions,
    Richardson differences of dI/dE on inner ones (moving turning points)."""
    _require_in_interval(region, E, closed_top=False)
    if region.is_outer:
        if not E > region.e_lo:
            raise OutsideRegionError("second derivative needs E above the separatrix")
        return -_orbit_integral(region, E, -1.5) / (4.0 * TWO_PI)
    return _richardson_d2(region, E)


def action_third_derivative(region: Region, E: float) -> float:
    _require_in_interval(region, E, closed_top=False)
    if region.is_outer:
        return 3.0 * _orbit_integral(region, E, -2.5) / (8.0 * TWO_PI)
    return _richardson_d3(region, E)


# ---------------------------------------------------------------------------
# Profiles, inversion, twist
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionProfile:
    """Sampled I(E) with derivatives over one region (orientation: I is
    strictly increasing in E on every region)."""

    region: Region
    energies: np.ndarray
    actions: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None = None

    @property
    def action_range(self) -> tuple[float, float]:
        return float(self.actions[0]), float(self.actions[-1])


def build_profile(region: Region, count: int = 33, edge_clip: float = 1e-4,
                  with_third: bool = False) -> ActionProfile:
    """Sampled action profile over the region.

    Inner regions get a Chebyshev-clustered energy grid clipped away from the
    critical endpoints by ``edge_clip`` times the interval width; outer
    regions, whose top energy sits far above the separatrix, get geometric
    spacing of E - E_sep instead so the near-separatrix range is resolved.
    """
    width = region.width
    if region.is_outer:
        offsets = np.geomspace(edge_clip * region.energy_scale,
                               width * (1.0 - 2.0 ** -30), count)
        energies = region.e_lo + offsets
    else:
        x = 0.5 * (1.0 - np.cos(np.pi * np.arange(count) / (count - 1)))
        x = edge_clip + (1.0 - 2.0 * edge_clip) * x
        energies = region.e_lo + width * x
    actions = np.array([action(region, float(E)) for E in energies])
    d1 = np.array([action_derivative(region, float(E)) for E in energies])
    d2 = np.array([action_second_derivative(region, float(E)) for E in energies])
    d3 = (np.array([action_third_derivative(region, float(E)) for E in energies])
          if with_third else None)
    if not np.all(np.diff(actions) > 0) or not np.all(d1 > 0):
        raise ArithmeticError("action profile is not strictly increasing")
    return ActionProfile(region=region, energies=energies, actions=actions,
                         d1=d1, d2=d2, d3=d3)


def _region_of(obj) -> Region:
    return obj.region if isinstance(obj, ActionProfile) else obj


def energy_from_action(profile, target: float) -> float:
    """Invert I(E) by bracketed root finding; |I(E(target)) - target| stays
    within quadrature accuracy (<= 1e-9)."""
    region = _region_of(profile)
    scale = region.energy_scale
    lo = region.e_lo + 1e-13 * scale
    hi = region.e_hi - (0.0 if region.is_outer else 1e-13 * scale)
    I_lo = action(region, lo)
    I_hi = action(region, hi)
    if target <= I_lo:
        if region.kind == "inner_odd" and target >= -1e-12 * math.sqrt(scale):
            return region.e_lo    # the elliptic point carries zero action
        if target < I_lo - 1e-9:
            raise OutsideRegionError("action below the region's range")
        return lo
    if target > I_hi * (1 + 1e-12):
        raise OutsideRegionError("action above the region's range")
    return brentq(lambda E: action(region, E) - target, lo, hi,
                  xtol=1e-14 * scale, rtol=8.882e-16)


def twist_1d(profile, E: float) -> float:
    """Second derivative of the energy function, d2E/dI2 = -I''/(I')^3."""
    region = _region_of(profile)
    d1 = action_derivative(region, E)
    d2 = action_second_derivative(region, E)
    return -d2 / d1 ** 3


# ---------------------------------------------------------------------------
# Separatrix expansion fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparatrixFit:
    """Least-squares coefficients of I(E_crit -+ scale*z) against the basis
    {z^j, j <= J} and {z^{j+1} log z, j < J}."""

    region_index: int
    side: str                 # "lower" or "upper"
    scale: float              # energy normalizer (sup |gbar|)
    z: np.ndarray
    samples: np.ndarray
    phi: np.ndarray           # ascending, length J + 1
    psi: np.ndarray           # ascending, length J
    residual: float           # sup norm of the fit misfit
    expected_sign: int        # +1, -1, or 0 (analytic side)

    @property
    def phi0(self) -> float:
        return float(self.phi[0])

    @property
    def psi0(self) -> float:
        return float(self.psi[0])

    @property
    def sign_ok(self) -> bool:
        if self.expected_sign > 0:
            return self.psi0 > 0
        if self.expected_sign < 0:
            return self.psi0 < 0
        return bool(np.max(np.abs(self.psi)) <= 1e-8)


def separatrix_fit(region: Region, side: str, zmin: float, zmax: float,
                   J: int = 3, points: int = 48) -> SeparatrixFit:
    """Fit the z log z expansion of the action next to a critical energy.

    ``side`` selects the approach: "upper" fits I(e_hi - scale*z) (inner
    regions only), "lower" fits I(e_lo + scale*z).  Requires at least
    4 (J + 1) log-spaced samples.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    if side == "upper" and region.is_outer:
        raise ValueError("outer regions have no critical upper endpoint")
    if not 0.0 < zmin < zmax:
        raise ValueError("need 0 < zmin < zmax")
    if points < 4 * (J + 1):
        raise ValueError(f"need at least {4 * (J + 1)} sample points")
    scale = region.energy_scale
    if zmax * scale >= region.width:
        raise ValueError("zmax reaches across the region")
    z = np.geomspace(zmin, zmax, points)
    if side == "upper":
        energies = region.e_hi - scale * z
        expected = +1
    else:
        energies = region.e_lo + scale * z
        expected = 0 if region.kind == "inner_odd" else -1
    samples = np.array([action(region, float(E)) for E in energies])
    poly = np.column_stack([z ** j for j in range(J + 1)])
    logs = np.column_stack([z ** (j + 1) * np.log(z) for j in range(J)])

    def solve(A):
        norms = np.max(np.abs(A), axis=0)
        cond = np.linalg.cond(A / norms)
        if cond > 1e12:
            raise ArithmeticError(f"fit basis ill-conditioned (cond={cond:.2e});"
                                  " widen the z window")
        coef, *_ = np.linalg.lstsq(A / norms, samples, rcond=None)
        coef = coef / norms
        return coef, float(np.max(np.abs(A @ coef - samples)))

    # The log columns are nearly collinear with high polynomial powers on a
    # narrow window, so a joint fit of an analytic side would leak O(1e-4)
    # into psi.  Accept the nested polynomial model whenever it already fits
    # at quadrature accuracy; otherwise the log part is genuine.
    phi_only, poly_residual = solve(poly)
    if poly_residual <= 1e-7 * math.sqrt(scale):
        return SeparatrixFit(region_index=region.index, side=side, scale=scale,
                             z=z, samples=samples, phi=phi_only,
                             psi=np.zeros(J), residual=poly_residual,
                             expected_sign=expected)
    coef, residual = solve(np.hstack([poly, logs]))
    return SeparatrixFit(region_index=region.index, side=side, scale=scale,
                         z=z, samples=samples, phi=coef[:J + 1],
                         psi=coef[J + 1:], residual=residual,
                         expected_sign=expected)
