"""Phase-space decomposition of one-degree-of-freedom Hamiltonians
p^2 + G(q) in standard form.

The reference potential is a Morse trigonometric polynomial with 2N critical
points; its separatrices split the phase region {H < E_flat} into 2N + 1
connected components, each described here by an energy interval and the
critical point it wraps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potential import NotMorseError, OneDSeries, morse_analyze

__all__ = [
    "StandardForm1D",
    "Region",
    "standard_form",
    "pendulum_form",
    "validate",
    "ValidationClause",
    "ValidationReport",
    "decompose",
    "phase_bounds",
    "PhaseBoundsReport",
]


@dataclass(frozen=True)
class StandardForm1D:
    """H(p, q) = (1 + nu(p, q)) p^2 + G(q) on (-R, R) x T.

    ``gbar`` is the reference potential; ``g_perturbation`` (a series, sup
    bounded by eps_bar * mu) and ``kinetic_perturbation`` (a callable,
    sup bounded by mu) carry the optional perturbed branch.  All quantitative
    work defaults to mu = 0.
    """

    gbar: OneDSeries
    radius: float                     # R, half-width of the momentum window
    margin: float                     # r, analyticity margin, 1 <= R/r <= kappa
    sbar: float
    beta: float
    eps_bar: float
    kappa: float = 4.0
    mu: float = 0.0
    g_perturbation: OneDSeries | None = None
    kinetic_perturbation: Callable[[float, float], float] | None = None

    @property
    def e_flat(self) -> float:
        """Top reference energy R^2 + R r bounding the outer regions."""
        return self.radius ** 2 + self.radius * self.margin

    def effective_potential(self) -> OneDSeries:
        if self.g_perturbation is None:
            return self.gbar
        return self.gbar + self.g_perturbation

    def hamiltonian(self, p, q):
        nu = self.kinetic_perturbation
        base = (1.0 + (nu(p, q) if nu else 0.0)) * p * p
        return base + self.effective_potential()(q)


def standard_form(gbar: OneDSeries, *, sbar: float = 1.0, mu: float = 0.0,
                  kappa: float | None = None,
                  g_perturbation: OneDSeries | None = None,
                  kinetic_perturbation=None) -> StandardForm1D:
    """Wrap a Morse potential in canonical standard-form characteristics.

    eps_bar is set to sup|gbar|, beta to the Morse constant, and the radii
    to R = r = 2^9 sqrt(eps_bar), which meets eps_bar <= r^2 / 2^16 with a
    factor-4 margin.
    """
    profile = morse_analyze(gbar)
    eps_bar = gbar.max_abs()
    r = 2.0 ** 9 * math.sqrt(eps_bar)
    if kappa is None:
        kappa = max(4.0, 2.0 * eps_bar / profile.beta)
    return StandardForm1D(gbar=gbar, radius=r, margin=r, sbar=sbar,
                          beta=profile.beta, eps_bar=eps_bar, kappa=kappa,
                          mu=mu, g_perturbation=g_perturbation,
                          kinetic_perturbation=kinetic_perturbation)


def pendulum_form(scale: float = 1.0) -> StandardForm1D:
    """The benchmark pendulum p^2 + scale * cos(q)."""
    return standard_form(OneDSeries.from_cos_sin({1: scale}))


# ---------------------------------------------------------------------------
# Validation of the standard-form inequalities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationClause:
    name: str
    passed: bool
    margin: float    # required/attained ratio or slack, > 1 (or > 0) is good
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    clauses: tuple[ValidationClause, ...]
    passed: bool

    def clause(self, name: str) -> ValidationClause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)


def validate(h: StandardForm1D) -> ValidationReport:
    """Check every standard-form inequality; violations are reported, not
    raised."""
    clauses: list[ValidationClause] = []
    sup_g = h.gbar.max_abs()
    clauses.append(ValidationClause(
        "sup_gbar_le_eps_bar", sup_g <= h.eps_bar * (1 + 1e-12),
        h.eps_bar / sup_g if sup_g else math.inf))
    bound = h.margin ** 2 / 2.0 ** 16
    clauses.append(ValidationClause(
        "eps_bar_le_margin_sq", h.eps_bar <= bound * (1 + 1e-12),
        bound / h.eps_bar))
    if h.g_perturbation is not None:
        sup_dg = h.g_perturbation.max_abs()
        cap = h.eps_bar * h.mu
        clauses.append(ValidationClause(
            "perturbation_le_eps_bar_mu", sup_dg <= cap,
            cap / sup_dg if sup_dg else math.inf))
    if h.kinetic_perturbation is not None:
        ps = np.linspace(-h.radius, h.radius, 41)
        qs = np.linspace(0, 2 * np.pi, 81)
        sup_nu = max(abs(h.kinetic_perturbation(p, q)) for p in ps for q in qs)
        clauses.append(ValidationClause(
            "kinetic_le_mu", sup_nu <= h.mu,
            h.mu / sup_nu if sup_nu else math.inf))
    clauses.append(ValidationClause(
        "sbar_range", 1.0 / h.kappa <= h.sbar <= 1.0,
        min(h.sbar * h.kappa, 1.0 / h.sbar)))
    ratio = h.radius / h.margin
    clauses.append(ValidationClause(
        "radius_ratio_range", 1.0 <= ratio <= h.kappa,
        min(ratio, h.kappa / ratio)))
    er = h.eps_bar / h.beta
    clauses.append(ValidationClause(
        "eps_over_beta_range", 0.5 <= er <= h.kappa,
        min(2.0 * er, h.kappa / er)))
    try:
        profile = morse_analyze(h.gbar)
        ok = profile.beta >= h.beta * (1 - 1e-12)
        clauses.append(ValidationClause(
            "gbar_beta_morse", ok, profile.beta / h.beta,
            f"2N={profile.count}"))
    except NotMorseError as err:
        clauses.append(ValidationClause("gbar_beta_morse", False, 0.0, str(err)))
    return ValidationReport(tuple(clauses), all(c.passed for c in clauses))


# ---------------------------------------------------------------------------
# Region decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """One connected component of {H < E_flat} between separatrices.

    ``index`` runs 0..2N; even inner indices label components whose boundary
    contains the hyperbolic point at ``marker``, odd indices components
    around the elliptic point at ``marker``.  The energy interval is
    (e_lo, e_hi); for outer regions e_hi is the artificial top energy.
    """

    index: int
    kind: str                      # outer_lower | outer_upper | inner_odd | inner_even
    e_lo: float
    e_hi: float
    marker: float
    potential: OneDSeries
    crit_angles: tuple[float, ...]
    crit_values: tuple[float, ...]
    energy_scale: float            # sup |gbar|, the z normalizer for fits
    e_flat: float
    j_minus: int | None = None
    j_plus: int | None = None

    @property
    def is_outer(self) -> bool:
        return self.kind in ("outer_lower", "outer_upper")

    @property
    def is_inner(self) -> bool:
        return not self.is_outer

    @property
    def width(self) -> float:
        return self.e_hi - self.e_lo


def decompose(h: StandardForm1D) -> list[Region]:
    """Split the phase space into its 2N + 1 regions.

    Energy intervals follow the portrait rules: outer regions span
    (E_global_max, E_flat); an odd region spans from its minimum up to the
    lower adjacent maximum; an even inner region 2j spans from its own
    critical value up to the smaller of the two dominating maxima
    E_{2 j_minus}, E_{2 j_plus}.
    """
    g = h.effective_potential()
    profile = morse_analyze(g)
    crits = profile.angles
    vals = profile.values
    two_n = profile.count
    n_sep = two_n // 2
    e_flat = h.e_flat
    scale = h.gbar.max_abs()
    common = dict(potential=g, crit_angles=crits, crit_values=vals,
                  energy_scale=scale, e_flat=e_flat)

    def maximum(ell: int) -> float:
        # E_{2 ell} with the wrap E_{2N} = E_0
        return vals[0] if ell == n_sep else vals[2 * ell]

    regions = [Region(index=0, kind="outer_lower", e_lo=vals[0], e_hi=e_flat,
                      marker=crits[0], **common)]
    for i in range(1, two_n):
        if i % 2 == 1:
            left = vals[i - 1]
            right = vals[0] if i + 1 == two_n else vals[i + 1]
            regions.append(Region(index=i, kind="inner_odd", e_lo=vals[i],
                                  e_hi=min(left, right), marker=crits[i],
                                  **common))
        else:
            j = i // 2
            j_minus = max(ell for ell in range(j) if maximum(ell) > vals[i])
            j_plus = min(ell for ell in range(j + 1, n_sep + 1)
                         if maximum(ell) > vals[i])
            regions.append(Region(index=i, kind="inner_even", e_lo=vals[i],
                                  e_hi=min(maximum(j_minus), maximum(j_plus)),
                                  marker=crits[i], j_minus=j_minus,
                                  j_plus=j_plus, **common))
    regions.append(Region(index=two_n, kind="outer_upper", e_lo=vals[0],
                          e_hi=e_flat, marker=crits[0], **common))
    for reg in regions:
        if not reg.e_lo < reg.e_hi:
            raise NotMorseError(f"empty energy interval in region {reg.index}")
    return regions


# ---------------------------------------------------------------------------
# Containment of the phase region in its momentum box
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseBoundsReport:
    inner_box_contained: bool
    contained_in_outer_box: bool
    max_h_on_inner_box: float
    max_abs_p_on_sublevel: float
    e_flat: float

    @property
    def passed(self) -> bool:
        return self.inner_box_contained and self.contained_in_outer_box


def phase_bounds(h: StandardForm1D, grid: int = 256) -> PhaseBoundsReport:
    """Grid check that {H < E_flat} contains (-R - r/3, R + r/3) x T and is
    contained in (-R - r/2, R + r/2) x T.  Requires mu <= 1/(4 kappa)^2."""
    if h.mu > 1.0 / (4.0 * h.kappa) ** 2:
        raise ValueError("phase bounds need mu <= 1/(4 kappa)^2")
    if h.margin <= 0 or h.radius <= 0:
        raise ValueError("degenerate momentum box")
    R, r = h.radius, h.margin
    e_flat = h.e_flat
    qs = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    p_outer = R + r / 2.0
    ps = np.linspace(-p_outer * 1.5, p_outer * 1.5, grid)
    g = h.effective_potential()(qs)
    nu = h.kinetic_perturbation
    P, Gq = np.meshgrid(ps, g, indexing="ij")
    if nu is None:
        H = P * P + Gq
    else:
        Q = np.meshgrid(ps, qs, indexing="ij")[1]
        H = (1.0 + np.vectorize(nu)(P, Q)) * P * P + Gq
    inner = np.abs(P) <= R + r / 3.0
    max_inner = float(np.max(H[inner]))
    sub = H < e_flat
    max_p_sub = float(np.max(np.abs(P[sub]))) if np.any(sub) else 0.0
    return PhaseBoundsReport(
        inner_box_contained=max_inner < e_flat,
        contained_in_outer_box=max_p_sub < p_outer,
        max_h_on_inner_box=max_inner,
        max_abs_p_on_sublevel=max_p_sub,
        e_flat=e_flat,
    )
