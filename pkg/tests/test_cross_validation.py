"""Cross-module consistency checks: each test pits two independent
computational routes against each other (classifier geometry vs analytic
slab areas, quadrature twist vs elliptic closed forms, separatrix machinery
vs the elliptic-point jet)."""

import math

import numpy as np
import pytest
from scipy.special import ellipe

from kam_atlas.actions import twist_1d
from kam_atlas.measure import mc_measure
from kam_atlas.portrait import decompose, standard_form
from kam_atlas.potential import OneDSeries
from kam_atlas.resonance import CoveringParams, classify_batch
from kam_atlas.twist import birkhoff_delta


def test_resonant_slab_union_measure():
    # the complement of the non-resonant zone inside the unit disk is the
    # union of the slabs {|y.k| <= alpha/2}; to first order in alpha its
    # area is sum_k 2 alpha / |k| (chord length ~ 2, overlaps O(alpha^2))
    alpha = 2e-3
    p = CoveringParams(n=2, eps=1e-6, K0=4, K=24, alpha=alpha)

    def not_nonresonant(pts):
        inside = np.linalg.norm(pts, axis=1) < 1.0
        out = np.zeros(pts.shape[0], dtype=bool)
        out[inside] = classify_batch(pts[inside], p) != 0
        return out

    est = mc_measure(not_nonresonant, [(-1, 1), (-1, 1)], 2_000_000, 77)
    expected = sum(2.0 * alpha / math.sqrt(sum(c * c for c in k))
                   for k in p.low_generators())
    assert est.value == pytest.approx(expected,
                                      rel=0.02, abs=5 * est.std_error)


def test_outer_twist_against_elliptic_closed_form(pendulum_regions):
    # d2E/dI2 from the quadrature path vs high-order finite differences of
    # the closed-form action I(E) = (2/pi) sqrt(E+1) E_ell(2/(E+1))
    outer = pendulum_regions[2]

    def I_closed(E):
        return (2.0 / math.pi) * math.sqrt(E + 1.0) * ellipe(2.0 / (E + 1.0))

    for E in (1.5, 3.0, 10.0):
        h = 1e-3 * (E - 1.0)
        stencil = np.array([-2, -1, 1, 2], dtype=float)
        vals = np.array([I_closed(E + s * h) for s in stencil])
        d1 = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
        center = I_closed(E)
        d2 = (-vals[0] + 16 * vals[1] - 30 * center + 16 * vals[2]
              - vals[3]) / (12 * h * h)
        oracle = -d2 / d1 ** 3
        assert twist_1d(outer, E) == pytest.approx(oracle, rel=1e-7)


@pytest.mark.parametrize("second_harmonic", [0.0, -0.125, +0.125])
def test_elliptic_limit_matches_birkhoff_coefficient(second_harmonic):
    # with the single-branch action normalization, d2E/dI2 tends to 4c at
    # the elliptic point, c the quartic coefficient from the potential jet
    coeffs = {1: 1.0}
    if second_harmonic:
        coeffs[2] = second_harmonic
    g = OneDSeries.from_cos_sin(coeffs)
    inner = [r for r in decompose(standard_form(g)) if r.kind == "inner_odd"][0]
    jet = birkhoff_delta(g, math.pi)
    h = 1e-4 * inner.width
    measured = twist_1d(inner, inner.e_lo + h)
    assert measured == pytest.approx(4.0 * jet.c, rel=5e-3)
