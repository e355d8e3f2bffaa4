import math

import numpy as np
import pytest

from kam_atlas.measure import (
    CoveringViolation,
    budget_shape,
    grid_measure,
    mc_measure,
    scaling_study,
    zone_fractions,
)
from kam_atlas.resonance import CoveringParams


def _disk(pts):
    return np.linalg.norm(pts, axis=1) < 1.0


class TestMcMeasure:
    def test_full_box(self):
        est = mc_measure(lambda p: np.ones(p.shape[0], bool),
                         [(0, 1), (0, 1)], 10_000, 1)
        assert est.value == 1.0
        assert est.std_error == 0.0

    def test_half_plane(self):
        est = mc_measure(lambda p: p[:, 0] < 0.0, [(-1, 1), (-1, 1)],
                         200_000, 7)
        assert est.value == pytest.approx(2.0, abs=5 * est.std_error)

    def test_determinism(self):
        a = mc_measure(_disk, [(-1, 1), (-1, 1)], 50_000, 99)
        b = mc_measure(_disk, [(-1, 1), (-1, 1)], 50_000, 99)
        assert a.value == b.value and a.std_error == b.std_error

    def test_partition_independence(self):
        # the estimate only depends on (seed, stream), not the chunking
        import kam_atlas.measure as m

        a = mc_measure(_disk, [(-1, 1), (-1, 1)], 300_000, 4)
        old = m._CHUNK
        try:
            m._CHUNK = 70_000
            b = mc_measure(_disk, [(-1, 1), (-1, 1)], 300_000, 4)
        finally:
            m._CHUNK = old
        assert a.value == b.value

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            mc_measure(_disk, [(-1, 1), (-1, 1)], 10, 1)

    def test_in_range(self):
        est = mc_measure(_disk, [(-1, 1), (-1, 1)], 10_000, 3)
        assert 0.0 <= est.value <= 4.0

    def test_ci_calibration(self):
        # known disk area: the 3 sigma interval must cover at >= 99 percent
        hits = 0
        runs = 200
        for seed in range(runs):
            est = mc_measure(_disk, [(-1, 1), (-1, 1)], 10_000, seed)
            lo, hi = est.ci(3.0)
            hits += lo <= math.pi <= hi
        assert hits >= 0.99 * runs

    def test_grid_companion(self):
        est = grid_measure(_disk, [(-1, 1), (-1, 1)], 801)
        assert est.method == "Grid"
        assert est.value == pytest.approx(math.pi, abs=1e-2)


class TestZoneFractions:
    def test_fractions_partition_the_ball(self):
        p = CoveringParams(n=2, eps=1e-6, K0=4, K=24, alpha=1e-3)
        z = zone_fractions(p, 200_000, 5)
        total = (z["non-resonant"].value + z["simply-resonant"].value
                 + z["doubly-resonant"].value)
        assert total == pytest.approx(z["ball"].value, abs=1e-12)
        assert z["ball"].value == pytest.approx(math.pi,
                                                abs=5 * z["ball"].std_error)


class TestScalingStudy:
    def test_slope_near_one(self):
        st = scaling_study(2, 4, 24, [1e-5, 1e-6, 1e-7], 400_000, 2026)
        assert st.slope == pytest.approx(1.0, abs=0.15)
        assert all(st.bound_ok)
        assert st.gamma == 26.0

    def test_monotone_in_K(self):
        # more excluded lines cannot shrink the doubly-resonant zone
        small = scaling_study(2, 4, 24, [1e-5, 1e-6, 1e-7], 200_000, 11)
        large = scaling_study(2, 4, 48, [1e-5, 1e-6, 1e-7], 200_000, 11)
        for a, b in zip(small.measures, large.measures):
            assert b.value >= a.value - 3 * (a.std_error + b.std_error)

    def test_refusal_when_alpha_too_large(self):
        with pytest.raises(CoveringViolation):
            scaling_study(2, 4, 24, [0.5, 5.0, 50.0], 10_000, 1)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            scaling_study(2, 4, 24, [1e-5, 1e-6], 10_000, 1)
        with pytest.raises(ValueError):
            scaling_study(2, 4, 24, [1e-5, 2e-5, 4e-5], 10_000, 1)


class TestBudgetShape:
    def test_gamma_values(self):
        t2 = budget_shape(1e-8, [10], {"n": 2, "c2": 1.0, "c": 10.0})
        t3 = budget_shape(1e-8, [10], {"n": 3, "c2": 1.0, "c": 10.0})
        assert t2.gamma == 26.0
        assert t3.gamma == 37.0

    def test_crossover_balances_terms(self):
        table = budget_shape(1e-8, [10, 100], {"n": 2, "c2": 1.0, "c": 10.0})
        K = table.crossover_K
        poly = (2 * math.pi) ** 2 * 1e-8 * K ** 26
        expo = math.exp(-K / 10.0)
        assert poly == pytest.approx(expo, rel=1e-6)
        # terms move monotonically through the crossover
        assert table.rows[0].poly_term < table.rows[1].poly_term
        assert table.rows[0].exp_term > table.rows[1].exp_term

    def test_log_choice_is_polynomially_small(self):
        eps = 1e-8
        table = budget_shape(eps, [10], {"n": 2, "c2": 1.0, "c": 10.0})
        special = table.special_K["K=c|ln eps|"]
        # exp(-K/c) = eps at K = c |ln eps|
        assert special.exp_term == pytest.approx(eps, rel=1e-9)

    def test_positive_inputs_required(self):
        with pytest.raises(ValueError):
            budget_shape(-1e-8, [10], {"n": 2, "c2": 1.0, "c": 10.0})
