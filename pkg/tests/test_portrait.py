import math

import numpy as np
import pytest

from kam_atlas.portrait import (
    StandardForm1D,
    decompose,
    pendulum_form,
    phase_bounds,
    standard_form,
    validate,
)
from kam_atlas.potential import NotMorseError, OneDSeries


class TestValidate:
    def test_oversized_reference_fails(self):
        g = OneDSeries.from_cos_sin({1: 1.0})
        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=1.0, eps_bar=1.0)
        rep = validate(h)
        assert not rep.passed
        assert not rep.clause("eps_bar_le_margin_sq").passed

    def test_small_reference_passes_that_clause(self):
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})
        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17, kappa=4.0)
        rep = validate(h)
        assert rep.clause("eps_bar_le_margin_sq").passed

    def test_pendulum_with_kappa_4_passes_all(self, pendulum):
        assert pendulum.kappa == 4.0
        rep = validate(pendulum)
        assert rep.passed
        for clause in rep.clauses:
            assert clause.margin >= 1.0 or math.isinf(clause.margin)


class TestDecompose:
    def test_pendulum_three_regions(self, pendulum_regions):
        regs = pendulum_regions
        assert [r.kind for r in regs] == ["outer_lower", "inner_odd",
                                          "outer_upper"]
        inner = regs[1]
        assert inner.e_lo == pytest.approx(-1.0, abs=1e-12)
        assert inner.e_hi == pytest.approx(1.0, abs=1e-12)
        e_flat = regs[0].e_flat
        assert regs[0].e_lo == pytest.approx(1.0, abs=1e-12)
        assert regs[0].e_hi == e_flat == regs[2].e_hi

    def test_figure_potential_eleven_regions(self, figure_regions):
        assert len(figure_regions) == 11
        kinds = [r.kind for r in figure_regions]
        assert kinds[0] == "outer_lower" and kinds[-1] == "outer_upper"
        assert kinds[1:-1:2] == ["inner_odd"] * 5
        assert kinds[2:-1:2] == ["inner_even"] * 4

    def test_figure_even_intervals_follow_dominating_maxima(self, figure_regions):
        vals = figure_regions[0].crit_values
        n_sep = len(vals) // 2

        def maximum(ell):
            return vals[0] if ell == n_sep else vals[2 * ell]

        for r in figure_regions:
            if r.kind != "inner_even":
                continue
            j = r.index // 2
            lower = [ell for ell in range(j) if maximum(ell) > vals[r.index]]
            upper = [ell for ell in range(j + 1, n_sep + 1)
                     if maximum(ell) > vals[r.index]]
            assert r.j_minus == max(lower)
            assert r.j_plus == min(upper)
            assert r.e_hi == pytest.approx(
                min(maximum(r.j_minus), maximum(r.j_plus)), abs=1e-12)

    def test_two_harmonic_example(self):
        g = OneDSeries.from_cos_sin({1: 1.0, 2: -0.125})
        regs = decompose(standard_form(g))
        assert len(regs) == 3
        inner = regs[1]
        assert inner.e_lo == pytest.approx(-9.0 / 8.0, abs=1e-12)
        assert inner.e_hi == pytest.approx(7.0 / 8.0, abs=1e-12)

    def test_region_count_matches_criticals(self, figure_regions):
        assert len(figure_regions) == len(figure_regions[0].crit_angles) + 1

    def test_intervals_cover_energy_range(self, figure_regions):
        # every energy strictly between the global min and E_flat lies in
        # at least one region interval, except the critical values
        vals = figure_regions[0].crit_values
        e_flat = figure_regions[0].e_flat
        rng = np.random.default_rng(2)
        for E in rng.uniform(min(vals), e_flat, size=400):
            if min(abs(E - v) for v in vals) < 1e-9:
                continue
            assert any(r.e_lo < E < r.e_hi for r in figure_regions)

    def test_not_morse_propagates(self):
        g = OneDSeries.from_cos_sin({2: 1.0})    # equal maxima
        with pytest.raises(NotMorseError):
            decompose(StandardForm1D(gbar=g, radius=512.0, margin=512.0,
                                     sbar=1.0, beta=1.0, eps_bar=1.0))

    def test_order_preserved_under_perturbation(self, figure_potential):
        base = standard_form(figure_potential)
        mu = 1e-6
        eps_bar = base.eps_bar
        # perturbation bounded by eps_bar * mu, mu <= 1/(2 kappa)^6
        wobble = OneDSeries.from_cos_sin({2: 0.4 * eps_bar * mu},
                                         {3: 0.4 * eps_bar * mu})
        pert = standard_form(figure_potential, mu=mu, g_perturbation=wobble)
        r0 = decompose(base)
        r1 = decompose(pert)
        assert len(r0) == len(r1)
        a0 = r0[0].crit_angles
        a1 = r1[0].crit_angles
        assert np.all(np.diff(a1) > 0)
        assert np.allclose(a0, a1, atol=1e-4)
        v0 = np.array(r0[0].crit_values)
        v1 = np.array(r1[0].crit_values)
        assert (np.argsort(v0) == np.argsort(v1)).all()


class TestPhaseBounds:
    def test_pendulum_inclusions(self, pendulum):
        rep = phase_bounds(pendulum)
        assert rep.passed
        assert rep.max_h_on_inner_box < rep.e_flat
        assert rep.max_abs_p_on_sublevel < pendulum.radius + pendulum.margin / 2

    def test_small_cosine_unit_box(self):
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})
        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17)
        rep = phase_bounds(h)
        assert rep.inner_box_contained and rep.contained_in_outer_box

    def test_degenerate_margin_rejected(self):
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})
        h = StandardForm1D(gbar=g, radius=1.0, margin=0.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17)
        with pytest.raises(ValueError):
            phase_bounds(h)

    def test_mu_hypothesis_enforced(self):
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})
        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17, kappa=4.0,
                           mu=0.5)
        with pytest.raises(ValueError):
            phase_bounds(h)

    def test_kinetic_perturbation_branch(self):
        # a declared nu callback bounded by mu passes validation and keeps
        # the sublevel set inside its momentum band
        mu = 1e-4
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})

        def nu(p, q):
            return 0.5 * mu * math.cos(q)

        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17, kappa=4.0,
                           mu=mu, kinetic_perturbation=nu)
        rep = validate(h)
        assert rep.clause("kinetic_le_mu").passed
        bounds = phase_bounds(h, grid=128)
        assert bounds.passed

    def test_oversized_kinetic_perturbation_flagged(self):
        g = OneDSeries.from_cos_sin({1: 2.0 ** -17})
        h = StandardForm1D(gbar=g, radius=1.0, margin=1.0, sbar=1.0,
                           beta=2.0 ** -17, eps_bar=2.0 ** -17, kappa=4.0,
                           mu=1e-6, kinetic_perturbation=lambda p, q: 1e-3)
        rep = validate(h)
        assert not rep.clause("kinetic_le_mu").passed

    def test_top_level_curve_inside_band(self, pendulum):
        # points on {H = E_flat} have |p| <= R + r/2
        R, r = pendulum.radius, pendulum.margin
        qs = np.linspace(0, 2 * np.pi, 257)
        p_top = np.sqrt(pendulum.e_flat - pendulum.gbar(qs))
        assert np.all(p_top <= R + r / 2)
        assert np.all(p_top >= R + r / 3)   # and outside the inner box
