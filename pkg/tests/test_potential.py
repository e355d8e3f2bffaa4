import math

import numpy as np
import pytest

from kam_atlas.potential import (
    FourierPotential,
    NotMorseError,
    OneDSeries,
    check_genericity,
    cutoff_N,
    morse_analyze,
    norm1,
)
from kam_atlas.resonance import enumerate_generators


class TestEvaluate:
    def test_prototype_at_origin_matches_direct_sum(self):
        f = FourierPotential.prototype(2, 1.0, cap=20)
        oracle = 2.0 * sum(math.exp(-norm1(k))
                           for k in enumerate_generators(2, 20))
        assert f.evaluate((0.0, 0.0)) == pytest.approx(oracle, abs=1e-12)

    def test_single_mode_values(self):
        f = FourierPotential.from_cosines(2, 1.0, {(1, 0): 2.0})
        assert f.evaluate((math.pi, 0.0)) == pytest.approx(-2.0, abs=1e-12)
        g = FourierPotential.from_cosines(2, 1.0, {(1, 1): 2.0})
        assert g.evaluate((math.pi / 2, math.pi / 2)) == pytest.approx(-2.0, abs=1e-12)

    def test_reality_residual(self):
        f = FourierPotential.prototype(2, 1.0, cap=10)
        rng = np.random.default_rng(3)
        for x in rng.uniform(0, 2 * np.pi, size=(20, 2)):
            z = f.evaluate_complex(x)
            assert abs(z.imag) < 1e-12
            assert f.evaluate(x) == pytest.approx(z.real, abs=1e-12)

    def test_batch_evaluation(self):
        f = FourierPotential.prototype(2, 1.0, cap=8)
        pts = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(16, 2))
        batch = f.evaluate(pts)
        assert batch.shape == (16,)
        for x, v in zip(pts, batch):
            assert v == pytest.approx(f.evaluate(x), abs=1e-13)


class TestInvariants:
    def test_rejects_zero_mode(self):
        with pytest.raises(ValueError, match="zero-average"):
            FourierPotential(2, 1.0, {(0, 0): 1.0})

    def test_rejects_broken_reality(self):
        with pytest.raises(ValueError, match="reality"):
            FourierPotential(2, 1.0, {(1, 0): 1.0, (-1, 0): 2.0})

    def test_norm_s(self):
        f = FourierPotential.prototype(2, 0.7, cap=10)
        assert f.norm_s() == pytest.approx(1.0)


class TestProject:
    def test_prototype_projection_is_scaled_cosine(self):
        f = FourierPotential.prototype(3, 0.5, cap=9)
        for k in [(1, 0, 0), (1, 1, -1), (2, 1, 0)]:
            g = f.project(k)
            amp = math.exp(-norm1(k) * 0.5)
            assert set(g.coeffs) == {1, -1}
            assert g.coeffs[1] == pytest.approx(amp)
            theta = np.linspace(0, 2 * np.pi, 7)
            assert np.allclose(g(theta), 2 * amp * np.cos(theta), atol=1e-14)

    def test_two_harmonics_on_one_line(self):
        f = FourierPotential.from_cosines(2, 1.0, {(1, 1): 1.0, (2, 2): 0.5})
        g = f.project((1, 1))
        assert g.coeffs[1] == pytest.approx(0.5)   # cosine amplitude 1 -> c1 = 1/2
        assert g.coeffs[2] == pytest.approx(0.25)

    def test_disjoint_line_is_empty(self):
        f = FourierPotential.from_cosines(2, 1.0, {(1, 0): 2.0})
        assert f.project((0, 1)).is_zero

    def test_rejects_non_generator(self):
        f = FourierPotential.prototype(2, 1.0, cap=4)
        with pytest.raises(ValueError):
            f.project((2, 0))
        with pytest.raises(ValueError):
            f.project((0, 0))
        with pytest.raises(ValueError):
            f.project((-1, 0))

    def test_projector_partition(self):
        # sum over generators of the projections reconstructs the potential
        f = FourierPotential.prototype(2, 1.0, cap=8)
        gens = enumerate_generators(2, 8)
        rng = np.random.default_rng(11)
        for x in rng.uniform(0, 2 * np.pi, size=(100, 2)):
            total = sum(f.project(k)(float(np.dot(k, x))) for k in gens)
            assert total == pytest.approx(f.evaluate(x), abs=1e-12)


class TestCutoff:
    def test_reference_values(self):
        assert cutoff_N(1.0, 1.0, 2) == pytest.approx(62.54, abs=0.01)
        assert cutoff_N(0.5, 1.0, 2) == pytest.approx(63.93, abs=0.01)
        assert cutoff_N(1.0, 1.0, 2) + 2 * math.log(2) == pytest.approx(
            cutoff_N(0.5, 1.0, 2), rel=1e-12)

    def test_max_branch_saturates(self):
        assert cutoff_N(1.0, 1e6, 2) == 2.0

    def test_domain_violations(self):
        with pytest.raises(ValueError):
            cutoff_N(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            cutoff_N(2.0, 1.0, 2)
        with pytest.raises(ValueError):
            cutoff_N(1.0, -1.0, 2)


class TestMorseAnalyze:
    def test_cosine(self):
        prof = morse_analyze(OneDSeries.from_cos_sin({1: 1.0}))
        assert prof.count == 2
        assert prof.values[0] == pytest.approx(1.0, abs=1e-12)
        assert prof.values[1] == pytest.approx(-1.0, abs=1e-12)
        assert prof.beta == pytest.approx(1.0, abs=1e-9)
        assert prof.deriv_floor == pytest.approx(1.0, abs=1e-9)
        assert prof.value_gap == pytest.approx(2.0, abs=1e-12)

    def test_figure_potential_has_ten_criticals(self, figure_potential):
        prof = morse_analyze(figure_potential)
        assert prof.count == 10

    def test_beta_scales_linearly(self):
        g = OneDSeries.from_cos_sin({1: 2.0 * math.exp(-3.0)})
        prof = morse_analyze(g)
        assert prof.beta == pytest.approx(2.0 * math.exp(-3.0), rel=1e-9)

    @pytest.mark.parametrize("lam", [0.25, 4.0])
    def test_morse_scaling_property(self, lam, figure_potential):
        base = morse_analyze(figure_potential).beta
        scaled = morse_analyze(figure_potential.scaled(lam)).beta
        assert scaled == pytest.approx(lam * base, rel=1e-9)

    def test_cosine_like_robustness(self):
        # ||g - cos(.+shift)||_C2 <= c < 1/2 forces two criticals, beta >= 1-2c
        rng = np.random.default_rng(5)
        for _ in range(10):
            shift = rng.uniform(0, 2 * np.pi)
            a3 = rng.uniform(-0.02, 0.02)
            b2 = rng.uniform(-0.02, 0.02)
            g = OneDSeries.from_cos_sin(
                {1: math.cos(shift), 3: a3}, {1: -math.sin(shift), 2: b2})
            c = 9 * abs(a3) + 4 * abs(b2)   # C2 norm of the defect
            assert c < 0.5
            prof = morse_analyze(g)
            assert prof.count == 2
            assert prof.beta >= 1.0 - 2 * c - 1e-9

    def test_count_bound(self, figure_potential):
        for g in (OneDSeries.from_cos_sin({1: 1.0}), figure_potential,
                  OneDSeries.from_cos_sin({1: 1.0, 2: -0.125})):
            prof = morse_analyze(g)
            assert prof.count <= prof.count_bound_curvature + 1e-9

    def test_degenerate_rejected(self):
        # g = cos(2 theta) + small breaks into distinct values; a pure
        # second harmonic has equal maxima -> not Morse
        with pytest.raises(NotMorseError):
            morse_analyze(OneDSeries.from_cos_sin({2: 1.0}))

    def test_zero_series_rejected(self):
        with pytest.raises(NotMorseError):
            morse_analyze(OneDSeries({}))

    def test_shifted_cosine_decomposition(self, figure_potential):
        prof = morse_analyze(figure_potential)
        # first harmonic of sin q is -i/2 e^{i q} + ...: shift = -pi/2 mod 2pi
        assert prof.cosine_shift == pytest.approx(3 * math.pi / 2, abs=1e-12)
        # triangle-inequality bound over the unit strip: both +-5 harmonics
        assert prof.cosine_residual_bound == pytest.approx(
            0.5 * math.exp(5), rel=1e-12)


class TestGenericity:
    def test_prototype_passes(self):
        f = FourierPotential.prototype(2, 1.0, cap=12)
        rep = check_genericity(f, 1.0, 1e-5, 10)
        assert rep.passed
        assert rep.first_failure is None
        # informational coefficient margins |k|_1^n / delta >= 1
        for c in rep.checks:
            if c.kind == "P1+":
                assert c.margin >= 1.0 - 1e-12

    def test_missing_mode_fails_at_01(self):
        f = FourierPotential.from_cosines(2, 1.0, {(1, 0): 2.0, (1, 1): 2.0})
        rep = check_genericity(f, 1.0, 0.05, 3)
        assert not rep.passed
        first = rep.first_failure
        assert first.k == (0, 1)
        assert first.kind == "P1+"
        assert "absent" in first.detail

    def test_distinct_values_condition_decides(self):
        # cos - (1/2) cos 2 theta has two maxima at the same height 3/4, so
        # the Morse clause fails on that line through the distinct-values
        # condition alone
        f = FourierPotential.from_cosines(
            2, 1.0, {(1, 0): 1.0, (2, 0): -0.5, (0, 1): 1.0, (1, 1): 0.7,
                     (1, -1): 0.7})
        rep = check_genericity(f, 1.0, 1e-4, 2)
        assert not rep.passed
        bad = [c for c in rep.checks if not c.passed]
        assert [c.k for c in bad] == [(1, 0)]
        assert bad[0].kind == "P2+"
        assert "coincide" in bad[0].detail

    def test_morse_margin_decides(self):
        # same potential with the 3/4-degeneracy broken: beta decides
        f = FourierPotential.from_cosines(
            2, 1.0, {(1, 0): 1.0, (2, 0): -0.125, (0, 1): 1.0, (1, 1): 0.7,
                     (1, -1): 0.7})
        lo = check_genericity(f, 1.0, 1e-4, 2)
        assert lo.passed
        hi = check_genericity(f, 1.0, 10.0, 2)
        assert not hi.passed
        assert all(c.kind == "P2+" for c in hi.checks if not c.passed)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        f = FourierPotential.prototype(2, 1.0, cap=6)
        path = tmp_path / "pot.json"
        f.save(path)
        g = FourierPotential.load(path)
        assert g.n == f.n and g.s == f.s
        assert g.coeffs == f.coeffs
        assert g.generator_rule == f.generator_rule

    def test_field_names_match_schema(self, tmp_path):
        import json
        from pathlib import Path

        schema = json.loads(
            (Path(__file__).resolve().parents[1] / "docs"
             / "potential.schema.json").read_text())
        doc = FourierPotential.prototype(2, 1.0, cap=4).to_json_dict()
        allowed = set(schema["properties"])
        assert set(doc) <= allowed
        mode_allowed = set(
            schema["properties"]["modes"]["items"]["properties"])
        for mode in doc["modes"]:
            assert set(mode) <= mode_allowed
