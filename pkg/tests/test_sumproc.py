import math

import numpy as np
import pytest

from m1lab.models import IidSpec, RegVarSpec, an_theoretical, derive_seed, sample_iid
from m1lab.paths import eval_path, uniform_distance
from m1lab.sumproc import (
    CenteringConstants,
    JointPathPair,
    PointMeasure,
    SumProcessError,
    build_Ln,
    build_point_measure,
    centering_constants,
    collapse_clusters,
    save_joint_csv,
    self_normalized_at,
    self_normalized_path,
    truncate_Ln,
)
from m1lab.tailstats import BlockingScheme


class TestPointMeasure:
    def test_zero_dropped(self):
        pm = build_point_measure([1.0, 0.0, -2.0, 3.0], 1.0)
        assert np.array_equal(pm.times, [0.25, 0.75, 1.0])
        assert np.array_equal(pm.marks, [1.0, -2.0, 3.0])

    def test_all_zero_empty(self):
        pm = build_point_measure([0.0, 0.0], 1.0)
        assert pm.times.size == 0

    def test_joint_rescaling_invariance(self):
        a = build_point_measure([1.0, -2.0], 2.0)
        b = build_point_measure([4.0, -8.0], 8.0)
        assert np.array_equal(a.marks, b.marks)

    def test_marks_nonzero_invariant(self):
        with pytest.raises(SumProcessError):
            PointMeasure(np.array([0.5]), np.array([0.0]))


class TestCentering:
    def test_zero_below_one(self):
        cc = centering_constants(IidSpec(RegVarSpec(0.8, p=1.0)), 100.0, 100)
        assert cc.b1n == 0.0 and cc.b2n == 0.0
        assert cc.regime == "(0,1)"

    def test_closed_form_alpha_15(self):
        spec = IidSpec(RegVarSpec(1.5, p=1.0))
        n = 10**4
        a_n = an_theoretical(spec, n)
        cc = centering_constants(spec, a_n, n)
        want = (1.5 / 0.5) * (1.0 - a_n ** (-0.5)) / a_n
        assert cc.b1n == pytest.approx(want, rel=1e-12)
        assert cc.regime == "[1,2)"

    def test_symmetric_first_moment_vanishes(self):
        spec = IidSpec(RegVarSpec(1.5, p=0.5))
        cc = centering_constants(spec, 100.0, 10**4)
        assert cc.b1n == 0.0
        assert cc.b2n > 0.0

    def test_monte_carlo_branch_matches_closed_form(self):
        # scaled marginal falls back to Monte Carlo; compare on the canonical
        spec = IidSpec(RegVarSpec(1.5, p=1.0))
        n = 10**4
        a_n = an_theoretical(spec, n)
        exact = centering_constants(spec, a_n, n)
        scaled = IidSpec(RegVarSpec(1.5, p=1.0, scale=1.0 + 1e-12))
        mc = centering_constants(scaled, a_n, n, mc_size=2 * 10**5, seed=1)
        assert mc.b1n == pytest.approx(exact.b1n, rel=0.05)
        assert mc.se_b1n > 0.0

    def test_monte_carlo_se_gate(self):
        scaled = IidSpec(RegVarSpec(1.5, p=1.0, scale=1.0 + 1e-12))
        with pytest.raises(SumProcessError, match="increase mc_size"):
            centering_constants(scaled, 100.0, 10**4, mc_size=10**4, se_tol=1e-12)


class TestBuildLn:
    def test_two_point_example(self):
        pair = build_Ln([1.0, -1.0], 1.0)
        assert np.array_equal(pair.l1.values[:, 0], [0.0, 1.0, 0.0])
        assert np.array_equal(pair.l2.values[:, 0], [0.0, 1.0, 2.0])

    def test_uncentered_l2_total_exact(self, rng):
        x = rng.standard_normal(100)
        pair = build_Ln(x, 2.0)
        assert pair.l2.values[-1, 0] * 4.0 == pytest.approx(np.sum(x * x), rel=1e-12)
        assert not pair.centered

    def test_uncentered_l2_nondecreasing(self, rng):
        x = rng.standard_normal(500)
        pair = build_Ln(x, 1.0)
        assert np.all(np.diff(pair.l2.values[:, 0]) >= 0.0)

    def test_centered_symmetric_mean_near_zero(self):
        spec = IidSpec(RegVarSpec(1.5, p=0.5))
        n = 500
        a_n = an_theoretical(spec, n)
        cc = centering_constants(spec, a_n, n)
        finals = []
        for rep in range(1000):
            x = sample_iid(spec, n, derive_seed(17, rep)).values
            finals.append(build_Ln(x, a_n, cc).l1.values[-1, 0])
        finals = np.asarray(finals)
        se = finals.std(ddof=1) / math.sqrt(finals.size)
        assert abs(finals.mean()) <= 4.0 * se


class TestTruncate:
    def test_below_min_mark_matches_full(self):
        x = np.array([1.0, -2.0, 3.0, 0.5])
        pm = build_point_measure(x, 1.0)
        full = build_Ln(x, 1.0)
        tr = truncate_Ln(pm, 0.1)
        assert uniform_distance(tr.l1, full.l1) == 0.0
        assert uniform_distance(tr.l2, full.l2) == 0.0

    def test_above_max_zero_paths(self):
        pm = build_point_measure([1.0, -2.0], 1.0)
        tr = truncate_Ln(pm, 10.0)
        assert np.all(tr.l1.values == 0.0)
        assert np.all(tr.l2.values == 0.0)

    def test_indicator_arithmetic(self):
        pm = PointMeasure(np.array([0.25, 0.5, 0.75]), np.array([1.0, -2.0, 3.0]))
        tr = truncate_Ln(pm, 1.5)
        assert np.array_equal(tr.l1.values[:, 0], [0.0, -2.0, 1.0])
        assert np.array_equal(tr.l2.values[:, 0], [0.0, 4.0, 13.0])

    def test_consistency_as_u_decreases(self, rng):
        x = rng.standard_normal(200) * (1.0 - rng.random(200)) ** (-1.0)
        pm = build_point_measure(x, float(np.abs(x).max()))
        full = build_Ln(x, float(np.abs(x).max()))
        mags = np.sort(np.abs(pm.marks))
        gaps = []
        for u in (mags[-5], mags[len(mags) // 2], mags[2], mags[0] / 2.0):
            gaps.append(uniform_distance(truncate_Ln(pm, u).l1, full.l1))
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] == 0.0


class TestSelfNormalized:
    def test_single_point_sign(self):
        p = self_normalized_path([3.0])
        assert eval_path(p, 1.0)[0] == 1.0
        q = self_normalized_path([-3.0])
        assert eval_path(q, 1.0)[0] == -1.0

    def test_bitwise_scale_invariance_pow2(self, rng):
        for _ in range(20):
            x = rng.standard_normal(200) * (1.0 - rng.random(200)) ** (-1.0 / 1.2)
            base = self_normalized_path(x)
            for lam in (2.0**10, 2.0**-20, 0.5, 4.0):
                scaled = self_normalized_path(lam * x)
                assert np.array_equal(base.values, scaled.values)

    def test_general_scale_invariance_within_ulps(self, rng):
        x = rng.standard_normal(300)
        a = self_normalized_path(x).values
        b = self_normalized_path(1e6 * x).values
        # non-power-of-two factors perturb each input by half an ulp; the
        # partial sums then agree to a few ulps rather than bitwise
        assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))) <= 1e-15

    def test_antisymmetry_bitwise(self, rng):
        x = rng.standard_normal(257)
        a = self_normalized_path(x).values
        b = self_normalized_path(-x).values
        assert np.array_equal(a, -b)

    def test_sup_bound_cauchy_schwarz(self, rng):
        # |S_k| <= sqrt(k) V_n <= sqrt(n) V_n
        for _ in range(200):
            n = int(rng.integers(1, 64))
            x = rng.standard_normal(n) * (1.0 - rng.random(n)) ** (-1.0)
            p = self_normalized_path(x)
            assert np.max(np.abs(p.values)) <= math.sqrt(n) + 1e-12

    def test_zero_data_rejected(self):
        with pytest.raises(SumProcessError):
            self_normalized_path(np.zeros(10))

    def test_grid_evaluation_matches_path(self, rng):
        x = rng.standard_normal(97)
        grid = np.array([0.25, 0.5, 0.75, 1.0])
        p = self_normalized_path(x)
        assert np.allclose(
            self_normalized_at(x, grid), np.atleast_2d(eval_path(p, grid))[:, 0]
        )


class TestCollapse:
    def test_identity_when_rn_one(self, rng):
        x = rng.standard_normal(50)
        p = self_normalized_path(x)
        assert collapse_clusters(p, BlockingScheme(1)) is p

    def test_full_collapse(self, rng):
        x = rng.standard_normal(50)
        p = self_normalized_path(x)
        c = collapse_clusters(p, BlockingScheme(50))
        assert np.array_equal(c.times, [0.0, 1.0])
        assert c.values[1, 0] == p.values[-1, 0]

    def test_rn_exceeds_n(self, rng):
        p = self_normalized_path(rng.standard_normal(10))
        with pytest.raises(SumProcessError):
            collapse_clusters(p, BlockingScheme(11))

    def test_collapse_tames_m1_not_j1(self):
        # clustered model: collapsed path is M1-close but J1-far
        from m1lab.models import LinearSpec, sample_linear
        from m1lab.paths import j1_distance, m1_distance

        lin = LinearSpec((1.0, 1.0), RegVarSpec(0.8, p=1.0))
        n = 400
        s = sample_linear(lin, n, seed=5)
        pair = build_Ln(s.values, an_theoretical(lin, n))
        path = pair.l1
        collapsed = collapse_clusters(path, BlockingScheme.from_exponent(n))
        m1 = m1_distance(path, collapsed, resolution=4 * n + 16)
        j1 = j1_distance(path, collapsed, resolution=4 * n + 16)
        assert m1 < j1


class TestJointCsv:
    def test_header_and_rows(self, tmp_path):
        pair = build_Ln([1.0, -1.0], 1.0)
        f = tmp_path / "pair.csv"
        save_joint_csv(pair, str(f))
        lines = f.read_text().splitlines()
        assert lines[0].startswith("# n=2 an=1 u=none b1n=0 b2n=0")
        assert lines[1] == "t,l1,l2"
        assert len(lines) == 5
