"""Acceptance gate: every criterion at its stated tolerance, one printed
pass/fail line per criterion (run with -s to see them).

Criterion 3 note: the truncated-moment comparison at n = 10^6 carries an
intrinsic support-boundary term alpha/(1-alpha) * n^{1-1/alpha} in the first
moment.  For alpha = 0.8 that term is 5.76% (u=0.05) and 5.01% (u=0.1) of
the limit, so those two cells cannot meet the 5% tolerance at this n no
matter how many Monte Carlo draws are used; they are marked as strict
expected failures with the measured gap printed.  All other cells pass.
See notes/decisions.md for the full analysis.
"""

import cmath
import math
import time

import numpy as np
import pytest
from scipy.stats import ks_2samp

from m1lab import lab
from m1lab.clusters import singleton_cluster
from m1lab.config import default_config, replace_config
from m1lab.models import (
    GarchSpec,
    IidSpec,
    LinearSpec,
    RegVarSpec,
    an_theoretical,
    derive_seed,
    garch_moment,
    sample_iid,
    sample_model,
    solve_garch_alpha,
)
from m1lab.paths import (
    CadlagPath,
    j1_distance,
    m1_distance,
    m1_distance_detailed,
    step_refine,
    uniform_distance,
)
from m1lab.stable import (
    charfn_stable,
    cms_sampler,
    levy_exponent,
    levy_marginal_draws,
    stable_params,
    triple_from_cluster,
)
from m1lab.sumproc import build_Ln, self_normalized_path
from conftest import make_step_path

TOL = default_config().tolerances


def _report(ok, label):
    print(f"{'PASS' if ok else 'FAIL'}: {label}")
    return ok


def test_criterion_01_metric_kernel():
    """Symmetry, triangle, and topology ordering on 200 random step paths."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    ok = True
    for _ in range(200):
        x = make_step_path(rng, max_jumps=12)
        y = make_step_path(rng, max_jumps=12)
        z = make_step_path(rng, max_jumps=12)
        dxy = m1_distance_detailed(x, y)
        ok &= dxy.value == m1_distance(y, x)  # symmetry, exact
        ok &= m1_distance(x, x) == 0.0
        dyz = m1_distance_detailed(y, z)
        dxz = m1_distance_detailed(x, z)
        slack = TOL["metric_triangle_slack"] + dxy.tol + dyz.tol + dxz.tol
        ok &= dxz.value <= dxy.value + dyz.value + slack
        ok &= dxy.value <= j1_distance(x, y) + dxy.tol + 1e-12
        ok &= dxy.value <= uniform_distance(x, y)
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 30.0, f"criterion 1 metric kernel ({elapsed:.1f}s)")


def test_criterion_02_ramp_collapse():
    """m1 tracks the ramp width while j1 stays near the half jump."""
    t0 = time.perf_counter()
    step = CadlagPath([0.0, 0.5], [0.0, 1.0])
    ok = True
    for w in (0.1, 0.01, 0.001):
        ramp = CadlagPath([0.0, 0.5, 0.5 + w], [0.0, 0.0, 1.0], "pl")
        m1 = m1_distance(step, ramp)
        j1 = j1_distance(step, step_refine(ramp, 2000), resolution=8192)
        ok &= m1 <= w + 1e-3
        ok &= j1 >= 0.5 - w
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 5.0, f"criterion 2 ramp collapse ({elapsed:.1f}s)")


_KARAMATA_CELLS = []
for _a in (0.5, 0.8):
    for _u in (0.05, 0.1, 0.5):
        marks = ()
        if _a == 0.8 and _u in (0.05, 0.1):
            gap = 100.0 * (10**6) ** (1 - 1 / _a) / _u ** (1 - _a)
            marks = pytest.mark.xfail(
                strict=True,
                reason=(
                    f"first-moment support-boundary gap {gap:.2f}% exceeds the 5% "
                    "tolerance at n=1e6 for every estimator; see notes/decisions.md"
                ),
            )
        _KARAMATA_CELLS.append(pytest.param(_a, _u, marks=marks))


@pytest.mark.parametrize("alpha,u", _KARAMATA_CELLS)
def test_criterion_03_karamata(alpha, u):
    """Monte Carlo truncated moments within 5% of the closed-form limits."""
    t0 = time.perf_counter()
    cfg = replace_config(
        default_config(),
        karamata_alphas=(alpha,),
        karamata_u_grid=(u,),
        karamata_n=10**6,
        karamata_mc=10**8,
    )
    res = lab.run_karamata_check(cfg)
    row = res.rows[0]
    ok = row["rel_err_first"] <= 0.05 and row["rel_err_second"] <= 0.05
    elapsed = time.perf_counter() - t0
    _report(
        ok,
        f"criterion 3 karamata alpha={alpha} u={u} "
        f"(rel1={row['rel_err_first']:.4f}, rel2={row['rel_err_second']:.4f}, "
        f"{elapsed:.1f}s)",
    )
    assert elapsed < 120.0
    assert ok


def test_criterion_04_slutsky_bound():
    """Truncation-gap probabilities below the analytic bound on a 3x3 grid."""
    t0 = time.perf_counter()
    cfg = replace_config(
        default_config(),
        slutsky_alpha=0.5,
        slutsky_n=10**4,
        slutsky_replicates=500,
        slutsky_u_grid=(0.005, 0.01, 0.05),
        slutsky_eps_grid=(0.5, 1.0, 2.0),
    )
    res = lab.run_slutsky_bound_check(cfg)
    ok = res.verdicts["no_violations"]
    assert len([r for r in res.rows]) == 9
    elapsed = time.perf_counter() - t0
    assert _report(
        ok and elapsed < 180.0, f"criterion 4 truncation-gap bound ({elapsed:.1f}s)"
    )


def test_criterion_05_exponent_consistency():
    """exp(quadrature exponent) vs closed-form characteristic function."""
    t0 = time.perf_counter()
    ok = True
    worst = 0.0
    for alpha in (0.5, 1.5):
        triple = triple_from_cluster(alpha, 1.0, singleton_cluster(1.0))
        params = stable_params(triple)
        for z in np.linspace(-5.0, 5.0, 21):
            if z == 0.0:
                continue
            lhs = cmath.exp(levy_exponent(z, triple))
            rhs = complex(charfn_stable(z, params))
            rel = abs(lhs - rhs) / abs(rhs)
            worst = max(worst, rel)
            ok &= rel <= TOL["charfn_rel"]
    elapsed = time.perf_counter() - t0
    assert _report(
        ok and elapsed < 60.0,
        f"criterion 5 exponent consistency (worst rel {worst:.2e}, {elapsed:.1f}s)",
    )


def test_criterion_06_series_vs_cms():
    """Two independent routes to the limit marginal agree in distribution."""
    t0 = time.perf_counter()
    ok = True
    for alpha in (0.5, 0.8, 1.2, 1.5):
        cluster = singleton_cluster(1.0)
        triple = triple_from_cluster(alpha, 1.0, cluster)
        draws = levy_marginal_draws(
            triple, cluster, [1.0], 2000, n_pts=2000, seed=601 + int(10 * alpha)
        )
        cms = cms_sampler(stable_params(triple), 2000, seed=701 + int(10 * alpha))
        ks = ks_2samp(draws["l1"][:, 0], cms).statistic
        ok &= ks < 0.06
        print(f"  alpha={alpha}: series-vs-cms KS={ks:.4f}")
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 120.0, f"criterion 6 series vs cms ({elapsed:.1f}s)")


def test_criterion_07_selfnorm_convergence():
    """Self-normalized sums against simulated ratio draws at n = 1e4."""
    t0 = time.perf_counter()
    base = replace_config(
        default_config(), n_grid=(10000,), replicates=2000, limit_draws=2000
    )
    iid_cfg = replace_config(base, model=IidSpec(RegVarSpec(0.8, p=1.0)))
    res = lab.run_selfnorm_convergence(iid_cfg)
    ks_iid = next(
        r["ks"] for r in res.rows if r["check"] == "selfnorm" and r["t"] == 1.0
    )
    lin_cfg = replace_config(base, model=LinearSpec((1.0, 0.5), RegVarSpec(0.8, p=1.0)))
    res2 = lab.run_selfnorm_convergence(lin_cfg)
    ks_lin = next(
        r["ks"] for r in res2.rows if r["check"] == "selfnorm" and r["t"] == 1.0
    )
    ok = ks_iid < TOL["ks_selfnorm"] and ks_lin < TOL["ks_selfnorm_clustered"]
    elapsed = time.perf_counter() - t0
    assert _report(
        ok and elapsed < 600.0,
        f"criterion 7 self-normalized convergence (iid KS={ks_iid:.4f}, "
        f"clustered KS={ks_lin:.4f}, {elapsed:.1f}s)",
    )


def test_criterion_08_theta_recovery():
    """Blocks estimator within 0.08 of the analytic extremal index."""
    t0 = time.perf_counter()
    cfg = replace_config(default_config(), theta_n=10**5, theta_replicates=50)
    res = lab.run_theta_recovery(cfg)
    ok = res.verdicts["within_tolerance"]
    for row in res.rows:
        print(
            f"  {row['model']}: mean {row['theta_hat_mean']:.4f} "
            f"vs {row['theta_true']:.4f}"
        )
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 180.0, f"criterion 8 extremal index ({elapsed:.1f}s)")


def test_criterion_09_garch_moment_equation():
    """Moment-equation root: quadrature residual and Monte Carlo agreement."""
    t0 = time.perf_counter()
    ok = True
    rng = np.random.default_rng(901)
    for a1, b1 in ((0.5, 0.3), (1.0, 0.0)):
        spec = GarchSpec(1.0, a1, b1)
        alpha = solve_garch_alpha(spec, tol=1e-12)
        residual = abs(garch_moment(spec, alpha)[0] - 1.0)
        ok &= residual <= 1e-6
        z = rng.standard_normal(10**6)
        y = (a1 * z**2 + b1) ** alpha
        se = y.std(ddof=1) / math.sqrt(y.size)
        ok &= abs(y.mean() - 1.0) <= 3.0 * se
        print(f"  (a1,b1)=({a1},{b1}): alpha={alpha:.6f} residual={residual:.2e}")
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 30.0, f"criterion 9 garch moment ({elapsed:.1f}s)")


def test_criterion_10_exact_invariances():
    """Bitwise invariances and path bounds on 1e4 random samples."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    ok = True
    # scale invariance, bitwise for float-exact (power-of-two) factors
    for _ in range(50):
        x = rng.standard_normal(100) * (1.0 - rng.random(100)) ** (-1.0 / 1.2)
        p = self_normalized_path(x)
        ok &= np.array_equal(p.values, self_normalized_path((2.0**12) * x).values)
        ok &= np.array_equal(p.values, self_normalized_path(0.25 * x).values)
        ok &= np.array_equal(p.values, -self_normalized_path(-x).values)
    # sup bound and nondecreasing second coordinate on 1e4 samples
    sizes = rng.integers(1, 100, size=10**4)
    for n in sizes:
        x = rng.standard_normal(n) * (1.0 - rng.random(n)) ** (-1.0)
        p = self_normalized_path(x)
        ok &= float(np.max(np.abs(p.values))) <= math.sqrt(n) + 1e-12
    pair = build_Ln(rng.standard_normal(2000), 1.0)
    ok &= bool(np.all(np.diff(pair.l2.values[:, 0]) >= 0.0))
    elapsed = time.perf_counter() - t0
    assert _report(ok and elapsed < 30.0, f"criterion 10 exact invariances ({elapsed:.1f}s)")


SUITE_CFG = """
[model]
variant = iid
alpha = 0.8
p = 0.5

[run]
seed = 13
n_grid = 100, 400
replicates = 200
limit_draws = 300
n_pts = 1000
contrast_n_grid = 100
contrast_replicates = 5
karamata_mc = 1000000
slutsky_replicates = 50
slutsky_n = 1000
theta_replicates = 4
theta_n = 20000
"""


def test_criterion_11_suite_determinism(tmp_path):
    """Identical config, byte-identical data artifacts (runtime excluded)."""
    from m1lab.cli import main

    cfg = tmp_path / "cfg.ini"
    cfg.write_text(SUITE_CFG)
    main(["suite", "--config", str(cfg), "--out", str(tmp_path / "b1")])
    main(["suite", "--config", str(cfg), "--out", str(tmp_path / "b2")])
    ok = True
    for name in ("report.jsonl", "manifest.json", "paths/partial_sums.csv", "paths/limit_pair.csv"):
        a = (tmp_path / "b1" / name).read_bytes()
        b = (tmp_path / "b2" / name).read_bytes()
        ok &= a == b
    assert _report(ok, "criterion 11 suite determinism")
