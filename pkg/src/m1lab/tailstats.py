"""Estimators and empirical diagnostics for heavy-tailed sample paths: tail
index, norming constant, extremal index, anticluster / sign-switch /
small-jump probes, and the conditional law of lagged ratios around large
values.

All estimators are scale invariant where the underlying quantity is (Hill,
blocks estimator, lagged ratios), and thresholds are usually supplied as
quantile levels by callers so experiments stay scale-free.
"""

import json
from dataclasses import dataclass, field

import numpy as np


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class BlockingScheme:
    """Disjoint blocks of length r_n; k_n = floor(n / r_n) blocks."""

    r_n: int

    def __post_init__(self):
        if self.r_n < 1:
            raise EstimatorError("block length must be >= 1")

    @classmethod
    def from_exponent(cls, n, kappa=0.5):
        if not 0.0 < kappa < 1.0:
            raise EstimatorError("block exponent must lie in (0,1)")
        return cls(int(np.ceil(n**kappa)))

    def k_n(self, n):
        if self.r_n > n:
            raise EstimatorError("block length exceeds the sample size")
        return n // self.r_n


def hill_alpha(data, k):
    """Hill estimator of the tail index on the top k order statistics.

    alpha_hat = 1 / mean(log(|X|_(i) / |X|_(k+1))), i = 1..k, descending.
    Invariant under positive rescaling of the data.
    """
    x = np.abs(np.asarray(data, dtype=float))
    n = x.size
    if k <= 0 or k >= n:
        raise EstimatorError("need 0 < k < n order statistics")
    top = np.sort(x)[::-1][: k + 1]
    if top[-1] <= 0.0:
        raise EstimatorError("degenerate ties at zero in the top order statistics")
    logs = np.log(top[:k] / top[k])
    m = logs.mean()
    if m <= 0.0:
        raise EstimatorError("degenerate ties in the top order statistics")
    return float(1.0 / m)


def an_empirical(data, n):
    """(1 - 1/n)-quantile of |X| over the pooled sample."""
    if n < 2:
        raise EstimatorError("need n >= 2")
    return float(np.quantile(np.abs(np.asarray(data, dtype=float)), 1.0 - 1.0 / n))


def extremal_index_blocks(data, scheme, u):
    """Blocks estimator: (# blocks with max |X| > u) / (# exceedances of u)."""
    x = np.abs(np.asarray(data, dtype=float))
    n = x.size
    k_n = scheme.k_n(n)
    exceed = x > u
    total = int(exceed.sum())
    if total == 0:
        raise EstimatorError("no exceedances of the threshold")
    blocks = exceed[: k_n * scheme.r_n].reshape(k_n, scheme.r_n)
    hit = int(blocks.any(axis=1).sum())
    # the tail of the sample beyond k_n * r_n is ignored, as in the block count
    tail_exc = int(exceed[k_n * scheme.r_n :].sum())
    total -= tail_exc
    if total == 0:
        raise EstimatorError("no exceedances inside complete blocks")
    theta = hit / total
    return float(min(max(theta, np.finfo(float).tiny), 1.0))


def anticluster_diagnostic(data, scheme, u, m_grid):
    """P(max_{m <= |i| < r_n} |X_{t+i}| > u given |X_t| > u), per m.

    The window excludes lag r_n, so m = r_n scans an empty index set and
    reports probability 0.
    """
    x = np.abs(np.asarray(data, dtype=float))
    n = x.size
    r_n = scheme.r_n
    anchors = np.flatnonzero(x > u)
    if anchors.size == 0:
        raise EstimatorError("no anchor exceedances")
    exceed = (x > u).astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(exceed)])

    def window_count(i, lo_off, hi_off):
        lo = max(i + lo_off, 0)
        hi = min(i + hi_off, n - 1)
        if hi < lo:
            return 0
        return csum[hi + 1] - csum[lo]

    curve = {}
    for m in m_grid:
        m = int(m)
        if m < 1 or m > r_n:
            raise EstimatorError("m grid must lie in [1, r_n]")
        if m == r_n:
            curve[m] = 0.0
            continue
        hits = 0
        for i in anchors:
            c = window_count(i, -(r_n - 1), -m) + window_count(i, m, r_n - 1)
            if c > 0:
                hits += 1
        curve[m] = hits / anchors.size
    return curve


def sign_switch_diagnostic(data, scheme, u):
    """Number of blocks whose exceedances of u contain both signs."""
    x = np.asarray(data, dtype=float)
    n = x.size
    k_n = scheme.k_n(n)
    trimmed = x[: k_n * scheme.r_n].reshape(k_n, scheme.r_n)
    exceed = np.abs(trimmed) > u
    pos = np.any(exceed & (trimmed > 0), axis=1)
    neg = np.any(exceed & (trimmed < 0), axis=1)
    return int(np.sum(pos & neg))


def small_jump_diagnostic(replicates, a_n, u_grid, delta, centered=False):
    """Empirical P(max_k |sum of truncated (centered) terms| > delta) per u.

    Returns two curves keyed by u: one for terms X/a_n with the indicator
    |X|/a_n <= u, one for terms X^2/a_n^2 with the indicator X^2/a_n^2 <= u.
    The centering, when requested, uses the pooled empirical mean of the
    truncated terms.
    """
    reps = [np.asarray(r, dtype=float) for r in replicates]
    curve1 = {}
    curve2 = {}
    for u in u_grid:
        hits1 = 0
        hits2 = 0
        y1_all = [r / a_n for r in reps]
        t1_all = [np.where(np.abs(y) <= u, y, 0.0) for y in y1_all]
        y2_all = [(r * r) / (a_n * a_n) for r in reps]
        t2_all = [np.where(y2 <= u, y2, 0.0) for y2 in y2_all]
        c1 = np.mean(np.concatenate(t1_all)) if centered else 0.0
        c2 = np.mean(np.concatenate(t2_all)) if centered else 0.0
        for t1, t2 in zip(t1_all, t2_all):
            if np.max(np.abs(np.cumsum(t1 - c1))) > delta:
                hits1 += 1
            if np.max(np.abs(np.cumsum(t2 - c2))) > delta:
                hits2 += 1
        curve1[float(u)] = hits1 / len(reps)
        curve2[float(u)] = hits2 / len(reps)
    return curve1, curve2


@dataclass(frozen=True)
class LagSummary:
    lag: int
    quantiles: dict
    near_zero_mass: float
    anchors: int


def empirical_tail_process(data, u, lag_window, near_zero=0.05):
    """Conditional law of X_{t+i} / |X_t| given |X_t| > u, for |i| <= window.

    Summarized by quantiles and by the probability mass within ``near_zero``
    of 0.  Invariant under rescaling of the data.
    """
    x = np.asarray(data, dtype=float)
    n = x.size
    anchors = np.flatnonzero(np.abs(x) > u)
    anchors = anchors[(anchors >= lag_window) & (anchors < n - lag_window)]
    if anchors.size < 100:
        raise EstimatorError(
            f"need >= 100 interior anchors above the threshold, got {anchors.size}"
        )
    qlevels = (0.05, 0.25, 0.5, 0.75, 0.95)
    out = {}
    denom = np.abs(x[anchors])
    for lag in range(-lag_window, lag_window + 1):
        ratios = x[anchors + lag] / denom
        qs = {f"q{int(100 * ql):02d}": float(np.quantile(ratios, ql)) for ql in qlevels}
        out[lag] = LagSummary(
            lag=lag,
            quantiles=qs,
            near_zero_mass=float(np.mean(np.abs(ratios) <= near_zero)),
            anchors=int(anchors.size),
        )
    return out


@dataclass
class TailDiagnostics:
    """Bundle of per-sample diagnostics plus the untestable-assumption flag."""

    alpha_hat: float
    an_hat: float
    theta_hat: float
    anticluster_curve: dict = field(default_factory=dict)
    sign_switch_violations: int = 0
    small_jump_curve: dict = field(default_factory=dict)
    mixing_assumed: bool = True

    def jsonl_records(self, replicate=0):
        """One record per (replicate, diagnostic), with the flat field names
        alpha_hat / an_hat / theta_hat / m / prob / u / delta / violations."""
        recs = [
            {
                "replicate": replicate,
                "diagnostic": "tail_summary",
                "alpha_hat": self.alpha_hat,
                "an_hat": self.an_hat,
                "theta_hat": self.theta_hat,
                "mixing_assumed": self.mixing_assumed,
            },
            {
                "replicate": replicate,
                "diagnostic": "sign_switch",
                "violations": self.sign_switch_violations,
            },
        ]
        for m, prob in sorted(self.anticluster_curve.items()):
            recs.append(
                {"replicate": replicate, "diagnostic": "anticluster", "m": m, "prob": prob}
            )
        for (u, delta), prob in sorted(self.small_jump_curve.items()):
            recs.append(
                {
                    "replicate": replicate,
                    "diagnostic": "small_jump",
                    "u": u,
                    "delta": delta,
                    "prob": prob,
                }
            )
        return recs


def diagnose(sample_values, scheme, quantile_level=0.99, k_frac=0.6):
    """Convenience bundle: Hill, empirical norming, blocks theta, anticluster
    head, sign-switch count.  Thresholds are quantile levels of |X|."""
    x = np.asarray(sample_values, dtype=float)
    n = x.size
    k = max(10, int(np.ceil(n**k_frac)))
    u = float(np.quantile(np.abs(x), quantile_level))
    alpha_hat = hill_alpha(x, min(k, n - 1))
    theta_hat = extremal_index_blocks(x, scheme, u)
    m_grid = [m for m in (1, 2, 3, 5, 8) if m <= scheme.r_n]
    curve = anticluster_diagnostic(x, scheme, u, m_grid)
    return TailDiagnostics(
        alpha_hat=alpha_hat,
        an_hat=an_empirical(x, n),
        theta_hat=theta_hat,
        anticluster_curve=curve,
        sign_switch_violations=sign_switch_diagnostic(x, scheme, u),
    )


def dump_jsonl(records, fileobj):
    for rec in records:
        fileobj.write(json.dumps(rec, sort_keys=True) + "\n")
