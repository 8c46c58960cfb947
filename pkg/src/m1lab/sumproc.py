"""Partial-sum path functionals of a sample: the joint (sums, sums of
squares) step-path pair, its truncation through the summation functional on
the time-space point measure, centering constants, the self-normalized path
S_{floor(nt)} / V_n with V_n = sqrt(sum X_k^2), and block-collapsed paths.

The self-normalized path is exactly scale invariant: in real arithmetic
S/V does not see a positive rescaling of the data, and in floating point
the invariance is bitwise for power-of-two factors (multiplication by 2^k
commutes with rounding through sums, squares, sqrt and the final division).
Negating the data negates the path bitwise for the same reason.
"""

from dataclasses import dataclass

import numpy as np

from .models import IidSpec, model_alpha, sample_model
from .paths import STEP, CadlagPath


class SumProcessError(ValueError):
    pass


@dataclass(frozen=True)
class PointMeasure:
    """Finite list of (time, mark) atoms; marks are nonzero by construction."""

    times: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        m = np.asarray(self.marks, dtype=float)
        if t.shape != m.shape or t.ndim != 1:
            raise SumProcessError("times and marks must be matching 1-d arrays")
        if t.size and (t.min() < 0.0 or t.max() > 1.0):
            raise SumProcessError("atom times must lie in [0,1]")
        if np.any(m == 0.0):
            raise SumProcessError("marks must be nonzero")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "marks", m)


@dataclass(frozen=True)
class CenteringConstants:
    """Truncated-mean centerings b1n, b2n; zero in the alpha < 1 regime."""

    b1n: float
    b2n: float
    alpha: float
    se_b1n: float = 0.0
    se_b2n: float = 0.0

    @property
    def regime(self):
        return "(0,1)" if self.alpha < 1.0 else "[1,2)"


@dataclass(frozen=True)
class JointPathPair:
    """Step-path pair sharing breakpoints: normalized sums and squared sums."""

    l1: CadlagPath
    l2: CadlagPath
    n: int
    a_n: float
    centered: bool = False
    u: float | None = None
    b1n: float = 0.0
    b2n: float = 0.0


def build_point_measure(data, a_n):
    """Atoms (i/n, X_i / a_n), zero observations dropped."""
    if a_n <= 0.0:
        raise SumProcessError("norming constant must be positive")
    x = np.asarray(data, dtype=float)
    n = x.size
    keep = x != 0.0
    idx = np.flatnonzero(keep)
    return PointMeasure((idx + 1) / n, x[idx] / a_n)


def _pareto_truncated_abs_moment(alpha, power, lower, upper):
    """E[|X|^power 1{lower < |X| <= upper}] for the unit Pareto, upper >= 1."""
    lo = max(lower, 1.0)
    if upper <= lo:
        return 0.0
    expo = power - alpha
    if expo == 0.0:
        return alpha * np.log(upper / lo)
    return alpha / expo * (upper**expo - lo**expo)


def centering_constants(spec, a_n, n, u=None, mc_size=10**6, seed=0, se_tol=None):
    """b1n = E[(X/a_n) 1{|X|/a_n <= 1}], b2n = E[(X^2/a_n^2) 1{X^2/a_n^2 <= 1}].

    Zero in the alpha < 1 regime.  Closed-form Pareto integrals for the
    canonical i.i.d. spec; Monte Carlo with reported standard errors
    otherwise.  ``u`` restricts the truncation window to (u, 1].
    """
    alpha = model_alpha(spec)
    if alpha < 1.0:
        return CenteringConstants(0.0, 0.0, alpha)
    lower = 0.0 if u is None else u * a_n
    if isinstance(spec, IidSpec) and spec.rv.scale == 1.0:
        rv = spec.rv
        m1 = _pareto_truncated_abs_moment(alpha, 1.0, lower, a_n)
        m2 = _pareto_truncated_abs_moment(alpha, 2.0, lower, a_n)
        b1n = (rv.p - rv.q) * m1 / a_n
        b2n = m2 / (a_n * a_n)
        return CenteringConstants(b1n, b2n, alpha)
    sample = sample_model(spec, mc_size, seed).values
    y = sample / a_n
    t1 = np.where(np.abs(y) <= 1.0, y, 0.0)
    if u is not None:
        t1 = np.where(np.abs(y) > u, t1, 0.0)
    y2 = y * y
    t2 = np.where(y2 <= 1.0, y2, 0.0)
    if u is not None:
        t2 = np.where(y2 > u, t2, 0.0)
    b1n = float(t1.mean())
    b2n = float(t2.mean())
    se1 = float(t1.std(ddof=1) / np.sqrt(mc_size))
    se2 = float(t2.std(ddof=1) / np.sqrt(mc_size))
    if se_tol is not None and max(se1, se2) > se_tol:
        raise SumProcessError(
            f"Monte Carlo centering too noisy (se={max(se1, se2):.3g} > {se_tol:.3g}); "
            "increase mc_size"
        )
    return CenteringConstants(b1n, b2n, alpha, se1, se2)


def build_Ln(data, a_n, constants=None):
    """Step-path pair on breakpoints k/n: partial sums of X/a_n and X^2/a_n^2,
    minus k * b1n / k * b2n when centering constants are supplied."""
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise SumProcessError("need a nonempty sample")
    n = x.size
    times = np.arange(n + 1) / n
    s1 = np.concatenate([[0.0], np.cumsum(x / a_n)])
    s2 = np.concatenate([[0.0], np.cumsum((x / a_n) ** 2)])
    centered = constants is not None and (constants.b1n != 0.0 or constants.b2n != 0.0)
    b1n = constants.b1n if constants is not None else 0.0
    b2n = constants.b2n if constants is not None else 0.0
    if constants is not None:
        k = np.arange(n + 1)
        s1 = s1 - k * b1n
        s2 = s2 - k * b2n
    return JointPathPair(
        l1=CadlagPath(times, s1, STEP),
        l2=CadlagPath(times, s2, STEP),
        n=n,
        a_n=a_n,
        centered=centered,
        b1n=b1n,
        b2n=b2n,
    )


def truncate_Ln(pm, u):
    """Summation functional keeping atoms with |mark| > u.

    Both coordinates use the same indicator; the second sums squared marks.
    """
    if u <= 0.0:
        raise SumProcessError("truncation level must be positive")
    keep = np.abs(pm.marks) > u
    t = pm.times[keep]
    m = pm.marks[keep]
    times = np.concatenate([[0.0], t])
    s1 = np.concatenate([[0.0], np.cumsum(m)])
    s2 = np.concatenate([[0.0], np.cumsum(m * m)])
    # duplicate atom times would violate path invariants; merge them
    if t.size and np.any(np.diff(t) == 0.0):
        uniq, inv = np.unique(t, return_inverse=True)
        j1 = np.zeros(uniq.size)
        j2 = np.zeros(uniq.size)
        np.add.at(j1, inv, m)
        np.add.at(j2, inv, m * m)
        times = np.concatenate([[0.0], uniq])
        s1 = np.concatenate([[0.0], np.cumsum(j1)])
        s2 = np.concatenate([[0.0], np.cumsum(j2)])
    return JointPathPair(
        l1=CadlagPath(times, s1, STEP),
        l2=CadlagPath(times, s2, STEP),
        n=pm.times.size,
        a_n=np.nan,
        centered=False,
        u=u,
    )


def self_normalized_path(data, t_grid=None):
    """Step path t -> S_{floor(nt)} / V_n with V_n = sqrt(sum X_k^2)."""
    x = np.asarray(data, dtype=float)
    n = x.size
    v2 = float(np.sum(x * x))
    if v2 == 0.0:
        raise SumProcessError("self-normalization undefined: all observations are zero")
    vn = np.sqrt(v2)
    s = np.concatenate([[0.0], np.cumsum(x)]) / vn
    if t_grid is None:
        times = np.arange(n + 1) / n
        return CadlagPath(times, s, STEP)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0:
        t_grid = np.concatenate([[0.0], t_grid])
    idx = np.floor(n * t_grid).astype(int)
    return CadlagPath(t_grid, s[np.minimum(idx, n)], STEP)


def self_normalized_at(data, t_grid):
    """Values S_{floor(nt)} / V_n on a time grid (no path object)."""
    x = np.asarray(data, dtype=float)
    n = x.size
    v2 = float(np.sum(x * x))
    if v2 == 0.0:
        raise SumProcessError("self-normalization undefined: all observations are zero")
    s = np.concatenate([[0.0], np.cumsum(x)]) / np.sqrt(v2)
    idx = np.minimum(np.floor(n * np.asarray(t_grid, dtype=float)).astype(int), n)
    return s[idx]


def collapse_clusters(path, scheme):
    """Block-endpoint subsampling t -> value at r_n * floor(k_n t) / n.

    The collapsed path merges within-block jump successions into single
    jumps (the smoothed trajectory whose convergence holds in the stronger
    jump-matching topology).
    """
    n = path.times.size - 1
    if scheme.r_n > n:
        raise SumProcessError("block length exceeds the path resolution")
    k_n = n // scheme.r_n
    if scheme.r_n == 1:
        return path
    idx = np.arange(k_n + 1) * scheme.r_n
    times = np.arange(k_n + 1) / k_n
    return CadlagPath(times, path.values[idx], path.kind)


def save_joint_csv(pair, fileobj_or_name):
    """`t,l1,l2` rows under a metadata comment header."""
    own = isinstance(fileobj_or_name, (str, bytes))
    f = open(fileobj_or_name, "w") if own else fileobj_or_name
    try:
        u_txt = "none" if pair.u is None else format(pair.u, ".17g")
        f.write(
            f"# n={pair.n} an={format(pair.a_n, '.17g')} u={u_txt} "
            f"b1n={format(pair.b1n, '.17g')} b2n={format(pair.b2n, '.17g')}\n"
        )
        f.write("t,l1,l2\n")
        for i in range(pair.l1.times.size):
            f.write(
                ",".join(
                    (
                        format(pair.l1.times[i], ".17g"),
                        format(pair.l1.values[i, 0], ".17g"),
                        format(pair.l2.values[i, 0], ".17g"),
                    )
                )
                + "\n"
            )
    finally:
        if own:
            f.close()
