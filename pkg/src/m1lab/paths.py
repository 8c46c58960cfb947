"""Cadlag paths on [0,1] and the uniform, J1, strong-M1 and weak-M1 metrics.

Paths have finitely many breakpoints and are either right-continuous step
functions or continuous piecewise-linear interpolants.  The strong M1
distance between two scalar paths equals the continuous Frechet distance
between their completed graphs under the max(time, value) ground metric:
a pair of strong parametric representations with a common parameter is
exactly a pair of monotone traversals of the two graphs.  That distance is
computed by bisection over a free-space reachability sweep, which yields a
certified upper endpoint within a resolution-controlled gap of the true
infimum.

Paths are immutable after construction and every operation here is a pure
function, safe for concurrent use.
"""

import io
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels


class PathError(ValueError):
    """Invalid path construction or operation input."""


class DimensionError(PathError):
    """Coordinate-count mismatch between paths."""


class PreconditionError(PathError):
    """A documented operation precondition was violated."""


class OppositeJumpWarning(UserWarning):
    """Common jump time with opposite-sign jumps in a path product."""


STEP = "step"
PL = "pl"


@dataclass(frozen=True)
class CadlagPath:
    """Breakpoint times (strictly increasing, starting at 0) and values.

    ``values`` has shape (k, d) with d in {1, 2}.  ``kind`` selects the
    interpolation rule: "step" holds the last value until the next
    breakpoint, "pl" joins breakpoints by straight lines (hence is
    continuous); both extend constantly after the final breakpoint.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = STEP

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.size == 0:
            raise PathError("a path needs at least one breakpoint (the value at t=0)")
        if v.shape[0] != t.size:
            raise PathError("times and values must have matching lengths")
        if v.shape[1] not in (1, 2):
            raise DimensionError("paths carry 1 or 2 coordinates")
        if t[0] != 0.0:
            raise PathError("first breakpoint must be t=0")
        if t[-1] > 1.0 or np.any(t < 0.0):
            raise PathError("breakpoints must lie in [0,1]")
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            raise PathError("breakpoint times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise PathError("path values must be finite")
        if self.kind not in (STEP, PL):
            raise PathError(f"unknown path kind {self.kind!r}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.shape[1]

    def coord(self, j):
        """Scalar component path."""
        return CadlagPath(self.times, self.values[:, j], self.kind)

    def at(self, t):
        return eval_path(self, t)

    def left_at(self, t):
        return left_limit(self, t)


def eval_path(path, t):
    """Right-continuous evaluation; accepts a scalar or an array of times."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise PathError("evaluation time outside [0,1]")
    idx = np.searchsorted(path.times, t_arr, side="right") - 1
    if path.kind == STEP:
        out = path.values[idx]
    else:
        nxt = np.minimum(idx + 1, len(path.times) - 1)
        t0 = path.times[idx]
        t1 = path.times[nxt]
        span = t1 - t0
        w = np.where(span > 0.0, (t_arr - t0) / np.where(span > 0.0, span, 1.0), 0.0)
        out = path.values[idx] + w[:, None] * (path.values[nxt] - path.values[idx])
    if np.isscalar(t) or np.ndim(t) == 0:
        return out[0]
    return out


def left_limit(path, t):
    """Limit from the left; defined on (0,1]."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0.0) or np.any(t_arr > 1.0):
        raise PathError("left limits exist on (0,1] only")
    if path.kind == PL:
        out = np.atleast_2d(eval_path(path, t_arr))
    else:
        idx = np.searchsorted(path.times, t_arr, side="left") - 1
        idx = np.maximum(idx, 0)
        out = path.values[idx]
    if np.isscalar(t) or np.ndim(t) == 0:
        return out[0]
    return out


def _merged_times(x, y):
    ts = np.union1d(x.times, y.times)
    if ts[-1] < 1.0:
        ts = np.append(ts, 1.0)
    return ts


def uniform_distance(x, y):
    """Sup-norm distance, exact for step/pl paths via the merged grid.

    Between merged breakpoints both paths are affine, so the supremum of the
    max-norm difference is attained at a breakpoint or a one-sided limit.
    """
    if x.dim != y.dim:
        raise DimensionError("paths must share the coordinate count")
    ts = _merged_times(x, y)
    gaps = np.abs(np.atleast_2d(eval_path(x, ts)) - np.atleast_2d(eval_path(y, ts)))
    best = gaps.max()
    interior = ts[ts > 0.0]
    if interior.size:
        lgaps = np.abs(
            np.atleast_2d(left_limit(x, interior)) - np.atleast_2d(left_limit(y, interior))
        )
        best = max(best, lgaps.max())
    return float(best)


@dataclass(frozen=True)
class CompletedGraph:
    """Completed graph of one coordinate: the path's graph with vertical
    segments filled in at jumps, as a polyline monotone in time."""

    times: np.ndarray
    values: np.ndarray

    def jump_segments(self):
        """(t, v_before, v_after) for each vertical (jump) segment."""
        out = []
        for i in range(self.times.size - 1):
            if self.times[i] == self.times[i + 1]:
                out.append((self.times[i], self.values[i], self.values[i + 1]))
        return out


def completed_graph_of(path, coord=0):
    return CompletedGraph(*completed_graph(path, coord))


def completed_graph(path, coord=0):
    """Vertices (t, v) of the completed graph of one coordinate.

    Jumps of step paths become vertical segments; the polyline always spans
    t=0 to t=1.
    """
    t = path.times
    v = path.values[:, coord]
    gt = [t[0]]
    gv = [v[0]]
    if path.kind == PL:
        for i in range(1, t.size):
            gt.append(t[i])
            gv.append(v[i])
    else:
        for i in range(1, t.size):
            if v[i] != v[i - 1]:
                gt.append(t[i])
                gv.append(v[i - 1])
                gt.append(t[i])
                gv.append(v[i])
    if gt[-1] < 1.0:
        gt.append(1.0)
        gv.append(gv[-1])
    # drop zero-length segments
    out_t = [gt[0]]
    out_v = [gv[0]]
    for i in range(1, len(gt)):
        if gt[i] != out_t[-1] or gv[i] != out_v[-1]:
            out_t.append(gt[i])
            out_v.append(gv[i])
    if len(out_t) == 1:
        out_t.append(1.0)
        out_v.append(out_v[0])
    return np.asarray(out_t), np.asarray(out_v)


def _canonical_pair(x, y):
    """Deterministic argument ordering so the metrics are exactly symmetric."""
    kx = (x.kind, x.times.tobytes(), x.values.tobytes())
    ky = (y.kind, y.times.tobytes(), y.values.tobytes())
    return (x, y) if kx <= ky else (y, x)


def _paths_identical(x, y):
    return (
        x.kind == y.kind
        and x.times.shape == y.times.shape
        and np.array_equal(x.times, y.times)
        and np.array_equal(x.values, y.values)
    )


@dataclass(frozen=True)
class M1Result:
    """Bisection output: certified bracket around the true distance."""

    value: float
    lower: float
    upper: float
    uniform_bound: float
    tol: float


def _bisect_metric(feasible, lo, hi, tol):
    if hi <= lo + tol:
        return M1Result(hi, lo, hi, hi, tol)
    hi0 = hi
    if not feasible(hi):
        # uniform bound should always be feasible; widen defensively
        while not feasible(hi):
            hi *= 2.0
            if hi > 1e12:
                raise PathError("feasibility search failed to bracket the distance")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return M1Result(hi, lo, hi, hi0, tol)


def m1_distance_detailed(x, y, resolution=4096):
    """Strong M1 distance of scalar paths with its certified bracket."""
    if x.dim != 1 or y.dim != 1:
        raise DimensionError(
            "strong M1 is per-coordinate; use weak_m1_distance for multivariate paths"
        )
    n_feat = len(x.times) + len(y.times)
    if resolution < 2 * n_feat:
        raise PathError(
            f"resolution {resolution} too small; need >= {2 * n_feat} for these paths"
        )
    if _paths_identical(x, y):
        return M1Result(0.0, 0.0, 0.0, 0.0, 0.0)
    x, y = _canonical_pair(x, y)
    pt, pv = completed_graph(x)
    qt, qv = completed_graph(y)
    unif = uniform_distance(x, y)
    lo = max(abs(pv[0] - qv[0]), abs(pv[-1] - qv[-1]))
    tol = max(unif, 1e-12) / float(resolution)

    def feasible(d):
        return bool(kernels.frechet_feasible(pt, pv, qt, qv, d))

    return _bisect_metric(feasible, lo, unif, tol)


def m1_distance(x, y, resolution=4096):
    """Strong M1 distance (certified upper endpoint, <= uniform distance)."""
    return m1_distance_detailed(x, y, resolution).value


def weak_m1_distance(x, y, resolution=4096):
    """Product metric: max of per-coordinate strong M1 distances."""
    if x.dim != y.dim:
        raise DimensionError("paths must share the coordinate count")
    return max(
        m1_distance(x.coord(j), y.coord(j), resolution) for j in range(x.dim)
    )


def _jump_sequence(path):
    t = path.times
    v = path.values[:, 0]
    jt = []
    levels = [v[0]]
    for i in range(1, t.size):
        if v[i] != v[i - 1]:
            jt.append(t[i])
            levels.append(v[i])
    return np.asarray(jt), np.asarray(levels)


def j1_distance(x, y, resolution=4096):
    """J1 distance between scalar step paths via jump alignment.

    Jumps must match in location (within the time distortion) and magnitude;
    unmatched jumps pay the full level gap against the other path.  Ties in
    the alignment are broken toward the earliest admissible placement.
    """
    if x.kind != STEP or y.kind != STEP:
        raise PreconditionError(
            "j1_distance handles step paths; refine piecewise-linear paths first "
            "(see step_refine)"
        )
    if x.dim != 1 or y.dim != 1:
        raise DimensionError("j1_distance is defined per coordinate")
    if _paths_identical(x, y):
        return 0.0
    x, y = _canonical_pair(x, y)
    tx, levx = _jump_sequence(x)
    sy, levy = _jump_sequence(y)
    unif = uniform_distance(x, y)
    lo = max(abs(levx[0] - levy[0]), abs(levx[-1] - levy[-1]))
    tol = max(unif, 1e-12) / float(resolution)

    def feasible(d):
        return bool(kernels.j1_feasible(tx, sy, levx, levy, d))

    return _bisect_metric(feasible, lo, unif, tol).value


def step_refine(path, per_segment=512):
    """Step approximation on a breakpoint-aware grid.

    Each interval between consecutive breakpoints (and the trailing stretch
    to t=1) is subdivided ``per_segment`` times, so a linear ramp becomes
    jumps of size (ramp height) / per_segment regardless of its width.
    """
    knots = path.times
    if knots[-1] < 1.0:
        knots = np.append(knots, 1.0)
    pieces = [
        np.linspace(knots[i], knots[i + 1], per_segment + 1)
        for i in range(knots.size - 1)
    ]
    ts = np.unique(np.concatenate(pieces)) if pieces else np.array([0.0])
    vals = np.atleast_2d(eval_path(path, ts))
    return CadlagPath(ts, vals, STEP)


def is_monotone_nondecreasing(path):
    return bool(np.all(np.diff(path.values, axis=0) >= 0.0))


def _tau_parametrize(gt, gv):
    tau = gt + gv
    return tau


def monotone_m1_distance(x, y):
    """Exact M1 distance between nondecreasing scalar paths.

    Both completed graphs are nondecreasing in time and value, so they are
    graphs over the diagonal level tau = t + v.  Matching equal-tau points
    (clamped at the ends) is an optimal monotone alignment: matched points
    differ along the antidiagonal, and any other monotone matching must
    cross every tau level at no smaller max-norm gap.  The sup over tau is
    attained on the merged vertex grid because both coordinates are
    piecewise linear in tau.
    """
    if x.dim != 1 or y.dim != 1:
        raise DimensionError("monotone M1 is defined for scalar paths")
    if not is_monotone_nondecreasing(x) or not is_monotone_nondecreasing(y):
        raise PreconditionError("monotone_m1_distance requires nondecreasing paths")
    pt, pv = completed_graph(x)
    qt, qv = completed_graph(y)
    tau_p = _tau_parametrize(pt, pv)
    tau_q = _tau_parametrize(qt, qv)
    grid = np.union1d(tau_p, tau_q)
    grid = np.union1d(grid, [tau_p[0], tau_p[-1], tau_q[0], tau_q[-1]])
    gp = np.clip(grid, tau_p[0], tau_p[-1])
    gq = np.clip(grid, tau_q[0], tau_q[-1])
    xp_t = np.interp(gp, tau_p, pt)
    xp_v = np.interp(gp, tau_p, pv)
    yq_t = np.interp(gq, tau_q, qt)
    yq_v = np.interp(gq, tau_q, qv)
    return float(np.maximum(np.abs(xp_t - yq_t), np.abs(xp_v - yq_v)).max())


def _check_divisor(y):
    if y.dim != 1:
        raise DimensionError("divisor path must be scalar")
    v = y.values[:, 0]
    if y.kind == STEP and v.size > 1 and np.any(np.diff(v) != 0.0):
        raise PreconditionError(
            "divisor violates the continuity condition of the continuous-"
            "nondecreasing-positive class (step path with jumps)"
        )
    if v[0] <= 0.0:
        raise PreconditionError(
            "divisor violates the positivity-at-zero condition y(0) > 0 of the "
            "continuous-nondecreasing-positive class"
        )
    if np.any(v <= 0.0):
        raise PreconditionError(
            "divisor violates the strict positivity condition of the continuous-"
            "nondecreasing-positive class"
        )
    if np.any(np.diff(v) < 0.0):
        raise PreconditionError(
            "divisor violates the nondecreasing condition of the continuous-"
            "nondecreasing-positive class"
        )


def ratio_path(x, y):
    """Pointwise x/y on the merged breakpoint grid.

    The divisor must be continuous, nondecreasing and strictly positive with
    y(0) > 0.  Values are exact on the merged grid; between grid points the
    returned path interpolates with x's kind.
    """
    _check_divisor(y)
    ts = _merged_times(x, y)
    xv = np.atleast_2d(eval_path(x, ts))
    yv = np.atleast_2d(eval_path(y, ts))[:, 0]
    return CadlagPath(ts, xv / yv[:, None], x.kind)


def _jump_at(path, t):
    tol_idx = np.searchsorted(path.times, t)
    if tol_idx >= len(path.times) or path.times[tol_idx] != t or t == 0.0:
        return np.zeros(path.dim)
    return path.values[tol_idx] - np.atleast_1d(left_limit(path, t))


def product_path(x, y):
    """Pointwise product on the merged grid.

    Emits :class:`OppositeJumpWarning` when a common jump time carries
    opposite-sign jumps (the multiplication map is not continuous there).
    """
    if x.dim != y.dim:
        raise DimensionError("paths must share the coordinate count")
    ts = _merged_times(x, y)
    xv = np.atleast_2d(eval_path(x, ts))
    yv = np.atleast_2d(eval_path(y, ts))
    common = np.intersect1d(x.times[1:], y.times[1:])
    for t in common:
        jx = _jump_at(x, t)
        jy = _jump_at(y, t)
        if np.any(jx * jy < 0.0):
            warnings.warn(
                f"opposite-sign common jump at t={t:g}; product continuity "
                "is not guaranteed there",
                OppositeJumpWarning,
                stacklevel=2,
            )
            break
    kind = STEP if (x.kind == STEP and y.kind == STEP) else PL
    return CadlagPath(ts, xv * yv, kind)


@dataclass(frozen=True)
class ParametricRep:
    """Sampled strong parametric representation (r, u) of a completed graph."""

    r: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if r.ndim != 1 or r.shape != u.shape:
            raise PathError("representation components must be 1-d arrays of equal length")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "u", u)

    @property
    def resolution(self):
        return self.r.size


def parametric_rep(path, resolution=512, coord=0):
    """Arc-length-uniform strong parametric representation of one coordinate."""
    gt, gv = completed_graph(path, coord)
    seg = np.abs(np.diff(gt)) + np.abs(np.diff(gv))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] == 0.0:
        arc = np.linspace(0.0, 1.0, gt.size)
    s = np.linspace(0.0, arc[-1], resolution)
    return ParametricRep(np.interp(s, arc, gt), np.interp(s, arc, gv))


def rep_graph_violation(rep, path, coord=0):
    """Largest max-norm distance from representation samples to the graph."""
    gt, gv = completed_graph(path, coord)
    worst = 0.0
    for rt, ru in zip(rep.r, rep.u):
        best = np.inf
        for i in range(gt.size - 1):
            lo, hi = kernels._free_point_seg(rt, ru, gt[i], gv[i], gt[i + 1], gv[i + 1], 0.0)
            if lo <= hi:
                best = 0.0
                break
            # distance to this segment under the max norm by local bisection
            d_lo, d_hi = 0.0, max(abs(rt - gt[i]), abs(ru - gv[i]))
            for _ in range(40):
                mid = 0.5 * (d_lo + d_hi)
                flo, fhi = kernels._free_point_seg(
                    rt, ru, gt[i], gv[i], gt[i + 1], gv[i + 1], mid
                )
                if flo <= fhi:
                    d_hi = mid
                else:
                    d_lo = mid
            best = min(best, d_hi)
        worst = max(worst, best)
    return worst


def save_path_csv(path, fileobj_or_name):
    """Serialize as ``# kind=... d=...`` header plus ``t,v1[,v2]`` rows."""
    own = isinstance(fileobj_or_name, (str, bytes))
    f = open(fileobj_or_name, "w") if own else fileobj_or_name
    try:
        f.write(f"# kind={path.kind} d={path.dim}\n")
        for i in range(path.times.size):
            row = [format(path.times[i], ".17g")]
            row += [format(v, ".17g") for v in path.values[i]]
            f.write(",".join(row) + "\n")
    finally:
        if own:
            f.close()


def load_path_csv(fileobj_or_name):
    own = isinstance(fileobj_or_name, (str, bytes))
    f = open(fileobj_or_name, "r") if own else fileobj_or_name
    try:
        header = f.readline().strip()
        if not header.startswith("#"):
            raise PathError("missing header line '# kind=... d=...' (row 1)")
        fields = dict(
            tok.split("=", 1) for tok in header.lstrip("#").split() if "=" in tok
        )
        kind = fields.get("kind", STEP)
        dim = int(fields.get("d", "1"))
        times = []
        vals = []
        for rownum, line in enumerate(f, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 1 + dim:
                raise PathError(f"row {rownum}: expected {1 + dim} columns, got {len(parts)}")
            try:
                nums = [float(p) for p in parts]
            except ValueError as exc:
                raise PathError(f"row {rownum}: {exc}") from None
            times.append(nums[0])
            vals.append(nums[1:])
        return CadlagPath(np.asarray(times), np.asarray(vals), kind)
    finally:
        if own:
            f.close()


def path_to_csv_text(path):
    buf = io.StringIO()
    save_path_csv(path, buf)
    return buf.getvalue()
