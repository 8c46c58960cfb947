"""Stable Levy limits of the partial-sum pair: characteristic constants from
cluster laws, series simulation from Poisson points, and two independent
evaluation routes for the limit law (closed-form stable characteristic
function vs numerical quadrature of the jump-measure exponent).

The limit pair is driven by a Poisson process on [0,1] x (0,inf) with
intensity Leb x nu, nu(dy) = theta * alpha * y^{-alpha-1} dy.  Each point
carries an i.i.d. cluster of normalized marks; the first coordinate sums
point * mark, the second sums the squares.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .paths import STEP, CadlagPath
from .sumproc import JointPathPair


class StableError(ValueError):
    pass


class QuadratureError(StableError):
    pass


@dataclass(frozen=True)
class CharTriple:
    """Parameters of the limit pair's jump measures and drifts.

    First coordinate: index alpha, jump measure
    theta*alpha*(c_plus on x>0, c_minus on x<0)*|x|^{-alpha-1} dx, drift
    gamma1.  Second coordinate: index alpha/2, one-sided constant r2 =
    E(sum eta_j^2)^{alpha/2}, drift gamma2.  p and q are the positive- and
    negative-tail weights of the underlying marginal; they satisfy
    p - q = theta * E[sum_j sign(eta_j) |eta_j|^alpha].
    """

    alpha: float
    theta: float
    c_plus: float
    c_minus: float
    gamma1: float
    r2: float
    gamma2: float
    p: float = 1.0
    q: float = 0.0
    gamma1_flagged: bool = False
    se: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise StableError("alpha must lie in (0,2)")
        if not 0.0 < self.theta <= 1.0:
            raise StableError("theta must lie in (0,1]")
        if self.c_plus < 0.0 or self.c_minus < 0.0:
            raise StableError("c_plus and c_minus must be nonnegative")
        if self.r2 < 0.0:
            raise StableError("r2 must be nonnegative")

    @property
    def regime(self):
        return "(0,1)" if self.alpha < 1.0 else "[1,2)"

    def l2_triple(self):
        """The second coordinate viewed as its own one-sided triple."""
        return CharTriple(
            alpha=self.alpha / 2.0,
            theta=self.theta,
            c_plus=self.r2,
            c_minus=0.0,
            gamma1=self.gamma2,
            r2=float("nan"),
            gamma2=float("nan"),
            p=1.0,
            q=0.0,
        )


@dataclass(frozen=True)
class StableParams:
    """(c, beta, tau) of exp{i tau z - c|z|^alpha (1 - i beta sgn(z) w(z))}
    with w(z) = tan(pi alpha / 2) for alpha != 1 and -(2/pi) log|z| for
    alpha = 1."""

    alpha: float
    c: float
    beta: float
    tau: float

    def __post_init__(self):
        if self.c <= 0.0:
            raise StableError("scale c must be positive")
        if not -1.0 <= self.beta <= 1.0:
            raise StableError("symmetry beta must lie in [-1,1]")


def _compensator_integral(triple):
    """integral of x over |x| <= 1 against the first coordinate's jump
    measure; finite only for alpha < 1 but used with its signed continuation
    for alpha > 1 where it equals -integral over |x| > 1."""
    a = triple.alpha
    return triple.theta * a * (triple.c_plus - triple.c_minus) / (1.0 - a)


def gamma1_for(alpha, theta, c_plus, c_minus, p, q):
    """Drift of the first limit coordinate.

    alpha < 1: the strictly-stable drift theta*alpha*(c+ - c-)/(1-alpha).
    alpha > 1: alpha/(alpha-1) * (p - q - theta*(c+ - c-)), the value that
    makes the truncated-mean-centered sums and the mark-compensated series
    agree (both have mean (p-q)*alpha/(alpha-1) at t=1).
    alpha = 1: 0; the mark-level compensator cancels the cluster-level one
    exactly because p - q = theta*E[sum eta] = theta*(c+ - c-) at alpha=1.
    """
    if alpha < 1.0:
        return theta * alpha * (c_plus - c_minus) / (1.0 - alpha)
    if alpha == 1.0:
        return 0.0
    return alpha / (alpha - 1.0) * (p - q - theta * (c_plus - c_minus))


def gamma2_for(alpha, theta, r2):
    """Drift of the squared coordinate (index alpha/2 < 1 always).

    Uncentered regime (alpha < 1): the strictly-stable drift
    theta*alpha*r2/(2-alpha).  Centered regime (alpha >= 1): the truncated
    second moment alpha/(2-alpha) is subtracted, shifting the drift to
    alpha/(2-alpha) * (theta*r2 - 1).
    """
    base = theta * alpha * r2 / (2.0 - alpha)
    if alpha < 1.0:
        return base
    return base - alpha / (2.0 - alpha)


def triple_from_cluster(alpha, theta, cluster, p=None, q=None, mc_size=10**5, seed=0):
    """Characteristic constants from a cluster mark law.

    c_plus = E[(sum eta)^alpha; sum > 0], c_minus the mirror image, r2 =
    E(sum eta^2)^{alpha/2}.  Deterministic-shape laws are evaluated exactly;
    otherwise Monte Carlo with attached standard errors.  When p is omitted
    it is recovered from the marginal-consistency identity
    p - q = theta * E[sum_j sign(eta_j)|eta_j|^alpha].
    """
    if mc_size < 10**4:
        raise StableError("mc_size >= 1e4 required for stable constants")
    se = {}
    if cluster.is_deterministic:
        c_plus, c_minus, r2, _mean_sum, _mean_sq, signed = cluster.exact_sum_moments(alpha)
    else:
        rng = np.random.default_rng(seed)
        marks = cluster.sample(rng, mc_size)
        sums = marks.sum(axis=1)
        sq = (marks**2).sum(axis=1)
        yp = np.where(sums > 0, sums, 0.0) ** alpha * (sums > 0)
        ym = np.where(sums < 0, -sums, 0.0) ** alpha * (sums < 0)
        yr = sq ** (alpha / 2.0)
        ysgn = (np.sign(marks) * np.abs(marks) ** alpha).sum(axis=1)
        c_plus = float(yp.mean())
        c_minus = float(ym.mean())
        r2 = float(yr.mean())
        signed = float(ysgn.mean())
        rt = math.sqrt(mc_size)
        se = {
            "c_plus": float(yp.std(ddof=1)) / rt,
            "c_minus": float(ym.std(ddof=1)) / rt,
            "r2": float(yr.std(ddof=1)) / rt,
        }
    if p is None:
        diff = theta * signed
        p = (1.0 + diff) / 2.0
        q = (1.0 - diff) / 2.0
    elif q is None:
        q = 1.0 - p
    flagged = alpha == 1.0
    g1 = gamma1_for(alpha, theta, c_plus, c_minus, p, q)
    g2 = gamma2_for(alpha, theta, r2)
    return CharTriple(
        alpha=alpha,
        theta=theta,
        c_plus=c_plus,
        c_minus=c_minus,
        gamma1=g1,
        r2=r2,
        gamma2=g2,
        p=p,
        q=q,
        gamma1_flagged=flagged,
        se=se,
    )


def levy_exponent(z, triple, quad_tol=1e-6):
    """log E[exp(i z V(1))] by quadrature of the jump-measure integral.

    V has characteristic triple (0, nu1, gamma1): the exponent is
    i*gamma1*z + integral of (e^{izx} - 1 - izx 1{|x|<=1}) nu1(dx),
    nu1(dx) = theta*alpha*(c+ 1_{x>0} + c- 1_{x<0}) |x|^{-alpha-1} dx.
    Split at |x| = 1; the oscillatory tails use weighted quadrature and the
    constant tail integrates to 1/alpha in closed form.
    """
    if z == 0.0:
        return 0.0 + 0.0j
    a = triple.alpha
    w = abs(float(z))
    ap = triple.theta * a * triple.c_plus
    am = triple.theta * a * triple.c_minus

    def _quad(f, lo, hi, **kw):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(
                f, lo, hi, limit=800, epsabs=1e-11, epsrel=1e-11, **kw
            )
        if err > quad_tol * (1.0 + abs(val)):
            raise QuadratureError(
                f"quadrature residual {err:.2e} exceeds tolerance at z={z}"
            )
        return val

    i1c = _quad(lambda x: (math.cos(w * x) - 1.0) * x ** (-a - 1.0), 0.0, 1.0)
    i1s = _quad(lambda x: (math.sin(w * x) - w * x) * x ** (-a - 1.0), 0.0, 1.0)
    i2c = _quad(lambda x: x ** (-a - 1.0), 1.0, np.inf, weight="cos", wvar=w)
    i2s = _quad(lambda x: x ** (-a - 1.0), 1.0, np.inf, weight="sin", wvar=w)
    re = (ap + am) * (i1c + i2c - 1.0 / a)
    im = math.copysign(1.0, z) * (ap - am) * (i1s + i2s) + triple.gamma1 * z
    return complex(re, im)


def stable_params(triple):
    """(c, beta, tau) matching the Levy-Khintchine exponent of the triple.

    For alpha != 1 the jump integral evaluates in closed form:
    integral over x>0 of (e^{izx}-1[-izx]) alpha x^{-alpha-1} dx =
    -Gamma(1-alpha) |z|^alpha exp(-i pi alpha sgn(z)/2), so

        c    = theta (c+ + c-) Gamma(1-alpha) cos(pi alpha / 2)
        beta = (c+ - c-) / (c+ + c-)
        tau  = gamma1 - theta alpha (c+ - c-) / (1 - alpha)

    (the tau formula covers both regimes: for alpha < 1 it removes the
    small-jump compensator, for alpha > 1 it adds the large-jump tail mean).
    For alpha = 1, c = theta (c+ + c-) pi/2 and tau is calibrated
    numerically from the exponent at z = 1, where the log|z| term vanishes.
    """
    cp, cm = triple.c_plus, triple.c_minus
    tot = cp + cm
    if tot <= 0.0:
        raise StableError("degenerate law: c_plus + c_minus = 0")
    a = triple.alpha
    beta = (cp - cm) / tot
    if a == 1.0:
        c = triple.theta * tot * math.pi / 2.0
        tau = levy_exponent(1.0, triple).imag
    else:
        c = triple.theta * tot * math.gamma(1.0 - a) * math.cos(math.pi * a / 2.0)
        tau = triple.gamma1 - _compensator_integral(triple)
    return StableParams(alpha=a, c=c, beta=beta, tau=tau)


def charfn_stable(z, params):
    """Characteristic function of the stable law, exact closed form."""
    z_arr = np.asarray(z, dtype=float)
    az = np.abs(z_arr)
    sgn = np.sign(z_arr)
    a = params.alpha
    if a == 1.0:
        with np.errstate(divide="ignore"):
            logs = np.where(az > 0.0, np.log(np.where(az > 0.0, az, 1.0)), 0.0)
        inner = 1.0 + 1j * params.beta * (2.0 / math.pi) * sgn * logs
    else:
        inner = 1.0 - 1j * params.beta * sgn * math.tan(math.pi * a / 2.0)
    out = np.exp(1j * params.tau * z_arr - params.c * az**a * inner)
    return out if z_arr.ndim else complex(out)


def cms_sampler(params, m, seed):
    """Stable variates by the trigonometric transform of (uniform, exponential).

    Draws V uniform on (-pi/2, pi/2) and W exponential, maps them through
    the standard one/two-branch recipe, then rescales to (c, beta, tau).
    Serves as the oracle route independent of the Poisson series.
    """
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    a, beta, c, tau = params.alpha, params.beta, params.c, params.tau
    v = (rng.random(m) - 0.5) * math.pi
    w = rng.exponential(size=m)
    if a == 1.0:
        half = math.pi / 2.0
        x = (1.0 / half) * (
            (half + beta * v) * np.tan(v)
            - beta * np.log((half * w * np.cos(v)) / (half + beta * v))
        )
        return c * x + (2.0 / math.pi) * beta * c * math.log(c) + tau
    t = beta * math.tan(math.pi * a / 2.0)
    b = math.atan(t) / a
    s = (1.0 + t * t) ** (1.0 / (2.0 * a))
    x = (
        s
        * np.sin(a * (v + b))
        / np.cos(v) ** (1.0 / a)
        * (np.cos(v - a * (v + b)) / w) ** ((1.0 - a) / a)
    )
    return c ** (1.0 / a) * x + tau


def _poisson_points(rng, theta, alpha, n_draws, n_pts):
    # The mean measure of nu(dy) = theta*alpha*y^{-alpha-1} dy on (y, inf)
    # is theta * y^{-alpha}; pushing unit-rate Poisson arrivals Gamma_i
    # through its inverse y = (Gamma_i / theta)^{-1/alpha} therefore yields
    # exactly the points of the driving process, in decreasing order.
    gam = np.cumsum(rng.exponential(size=(n_draws, n_pts)), axis=1)
    pts = (gam / theta) ** (-1.0 / alpha)
    times = rng.random((n_draws, n_pts))
    return pts, times


def _mark_drift_rate(triple):
    """Rate of the mark-level compensator t * int_{u<|x|<=1} x mu(dx) at u,
    returned as a callable of u; mu carries the marginal weights (p, q)."""
    a = triple.alpha
    diff = triple.p - triple.q

    def rate(u):
        uu = np.minimum(u, 1.0)
        if a == 1.0:
            return diff * np.log(1.0 / uu)
        return diff * a * (uu ** (1.0 - a) - 1.0) / (a - 1.0)

    return rate


def _cluster_mean_moments(triple_cluster, alpha, marks=None):
    cluster = triple_cluster
    if cluster.is_deterministic:
        _cp, _cm, _r2, mean_sum, mean_sq, _sgn = cluster.exact_sum_moments(alpha)
        return mean_sum, mean_sq
    return float(marks.sum(axis=-1).mean()), float((marks**2).sum(axis=-1).mean())


def levy_marginal_draws(
    triple,
    cluster,
    t_grid,
    n_draws,
    n_pts=2000,
    seed=0,
    tail_sd_tol=0.75,
    small_tail_correction=True,
):
    """Joint draws of (L1(t), L2(t)) on a time grid, plus L2(1).

    L2 is always the plain sum of squared jumps (its index alpha/2 is below
    1, so it needs no centering); for alpha >= 1 the first coordinate keeps
    marks above the running truncation level u = smallest generated point
    and subtracts the mark-level compensator, matching the centered sums.
    The truncated remainder is mean zero with variance
    t * theta*alpha*(c+ + c-) u^{2-alpha} / (2-alpha); its square root must
    stay below ``tail_sd_tol``.  For alpha < 1 the dropped points' expected
    contribution is added back as a deterministic drift unless
    ``small_tail_correction`` is disabled.
    """
    if n_pts < 10**3:
        raise StableError("n_pts >= 1e3 required")
    a = triple.alpha
    theta = triple.theta
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    t_grid = np.asarray(t_grid, dtype=float)
    pts, times = _poisson_points(rng, theta, a, n_draws, n_pts)
    marks = cluster.sample(rng, n_draws * n_pts).reshape(n_draws, n_pts, -1)
    u = pts[:, -1]

    if a >= 1.0:
        sd = np.sqrt(
            theta * a * (triple.c_plus + triple.c_minus) * u ** (2.0 - a) / (2.0 - a)
        ).max()
        if sd > tail_sd_tol:
            raise StableError(
                f"series tail too heavy (remainder sd {sd:.3f} > {tail_sd_tol}); "
                "increase n_pts"
            )
        keep = pts[:, :, None] * np.abs(marks) > u[:, None, None]
        jump1 = pts * (marks * keep).sum(axis=2)
        drift1 = _mark_drift_rate(triple)(u)
    else:
        jump1 = pts * marks.sum(axis=2)
        if small_tail_correction:
            mean_sum, _ = _cluster_mean_moments(cluster, a, marks)
            drift1 = -theta * a / (1.0 - a) * u ** (1.0 - a) * mean_sum
        else:
            drift1 = np.zeros(n_draws)
    jump2 = pts**2 * (marks**2).sum(axis=2)
    if small_tail_correction:
        _, mean_sq = _cluster_mean_moments(cluster, a, marks)
        drift2 = -theta * a / (2.0 - a) * u ** (2.0 - a) * mean_sq
    else:
        drift2 = np.zeros(n_draws)

    order = np.argsort(times, axis=1)
    t_sorted = np.take_along_axis(times, order, axis=1)
    c1 = np.cumsum(np.take_along_axis(jump1, order, axis=1), axis=1)
    c2 = np.cumsum(np.take_along_axis(jump2, order, axis=1), axis=1)
    l1 = np.empty((n_draws, t_grid.size))
    l2 = np.empty((n_draws, t_grid.size))
    for j, t in enumerate(t_grid):
        counts = (t_sorted <= t).sum(axis=1)
        has = counts > 0
        l1[:, j] = np.where(has, c1[np.arange(n_draws), np.maximum(counts - 1, 0)], 0.0)
        l2[:, j] = np.where(has, c2[np.arange(n_draws), np.maximum(counts - 1, 0)], 0.0)
        l1[:, j] -= t * drift1
        l2[:, j] -= t * drift2
    l2_total = c2[:, -1] - drift2
    return {"t_grid": t_grid, "l1": l1, "l2": l2, "l2_total": l2_total}


def simulate_levy_pair(
    triple,
    cluster,
    n_pts=2000,
    seed=0,
    drift_grid=256,
    tail_sd_tol=0.75,
    small_tail_correction=True,
):
    """One path draw of the limit pair as step paths on [0,1].

    Jump times are shared between coordinates (the same Poisson points).
    Continuous drift parts (compensators and small-tail corrections) are
    sampled on ``drift_grid`` extra breakpoints.  The second coordinate is
    emitted uncentered (nondecreasing); for alpha >= 1 the centered version
    subtracts t * meta['b2_shift'].
    """
    if n_pts < 10**3:
        raise StableError("n_pts >= 1e3 required")
    a = triple.alpha
    theta = triple.theta
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    pts, times = _poisson_points(rng, theta, a, 1, n_pts)
    marks = cluster.sample(rng, n_pts).reshape(1, n_pts, -1)
    pts, times, marks = pts[0], times[0], marks[0]
    u = pts[-1]
    if a >= 1.0:
        sd = math.sqrt(
            theta * a * (triple.c_plus + triple.c_minus) * u ** (2.0 - a) / (2.0 - a)
        )
        if sd > tail_sd_tol:
            raise StableError(
                f"series tail too heavy (remainder sd {sd:.3f} > {tail_sd_tol}); "
                "increase n_pts"
            )
        keep = pts[:, None] * np.abs(marks) > u
        jump1 = pts * (marks * keep).sum(axis=1)
        drift1 = float(_mark_drift_rate(triple)(np.array([u]))[0])
    else:
        jump1 = pts * marks.sum(axis=1)
        if small_tail_correction:
            mean_sum, _ = _cluster_mean_moments(cluster, a, marks[None, ...])
            drift1 = -theta * a / (1.0 - a) * u ** (1.0 - a) * mean_sum
        else:
            drift1 = 0.0
    jump2 = pts**2 * (marks**2).sum(axis=1)
    if small_tail_correction:
        _, mean_sq = _cluster_mean_moments(cluster, a, marks[None, ...])
        drift2 = -theta * a / (2.0 - a) * u ** (2.0 - a) * mean_sq
    else:
        drift2 = 0.0

    grid = np.linspace(0.0, 1.0, drift_grid + 1)
    all_times = np.union1d(times, grid)
    order = np.argsort(times)
    ts = times[order]
    cs1 = np.cumsum(jump1[order])
    cs2 = np.cumsum(jump2[order])
    idx = np.searchsorted(ts, all_times, side="right")
    v1 = np.where(idx > 0, cs1[np.maximum(idx - 1, 0)], 0.0) - all_times * drift1
    v2 = np.where(idx > 0, cs2[np.maximum(idx - 1, 0)], 0.0) - all_times * drift2
    if all_times[0] != 0.0:
        all_times = np.concatenate([[0.0], all_times])
        v1 = np.concatenate([[0.0], v1])
        v2 = np.concatenate([[0.0], v2])
    meta = {
        "u_trunc": float(u),
        "b2_shift": a / (2.0 - a) if a >= 1.0 else 0.0,
        "l1_total": float(cs1[-1] - drift1),
        "l2_total": float(cs2[-1] - drift2),
        "remainder_var": float(
            theta * a * (triple.c_plus + triple.c_minus) * u ** (2.0 - a) / (2.0 - a)
        )
        if a >= 1.0
        else 0.0,
    }
    return JointPathPair(
        l1=CadlagPath(all_times, v1, STEP),
        l2=CadlagPath(all_times, v2, STEP),
        n=n_pts,
        a_n=float("nan"),
        centered=a >= 1.0,
        u=float(u),
        b1n=drift1,
        b2n=drift2,
    ), meta


def triple_to_record(triple):
    return {
        "alpha": triple.alpha,
        "theta": triple.theta,
        "c_plus": triple.c_plus,
        "c_minus": triple.c_minus,
        "gamma1": triple.gamma1,
        "r2": triple.r2,
        "gamma2": triple.gamma2,
        "p": triple.p,
        "q": triple.q,
        "regime": triple.regime,
        "gamma1_flagged": triple.gamma1_flagged,
    }


def params_to_record(params):
    return {
        "alpha": params.alpha,
        "c": params.c,
        "beta": params.beta,
        "tau": params.tau,
    }
