"""Numerical verification of error-bound / quadratic-growth relationships.

Estimates the growth constant alpha (min of 2(phi - phi*)/dist^2), the error
bound constant gamma (max of dist/|G_t|), the subdifferential and proximal
error-bound constants, and checks the translation formulas that tie them
together, all on seeded sublevel-set samples. Sampling can only falsify the
set-wide conditions, never certify them; reports carry sample counts.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (DomainError, InsufficientData, UnsupportedOperation)
from .proxgrad import (AdditiveProblem, ProxGradConfig, _prox_point_batch,
                       run_prox_gradient)
from .proxlinear import CompositeProblem, ProxLinearConfig, prox_linear_map, \
    run_prox_linear
from .smooth import operator_norm_sq
from .vectors import as_vector

GNORM_SKIP = 1e-10
DIST_SKIP = 1e-8
MIN_ACCEPTED = 10
BOXQP_CAP = 10 ** 5
BOXQP_TOL = 1e-10


# ---------------------------------------------------------------------------
# Reference solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceSolution:
    """Minimizer-set description: an analytic box S or a computed point.

    For computed references dist(x, S) is reported as |x - x*|, an upper
    bound on the true distance; this only makes gamma-type estimates more
    conservative.
    """

    kind: str
    phi_star: float
    lo: np.ndarray = None
    hi: np.ndarray = None
    x_star: np.ndarray = None
    accuracy: float = None
    description: str = ""

    @classmethod
    def analytic_box(cls, lo, hi, phi_star, description=""):
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("analytic box needs lo <= hi of equal shapes")
        return cls(kind="analytic-box", phi_star=float(phi_star), lo=lo, hi=hi,
                   description=description)

    @classmethod
    def computed(cls, x_star, phi_star, accuracy):
        return cls(kind="computed", phi_star=float(phi_star),
                   x_star=as_vector(x_star, name="x_star"),
                   accuracy=float(accuracy))

    def center(self):
        if self.kind == "computed":
            return self.x_star
        return 0.5 * (self.lo + self.hi)

    def dist(self, x):
        return float(self.dist_batch(np.asarray(x, dtype=np.float64)[None, :])[0])

    def dist_batch(self, X):
        if self.kind == "computed":
            return np.linalg.norm(X - self.x_star, axis=1)
        C = np.minimum(np.maximum(X, self.lo), self.hi)
        return np.linalg.norm(X - C, axis=1)


def analytic_reference(problem):
    """Analytic minimizer set for catalog instances that have one.

    Currently: the plain corridor loss with a zero penalty, whose minimizer
    set is the unit box with optimal value 0. Returns None when no analytic
    description is known.
    """
    from .penalties import Zero
    from .smooth import Corridor
    if (isinstance(problem, AdditiveProblem) and isinstance(problem.g, Zero)
            and isinstance(problem.f, Corridor) and problem.f.A is None):
        n = problem.dim
        return ReferenceSolution.analytic_box(-np.ones(n), np.ones(n), 0.0,
                                              description="unit box")
    return None


def compute_reference(problem, x0=None, t=None, tol=1e-12, max_iter=500000,
                      inner_tol=1e-12):
    """High-accuracy solve pinning x*, phi* and the achieved |G_t(x*)|."""
    x0 = np.zeros(problem.dim) if x0 is None else as_vector(x0, problem.dim)
    if isinstance(problem, AdditiveProblem):
        cfg = ProxGradConfig(t=t, max_iter=max_iter, eps=tol)
        trace = run_prox_gradient(problem, x0, cfg)
    elif isinstance(problem, CompositeProblem):
        cfg = ProxLinearConfig(t0=t, max_iter=max_iter, eps=tol,
                               inner_tol=inner_tol)
        trace = run_prox_linear(problem, x0, cfg)
    else:
        raise TypeError(f"unknown problem type {type(problem).__name__}")
    x_star = trace.final_x
    return ReferenceSolution.computed(x_star, problem.phi(x_star),
                                      accuracy=trace.column("gnorm")[-1])


# ---------------------------------------------------------------------------
# Stationarity distance dist(0, d phi(x))
# ---------------------------------------------------------------------------

def dist_to_stationarity(problem, x):
    """Distance from 0 to the subdifferential of the objective at x.

    Additive: exact coordinatewise interval projection of -grad f(x) onto
    d g(x). Composite: min |v + J^T w| over v in d g(x), w in d h(c(x)),
    solved by projected gradient on the box product (an upper bound on the
    true distance, exact at convergence since the problem is convex).
    """
    x = as_vector(x, problem.dim)
    if isinstance(problem, AdditiveProblem):
        lo, hi = problem.g.subgrad_bounds(x)
        target = -problem.f.grad(x)
        under = np.maximum(lo - target, 0.0)
        over = np.maximum(target - hi, 0.0)
        return float(np.linalg.norm(np.where(target < lo, under, over)))
    if isinstance(problem, CompositeProblem):
        glo, ghi = problem.g.subgrad_bounds(x)
        cx, J = problem.c.eval_jac(x)
        hlo, hhi = problem.h.subgrad_bounds(cx)
        step = 1.0 / (1.0 + operator_norm_sq(J))
        dist, _ = K.minnorm_boxqp(np.ascontiguousarray(J), glo, ghi, hlo, hhi,
                                  step, BOXQP_TOL, BOXQP_CAP)
        return dist
    raise TypeError(f"unknown problem type {type(problem).__name__}")


# ---------------------------------------------------------------------------
# Seeded sublevel-set sampling
# ---------------------------------------------------------------------------

def sample_box(ref, dim, n_samples, seed, radius_scale=5.0):
    """Uniform samples on the box of radius radius_scale*(1+|center|_inf)."""
    center = ref.center()
    if center.shape[0] != dim:
        raise DomainError("reference dimension mismatch")
    radius = radius_scale * (1.0 + float(np.max(np.abs(center))))
    rng = np.random.default_rng(int(seed))
    return center + rng.uniform(-radius, radius, size=(n_samples, dim))


def _phi_batch(problem, X):
    if isinstance(problem, AdditiveProblem):
        return problem.phi_batch(X)
    return np.array([problem.phi(x) for x in X])


def _gnorm_batch(problem, X, t, inner_tol):
    if isinstance(problem, AdditiveProblem):
        V = X - t * problem.f.grad_batch(X)
        P = problem.g.prox_batch(V, t)
        return np.linalg.norm(X - P, axis=1) / t
    return np.array([np.linalg.norm(prox_linear_map(problem, x, t, inner_tol))
                     for x in X])


def _gaps(problem, X, phi_star, tilt):
    phis = _phi_batch(problem, X)
    if tilt is not None:
        phis = phis - X @ tilt
    return phis - phi_star


def _accepted(problem, ref, nu, X, tilt, shrink_rounds=80):
    """Sublevel-set realization of the box samples.

    Samples above the nu level are pulled radially toward the reference
    center: for convex phi, gap(s*d) <= s*gap(d), so a single proportional
    scaling lands inside; the loop covers nonconvex and infinite-valued
    cases. Plain rejection starves on instances whose sublevel set is tiny
    relative to the fixed sampling box.
    """
    center = ref.center()
    gaps = _gaps(problem, X, ref.phi_star, tilt)
    if not math.isinf(nu):
        X = X.copy()
        for _ in range(shrink_rounds):
            bad = ~(gaps <= nu)
            if not np.any(bad):
                break
            scale = np.full(int(np.sum(bad)), 0.7)
            finite = np.isfinite(gaps[bad])
            scale[finite] = np.minimum(0.7, 0.99 * nu / gaps[bad][finite])
            X[bad] = center + scale[:, None] * (X[bad] - center)
            gaps[bad] = _gaps(problem, X[bad], ref.phi_star, tilt)
    keep = np.isfinite(gaps) & (gaps <= nu)
    return X[keep], gaps[keep]


def estimate_alpha(problem, ref, nu, n_samples=10000, seed=0, tilt=None,
                   extra_points=None):
    """Empirical quadratic-growth constant on the nu-sublevel set.

    alpha_hat = min over accepted samples of 2 (phi(x) - phi*) / dist(x,S)^2;
    samples closer than 1e-8 to S are skipped. With a tilt vector v the
    values phi(x) - <v, x> are used and ref must describe the tilted
    problem's minimizer. extra_points are appended to the box samples and go
    through the same sublevel acceptance.
    """
    X = sample_box(ref, problem.dim, n_samples, seed)
    if extra_points is not None and len(extra_points):
        X = np.vstack([X, extra_points])
    Xa, gaps = _accepted(problem, ref, nu, X, tilt)
    dists = ref.dist_batch(Xa)
    mask = dists > DIST_SKIP
    if int(np.sum(mask)) < MIN_ACCEPTED:
        raise InsufficientData(
            f"only {int(np.sum(mask))} accepted samples for alpha")
    ratios = 2.0 * gaps[mask] / dists[mask] ** 2
    return float(np.min(ratios))


def estimate_gamma(problem, ref, nu, t, n_samples=10000, seed=0,
                   inner_tol=1e-10, extra_points=None):
    """Empirical error-bound constant: max of dist(x,S)/|G_t(x)| on the
    nu-sublevel set, skipping samples with |G_t(x)| <= 1e-10."""
    X = sample_box(ref, problem.dim, n_samples, seed)
    if extra_points is not None and len(extra_points):
        X = np.vstack([X, extra_points])
    Xa, _ = _accepted(problem, ref, nu, X, None)
    if Xa.shape[0] == 0:
        raise InsufficientData("no samples accepted for gamma")
    gnorms = _gnorm_batch(problem, Xa, t, inner_tol)
    dists = ref.dist_batch(Xa)
    mask = gnorms > GNORM_SKIP
    if int(np.sum(mask)) < MIN_ACCEPTED:
        raise InsufficientData(
            f"only {int(np.sum(mask))} accepted samples for gamma")
    return float(np.max(dists[mask] / gnorms[mask]))


def _refine_extremal_rays(problem, ref, nu, t, seed, inner_tol,
                          rounds=60, pool=48, restarts=2):
    """Seeded hill-climb over ray directions for the two extremal ratios.

    Random box directions rarely align with the eigen-directions where the
    growth minimum and error-bound maximum are attained, so the bundled
    estimator sharpens them with a local search (restarted, with radial
    line probes along every best direction found). Every probe is pulled
    into the sublevel set first, so the returned points are valid samples
    and only tighten the min/max estimates.
    """
    rng = np.random.default_rng(int(seed) + 977)
    center = ref.center()
    dim = problem.dim
    radius = 5.0 * (1.0 + float(np.max(np.abs(center)))) * np.sqrt(dim)

    def scores(X, want_gamma):
        dists = ref.dist_batch(X)
        if want_gamma:
            gn = _gnorm_batch(problem, X, t, inner_tol)
            good = (gn > GNORM_SKIP) & (dists > DIST_SKIP)
            return np.where(good, dists / np.maximum(gn, GNORM_SKIP), -np.inf)
        gaps = _gaps(problem, X, ref.phi_star, None)
        good = dists > DIST_SKIP
        return np.where(good, -2.0 * gaps / np.maximum(dists, DIST_SKIP) ** 2,
                        -np.inf)

    collected = []
    best_dirs = []

    def climb(want_gamma, X0):
        X0, _ = _accepted(problem, ref, nu, X0, None)
        if X0.shape[0] == 0:
            return None
        collected.append(X0)
        s0 = scores(X0, want_gamma)
        if not np.any(np.isfinite(s0)):
            return None
        best = float(np.max(s0))
        d = X0[int(np.argmax(s0))] - center
        sigma = 1.0
        for _ in range(rounds):
            P = d + sigma * np.linalg.norm(d) * rng.standard_normal((pool, dim))
            C, _ = _accepted(problem, ref, nu, center + P, None)
            if C.shape[0] == 0:
                sigma *= 0.75
                continue
            collected.append(C)
            sc = scores(C, want_gamma)
            top = float(np.max(sc))
            if top > best:
                best = top
                d = C[int(np.argmax(sc))] - center
            else:
                sigma *= 0.75
            if sigma < 1e-7:
                break
        return d

    for want_gamma in (True, False):
        for restart in range(restarts):
            base_seed = int(seed) + 11 * (1 + restart) + (0 if want_gamma else 7)
            X0 = sample_box(ref, dim, 256, base_seed)
            # cross-seed with directions already found: the two extremes
            # usually live on the same ray
            for d in best_dirs:
                nd = np.linalg.norm(d)
                if nd > 0:
                    X0 = np.vstack([X0, center + radius * d / nd,
                                    center - radius * d / nd])
            d = climb(want_gamma, X0)
            if d is not None:
                best_dirs.append(d)

    # radial line probes along every best direction, both signs
    for d in best_dirs:
        nd = np.linalg.norm(d)
        if nd == 0:
            continue
        u = d / nd
        radii = np.geomspace(1e-2, radius, 40)
        line = center + np.concatenate([radii, -radii])[:, None] * u
        L, _ = _accepted(problem, ref, nu, line, None)
        if L.shape[0]:
            collected.append(L)

    if not collected:
        return np.empty((0, dim))
    return np.vstack(collected)


def estimate_subdiff_bound(problem, ref, nu, n_samples=2000, seed=0,
                           extra_points=None):
    """Empirical L with dist(x,S) <= L dist(0, d phi(x)) on the sublevel set."""
    X = sample_box(ref, problem.dim, n_samples, seed)
    if extra_points is not None and len(extra_points):
        X = np.vstack([X, extra_points])
    Xa, _ = _accepted(problem, ref, nu, X, None)
    dists = ref.dist_batch(Xa)
    ratios = []
    for x, d in zip(Xa, dists):
        s = dist_to_stationarity(problem, x)
        if s > GNORM_SKIP:
            ratios.append(d / s)
    if len(ratios) < MIN_ACCEPTED:
        raise InsufficientData(f"only {len(ratios)} accepted samples for L")
    return float(np.max(ratios))


def _prox_bound_samples(problem, ref, nu, t, n_samples, seed, inner_tol):
    if not (isinstance(problem, AdditiveProblem) and problem.f_convex):
        raise UnsupportedOperation("prox_{t phi} oracle needs convex f + g")
    X = sample_box(ref, problem.dim, n_samples, seed)
    Xa, _ = _accepted(problem, ref, nu, X, None)
    if Xa.shape[0] < MIN_ACCEPTED:
        raise InsufficientData(f"only {Xa.shape[0]} accepted samples for L-hat")
    P = _prox_point_batch(problem, Xa, t, inner_tol)
    steps = np.linalg.norm(Xa - P, axis=1) / t
    dists = ref.dist_batch(Xa)
    mask = steps > GNORM_SKIP
    if int(np.sum(mask)) < MIN_ACCEPTED:
        raise InsufficientData("too few samples with nonzero prox-point step")
    return float(np.max(dists[mask] / steps[mask])), P


def estimate_prox_bound(problem, ref, nu, t, n_samples=500, seed=0,
                        inner_tol=1e-10):
    """Empirical L-hat with dist(x,S) <= L-hat |x - prox_{t phi}(x)|/t.

    Needs the prox_{t phi} oracle, so only convex additive problems are
    supported.
    """
    value, _ = _prox_bound_samples(problem, ref, nu, t, n_samples, seed,
                                   inner_tol)
    return value


# ---------------------------------------------------------------------------
# Constant-translation formulas and reports
# ---------------------------------------------------------------------------

@dataclass
class ConstantsReport:
    """Measured constants plus the relation checks that tie them together."""

    alpha_hat: float
    gamma_hat: float
    L_hat_sub: float
    nu: float
    sample_count: int
    extras: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def to_text(self):
        lines = [f"alpha_hat={self.alpha_hat:.17g}",
                 f"gamma_hat={self.gamma_hat:.17g}",
                 f"L_hat_sub={self.L_hat_sub:.17g}",
                 f"nu={self.nu:.17g}",
                 f"sample_count={self.sample_count}"]
        for key in sorted(self.extras):
            val = self.extras[key]
            lines.append(f"{key}={val:.17g}" if isinstance(val, float)
                         else f"{key}={val}")
        for name in sorted(self.checks):
            ok, slack = self.checks[name]
            lines.append(f"check_{name}={'pass' if ok else 'fail'}"
                         f" slack={slack:.17g}")
        return "\n".join(lines) + "\n"

    def csv_header(self):
        return "alpha_hat,gamma_hat,L_hat_sub,nu,sample_count"

    def to_csv_row(self):
        return (f"{self.alpha_hat:.17g},{self.gamma_hat:.17g},"
                f"{self.L_hat_sub:.17g},{self.nu:.17g},{self.sample_count}")


def verify_constant_relations(alpha, gamma, L, L_hat, t, beta, tol=1e-3):
    """Boolean checks of the constant-translation formulas.

    gamma <= (2/alpha + t)(1 + beta t), L-hat <= L + t, L <= 2/alpha, and
    the converse growth direction alpha >= (1 - tol)/gamma; slacks are the
    inequality margins (nonnegative means pass). tol is multiplicative.
    """
    if alpha <= 0 or gamma <= 0 or L <= 0 or t <= 0 or beta < 0:
        raise ValueError("constant relations need positive measured inputs")
    checks = {}

    def add(name, bound, value):
        slack = bound * (1.0 + tol) - value
        checks[name] = (slack >= 0.0, slack)

    add("gamma_vs_alpha", (2.0 / alpha + t) * (1.0 + beta * t), gamma)
    if L_hat is not None:
        add("prox_vs_subdiff", L + t, L_hat)
    add("subdiff_vs_alpha", 2.0 / alpha, L)
    slack = alpha - (1.0 - tol) / gamma
    checks["alpha_vs_gamma"] = (slack >= 0.0, slack)
    return checks


def estimate_constants(problem, ref, nu, t, n_samples=10000, seed=0,
                       inner_tol=1e-10, with_prox_bound=None, tol=1e-3,
                       refine=True):
    """Bundle the constant estimators into one report.

    For additive problems the shared sample set is sharpened by a seeded
    ray search toward the extremal directions (refine=True); alpha and
    gamma are then taken over the union of box samples and probes.
    with_prox_bound defaults to True exactly when the prox_{t phi} oracle
    is available (convex additive problems).
    """
    is_additive = isinstance(problem, AdditiveProblem)
    composite_samples = min(n_samples, 500)
    extra = None
    if refine and is_additive:
        extra = _refine_extremal_rays(problem, ref, nu, t, seed, inner_tol)
    alpha = estimate_alpha(problem, ref, nu, n_samples=n_samples, seed=seed,
                           extra_points=extra)
    gamma = estimate_gamma(
        problem, ref, nu, t,
        n_samples=n_samples if is_additive else composite_samples,
        seed=seed, inner_tol=inner_tol, extra_points=extra)
    if with_prox_bound is None:
        with_prox_bound = is_additive and problem.f_convex
    L_hat = None
    L_extra = extra
    if with_prox_bound:
        # the L-hat <= L + t chain evaluates the subdifferential ratio at
        # the prox points, so fold those into the L sample set
        L_hat, prox_pts = _prox_bound_samples(
            problem, ref, nu, t, min(n_samples, 500), seed, inner_tol)
        L_extra = (prox_pts if L_extra is None
                   else np.vstack([L_extra, prox_pts]))
    L = estimate_subdiff_bound(
        problem, ref, nu, n_samples=min(n_samples, 2000), seed=seed,
        extra_points=L_extra)
    beta = problem.f.beta if is_additive else problem.beta
    report = ConstantsReport(alpha_hat=alpha, gamma_hat=gamma, L_hat_sub=L,
                             nu=nu, sample_count=n_samples)
    if L_hat is not None:
        report.extras["L_hat_prox"] = L_hat
    report.extras["t"] = float(t)
    report.extras["beta"] = float(beta)
    report.checks = verify_constant_relations(alpha, gamma, L, L_hat, t, beta,
                                              tol=tol)
    return report


# ---------------------------------------------------------------------------
# Step-length sandwich, iteration bound, tail rate
# ---------------------------------------------------------------------------

@dataclass
class SandwichReport:
    """Per-point slacks of (1-bt)|G| <= |x - prox_{t phi}(x)|/t <= (1+bt)|G|."""

    lower_slack: np.ndarray
    upper_slack: np.ndarray
    prox_step_norms: np.ndarray
    gnorms: np.ndarray

    @property
    def min_lower_slack(self):
        return float(np.min(self.lower_slack))

    @property
    def min_upper_slack(self):
        return float(np.min(self.upper_slack))


def verify_sandwich(problem, t, points, inner_tol=1e-10):
    """Evaluate the step-length comparison band at the given points.

    Requires convex f (the prox-point oracle); at t = 1/beta the lower
    bound degenerates to zero and is still checked.
    """
    if not (isinstance(problem, AdditiveProblem) and problem.f_convex):
        raise UnsupportedOperation("step-length comparison needs convex f + g")
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    gnorms = _gnorm_batch(problem, X, t, inner_tol)
    P = _prox_point_batch(problem, X, t, inner_tol)
    pp = np.linalg.norm(X - P, axis=1) / t
    bt = problem.f.beta * t
    lower = pp - (1.0 - bt) * gnorms
    upper = (1.0 + bt) * gnorms - pp
    return SandwichReport(lower_slack=lower, upper_slack=upper,
                          prox_step_norms=pp, gnorms=gnorms)


def iteration_bound(beta, nu, gamma, dist0_sq, gap0, eps):
    """Iteration-complexity bound beta/(2 nu) dist0^2 + 2 beta gamma ln(gap0/eps).

    Returns 0 when the initial gap is already within eps; an infinite nu
    drops the burn-in term.
    """
    if gap0 <= eps:
        return 0.0
    first = 0.0 if math.isinf(nu) else beta * dist0_sq / (2.0 * nu)
    return first + 2.0 * beta * gamma * math.log(gap0 / eps)


def fit_tail_rate(trace, phi_star, tail_fraction=0.5):
    """Geometric rate fitted to the trailing objective gaps.

    Least-squares slope of ln(phi(x_k) - phi*) over the trailing
    tail_fraction of iterations, returned as exp(slope). Raises
    InsufficientData when fewer than 10 tail points have gap > 1e-14 or the
    fitted rate is not below 1 (flat tail carries no rate information).
    """
    if hasattr(trace, "column"):
        phis = trace.column("phi")
    else:
        phis = np.asarray(trace, dtype=np.float64)
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    gaps = phis - phi_star
    n_tail = max(int(math.ceil(tail_fraction * len(gaps))), 1)
    ks = np.arange(len(gaps))[-n_tail:]
    tail = gaps[-n_tail:]
    mask = tail > 1e-14
    if int(np.sum(mask)) < 10:
        raise InsufficientData(
            f"only {int(np.sum(mask))} tail gaps above 1e-14")
    slope = np.polyfit(ks[mask], np.log(tail[mask]), 1)[0]
    rate = float(np.exp(slope))
    if rate >= 1.0 - 1e-12:
        raise InsufficientData(f"tail is not decreasing (fitted rate {rate:g})")
    return rate
