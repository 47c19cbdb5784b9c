"""Proximal gradient method for f + g and a proximal-point step oracle.

The prox-gradient mapping G_t(x) = (x - prox_{tg}(x - t grad f(x))) / t is the
optimality surrogate: it vanishes exactly at stationary points, and for
t <= 1/beta each step decreases the objective by at least |G_t|^2 / (2 beta).
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InnerSolveError, UnsupportedOperation
from .penalties import SeparablePenalty
from .smooth import SmoothFunction
from .vectors import as_vector

INNER_CAP = 10 ** 6


@dataclass(frozen=True)
class AdditiveProblem:
    """Instance of min_x f(x) + g(x) with f smooth and g separable convex."""

    f: SmoothFunction
    g: SeparablePenalty
    f_convex: bool = True

    @property
    def dim(self):
        return self.f.dim

    def phi(self, x):
        return self.f.value(x) + self.g.value(x)

    def phi_batch(self, X):
        return self.f.value_batch(X) + self.g.value_batch(X)


@dataclass(frozen=True)
class ProxGradConfig:
    """Solver knobs; t defaults to 1/beta when left unset."""

    t: float = None
    max_iter: int = 20000
    eps: float = 1e-10
    record_certificates: bool = True

    def __post_init__(self):
        if self.t is not None and self.t <= 0:
            raise ValueError("step t must be positive")
        if self.max_iter <= 0 or self.eps <= 0:
            raise ValueError("max_iter and eps must be positive")


class IterationTrace:
    """Per-iteration solver record consumed by diagnostics and the CLI.

    One row per visited iterate; the residual columns describe the step
    leaving that iterate (zero on the terminal row). Objective values are
    nonincreasing up to roundoff.
    """

    def __init__(self, header):
        self.header = tuple(header)
        self.data = {name: [] for name in self.header}
        self.iterates = []
        self.status = "MaxIter"
        self.final_x = None
        self.meta = {}

    def append(self, **row):
        for name in self.header:
            self.data[name].append(float(row[name]))

    def column(self, name):
        return np.asarray(self.data[name])

    def __len__(self):
        return len(self.data["k"])

    @property
    def iterations(self):
        """Number of steps taken (terminal row excluded)."""
        return len(self) - 1

    def to_csv(self, zero_elapsed=False):
        lines = [",".join(self.header)]
        for i in range(len(self)):
            vals = []
            for name in self.header:
                v = self.data[name][i]
                if name == "elapsed_s" and zero_elapsed:
                    v = 0.0
                if name in ("k", "backtracks"):
                    vals.append(str(int(v)))
                else:
                    vals.append(f"{v:.17g}")
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def write_csv(self, path, zero_elapsed=False):
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_csv(zero_elapsed=zero_elapsed))


PROXGRAD_HEADER = ("k", "phi", "gnorm", "descent_residual", "certificate",
                   "elapsed_s")


def _effective_step(problem, cfg):
    t = cfg.t if cfg.t is not None else 1.0 / problem.f.beta
    tmax = 1.0 / problem.f.beta
    if t > tmax:
        warnings.warn(
            f"step t={t:g} exceeds 1/beta={tmax:g}; clamping", stacklevel=3)
        t = tmax
    return t


def prox_grad_map(problem, x, t):
    """G_t(x); zero exactly at stationary points of f + g."""
    x = as_vector(x, problem.dim)
    if not problem.g.in_domain(x):
        raise DomainError("x lies outside dom g")
    step = problem.g.prox(x - t * problem.f.grad(x), t)
    return (x - step) / t


def run_prox_gradient(problem, x0, cfg=None):
    """Iterate x_{k+1} = prox_{tg}(x_k - t grad f(x_k)) until |G_t| <= eps.

    The trace records, per iteration, the descent-inequality residual
    phi(x_k) - phi(x_{k+1}) - |G_t(x_k)|^2/(2 beta)  (nonnegative up to
    roundoff whenever t <= 1/beta) and the stationarity certificate
    (1 + beta t)|G_t(x_k)|.
    """
    cfg = cfg or ProxGradConfig()
    x = as_vector(x0, problem.dim).copy()
    if not problem.g.in_domain(x):
        raise DomainError("x0 lies outside dom g")
    t = _effective_step(problem, cfg)
    beta = problem.f.beta
    trace = IterationTrace(PROXGRAD_HEADER)
    trace.meta = {"t": t, "beta": beta}
    start = time.perf_counter()
    phi_x = problem.phi(x)
    for k in range(cfg.max_iter + 1):
        y = problem.g.prox(x - t * problem.f.grad(x), t)
        G = (x - y) / t
        gnorm = float(np.linalg.norm(G))
        cert = (1.0 + beta * t) * gnorm if cfg.record_certificates else 0.0
        trace.iterates.append(x.copy())
        if gnorm <= cfg.eps:
            trace.append(k=k, phi=phi_x, gnorm=gnorm, descent_residual=0.0,
                         certificate=cert,
                         elapsed_s=time.perf_counter() - start)
            trace.status = "Converged"
            break
        if k == cfg.max_iter:
            trace.append(k=k, phi=phi_x, gnorm=gnorm, descent_residual=0.0,
                         certificate=cert,
                         elapsed_s=time.perf_counter() - start)
            trace.status = "MaxIter"
            break
        phi_y = problem.phi(y)
        resid = phi_x - phi_y - gnorm * gnorm / (2.0 * beta)
        trace.append(k=k, phi=phi_x, gnorm=gnorm, descent_residual=resid,
                     certificate=cert, elapsed_s=time.perf_counter() - start)
        x = y
        phi_x = phi_y
    trace.final_x = x
    return trace


def proximal_point_step(problem, x, t, inner_tol=1e-10):
    """High-accuracy prox_{t phi}(x) for convex phi = f + g.

    Solves min_y phi(y) + |y - x|^2/(2t) by prox-gradient on the smooth part
    f + |.-x|^2/(2t) with step 1/(beta + 1/t); the auxiliary problem is
    (1/t)-strongly convex so the loop is finite and fast. The output y
    satisfies |G_s(y)| <= inner_tol for the auxiliary problem.
    """
    if not problem.f_convex:
        raise UnsupportedOperation("prox_{t phi} needs convex f")
    x = as_vector(x, problem.dim)
    return _prox_point_batch(problem, x[None, :], t, inner_tol)[0]


def _prox_point_batch(problem, X, t, inner_tol):
    """Vectorized proximal-point steps, one per row of X."""
    t = float(t)
    s = 1.0 / (problem.f.beta + 1.0 / t)
    Y = np.array(X, dtype=np.float64)
    for it in range(INNER_CAP):
        grad = problem.f.grad_batch(Y) + (Y - X) / t
        Ynew = problem.g.prox_batch(Y - s * grad, s)
        res = np.linalg.norm(Ynew - Y, axis=1) / s
        Y = Ynew
        if np.max(res) <= inner_tol:
            return Y
    raise InnerSolveError("proximal point inner loop hit its cap",
                          residual=float(np.max(res)), iterations=INNER_CAP)


def run_proximal_point(problem, x0, cfg=None):
    """Proximal point algorithm z_{k+1} = prox_{t phi}(z_k) (oracle runner).

    The gnorm column holds |z_k - z_{k+1}|/t, which is a subgradient of phi
    at z_{k+1}; the certificate column repeats it. Requires convex f.
    """
    cfg = cfg or ProxGradConfig()
    if not problem.f_convex:
        raise UnsupportedOperation("proximal point oracle needs convex f")
    x = as_vector(x0, problem.dim).copy()
    t = cfg.t if cfg.t is not None else 1.0 / problem.f.beta
    inner_tol = min(cfg.eps * 1e-2, 1e-10)
    trace = IterationTrace(PROXGRAD_HEADER)
    trace.meta = {"t": t, "beta": problem.f.beta}
    start = time.perf_counter()
    phi_x = problem.phi(x)
    for k in range(cfg.max_iter + 1):
        y = proximal_point_step(problem, x, t, inner_tol)
        pnorm = float(np.linalg.norm(x - y)) / t
        trace.iterates.append(x.copy())
        if pnorm <= cfg.eps or k == cfg.max_iter:
            trace.append(k=k, phi=phi_x, gnorm=pnorm, descent_residual=0.0,
                         certificate=pnorm,
                         elapsed_s=time.perf_counter() - start)
            trace.status = "Converged" if pnorm <= cfg.eps else "MaxIter"
            break
        phi_y = problem.phi(y)
        resid = phi_x - phi_y - t * pnorm * pnorm / 2.0
        trace.append(k=k, phi=phi_x, gnorm=pnorm, descent_residual=resid,
                     certificate=pnorm, elapsed_s=time.perf_counter() - start)
        x = y
        phi_x = phi_y
    trace.final_x = x
    return trace
