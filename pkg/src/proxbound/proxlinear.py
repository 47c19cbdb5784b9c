"""Prox-linear method for g + h(c(x)) with h convex finite and c smooth.

Each outer step minimizes the convex model
    g(y) + h(c(x) + J(x)(y - x)) + |y - x|^2 / (2t)
whose solution is recovered from a box-constrained dual (see
solve_subproblem), then backtracks t until the accepted step decreases the
true objective by at least (sigma/2)|G_t(x)|^2.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DomainError, InnerSolveError
from .penalties import (AbsValue, CheckFunction, EpsilonInsensitive,
                        HuberEnvelope, SeparablePenalty)
from .proxgrad import INNER_CAP, IterationTrace
from .smooth import SmoothMap, operator_norm_sq
from .vectors import as_vector

FINITE_H_KINDS = (AbsValue, EpsilonInsensitive, CheckFunction, HuberEnvelope)

PROXLINEAR_HEADER = ("k", "phi", "gnorm", "t_accepted", "backtracks",
                     "decrease_residual", "certificate", "certificate_sharp",
                     "elapsed_s")


@dataclass(frozen=True)
class CompositeProblem:
    """Instance of min_x g(x) + h(c(x)).

    h must be one of the finite-valued Lipschitz kinds; L defaults to the
    analytic Lipschitz constant of h on R^m and beta to the declared
    Jacobian modulus of c.
    """

    g: SeparablePenalty
    h: SeparablePenalty
    c: SmoothMap
    L: float = None
    beta: float = None

    def __post_init__(self):
        if not isinstance(self.h, FINITE_H_KINDS):
            raise TypeError(
                f"h must be a finite Lipschitz penalty, got {type(self.h).__name__}")
        if self.L is None:
            object.__setattr__(self, "L", self.h.lipschitz_bound(self.c.dim_out))
        if self.beta is None:
            object.__setattr__(self, "beta", float(self.c.jac_beta))

    @property
    def dim(self):
        return self.c.dim_in

    def phi(self, x):
        x = as_vector(x, self.dim)
        return self.g.value(x) + self.h.value(self.c.value(x))


def linearized_value(problem, x, y):
    """Value of the model g(y) + h(c(x) + J(x)(y - x)); exact at y = x."""
    x = as_vector(x, problem.dim)
    y = as_vector(y, problem.dim)
    gy = problem.g.value(y)
    if not np.isfinite(gy):
        raise DomainError("y lies outside dom g")
    cx, J = problem.c.eval_jac(x)
    return gy + problem.h.value(cx + J @ (y - x))


def _subproblem_pieces(problem, x, t):
    x = as_vector(x, problem.dim)
    cx, J = problem.c.eval_jac(x)
    n = problem.dim
    m = problem.c.dim_out
    gkind, gp1, gp2 = problem.g._packed(n)
    hkind, hp1, hp2 = problem.h._packed(m)
    hlo, hhi, hl1, hquad = problem.h.dual_box(m)
    jn2 = operator_norm_sq(J)
    # dual smooth part has curvature t|J|^2 plus the huber quadratic term
    step = 1.0 / (t * jn2 + max(1.0, float(np.max(hquad)) if m else 1.0))
    return (x, cx, J, (gkind, gp1, gp2), (hkind, hp1, hp2),
            (hlo, hhi, hl1, hquad), step)


def solve_subproblem(problem, x, t, inner_tol=1e-10):
    """Minimizer of the proximal model at base point x with step t.

    The model is solved through its Fenchel dual in w (a box, plus an l1
    term for the vapnik penalty and a quadratic for the huber envelope) by
    projected gradient ascent with step 1/(t|J|^2 + 1); the primal point is
    recovered as y = prox_{tg}(x - t J^T w). Terminates once the dual
    fixed-point residual drops to inner_tol and the model value at y does
    not exceed phi(x) (y = x is feasible with exactly that value).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    (x, cx, J, gpack, hpack, hdual, step) = _subproblem_pieces(problem, x, t)
    fx = problem.phi(x)
    fslack = 1e-12 * (1.0 + abs(fx))
    y, _, resid, iters, ok = K.dual_ascent(
        gpack[0], gpack[1], gpack[2], hpack[0], hpack[1], hpack[2],
        hdual[0], hdual[1], hdual[2], hdual[3],
        np.ascontiguousarray(J), np.ascontiguousarray(cx), x,
        float(t), float(step), float(inner_tol), float(fx), float(fslack),
        INNER_CAP)
    if not ok:
        raise InnerSolveError(
            f"subproblem dual ascent stalled at residual {resid:.3e}",
            residual=resid, iterations=iters)
    return y


def prox_linear_map(problem, x, t, inner_tol=1e-10):
    """G_t(x) = (x - x^t)/t; zero exactly at stationary points."""
    x = as_vector(x, problem.dim)
    y = solve_subproblem(problem, x, t, inner_tol)
    return (x - y) / t


def near_stationarity_certificate(problem, gnorm, t):
    """(3 L beta t + 2) |G_t(x)|: a bound on the stationarity measure of a
    point within |x^t - x| of x^t. Justifies terminating on short steps."""
    if gnorm < 0 or t <= 0:
        raise ValueError("gnorm must be nonnegative and t positive")
    return (3.0 * problem.L * problem.beta * t + 2.0) * gnorm


def sharp_certificate_additive(beta, gnorm, t):
    """(1 + beta t) |G_t(x)|: the tighter additive-case bound, valid at x^t."""
    return (1.0 + beta * t) * gnorm


@dataclass(frozen=True)
class ProxLinearConfig:
    """Algorithm knobs: initial step, backtracking factor, tolerances.

    sigma=None selects the adaptive policy sigma = t (acceptance test
    phi(x^t) <= phi(x) - (t/2)|G_t|^2, guaranteed to pass once
    t <= 1/(L beta)); a float fixes sigma.
    """

    t0: float = None
    q: float = 0.5
    eps: float = 1e-9
    max_iter: int = 1000
    inner_tol: float = 1e-10
    sigma: float = None

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0,1)")
        for name in ("t0", "sigma"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eps <= 0 or self.inner_tol <= 0 or self.max_iter <= 0:
            raise ValueError("eps, inner_tol and max_iter must be positive")


T_UNDERFLOW = 1e-12


def run_prox_linear(problem, x0, cfg=None):
    """Backtracking prox-linear iteration, terminating on |G_t(x_k)| <= eps.

    t is never reset upward between iterations. Each trace row records the
    accepted step, the backtrack count, the decrease residual
    phi(x_k) - phi(x_{k+1}) - (sigma/2)|G_t|^2 and both stationarity
    certificates.
    """
    cfg = cfg or ProxLinearConfig()
    x = as_vector(x0, problem.dim).copy()
    if not problem.g.in_domain(x):
        raise DomainError("x0 lies outside dom g")
    lb = problem.L * problem.beta
    t = cfg.t0 if cfg.t0 is not None else (1.0 / lb if lb > 0 else 1.0)
    trace = IterationTrace(PROXLINEAR_HEADER)
    trace.meta = {"t0": t, "L": problem.L, "beta": problem.beta}
    start = time.perf_counter()
    phi_x = problem.phi(x)
    for k in range(cfg.max_iter + 1):
        y = solve_subproblem(problem, x, t, cfg.inner_tol)
        gnorm = float(np.linalg.norm(x - y)) / t
        trace.iterates.append(x.copy())
        cert = near_stationarity_certificate(problem, gnorm, t)
        cert_sharp = sharp_certificate_additive(problem.beta, gnorm, t)
        if gnorm <= cfg.eps or k == cfg.max_iter:
            trace.append(k=k, phi=phi_x, gnorm=gnorm, t_accepted=t,
                         backtracks=0, decrease_residual=0.0,
                         certificate=cert, certificate_sharp=cert_sharp,
                         elapsed_s=time.perf_counter() - start)
            trace.status = "Converged" if gnorm <= cfg.eps else "MaxIter"
            break
        backtracks = 0
        while True:
            sigma = t if cfg.sigma is None else cfg.sigma
            phi_y = problem.phi(y)
            if phi_y <= phi_x - 0.5 * sigma * gnorm * gnorm:
                break
            t *= cfg.q
            if t < T_UNDERFLOW:
                raise InnerSolveError(
                    "backtracking underflow: step fell below 1e-12",
                    residual=gnorm, iterations=k)
            y = solve_subproblem(problem, x, t, cfg.inner_tol)
            gnorm = float(np.linalg.norm(x - y)) / t
            backtracks += 1
        cert = near_stationarity_certificate(problem, gnorm, t)
        cert_sharp = sharp_certificate_additive(problem.beta, gnorm, t)
        resid = phi_x - phi_y - 0.5 * sigma * gnorm * gnorm
        trace.append(k=k, phi=phi_x, gnorm=gnorm, t_accepted=t,
                     backtracks=backtracks, decrease_residual=resid,
                     certificate=cert, certificate_sharp=cert_sharp,
                     elapsed_s=time.perf_counter() - start)
        x = y
        phi_x = phi_y
    trace.final_x = x
    return trace
