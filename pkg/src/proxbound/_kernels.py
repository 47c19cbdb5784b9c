"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

The backend is fixed once at import time from the ``PROXBOUND_BACKEND``
environment variable:

* ``auto``  (default) - numba when importable, numpy otherwise
* ``numba`` - require numba, fail loudly if missing
* ``numpy`` - force the vectorized numpy path

Both implementations live in this module so the benchmark can time them
against each other regardless of which one is active. Penalties are encoded
as an integer kind plus two per-coordinate parameter arrays; see the table
in :mod:`proxbound.penalties`.
"""

import math
import os

import numpy as np

KIND_ZERO = 0
KIND_ABS = 1
KIND_ENET = 2
KIND_BOX = 3
KIND_EPS = 4
KIND_CHECK = 5
KIND_HUBER = 6

_INF = np.inf


def _select_backend():
    choice = os.environ.get("PROXBOUND_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"PROXBOUND_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


_BACKEND = _select_backend()


def active_backend():
    """Name of the kernel backend selected at import time."""
    return _BACKEND


# ---------------------------------------------------------------------------
# numpy implementations (vectorized over coordinates)
# ---------------------------------------------------------------------------

def penalty_value_np(kind, p1, p2, x):
    if kind == KIND_ZERO:
        return 0.0
    if kind == KIND_ABS:
        return float(np.sum(p1 * np.abs(x)))
    if kind == KIND_ENET:
        return float(np.sum(p1 * np.abs(x) + 0.5 * p2 * x * x))
    if kind == KIND_BOX:
        if np.any(x < p1) or np.any(x > p2):
            return _INF
        return 0.0
    if kind == KIND_EPS:
        return float(np.sum(p1 * np.maximum(np.abs(x) - p2, 0.0)))
    if kind == KIND_CHECK:
        return float(np.sum(p1 * np.maximum(p2 * x, (p2 - 1.0) * x)))
    if kind == KIND_HUBER:
        ax = np.abs(x)
        quad = ax <= p1 * p2
        vals = np.where(quad, x * x / (2.0 * p2), p1 * ax - 0.5 * p1 * p1 * p2)
        return float(np.sum(vals))
    raise ValueError(f"unknown penalty kind code {kind}")


def penalty_prox_np(kind, p1, p2, x, t):
    if kind == KIND_ZERO:
        return x.copy()
    if kind == KIND_ABS:
        thr = t * p1
        return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)
    if kind == KIND_ENET:
        thr = t * p1
        return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0) / (1.0 + t * p2)
    if kind == KIND_BOX:
        return np.minimum(np.maximum(x, p1), p2)
    if kind == KIND_EPS:
        ax = np.abs(x)
        sx = np.sign(x)
        out = np.where(ax <= p2, x, sx * p2)
        far = ax > p2 + t * p1
        return np.where(far, x - t * p1 * sx, out)
    if kind == KIND_CHECK:
        hi = t * p1 * p2
        lo = t * p1 * (p2 - 1.0)
        out = np.zeros_like(x)
        out = np.where(x > hi, x - hi, out)
        return np.where(x < lo, x - lo, out)
    if kind == KIND_HUBER:
        ax = np.abs(x)
        inner = ax <= p1 * (p2 + t)
        return np.where(inner, x * p2 / (p2 + t), x - t * p1 * np.sign(x))
    raise ValueError(f"unknown penalty kind code {kind}")


def penalty_subgrad_np(kind, p1, p2, x):
    n = x.shape[0]
    lo = np.zeros(n)
    hi = np.zeros(n)
    if kind == KIND_ZERO:
        return lo, hi, True
    if kind == KIND_ABS:
        s = np.sign(x)
        lo = np.where(x == 0.0, -p1, s * p1)
        hi = np.where(x == 0.0, p1, s * p1)
        return lo, hi, True
    if kind == KIND_ENET:
        s = np.sign(x)
        lo = np.where(x == 0.0, -p1, s * p1) + p2 * x
        hi = np.where(x == 0.0, p1, s * p1) + p2 * x
        return lo, hi, True
    if kind == KIND_BOX:
        if np.any(x < p1) or np.any(x > p2):
            return lo, hi, False
        lo = np.where(x == p1, -_INF, 0.0)
        hi = np.where(x == p2, _INF, 0.0)
        return lo, hi, True
    if kind == KIND_EPS:
        ax = np.abs(x)
        lo = np.where(x >= p2, p1, np.where(x <= -p2, -p1, 0.0))
        hi = lo.copy()
        lo = np.where(x == p2, 0.0, lo)
        hi = np.where(x == -p2, 0.0, hi)
        lo[ax < p2] = 0.0
        hi[ax < p2] = 0.0
        return lo, hi, True
    if kind == KIND_CHECK:
        up = p1 * p2
        dn = p1 * (p2 - 1.0)
        lo = np.where(x > 0.0, up, np.where(x < 0.0, dn, dn))
        hi = np.where(x > 0.0, up, np.where(x < 0.0, dn, up))
        return lo, hi, True
    if kind == KIND_HUBER:
        g = np.minimum(np.maximum(x / p2, -p1), p1)
        return g, g.copy(), True
    raise ValueError(f"unknown penalty kind code {kind}")


def dual_ascent_np(gkind, gp1, gp2, hkind, hp1, hp2, hlo, hhi, hl1, hquad,
                   J, cbar, x, t, step, tol, fx, fslack, maxit):
    """Forward-backward ascent on the dual of the linearized subproblem.

    Maximizes  <w, cbar> - h*(w) + min_y { g(y) + <J^T w, y-x> + |y-x|^2/2t }
    over the box [hlo, hhi], with the extra dual terms hl1*|w|_1 (vapnik) and
    hquad*|w|^2/2 (huber envelope). Primal recovery y = prox_{tg}(x - t J^T w).
    Returns (y, w, residual, iterations, converged).
    """
    m = cbar.shape[0]
    w = np.zeros(m)
    y = x.copy()
    resid = _INF
    it = 0
    for it in range(1, maxit + 1):
        v = x - t * (w @ J)
        y = penalty_prox_np(gkind, gp1, gp2, v, t)
        d = y - x
        z = cbar + J @ d
        fy = (penalty_value_np(gkind, gp1, gp2, y)
              + penalty_value_np(hkind, hp1, hp2, z)
              + (d @ d) / (2.0 * t))
        grad = z - hquad * w
        wh = w + step * grad
        wnew = np.sign(wh) * np.maximum(np.abs(wh) - step * hl1, 0.0)
        wnew = np.minimum(np.maximum(wnew, hlo), hhi)
        resid = float(np.linalg.norm(wnew - w)) / step
        if resid <= tol and fy <= fx + fslack:
            return y, w, resid, it, True
        w = wnew
    return y, w, resid, it, False


def minnorm_boxqp_np(J, vlo, vhi, wlo, whi, step, tol, maxit):
    """Minimize |v + J^T w| over the box product via projected gradient.

    Returns (achieved norm, iterations); the norm upper-bounds the true
    distance and is exact at convergence since the problem is convex.
    """
    n = vlo.shape[0]
    v = np.minimum(np.maximum(np.zeros(n), vlo), vhi)
    w = np.minimum(np.maximum(np.zeros(J.shape[0]), wlo), whi)
    it = 0
    for it in range(1, maxit + 1):
        r = v + w @ J
        vn = np.minimum(np.maximum(v - step * r, vlo), vhi)
        wn = np.minimum(np.maximum(w - step * (J @ r), wlo), whi)
        move = math.sqrt(float(np.sum((vn - v) ** 2) + np.sum((wn - w) ** 2)))
        v, w = vn, wn
        if move / step <= tol:
            break
    return float(np.linalg.norm(v + w @ J)), it


# ---------------------------------------------------------------------------
# numba implementations (explicit loops)
# ---------------------------------------------------------------------------

try:
    import numba as _nb
except ImportError:  # pragma: no cover - exercised via PROXBOUND_BACKEND=numpy
    _nb = None

if _nb is not None:

    @_nb.njit(cache=True)
    def _value_nb(kind, p1, p2, x):
        total = 0.0
        for i in range(x.shape[0]):
            xi = x[i]
            if kind == KIND_ZERO:
                pass
            elif kind == KIND_ABS:
                total += p1[i] * abs(xi)
            elif kind == KIND_ENET:
                total += p1[i] * abs(xi) + 0.5 * p2[i] * xi * xi
            elif kind == KIND_BOX:
                if xi < p1[i] or xi > p2[i]:
                    return _INF
            elif kind == KIND_EPS:
                total += p1[i] * max(abs(xi) - p2[i], 0.0)
            elif kind == KIND_CHECK:
                total += p1[i] * max(p2[i] * xi, (p2[i] - 1.0) * xi)
            elif kind == KIND_HUBER:
                if abs(xi) <= p1[i] * p2[i]:
                    total += xi * xi / (2.0 * p2[i])
                else:
                    total += p1[i] * abs(xi) - 0.5 * p1[i] * p1[i] * p2[i]
        return total

    @_nb.njit(cache=True)
    def _prox_nb(kind, p1, p2, x, t):
        n = x.shape[0]
        out = np.empty(n)
        for i in range(n):
            xi = x[i]
            if kind == KIND_ZERO:
                out[i] = xi
            elif kind == KIND_ABS:
                thr = t * p1[i]
                if abs(xi) <= thr:
                    out[i] = 0.0
                else:
                    out[i] = xi - thr if xi > 0.0 else xi + thr
            elif kind == KIND_ENET:
                thr = t * p1[i]
                if abs(xi) <= thr:
                    out[i] = 0.0
                else:
                    s = xi - thr if xi > 0.0 else xi + thr
                    out[i] = s / (1.0 + t * p2[i])
            elif kind == KIND_BOX:
                out[i] = min(max(xi, p1[i]), p2[i])
            elif kind == KIND_EPS:
                eps = p2[i]
                thr = t * p1[i]
                axi = abs(xi)
                if axi <= eps:
                    out[i] = xi
                elif axi <= eps + thr:
                    out[i] = eps if xi > 0.0 else -eps
                else:
                    out[i] = xi - thr if xi > 0.0 else xi + thr
            elif kind == KIND_CHECK:
                hi = t * p1[i] * p2[i]
                lo = t * p1[i] * (p2[i] - 1.0)
                if xi > hi:
                    out[i] = xi - hi
                elif xi < lo:
                    out[i] = xi - lo
                else:
                    out[i] = 0.0
            else:  # KIND_HUBER
                lam = p1[i]
                mu = p2[i]
                if abs(xi) <= lam * (mu + t):
                    out[i] = xi * mu / (mu + t)
                else:
                    out[i] = xi - t * lam if xi > 0.0 else xi + t * lam
        return out

    @_nb.njit(cache=True)
    def _subgrad_nb(kind, p1, p2, x):
        n = x.shape[0]
        lo = np.zeros(n)
        hi = np.zeros(n)
        ok = True
        for i in range(n):
            xi = x[i]
            if kind == KIND_ZERO:
                pass
            elif kind == KIND_ABS:
                if xi > 0.0:
                    lo[i] = p1[i]
                    hi[i] = p1[i]
                elif xi < 0.0:
                    lo[i] = -p1[i]
                    hi[i] = -p1[i]
                else:
                    lo[i] = -p1[i]
                    hi[i] = p1[i]
            elif kind == KIND_ENET:
                if xi > 0.0:
                    lo[i] = p1[i]
                    hi[i] = p1[i]
                elif xi < 0.0:
                    lo[i] = -p1[i]
                    hi[i] = -p1[i]
                else:
                    lo[i] = -p1[i]
                    hi[i] = p1[i]
                lo[i] += p2[i] * xi
                hi[i] += p2[i] * xi
            elif kind == KIND_BOX:
                if xi < p1[i] or xi > p2[i]:
                    ok = False
                else:
                    if xi == p1[i]:
                        lo[i] = -_INF
                    if xi == p2[i]:
                        hi[i] = _INF
            elif kind == KIND_EPS:
                eps = p2[i]
                if xi > eps:
                    lo[i] = p1[i]
                    hi[i] = p1[i]
                elif xi == eps:
                    lo[i] = 0.0
                    hi[i] = p1[i]
                elif xi < -eps:
                    lo[i] = -p1[i]
                    hi[i] = -p1[i]
                elif xi == -eps:
                    lo[i] = -p1[i]
                    hi[i] = 0.0
            elif kind == KIND_CHECK:
                up = p1[i] * p2[i]
                dn = p1[i] * (p2[i] - 1.0)
                if xi > 0.0:
                    lo[i] = up
                    hi[i] = up
                elif xi < 0.0:
                    lo[i] = dn
                    hi[i] = dn
                else:
                    lo[i] = dn
                    hi[i] = up
            else:  # KIND_HUBER
                g = min(max(xi / p2[i], -p1[i]), p1[i])
                lo[i] = g
                hi[i] = g
        return lo, hi, ok

    @_nb.njit(cache=True)
    def _dual_ascent_nb(gkind, gp1, gp2, hkind, hp1, hp2, hlo, hhi, hl1, hquad,
                        J, cbar, x, t, step, tol, fx, fslack, maxit):
        m = cbar.shape[0]
        n = x.shape[0]
        JT = np.ascontiguousarray(J.T)
        w = np.zeros(m)
        wnew = np.zeros(m)
        y = x.copy()
        resid = _INF
        it = 0
        for it in range(1, maxit + 1):
            v = np.empty(n)
            jtw = np.dot(JT, w)
            for i in range(n):
                v[i] = x[i] - t * jtw[i]
            y = _prox_nb(gkind, gp1, gp2, v, t)
            d = y - x
            z = cbar + np.dot(J, d)
            quad = 0.0
            for i in range(n):
                quad += d[i] * d[i]
            fy = (_value_nb(gkind, gp1, gp2, y)
                  + _value_nb(hkind, hp1, hp2, z)
                  + quad / (2.0 * t))
            move2 = 0.0
            for j in range(m):
                wh = w[j] + step * (z[j] - hquad[j] * w[j])
                thr = step * hl1[j]
                if wh > thr:
                    wh -= thr
                elif wh < -thr:
                    wh += thr
                else:
                    wh = 0.0
                wh = min(max(wh, hlo[j]), hhi[j])
                wnew[j] = wh
                move2 += (wh - w[j]) * (wh - w[j])
            resid = math.sqrt(move2) / step
            if resid <= tol and fy <= fx + fslack:
                return y, w, resid, it, True
            for j in range(m):
                w[j] = wnew[j]
        return y, w, resid, it, False

    @_nb.njit(cache=True)
    def _minnorm_boxqp_nb(J, vlo, vhi, wlo, whi, step, tol, maxit):
        m = J.shape[0]
        n = J.shape[1]
        JT = np.ascontiguousarray(J.T)
        v = np.empty(n)
        w = np.empty(m)
        for i in range(n):
            v[i] = min(max(0.0, vlo[i]), vhi[i])
        for j in range(m):
            w[j] = min(max(0.0, wlo[j]), whi[j])
        it = 0
        for it in range(1, maxit + 1):
            r = v + np.dot(JT, w)
            jr = np.dot(J, r)
            move2 = 0.0
            for i in range(n):
                vn = min(max(v[i] - step * r[i], vlo[i]), vhi[i])
                move2 += (vn - v[i]) * (vn - v[i])
                v[i] = vn
            for j in range(m):
                wn = min(max(w[j] - step * jr[j], wlo[j]), whi[j])
                move2 += (wn - w[j]) * (wn - w[j])
                w[j] = wn
            if math.sqrt(move2) / step <= tol:
                break
        r = v + np.dot(JT, w)
        return math.sqrt(float(np.dot(r, r))), it

    def penalty_value_nb(kind, p1, p2, x):
        return _value_nb(kind, p1, p2, x)

    def penalty_prox_nb(kind, p1, p2, x, t):
        return _prox_nb(kind, p1, p2, x, t)

    def penalty_subgrad_nb(kind, p1, p2, x):
        return _subgrad_nb(kind, p1, p2, x)

    def dual_ascent_nb(gkind, gp1, gp2, hkind, hp1, hp2, hlo, hhi, hl1, hquad,
                       J, cbar, x, t, step, tol, fx, fslack, maxit):
        return _dual_ascent_nb(gkind, gp1, gp2, hkind, hp1, hp2, hlo, hhi,
                               hl1, hquad, J, cbar, x, t, step, tol, fx,
                               fslack, maxit)

    def minnorm_boxqp_nb(J, vlo, vhi, wlo, whi, step, tol, maxit):
        return _minnorm_boxqp_nb(J, vlo, vhi, wlo, whi, step, tol, maxit)


if _BACKEND == "numba":
    penalty_value = penalty_value_nb
    penalty_prox = penalty_prox_nb
    penalty_subgrad = penalty_subgrad_nb
    dual_ascent = dual_ascent_nb
    minnorm_boxqp = minnorm_boxqp_nb
else:
    penalty_value = penalty_value_np
    penalty_prox = penalty_prox_np
    penalty_subgrad = penalty_subgrad_np
    dual_ascent = dual_ascent_np
    minnorm_boxqp = minnorm_boxqp_np
