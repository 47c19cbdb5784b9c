"""Backend agreement: the numba kernels must match the numpy fallbacks."""

import numpy as np
import pytest

from proxbound import _kernels as K

HAS_NUMBA = hasattr(K, "penalty_value_nb")

KINDS = {
    K.KIND_ZERO: (0.0, 0.0),
    K.KIND_ABS: (0.7, 0.0),
    K.KIND_ENET: (0.5, 0.8),
    K.KIND_BOX: (-1.2, 0.9),
    K.KIND_EPS: (0.9, 0.4),
    K.KIND_CHECK: (0.8, 0.3),
    K.KIND_HUBER: (0.6, 0.5),
}


def _params(kind, n):
    a, b = KINDS[kind]
    return np.full(n, a), np.full(n, b)


def test_backend_flag_reports():
    assert K.active_backend() in ("numba", "numpy")


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
@pytest.mark.parametrize("kind", sorted(KINDS), ids=[
    "zero", "abs", "enet", "box", "eps", "check", "huber"])
def test_value_prox_subgrad_agree(kind):
    rng = np.random.default_rng(kind + 1)
    for trial in range(30):
        n = rng.integers(1, 12)
        x = rng.normal(size=n) * 2.0
        if kind == K.KIND_BOX and trial % 2 == 0:
            x = np.clip(x, -1.2, 0.9)  # exercise the in-domain branch too
        p1, p2 = _params(kind, n)
        t = float(rng.uniform(0.05, 3.0))
        v_np = K.penalty_value_np(kind, p1, p2, x)
        v_nb = K.penalty_value_nb(kind, p1, p2, x)
        assert v_np == pytest.approx(v_nb, rel=1e-14) or (
            np.isinf(v_np) and np.isinf(v_nb))
        assert np.allclose(K.penalty_prox_np(kind, p1, p2, x, t),
                           K.penalty_prox_nb(kind, p1, p2, x, t),
                           rtol=1e-14, atol=0)
        lo1, hi1, ok1 = K.penalty_subgrad_np(kind, p1, p2, x)
        lo2, hi2, ok2 = K.penalty_subgrad_nb(kind, p1, p2, x)
        assert ok1 == ok2
        if ok1:
            assert np.array_equal(lo1, lo2) and np.array_equal(hi1, hi2)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_dual_ascent_agrees():
    rng = np.random.default_rng(77)
    m, n = 8, 5
    J = rng.standard_normal((m, n))
    cbar = rng.standard_normal(m)
    x = rng.standard_normal(n)
    gp1, gp2 = _params(K.KIND_ABS, n)
    hp1, hp2 = _params(K.KIND_ABS, m)
    hlo, hhi = -hp1, hp1
    hl1 = np.zeros(m)
    hquad = np.zeros(m)
    t = 0.3
    jn2 = float(np.linalg.norm(J, 2) ** 2)
    step = 1.0 / (t * jn2 + 1.0)
    fx = (K.penalty_value_np(K.KIND_ABS, gp1, gp2, x)
          + K.penalty_value_np(K.KIND_ABS, hp1, hp2, cbar))
    args = (K.KIND_ABS, gp1, gp2, K.KIND_ABS, hp1, hp2, hlo, hhi, hl1, hquad,
            J, cbar, x, t, step, 1e-11, fx, 1e-12 * (1 + abs(fx)), 10 ** 6)
    y1, w1, r1, i1, ok1 = K.dual_ascent_np(*args)
    y2, w2, r2, i2, ok2 = K.dual_ascent_nb(*args)
    assert ok1 and ok2
    assert np.allclose(y1, y2, atol=1e-12)
    assert abs(r1 - r2) <= 1e-12


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_minnorm_boxqp_agrees():
    rng = np.random.default_rng(78)
    m, n = 6, 4
    J = rng.standard_normal((m, n))
    vlo, vhi = np.full(n, -0.3), np.full(n, 0.3)
    wlo, whi = np.full(m, -1.0), np.full(m, 1.0)
    step = 1.0 / (1.0 + float(np.linalg.norm(J, 2) ** 2))
    d1, _ = K.minnorm_boxqp_np(J, vlo, vhi, wlo, whi, step, 1e-11, 10 ** 5)
    d2, _ = K.minnorm_boxqp_nb(J, vlo, vhi, wlo, whi, step, 1e-11, 10 ** 5)
    assert d1 == pytest.approx(d2, abs=1e-10)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_minnorm_handles_infinite_bounds():
    J = np.array([[1.0, 0.0], [0.0, 1.0]])
    vlo = np.array([-np.inf, 0.0])
    vhi = np.array([np.inf, 0.0])
    wlo = np.full(2, 0.5)
    whi = np.full(2, 0.5)
    step = 0.5
    # first coordinate free: can cancel w exactly; second pinned at 0.5
    d, _ = K.minnorm_boxqp_nb(J, vlo, vhi, wlo, whi, step, 1e-12, 10 ** 5)
    assert d == pytest.approx(0.5, abs=1e-10)
