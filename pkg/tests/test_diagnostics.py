import numpy as np
import pytest

import proxbound as pb


def vec(*vals):
    return np.array(vals, dtype=float)


def abs_problem():
    # phi(x) = |x| through a degenerate smooth part
    f = pb.Quadratic(np.zeros((1, 1)), vec(0.0))
    return pb.AdditiveProblem(f=f, g=pb.AbsValue(1.0))


def half_sq_problem(dim=1):
    return pb.AdditiveProblem(f=pb.Quadratic(np.eye(dim), np.zeros(dim)),
                              g=pb.Zero())


def test_dist_abs_at_kink_is_zero():
    assert pb.dist_to_stationarity(abs_problem(), vec(0.0)) == 0.0


def test_dist_lasso_solution():
    # f = (x-2)^2/2, g = |x|: x = 1 is stationary since -f'(1) = 1 in d|1|
    p = pb.AdditiveProblem(f=pb.Quadratic(np.eye(1), vec(2.0)),
                           g=pb.AbsValue(1.0))
    assert pb.dist_to_stationarity(p, vec(1.0)) == 0.0
    assert pb.dist_to_stationarity(p, vec(0.5)) == pytest.approx(0.5)


def test_dist_composite_annihilated_jacobian():
    # c(x) = x^2 - 1 has zero Jacobian at 0, so every w is annihilated
    c = pb.QuadraticMap(np.array([[[2.0]]]), np.array([[0.0]]), vec(-1.0))
    prob = pb.CompositeProblem(g=pb.Zero(), h=pb.AbsValue(1.0), c=c)
    assert pb.dist_to_stationarity(prob, vec(0.0)) <= 1e-10
    # away from the kink the subdifferential is a singleton
    assert pb.dist_to_stationarity(prob, vec(1.7)) == pytest.approx(3.4,
                                                                    abs=1e-8)


def test_dist_composite_grid_cross_check():
    # residual 1 sits on the kink (free dual weight in [-1,1]); residual 2
    # is smooth (weight pinned at +1): brute-force the free coordinate
    A = np.array([[2.0], [1.0]])
    b = vec(0.0, 0.5)
    prob = pb.CompositeProblem(g=pb.Zero(), h=pb.AbsValue(1.0),
                               c=pb.AffineMap(A, b))
    x = vec(0.0)
    ws = np.linspace(-1.0, 1.0, 200001)
    brute = float(np.min(np.abs(2.0 * ws + 1.0)))
    got = pb.dist_to_stationarity(prob, x)
    assert got == pytest.approx(brute, abs=1e-8)


def test_dist_composite_exact_kink_point():
    # x=1 lies exactly on the kink of |x^2-1|: interval [-1,1] absorbs J
    c = pb.QuadraticMap(np.array([[[2.0]]]), np.array([[0.0]]), vec(-1.0))
    prob = pb.CompositeProblem(g=pb.Zero(), h=pb.AbsValue(1.0), c=c)
    assert pb.dist_to_stationarity(prob, vec(1.0)) <= 1e-10


def test_dist_at_lasso_reference(lasso42, lasso42_ref):
    assert pb.dist_to_stationarity(lasso42, lasso42_ref.x_star) <= 1e-8


def test_reference_accuracy_invariant(lasso42_ref):
    assert lasso42_ref.accuracy <= 1e-12


def test_analytic_reference_detection(corridor10, lasso42):
    ref = pb.analytic_reference(corridor10)
    assert ref is not None and ref.phi_star == 0.0
    assert ref.dist(np.full(10, 3.0)) == pytest.approx(np.sqrt(10 * 4.0))
    assert ref.dist(np.zeros(10)) == 0.0
    assert pb.analytic_reference(lasso42) is None


def test_estimate_alpha_corridor(corridor10):
    ref = pb.analytic_reference(corridor10)
    a = pb.estimate_alpha(corridor10, ref, float("inf"), n_samples=5000, seed=1)
    assert a >= 2.0 - 1e-6
    assert a == pytest.approx(2.0, abs=1e-9)


def test_estimate_alpha_strongly_convex():
    p = half_sq_problem(3)
    ref = pb.ReferenceSolution.computed(np.zeros(3), 0.0, 0.0)
    a = pb.estimate_alpha(p, ref, float("inf"), n_samples=5000, seed=2)
    assert a >= 1.0 - 1e-6


def test_estimate_alpha_linear_growth_positive():
    p = abs_problem()
    ref = pb.ReferenceSolution.computed(np.zeros(1), 0.0, 0.0)
    a = pb.estimate_alpha(p, ref, 1.0, n_samples=2000, seed=3)
    assert a > 0.0
    # growth is linear, so the constant degrades with the radius: about
    # 2/max-dist with the sublevel capped at |x| <= 1
    assert a == pytest.approx(2.0, rel=0.1)


def test_estimate_gamma_corridor(corridor10):
    ref = pb.analytic_reference(corridor10)
    g = pb.estimate_gamma(corridor10, ref, float("inf"), 0.5,
                          n_samples=5000, seed=4)
    assert g <= 1.0 + 1e-6


def test_estimate_gamma_half_sq_exact():
    p = half_sq_problem(2)
    ref = pb.ReferenceSolution.computed(np.zeros(2), 0.0, 0.0)
    g = pb.estimate_gamma(p, ref, float("inf"), 1.0, n_samples=2000, seed=5)
    assert g == pytest.approx(1.0, rel=1e-12)


def test_estimators_deterministic(corridor10):
    ref = pb.analytic_reference(corridor10)
    a1 = pb.estimate_alpha(corridor10, ref, float("inf"), n_samples=500, seed=9)
    a2 = pb.estimate_alpha(corridor10, ref, float("inf"), n_samples=500, seed=9)
    assert a1 == a2


def test_insufficient_samples_raises():
    p = half_sq_problem(1)
    ref = pb.ReferenceSolution.computed(np.zeros(1), 0.0, 0.0)
    with pytest.raises(pb.InsufficientData):
        pb.estimate_alpha(p, ref, float("inf"), n_samples=5, seed=1)


def test_verify_constant_relations_arithmetic():
    checks = pb.verify_constant_relations(alpha=2.0, gamma=2.0, L=1.0,
                                          L_hat=1.25, t=0.5, beta=1.0, tol=0.0)
    # gamma bound (2/2 + 0.5)(1 + 0.5) = 2.25
    ok, slack = checks["gamma_vs_alpha"]
    assert ok and slack == pytest.approx(2.25 - 2.0)
    ok, slack = checks["prox_vs_subdiff"]
    assert ok and slack == pytest.approx(1.0 + 0.5 - 1.25)
    ok, slack = checks["subdiff_vs_alpha"]
    assert ok and slack == pytest.approx(1.0 - 1.0)
    ok, _ = checks["alpha_vs_gamma"]
    assert ok  # alpha = 2 >= 1/gamma = 0.5


def test_verify_constant_relations_requires_positive():
    with pytest.raises(ValueError):
        pb.verify_constant_relations(0.0, 1.0, 1.0, None, 0.5, 1.0)


def test_iteration_bound_examples():
    assert pb.iteration_bound(2.0, float("inf"), 1.0, 123.0,
                              np.e * 1e-8, 1e-8) == pytest.approx(4.0)
    assert pb.iteration_bound(2.0, 1.0, 1.0, 1.0, 1e-8, 1e-8) == 0.0


def test_fit_tail_rate_geometric():
    gaps = 0.5 ** np.arange(40)
    phis = gaps + 7.0
    rate = pb.fit_tail_rate(phis, 7.0, 0.5)
    assert rate == pytest.approx(0.5, abs=1e-9)


def test_fit_tail_rate_constant_fails():
    phis = np.full(40, 7.5)
    with pytest.raises(pb.InsufficientData):
        pb.fit_tail_rate(phis, 7.0, 0.5)


def test_fit_tail_rate_too_short():
    with pytest.raises(pb.InsufficientData):
        pb.fit_tail_rate(np.array([1.0, 0.5, 0.25]), 0.0, 1.0)


def test_sandwich_quadratic_no_penalty():
    p = half_sq_problem(3)
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2, 2, size=(50, 3))
    rep = pb.verify_sandwich(p, 0.4, pts, inner_tol=1e-11)
    assert rep.min_lower_slack >= -1e-10
    assert rep.min_upper_slack >= -1e-10


def test_firm_convexity_of_huber_under_tilt():
    # huber is the Moreau envelope of lam|.|; tilting by |v| < lam keeps
    # quadratic growth positive around the tilted minimizer mu*v
    lam, mu, v = 1.0, 2.0, 0.3
    f = pb.HuberLoss(np.eye(1), np.zeros(1), mu)  # unit-slope huber
    prob = pb.AdditiveProblem(f=f, g=pb.Zero())
    x_v = mu * v
    phi_star = prob.phi(vec(x_v)) - v * x_v
    ref = pb.ReferenceSolution.computed(vec(x_v), phi_star, 0.0)
    a = pb.estimate_alpha(prob, ref, float("inf"), n_samples=4000, seed=7,
                          tilt=vec(v))
    assert a > 0.0


def test_corridor_duality_both_directions(corridor10):
    # error-bound / quadratic-growth duality with multiplicative slack 1e-3
    ref = pb.analytic_reference(corridor10)
    t = 0.5
    a = pb.estimate_alpha(corridor10, ref, float("inf"), n_samples=4000, seed=11)
    g = pb.estimate_gamma(corridor10, ref, float("inf"), t, n_samples=4000,
                          seed=11)
    beta = corridor10.f.beta
    assert g <= (2.0 / a + t) * (1.0 + beta * t) * (1 + 1e-3)
    assert a >= (1 - 1e-3) / g


def test_estimate_constants_bundle(lasso42, lasso42_run, lasso42_ref):
    gap0 = lasso42.phi(np.zeros(10)) - lasso42_ref.phi_star
    t = 1.0 / lasso42.f.beta
    rep = pb.estimate_constants(lasso42, lasso42_ref, gap0, t,
                                n_samples=4000, seed=5)
    assert rep.alpha_hat > 0 and rep.gamma_hat > 0 and rep.L_hat_sub > 0
    assert all(ok for ok, _ in rep.checks.values())
    text = rep.to_text()
    assert "alpha_hat=" in text and "check_gamma_vs_alpha=pass" in text
    assert rep.to_csv_row().count(",") == rep.csv_header().count(",")


def test_estimate_gamma_composite(robust7, robust7_run):
    ref = pb.compute_reference(robust7, x0=robust7_run.final_x, tol=1e-12,
                               inner_tol=1e-13)
    lb = robust7.L * robust7.beta
    g = pb.estimate_gamma(robust7, ref, float("inf"), 1.0 / lb,
                          n_samples=150, seed=8)
    assert np.isfinite(g) and g > 0


def test_prox_bound_composite_unsupported(robust7):
    ref = pb.ReferenceSolution.computed(np.zeros(10), 0.0, 0.0)
    with pytest.raises(pb.UnsupportedOperation):
        pb.estimate_prox_bound(robust7, ref, 1.0, 0.1)
