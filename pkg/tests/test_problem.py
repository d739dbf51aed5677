import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import central_diff, grid_pal, random_instance
from proxal.baselines import ista_solve
from proxal.problem import (
    CompositeProblem,
    LinearMap,
    SmoothObjective,
    eval_aug_lagrangian,
    eval_pal,
    evaluate,
    grad_x,
    grad_y,
    kkt_residuals,
    quadratic,
    z_star,
)
from proxal.regularizers import L1, BoxIndicator, ZeroSetIndicator

zero_f = SmoothObjective(lambda x: 0.0, lambda x: np.zeros_like(x))


def test_z_star_soft_threshold():
    p = CompositeProblem(zero_f, L1(1.0), LinearMap.identity(1))
    np.testing.assert_allclose(z_star(p, np.array([2.0]), np.array([0.0]), 0.5), [1.5])


def test_z_star_indicator_fixed_point():
    T = np.array([[0.5, 0.1], [-0.2, 0.3]])
    p = CompositeProblem(zero_f, BoxIndicator(-1, 1), LinearMap(T))
    x = np.array([0.4, 0.6])
    np.testing.assert_allclose(z_star(p, x, np.zeros(2), 0.7), T @ x)


def test_pal_at_origin():
    p = CompositeProblem(zero_f, L1(1.0), LinearMap.identity(1))
    assert eval_pal(p, np.zeros(1), np.zeros(1), 1.0) == 0.0


@pytest.mark.parametrize("seed", range(20))
def test_pal_equals_grid_min_of_aug_lagrangian(seed):
    rng = np.random.default_rng(seed)
    p = random_instance(rng)
    x, y, mu = rng.standard_normal(p.n), rng.standard_normal(p.m), rng.uniform(0.1, 2.0)
    assert abs(eval_pal(p, x, y, mu) - grid_pal(p, x, y, mu)) <= 5e-4


@pytest.mark.parametrize("seed", range(20))
def test_pal_is_aug_lagrangian_on_prox_manifold(seed):
    rng = np.random.default_rng(100 + seed)
    p = random_instance(rng)
    x, y, mu = rng.standard_normal(p.n), rng.standard_normal(p.m), rng.uniform(0.1, 2.0)
    z = z_star(p, x, y, mu)
    a = eval_pal(p, x, y, mu)
    b = eval_aug_lagrangian(p, x, z, y, mu)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    assert evaluate(p, x, y, mu).value == pytest.approx(a, rel=1e-12, abs=1e-12)


def test_aug_lagrangian_forms():
    rng = np.random.default_rng(4)
    p = random_instance(rng, m=2, n=3)
    x, y, mu = rng.standard_normal(3), rng.standard_normal(2), 0.4
    z = p.g.prox(rng.standard_normal(2), 1.0)  # a point in dom g
    Tx = p.T.apply(x)
    square = (p.f.value(x) + p.g.value(z) + np.sum((z - (Tx + mu * y)) ** 2) / (2 * mu)
              - mu / 2 * y @ y)
    assert eval_aug_lagrangian(p, x, z, y, mu) == pytest.approx(square, rel=1e-12)
    # constraint satisfied: only f + g remain
    if np.isfinite(p.g.value(Tx)):
        assert eval_aug_lagrangian(p, x, Tx, y, mu) == pytest.approx(p.f.value(x) + p.g.value(Tx))


def test_aug_lagrangian_lasso_direct(lasso):
    A, b, gamma, p = lasso
    rng = np.random.default_rng(9)
    x, z, y = rng.standard_normal((3, p.n))
    mu = 0.3
    r = x - z
    direct = (0.5 * np.sum((A @ x - b) ** 2) + gamma * np.abs(z).sum() + y @ r
              + r @ r / (2 * mu))
    assert eval_aug_lagrangian(p, x, z, y, mu) == pytest.approx(direct, rel=1e-12)


def test_aug_lagrangian_infinite_off_domain():
    p = CompositeProblem(zero_f, BoxIndicator(-1, 1), LinearMap.identity(1))
    assert eval_aug_lagrangian(p, np.zeros(1), np.array([2.0]), np.zeros(1), 1.0) == np.inf


def test_grad_x_zero_set():
    p = CompositeProblem(zero_f, ZeroSetIndicator(), LinearMap.identity(3))
    x, y, mu = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.3, -1.0]), 0.25
    np.testing.assert_allclose(grad_x(p, x, y, mu), (x + mu * y) / mu)


@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(200 + seed)
    p = random_instance(rng, m=2, n=3)
    mu = rng.uniform(0.2, 2.0)
    for _ in range(50):
        x, y = rng.standard_normal(3), rng.standard_normal(2)
        gx = central_diff(lambda t: eval_pal(p, t, y, mu), x)
        gy = central_diff(lambda t: eval_pal(p, x, t, mu), y)
        ev = evaluate(p, x, y, mu)
        assert np.linalg.norm(gx - ev.grad_x) <= 1e-5 * max(1.0, np.linalg.norm(ev.grad_x))
        assert np.linalg.norm(gy - ev.grad_y) <= 1e-5 * max(1.0, np.linalg.norm(ev.grad_y))


@pytest.mark.parametrize("seed", range(10))
def test_grad_y_two_forms(seed):
    rng = np.random.default_rng(300 + seed)
    p = random_instance(rng)
    x, y, mu = rng.standard_normal(p.n), rng.standard_normal(p.m), rng.uniform(0.1, 2.0)
    v = p.T.apply(x) + mu * y
    a = grad_y(p, x, y, mu)
    b = mu * (p.g.moreau_grad(v, mu) - y)
    np.testing.assert_allclose(a, b, atol=1e-12 * max(1.0, np.abs(v).max()))
    np.testing.assert_array_equal(evaluate(p, x, y, mu).grad_x, grad_x(p, x, y, mu))


def test_grad_y_zero_when_feasible():
    p = CompositeProblem(zero_f, BoxIndicator(-1, 1), LinearMap.identity(2))
    assert np.all(grad_y(p, np.array([0.2, -0.5]), np.zeros(2), 1.0) == 0)


def test_gradient_lipschitz_bound():
    rng = np.random.default_rng(5)
    for _ in range(10):
        p = random_instance(rng, m=2, n=3)
        mu = rng.uniform(0.2, 2.0)
        L = p.f.L_f + p.T.norm() ** 2 / mu
        y = rng.standard_normal(2)
        for _ in range(20):
            a, b = rng.standard_normal((2, 3))
            lhs = np.linalg.norm(grad_x(p, a, y, mu) - grad_x(p, b, y, mu))
            assert lhs <= L * np.linalg.norm(a - b) * (1 + 1e-12)


def test_lasso_stationarity_at_ista_solution(lasso):
    A, b, gamma, p = lasso
    x = ista_solve(A, b, gamma, tol=1e-12)
    y = -(A.T @ (A @ x - b))
    assert np.linalg.norm(grad_x(p, x, y, 1.0)) <= 1e-8
    assert max(kkt_residuals(p, x, y)) <= 1e-6


def test_kkt_at_origin():
    p = CompositeProblem(quadratic(np.eye(3)), L1(1.0), LinearMap.identity(3))
    assert kkt_residuals(p, np.zeros(3), np.zeros(3)) == (0.0, 0.0, 0.0)


def test_kkt_grows_with_perturbation(lasso):
    A, b, gamma, p = lasso
    x = ista_solve(A, b, gamma, tol=1e-12)
    y = -(A.T @ (A @ x - b))
    d = np.random.default_rng(1).standard_normal(p.n)
    H = A.T @ A
    prev = 0.0
    for eps in (1e-6, 1e-5, 1e-4):
        r = kkt_residuals(p, x + eps * d, y)[0]
        assert r == pytest.approx(np.linalg.norm(H @ (eps * d)), rel=1e-3)
        assert r > prev
        prev = r


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_linear_map_adjoint(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 6, size=2)
    T = LinearMap(rng.standard_normal((m, n)))
    x, z = rng.standard_normal(n), rng.standard_normal(m)
    assert abs(z @ T.apply(x) - T.adjoint(z) @ x) <= 1e-10 * (1 + np.abs(z).sum() * np.abs(x).sum())


def test_quadratic_objective_constants():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((4, 4))
    H = M @ M.T + np.eye(4)
    f = quadratic(H, rng.standard_normal(4))
    ev = np.linalg.eigvalsh(H)
    assert f.m_f == pytest.approx(ev[0])
    assert f.L_f == pytest.approx(ev[-1])
    for _ in range(20):
        a, b = rng.standard_normal((2, 4))
        g = central_diff(f.value, a)
        np.testing.assert_allclose(g, f.grad(a), rtol=1e-5, atol=1e-7)
        assert (f.grad(a) - f.grad(b)) @ (a - b) >= f.m_f * np.sum((a - b) ** 2) * (1 - 1e-12)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        CompositeProblem(zero_f, L1(1.0), LinearMap(np.ones((2, 3)))).objective(np.ones(2))
