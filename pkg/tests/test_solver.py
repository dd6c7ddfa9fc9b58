import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_channels, random_hermitian
from seaadmm.netsim import ConfigError, realization_from_channels
from seaadmm.problem import QpData, build_mmf, build_Q, build_qos, build_c
from seaadmm.solver import (AdmmState, InnerSolver, SolverConfig, check_convergence, inner_admm,
                            residuals, s_update, solve_dual, w_bar_update, x_update)

TIGHT = dict(eps_dual=1e-10, eps_prim=1e-10, max_outer=20000)


def scalar_problem(qos=False, gamma=4.0):
    net = realization_from_channels(np.ones((1, 1)), [1.0])
    return build_qos(net, 1.0, gamma) if qos else build_mmf(net, 1.0)


def random_problem(seed, K=3, L=2, N=2, qos=False):
    rng = np.random.default_rng(seed)
    net = realization_from_channels(random_channels(rng, K, L * N, 1.0), np.ones(K), antennas_per_ap=N)
    return build_qos(net, 1.0, 2.0) if qos else build_mmf(net, 1.0)


def qp(Q, c):
    m = len(c)
    return QpData(Q=np.asarray(Q, float), c=np.asarray(c, float), map_H=np.zeros((0, 1)),
                  map_D=np.zeros((0, 1)), rho=1.0)


def test_x_update_examples():
    v, t = np.array([0.3, -0.2]), np.array([0.1, 0.5])
    assert np.allclose(x_update(qp(np.zeros((2, 2)), [0, 0]), np.ones(2), v, t), v - t)
    assert np.allclose(x_update(qp(np.eye(2), [0, 0]), np.ones(2), v, v), 0)
    x = x_update(qp([[1, -1], [-1, 1]], [1, 0]), np.ones(2), np.zeros(2), np.zeros(2))
    assert np.allclose(x, [-2 / 3, -1 / 3])


def test_inner_single_step_hand_trace():
    prob = random_problem(0, K=4, L=2)
    y, z, v, t = inner_admm(qp(np.zeros((6, 6)), np.zeros(6)), np.ones(6), prob,
                            np.zeros(6), np.zeros(6), T=1)
    assert np.allclose(y, 0.25) and np.allclose(z, 0)


def test_inner_rejects_zero_iterations():
    prob = random_problem(0)
    with pytest.raises(ValueError):
        inner_admm(qp(np.eye(5), np.zeros(5)), np.ones(5), prob, np.zeros(5), np.zeros(5), T=0)


@pytest.mark.parametrize("qos", [False, True])
def test_inner_fixed_point_and_kernel_parity(qos):
    rng = np.random.default_rng(1)
    prob = random_problem(2, qos=qos)
    rho = 0.5
    S, Wb = random_hermitian(rng, prob.n, 0.1), random_hermitian(rng, prob.n, 0.1)
    Q, c = build_Q(prob, rho), build_c(prob, rho, S, Wb)
    R = np.ones(prob.K + prob.L)
    inner = InnerSolver(Q, R, prob.K, prob)
    v0, t0 = rng.standard_normal(5), rng.standard_normal(5)
    a = inner.run(c, v0, t0, 40, compiled=True)
    b = inner.run(c, v0, t0, 40, compiled=False)
    assert np.allclose(a[0], b[0], atol=1e-12) and np.allclose(a[1], b[1], atol=1e-12)
    v, t = inner.run(c, v0, t0, 20000)
    v2, t2 = inner.run(c, v, t, 5)
    assert np.allclose(v2, v, atol=1e-10) and np.allclose(t2, t, atol=1e-10)
    if qos:
        assert v[prob.K:] @ prob.budgets == pytest.approx(1.0, abs=1e-10)
    else:
        assert v[:prob.K].sum() == pytest.approx(1.0, abs=1e-10)


def test_s_update_examples():
    prob = scalar_problem()
    prob2 = random_problem(3, K=1, L=2, N=1)
    S, X = s_update(prob, np.zeros(1), np.zeros(1), -np.eye(1))
    assert np.allclose(S, np.eye(1))
    S, _ = s_update(prob2, np.zeros(1), np.zeros(2), -np.diag([1.0, -1.0]).astype(complex))
    assert np.allclose(S, np.diag([1.0, 0.0]))


@given(st.integers(0, 2**31))
def test_s_update_moreau(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem(seed % 101)
    Wb = random_hermitian(rng, prob.n)
    y, z = rng.uniform(size=prob.K), rng.uniform(size=prob.L)
    S, X = s_update(prob, y, z, Wb)
    assert np.linalg.eigvalsh(S).min() >= -1e-9 * np.linalg.norm(S)
    assert np.linalg.eigvalsh(X - S).max() <= 1e-9 * np.linalg.norm(X)
    assert abs(np.vdot(S, X - S)) <= 1e-8 * np.linalg.norm(X) ** 2


def test_w_bar_update_examples(rng):
    prob = random_problem(4)
    Wb = random_hermitian(rng, prob.n)
    zero = np.zeros((prob.n, prob.n), complex)
    assert np.allclose(w_bar_update(prob, np.zeros(prob.K), np.zeros(prob.L), zero, Wb), Wb)
    y, z = rng.uniform(size=prob.K), 10 * rng.uniform(size=prob.L)
    S = prob.D_adj(z) - prob.H_adj(y)  # dual feasible pair
    assert np.allclose(w_bar_update(prob, y, z, S, Wb), Wb)
    out = w_bar_update(prob, y, z, random_hermitian(rng, prob.n), Wb)
    assert np.abs(out - out.conj().T).max() <= 1e-12


def test_convergence_checks():
    n = 2
    st = AdmmState(y=np.zeros(1), z=np.zeros(1), S=np.eye(n), W_bar=np.eye(n), v=np.zeros(2),
                   t_bar=np.zeros(2))
    cfg = SolverConfig()
    assert not check_convergence(st, cfg).converged  # no history yet
    st.prev_S, st.prev_W_bar = np.eye(n), np.eye(n)
    assert check_convergence(st, cfg).converged
    st.W_bar = np.zeros((n, n))
    rep = check_convergence(st, cfg)
    assert not rep.converged and rep.degenerate
    assert residuals(np.eye(2), np.eye(2), np.zeros((2, 2)), np.eye(2))[1] == np.inf
    assert residuals(np.eye(2), np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))[1] == 0.0


@pytest.mark.parametrize("kw", [dict(rho=0.0), dict(mu_s=-1.0), dict(eps_dual=0.0),
                                dict(inner_iters=0), dict(max_outer=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SolverConfig(**kw).validate()


def test_scalar_mmf_closed_form():
    prob = scalar_problem()
    cfg = SolverConfig(rho=1.0, mu_s=1.0, mu_p=1.0, **TIGHT)
    st, rep = solve_dual(prob, cfg)
    assert rep.converged
    W = cfg.rho * st.W_bar
    assert prob.H_map(W)[0] == pytest.approx(1.0, rel=1e-6)
    assert st.z @ prob.budgets == pytest.approx(1.0, rel=1e-6)


def test_scalar_qos_closed_form():
    prob = scalar_problem(qos=True, gamma=4.0)
    cfg = SolverConfig(rho=1.0, mu_s=1.0, mu_p=1.0, **TIGHT)
    st, rep = solve_dual(prob, cfg)
    assert np.real(cfg.rho * st.W_bar[0, 0]) == pytest.approx(4.0, rel=1e-6)
    assert st.y @ prob.targets == pytest.approx(4.0, rel=1e-6)


@settings(max_examples=8)
@given(st.integers(0, 2**31), st.booleans())
def test_iterate_invariants(seed, qos):
    prob = random_problem(seed % 1009, qos=qos)
    seen = []
    cfg = SolverConfig(rho=0.5, mu_s=10.0, mu_p=5.0, max_outer=60)
    st, rep = solve_dual(prob, cfg, trace=lambda *r: seen.append(r))
    assert len(seen) == rep.outer_iters
    for arr in (st.y, st.z, st.S, st.W_bar):
        assert np.all(np.isfinite(arr))
    assert np.all(st.y >= 0) and np.all(st.z >= 0)
    if qos:
        assert st.z @ prob.budgets == pytest.approx(1.0, abs=1e-8)
    else:
        assert st.y.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(st.S).min() >= -1e-9 * max(np.linalg.norm(st.S), 1e-300)
    assert np.allclose(st.W_bar, st.W_bar.conj().T)
    assert rep.converged == (rep.dual_residual < cfg.eps_dual and rep.prim_residual < cfg.eps_prim)


def test_initial_state():
    prob = random_problem(5, L=3, N=1)
    st = AdmmState.initial(prob, 0.2)
    assert np.allclose(st.W_bar, 3.0 / (0.2 * 3) * np.eye(3))
    assert not st.y.any() and not st.z.any() and not st.S.any()


def test_warm_start_resumes():
    prob = random_problem(6)
    cfg = SolverConfig(rho=0.5, mu_s=10.0, **TIGHT)
    st, rep = solve_dual(prob, cfg)
    st2, rep2 = solve_dual(prob, cfg, state=st)
    assert rep2.outer_iters < rep.outer_iters
    assert np.allclose(st2.W_bar, st.W_bar, rtol=1e-6, atol=1e-9)
