import json
import warnings

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entcert.hermitian import TensorLayout, partial_transpose
from entcert.sdp import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    BlockSdpProblem,
    SdpOptions,
    SdpSolution,
    check_feasibility,
    dump_problem,
    load_problem,
    solve,
    verify_solution,
)

from conftest import bell
from sdp_cases import strictly_feasible_problem


def cvxpy_value(p: BlockSdpProblem) -> float:
    x = cp.Variable(p.n)
    cons = []
    for b0, fb in zip(p.F0, p.F):
        e = b0 + sum(x[i] * fb[i] for i in range(p.n))
        cons.append((e + e.H) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(p.c @ x), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prob.solve(solver="CLARABEL")
    return prob.value


def test_scalar_lp():
    p = BlockSdpProblem.from_blocks([np.array([[-1.0]])], [np.array([[[1.0]]])], [1.0])
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.x[0] == pytest.approx(1, abs=1e-7)


def test_bell_min_t():
    pt = partial_transpose(bell(), TensorLayout.bipartite(2, 2), ["B"])
    p = BlockSdpProblem.from_blocks([pt], [np.eye(4)[None]], [1.0])
    s = solve(p)
    assert s.status == OPTIMAL
    assert s.x[0] == pytest.approx(0.5, abs=1e-7)
    assert s.x[0] == pytest.approx(-np.linalg.eigvalsh(pt)[0], abs=1e-7)


@pytest.mark.parametrize("seed", range(20))
def test_random_strictly_feasible(seed):
    p, x0, Z0 = strictly_feasible_problem(seed)
    s = solve(p)
    assert s.status == OPTIMAL
    rep = verify_solution(p, s)
    assert rep.passed, rep.lines()
    assert s.gap < 1e-7
    assert s.primal_obj == pytest.approx(cvxpy_value(p), rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_weak_duality_along_feasible_path(seed):
    p, x0, Z0 = strictly_feasible_problem(seed)
    s = solve(p, SdpOptions(debug=True), x0=x0, Z0=Z0)
    assert s.status == OPTIMAL
    assert all(t["primal_obj"] >= t["dual_obj"] - 1e-9 for t in s.trace)
    assert max(t["primal_infeas"] for t in s.trace) < 1e-8


@pytest.mark.parametrize("seed", range(20))
def test_weak_duality_on_feasible_cold_iterates(seed):
    p, _, _ = strictly_feasible_problem(seed)
    s = solve(p, SdpOptions(debug=True))
    feasible = [t for t in s.trace if t["primal_infeas"] <= 1e-8 and t["dual_infeas"] <= 1e-8]
    assert feasible
    assert all(t["primal_obj"] >= t["dual_obj"] - 1e-9 for t in feasible)


def test_check_feasibility_examples():
    r = check_feasibility(BlockSdpProblem.from_blocks([np.eye(3)], [np.zeros((0, 3, 3))], []))
    assert r.verdict == FEASIBLE and r.t_opt == pytest.approx(-1, abs=1e-7)
    p = BlockSdpProblem.from_blocks([-np.eye(3)], [np.zeros((0, 3, 3))], [])
    r = check_feasibility(p)
    assert r.verdict == INFEASIBLE and r.t_opt == pytest.approx(1, abs=1e-7)
    assert verify_solution(p, r).passed
    p = BlockSdpProblem.from_blocks([np.diag([1.0, -3.0])], [np.eye(2)[None]], [0.0])
    r = check_feasibility(p)
    assert r.verdict == FEASIBLE
    assert np.linalg.eigvalsh(p.lmi(r.x)[0])[0] >= 0


def test_infeasible_certificate_properties():
    pt = partial_transpose(bell(), TensorLayout.bipartite(2, 2), ["B"])
    p = BlockSdpProblem.from_blocks([bell(), pt], [np.zeros((0, 4, 4))] * 2, [])
    r = check_feasibility(p)
    assert r.verdict == INFEASIBLE and r.t_opt == pytest.approx(0.5, abs=1e-7)
    assert sum(np.trace(z).real for z in r.Z) == pytest.approx(1, abs=1e-9)
    assert -sum(np.trace(b @ z).real for b, z in zip(p.F0, r.Z)) >= r.t_opt - 1e-7
    assert verify_solution(p, r).passed


def test_unbounded_min_t_is_guarded():
    # t can go to -inf along x without the guard block
    p = BlockSdpProblem.from_blocks([np.zeros((1, 1))], [np.ones((1, 1, 1))], [0.0])
    r = check_feasibility(p)
    assert r.verdict == FEASIBLE


def test_hard_blocks_are_not_relaxed():
    soft = BlockSdpProblem.from_blocks([np.eye(2), np.array([[-1.0]])], [np.zeros((0, 2, 2)), np.zeros((0, 1, 1))], [])
    with pytest.raises(Exception):
        check_feasibility(soft, [True, False])


def test_verify_flags_perturbations():
    p, _, _ = strictly_feasible_problem(3)
    s = solve(p)
    assert verify_solution(p, s).passed
    # push x onto and past the boundary
    F = p.lmi(s.x)
    worst = min(np.linalg.eigvalsh(b)[0] for b in F)
    assert worst < 1e-6
    rng = np.random.default_rng(0)
    bad = None
    for _ in range(50):
        trial = s.x + 1e-3 * rng.normal(size=p.n)
        if min(np.linalg.eigvalsh(b)[0] for b in p.lmi(trial)) < -1e-8:
            bad = trial
            break
    assert bad is not None
    s_bad = SdpSolution(s.status, bad, s.Z, s.primal_obj, s.dual_obj, s.gap, s.iterations)
    assert not verify_solution(p, s_bad)["lmi_psd"][3]
    Z = list(s.Z)
    w, U = np.linalg.eigh(Z[0])
    w[0] = -1e-4
    Z[0] = (U * w) @ U.conj().T
    s_bad = SdpSolution(s.status, s.x, tuple(Z), s.primal_obj, s.dual_obj, s.gap, s.iterations)
    assert not verify_solution(p, s_bad)["dual_psd"][3]


def test_determinism():
    p, _, _ = strictly_feasible_problem(7)
    a, b = solve(p), solve(p)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 10.0]))
def test_scaling_invariance(seed, s):
    rng = np.random.default_rng(seed)
    m = 4
    F0 = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    F0 = F0 + F0.conj().T
    F1 = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    F1 = F1 + F1.conj().T
    p = BlockSdpProblem.from_blocks([F0], [F1[None]], [0.0])
    r1 = check_feasibility(p)
    r2 = check_feasibility(p.scaled(s))
    assert r1.verdict == r2.verdict
    assert r2.t_opt == pytest.approx(s * r1.t_opt, rel=1e-5, abs=1e-7)


def test_dump_round_trip(tmp_path):
    p, _, _ = strictly_feasible_problem(5)
    doc = json.loads(json.dumps(dump_problem(p, soft=[True] * len(p.F0))))
    q, soft = load_problem(doc)
    assert soft == (True,) * len(p.F0)
    assert np.allclose(q.c, p.c)
    for a, b in zip(p.F, q.F):
        assert np.allclose(a, b)
    assert solve(q).primal_obj == pytest.approx(solve(p).primal_obj)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        BlockSdpProblem.from_blocks([np.array([[0, 1], [0, 0]])], [np.zeros((1, 2, 2))], [0.0])
