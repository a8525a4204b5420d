import itertools

import numpy as np
import pytest

from entcert.constraints import build_family, family_from_state, make_constraint_set
from entcert.hermitian import TensorLayout, copy_permutation, partial_transpose
from entcert.hierarchy import (
    BOUNDARY,
    EXTENSION_FOUND,
    NO_EXTENSION,
    InconsistentSolverOutput,
    assemble_lmi,
    build_extension_model,
    candidate_state,
    cut_factors,
    independent_transpose_cuts,
    pptse_test,
    reduce_extension,
)
from entcert.observables import builtin_observable, tomography_set
from entcert.sdp import verify_solution

from conftest import bell, photon_constraints, random_state


def test_cuts():
    assert independent_transpose_cuts(1) == [(0, 1)]
    assert set(independent_transpose_cuts(2)) == {(1, 0), (0, 1)}
    assert independent_transpose_cuts(3) == [(0, 1), (1, 0), (1, 1)]
    with pytest.raises(ValueError):
        independent_transpose_cuts(0)


@pytest.mark.parametrize("k", range(1, 6))
def test_cuts_exhaustive(k):
    classes = set()
    for j in range(k + 1):
        for b in (0, 1):
            classes.add(frozenset({(j, b), (k - j, 1 - b)}))
    classes.discard(frozenset({(0, 0), (k, 1)}))
    assert len(independent_transpose_cuts(k)) == len(classes)
    for cut in independent_transpose_cuts(k):
        assert any(cut in c for c in classes)


def test_free_counts():
    fam = build_family(photon_constraints())
    assert len(build_extension_model(fam, 1).G_free) == 0
    m2 = build_extension_model(fam, 2)
    assert m2.G0.shape == (8, 8)
    assert len(m2.G_free) == 24
    # k=3: multisets of size 3 over 4 indices with at most one zero, times 4
    assert len(build_extension_model(fam, 3).G_free) == (20 - 4) * 4


def test_k1_model_is_family(rng):
    fam = build_family(photon_constraints())
    m = build_extension_model(fam, 1)
    y, z = rng.normal(size=fam.D_K), fam.default_z()
    assert np.allclose(m.extension(np.concatenate([y, z])), fam.member(y, z), atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("dims", [(2, 2), (3, 2), (2, 3)])
def test_model_invariants(k, dims, rng):
    if k == 3 and dims[0] == 3:
        pytest.skip("large")
    rho = random_state(rng, dims[0] * dims[1])
    ops = [rng.normal(size=(dims[0] * dims[1],) * 2) for _ in range(3)]
    ops = [o + o.T for o in ops]
    cs = make_constraint_set(*dims, [(o, np.trace(o @ rho) - 0.05, np.trace(o @ rho) + 0.05) for o in ops])
    fam = build_family(cs)
    m = build_extension_model(fam, k)
    d_A, d_B = dims
    perms = list(itertools.permutations(range(k)))
    for G in [m.G0, *m.G_y, *m.G_z, *m.G_free]:
        for perm in perms:
            P = copy_permutation(d_A, k, perm, d_B)
            assert np.abs(P @ G @ P.T - G).max() < 1e-12
    for G in m.G_free:
        assert np.abs(reduce_extension(G, d_A, d_B, k)).max() < 1e-12
    for _ in range(3):
        y = rng.normal(size=fam.D_K)
        b = fam.z_intervals
        z = b[:, 0] + rng.random(fam.n_z) * (b[:, 1] - b[:, 0])
        x = np.concatenate([y, z, rng.normal(size=len(m.G_free))])
        assert np.abs(reduce_extension(m.extension(x), d_A, d_B, k) - fam.member(y, z)).max() < 1e-10


def test_assemble_shapes(rng):
    fam = build_family(photon_constraints())
    prob, soft = assemble_lmi(build_extension_model(fam, 2))
    assert prob.blocks == [8, 8, 8, 8]
    assert soft == (True, True, True, False)
    assert np.all(prob.c == 0)
    assert prob.n == fam.D_K + fam.n_z + 24
    i = rng.integers(prob.n)
    lay = TensorLayout.extension(2, 2, 2)
    G = np.concatenate([build_extension_model(fam, 2).generators])[i]
    assert np.abs(prob.F[0][i] - G).max() < 1e-12
    for b, cut in enumerate(independent_transpose_cuts(2), start=1):
        assert np.abs(prob.F[b][i] - partial_transpose(G, lay, cut_factors(2, cut))).max() < 1e-12
    exact = family_from_state(bell(), 2, 2)
    prob, soft = assemble_lmi(build_extension_model(exact, 2))
    assert prob.blocks == [8, 8, 8] and all(soft)


def test_bell_level1():
    fam = family_from_state(bell(), 2, 2)
    out = pptse_test(fam, 1)
    assert out.verdict == NO_EXTENSION
    assert out.t_opt == pytest.approx(0.5, abs=1e-7)
    assert verify_solution(out.problem, out.feasibility).passed
    with pytest.raises(InconsistentSolverOutput):
        candidate_state(fam, out)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_maximally_mixed_extends(k):
    fam = family_from_state(np.eye(4) / 4, 2, 2)
    out = pptse_test(fam, k)
    assert out.verdict == EXTENSION_FOUND
    ext = out.extension
    assert np.linalg.eigvalsh(ext)[0] > -1e-9
    assert np.trace(ext).real == pytest.approx(1)
    assert np.allclose(candidate_state(fam, out), np.eye(4) / 4, atol=1e-8)


def test_interval_family_levels():
    fam = build_family(photon_constraints())
    t1 = pptse_test(fam, 1)
    t2 = pptse_test(fam, 2)
    assert t1.verdict == t2.verdict == NO_EXTENSION
    assert t1.t_opt == pytest.approx(0.0168, abs=1e-4)
    # the shift acts on a space twice as large at k = 2
    assert 2 * t2.t_opt == pytest.approx(t1.t_opt, rel=1e-4)


def test_widened_intervals_give_candidate():
    cs = make_constraint_set(2, 2, [(builtin_observable(n), 0.0, 1.0, n) for n in ("mu11", "mu12", "mu22", "mu33")])
    fam = build_family(cs)
    out = pptse_test(fam, 2)
    assert out.verdict == EXTENSION_FOUND
    rho = candidate_state(fam, out)
    assert np.linalg.eigvalsh(rho)[0] >= -1e-8
    assert np.trace(rho).real == pytest.approx(1)
    assert np.all(cs.violations(rho) < 1e-8)


def test_peres_equivalence(rng):
    lay = TensorLayout.bipartite(2, 2)
    agree = 0
    for _ in range(100):
        rho = random_state(rng, 4)
        lam = np.linalg.eigvalsh(partial_transpose(rho, lay, ["B"]))[0]
        out = pptse_test(family_from_state(rho, 2, 2), 1)
        if abs(lam) <= 1e-7:
            continue
        assert out.verdict != BOUNDARY
        agree += (out.verdict == NO_EXTENSION) == (lam < 0)
        if out.verdict == NO_EXTENSION:
            assert out.t_opt == pytest.approx(-lam, abs=1e-6)
    assert agree >= 95


def test_monotone_scaled_t(rng):
    """``d_A^k t_k`` never decreases in ``k``."""
    lay = TensorLayout.bipartite(2, 2)
    tomo = tomography_set()
    names = list(tomo)
    seen = 0
    while seen < 20:
        rho = random_state(rng, 4)
        if np.linalg.eigvalsh(partial_transpose(rho, lay, ["B"]))[0] > -0.02:
            continue
        seen += 1
        pick = rng.choice(len(names), size=10, replace=False)
        items = []
        for i in pick:
            M = tomo[names[i]]
            v = np.trace(M @ rho).real
            items.append((M, v - 0.002, v + 0.002, names[i]))
        fam = build_family(make_constraint_set(2, 2, items))
        ts = [pptse_test(fam, k).t_opt * 2 ** k for k in (1, 2)]
        assert ts[1] >= ts[0] - 1e-6
