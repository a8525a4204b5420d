"""Inner approximations of the separable set.

A state ``omega`` with a Bose-symmetric PPT extension to ``N`` copies of ``B``
becomes separable after mixing in ``eps_N`` of ``omega_A (x) 1/d_B``, where
``eps_N`` comes from the largest root of a Jacobi polynomial.  Given a target
``rho`` the candidate ``omega`` is unique because the mixing leaves the
A-marginal unchanged::

    omega = (rho - eps_N rho_A (x) 1/d_B) / (1 - eps_N)

so membership reduces to an extension feasibility problem in ``omega``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .constraints import AffineStateFamily
from .hermitian import (
    TensorLayout,
    from_herm_coords,
    herm_coords,
    herm_part,
    orthonormal_hermitian_basis,
    partial_trace,
    partial_transpose,
)
from .hierarchy import interval_block
from .sdp import FEASIBLE, INFEASIBLE, BlockSdpProblem, ResidualReport, SdpOptions, check_feasibility
from .serialize import matrix_from_json, matrix_to_json
from .symmetric import split_isometry, sym_dim

INNER_MEMBER = "InnerMember"
NOT_MEMBER = "NotMember"
BOUNDARY = "BoundaryUndecidable"


# ---------------------------------------------------------------------------
# Jacobi roots


def jacobi_recurrence(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``a`` and off-diagonal ``b`` of the orthonormal Jacobi recurrence matrix."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    if alpha <= -1 or beta <= -1:
        raise ValueError("alpha and beta must exceed -1")
    s = alpha + beta
    i = np.arange(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (beta ** 2 - alpha ** 2) / ((2 * i + s) * (2 * i + s + 2))
    a[0] = (beta - alpha) / (s + 2)
    m = np.arange(2, n, dtype=float)
    b2 = 4 * m * (m + alpha) * (m + beta) * (m + s) / ((2 * m + s) ** 2 * (2 * m + s + 1) * (2 * m + s - 1))
    if n > 1:
        b1 = 4 * (1 + alpha) * (1 + beta) / ((2 + s) ** 2 * (3 + s))
        b2 = np.concatenate([[b1], b2])
    return a, np.sqrt(b2)


def jacobi_roots(n: int, alpha: float, beta: float) -> np.ndarray:
    a, b = jacobi_recurrence(n, alpha, beta)
    return sla.eigvalsh_tridiagonal(a, b)


def jacobi_min_root_gap(n: int, alpha: float, beta: float) -> float:
    """``1 - x_max`` for the largest root of ``P_n^(alpha, beta)``.

    >>> round(jacobi_min_root_gap(1, 0, 1), 12)
    0.666666666667
    """
    return float(1.0 - jacobi_roots(n, alpha, beta)[-1])


def epsilon_N(N: int, d_B: int) -> float:
    """Perturbation weight for level ``N`` with ``d_B``-dimensional extended side."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if d_B < 2:
        raise ValueError("epsilon_N needs d_B >= 2")
    gap = jacobi_min_root_gap(N // 2 + 1, d_B - 2, N % 2)
    return d_B / (2 * (d_B - 1)) * gap


# ---------------------------------------------------------------------------
# Bose-symmetric extension model on H_A (x) Sym^N(C^dB)


@dataclass(frozen=True, eq=False)
class BoseTemplate:
    d_A: int
    d_B: int
    N: int
    lift: np.ndarray = field(repr=False)  # (dAdB)^2 coords -> X coords, minimum norm
    kernel: np.ndarray = field(repr=False)  # (K, n, n) matrices with zero reduction
    cuts: tuple = field(repr=False)  # (W_j, layout_j) for j = 1..N

    @property
    def n(self) -> int:
        return self.d_A * sym_dim(self.N, self.d_B)

    def reduce(self, X) -> np.ndarray:
        W, lay = self.cuts[0]
        return partial_trace(W @ X @ W.conj().T, lay, [2])

    def lift_state(self, omega) -> np.ndarray:
        c = herm_coords(omega, self.d_A * self.d_B)
        return from_herm_coords(c @ self.lift.T, self.n)

    def blocks(self, X) -> list[np.ndarray]:
        out = [X]
        for W, lay in self.cuts:
            out.append(partial_transpose(W @ X @ W.conj().T, lay, [1]))
        return out


@lru_cache(maxsize=32)
def bose_template(d_A: int, d_B: int, N: int) -> BoseTemplate:
    sN = sym_dim(N, d_B)
    n = d_A * sN
    eyeA = np.eye(d_A)
    cuts = []
    for j in range(1, N + 1):
        W = np.kron(eyeA, split_isometry(N, j, d_B)).astype(complex)
        cuts.append((W, TensorLayout((d_A, sym_dim(j, d_B), sym_dim(N - j, d_B)))))
    W1, lay1 = cuts[0]
    basis = orthonormal_hermitian_basis(n)
    red = partial_trace(W1 @ basis @ W1.conj().T, lay1, [2])
    R = herm_coords(red, d_A * d_B).T  # (m, n^2)
    U, s, Vt = np.linalg.svd(R, full_matrices=True)
    m = R.shape[0]
    if s[-1] < 1e-10:
        raise RuntimeError("reduction map is not surjective")
    lift = Vt[:m].T @ (U.T / s[:, None])
    kernel = from_herm_coords(Vt[m:], n)
    lift.setflags(write=False)
    kernel.setflags(write=False)
    return BoseTemplate(d_A, d_B, N, lift, kernel, tuple(cuts))


def perturb_inverse(x, d_A: int, d_B: int, eps: float) -> np.ndarray:
    """``(x - eps Tr_B(x) (x) 1/d_B) / (1 - eps)``; works on stacks."""
    lay = TensorLayout.bipartite(d_A, d_B)
    xa = partial_trace(x, lay, ["B"])
    noise = np.einsum("...ij,kl->...ikjl", xa, np.eye(d_B) / d_B).reshape(x.shape)
    return (x - eps * noise) / (1 - eps)


def perturb(omega, d_A: int, d_B: int, eps: float) -> np.ndarray:
    lay = TensorLayout.bipartite(d_A, d_B)
    return (1 - eps) * omega + eps * np.kron(partial_trace(omega, lay, ["B"]), np.eye(d_B) / d_B)


def _extension_problem(tpl: BoseTemplate, omega0, omega_gens, fam: AffineStateFamily | None):
    """Blocks over variables ``(y, z, kernel coefficients)``; interval block is hard."""
    X0 = tpl.lift_state(omega0)
    Xg = tpl.lift_state(omega_gens) if len(omega_gens) else np.zeros((0, tpl.n, tpl.n), complex)
    gens = np.concatenate([Xg, tpl.kernel])
    F0 = tpl.blocks(X0)
    F = tpl.blocks(gens)
    soft = [True] * len(F0)
    if fam is not None and fam.n_z:
        i0, iF = interval_block(fam)
        full = np.zeros((len(gens),) + i0.shape, complex)
        full[fam.D_K:fam.D_K + fam.n_z] = iF
        F0.append(i0)
        F.append(full)
        soft.append(False)
    return BlockSdpProblem.from_blocks(F0, F, np.zeros(len(gens)), check=False), tuple(soft)


def bose_extension_test(omega, d_A: int, d_B: int, N: int, opts: SdpOptions = SdpOptions()):
    """min-t search for a Bose-symmetric PPT extension of a fixed ``omega``."""
    omega, d_eff, _ = _compress_a(herm_part(np.asarray(omega, complex)), d_A, d_B)
    if omega is None:
        return None
    tpl = bose_template(d_eff, d_B, N)
    prob, soft = _extension_problem(tpl, omega, np.zeros((0,) + omega.shape), None)
    return check_feasibility(prob, soft, opts)


def _compress_a(omega, d_A: int, d_B: int, tol: float = 1e-9):
    """Restrict ``omega`` to the support of its A-marginal.

    Returns ``(None, ...)`` if ``omega`` has weight outside that support, which
    rules out positivity.
    """
    lay = TensorLayout.bipartite(d_A, d_B)
    w, U = np.linalg.eigh(partial_trace(omega, lay, ["B"]))
    keep = w > tol * max(1.0, w[-1])
    if keep.all():
        return omega, d_A, None
    P = np.kron(U[:, keep], np.eye(d_B))
    small = P.conj().T @ omega @ P
    if np.abs(P @ small @ P.conj().T - omega).max() > 1e-9:
        return None, d_A, None
    return herm_part(small), int(keep.sum()), P


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True, eq=False)
class InnerCertificate:
    N: int
    epsilon: float
    omega: np.ndarray = field(repr=False)
    residual: float
    target: np.ndarray = field(repr=False)
    d_A: int
    d_B: int
    t_opt: float = 0.0
    y: np.ndarray | None = None
    z: np.ndarray | None = None

    def to_json(self) -> dict:
        out = {
            "N": self.N,
            "epsilon": self.epsilon,
            "d_A": self.d_A,
            "d_B": self.d_B,
            "omega": matrix_to_json(self.omega),
            "target": matrix_to_json(self.target),
            "residual": self.residual,
            "t_opt": self.t_opt,
        }
        if self.y is not None:
            out["y"] = [float(v) for v in self.y]
            out["z"] = [float(v) for v in self.z]
        return out

    @classmethod
    def from_json(cls, obj) -> "InnerCertificate":
        y = np.array(obj["y"], float) if "y" in obj else None
        z = np.array(obj["z"], float) if "z" in obj else None
        return cls(
            int(obj["N"]), float(obj["epsilon"]), matrix_from_json(obj["omega"], tol=1e-9),
            float(obj["residual"]), matrix_from_json(obj["target"], tol=1e-9),
            int(obj["d_A"]), int(obj["d_B"]), float(obj.get("t_opt", 0.0)), y, z,
        )


@dataclass(frozen=True, eq=False)
class InnerOutcome:
    verdict: str
    N: int
    t_opt: float
    certificate: InnerCertificate | None = None

    @property
    def is_member(self) -> bool:
        return self.verdict == INNER_MEMBER


def _make_certificate(N, eps, omega, target, d_A, d_B, t, y=None, z=None) -> InnerCertificate:
    omega = herm_part(omega)
    omega = omega / np.trace(omega).real
    resid = float(np.abs(perturb(omega, d_A, d_B, eps) - target).max())
    return InnerCertificate(N, eps, omega, resid, herm_part(target), d_A, d_B, t, y, z)


def inner_membership_test(target, N: int, d_A: int, d_B: int, opts: SdpOptions = SdpOptions()) -> InnerOutcome:
    """Decide whether ``target`` lies in the level-N inner approximation."""
    target = herm_part(np.asarray(target, complex))
    eps = epsilon_N(N, d_B)
    omega = perturb_inverse(target, d_A, d_B, eps)
    w = np.linalg.eigvalsh(omega)[0]
    if w < -1e-9:
        return InnerOutcome(NOT_MEMBER, N, float(-w))
    res = bose_extension_test(omega, d_A, d_B, N, opts)
    if res is None:
        return InnerOutcome(NOT_MEMBER, N, np.inf)
    if res.verdict == FEASIBLE:
        return InnerOutcome(INNER_MEMBER, N, res.t_opt, _make_certificate(N, eps, omega, target, d_A, d_B, res.t_opt))
    return InnerOutcome(NOT_MEMBER if res.verdict == INFEASIBLE else BOUNDARY, N, res.t_opt)


def family_inner_test(fam: AffineStateFamily, N: int, opts: SdpOptions = SdpOptions()) -> InnerOutcome:
    """Search the whole family for a member of the level-N inner approximation."""
    if fam.fully_determined:
        return inner_membership_test(fam.rho_part, N, fam.d_A, fam.d_B, opts)
    d_A, d_B = fam.d_A, fam.d_B
    eps = epsilon_N(N, d_B)
    tpl = bose_template(d_A, d_B, N)
    om0 = perturb_inverse(fam.rho_part, d_A, d_B, eps)
    om_g = perturb_inverse(fam.generators(), d_A, d_B, eps)
    prob, soft = _extension_problem(tpl, om0, om_g, fam)
    res = check_feasibility(prob, soft, opts)
    if res.verdict != FEASIBLE:
        return InnerOutcome(NOT_MEMBER if res.verdict == INFEASIBLE else BOUNDARY, N, res.t_opt)
    y, z = res.x[:fam.D_K], res.x[fam.D_K:fam.D_K + fam.n_z]
    if fam.n_z:
        z = np.clip(z, fam.z_intervals[:, 0], fam.z_intervals[:, 1])
    target = fam.member(y, z)
    omega = perturb_inverse(target, d_A, d_B, eps)
    return InnerOutcome(INNER_MEMBER, N, res.t_opt, _make_certificate(N, eps, omega, target, d_A, d_B, res.t_opt, y, z))


def verify_inner_certificate(cert: InnerCertificate, fam: AffineStateFamily | None = None,
                             opts: SdpOptions = SdpOptions()) -> ResidualReport:
    """Re-check a certificate from its stored data only."""
    rep = ResidualReport()
    eps = epsilon_N(cert.N, cert.d_B)
    rep.add("epsilon", abs(eps - cert.epsilon), 1e-12, abs(eps - cert.epsilon) <= 1e-12)
    resid = float(np.abs(perturb(cert.omega, cert.d_A, cert.d_B, eps) - cert.target).max())
    rep.add("reconstruction", resid, 1e-8, resid < 1e-8)
    tr = abs(np.trace(cert.omega).real - 1)
    rep.add("omega_trace", tr, 1e-9, tr <= 1e-9)
    w = float(np.linalg.eigvalsh(cert.omega)[0])
    rep.add("omega_psd", max(0.0, -w), 1e-9, w >= -1e-9)
    res = bose_extension_test(cert.omega, cert.d_A, cert.d_B, cert.N, opts)
    t = np.inf if res is None else res.t_opt
    rep.add("extension_t", t, opts.feas_margin, res is not None and res.verdict == FEASIBLE)
    if fam is not None:
        cs = fam.constraints
        b = cs.bounds()
        vals = cs.expectations(cert.target)
        bad = float(np.max(np.maximum(b[:, 0] - vals, vals - b[:, 1]), initial=0.0))
        rep.add("constraints", max(bad, 0.0), 1e-8, bad <= 1e-8)
    return rep

