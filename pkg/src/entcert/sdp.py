"""Primal-dual interior-point solver for block-diagonal complex SDPs.

The primal problem is::

    minimize    c^T x
    subject to  F0 + sum_i x_i F_i >= 0

with dual ``maximize -Tr[F0 Z]`` s.t. ``Z >= 0``, ``Tr[F_i Z] = c_i``. Blocks are
dense complex Hermitian and are solved natively; the Newton direction is the
HKM (``X S^{-1}``) direction with a Mehrotra predictor-corrector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .hermitian import dag, herm_part
from .serialize import matrix_from_json, matrix_to_json

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
NUMERICAL_FAILURE = "numerical_failure"


class NumericalFailure(RuntimeError):
    def __init__(self, msg, problem=None):
        super().__init__(msg)
        self.problem = problem


@dataclass(frozen=True)
class SdpOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-7
    max_iter: int = 200
    step_fraction: float = 0.98
    feas_margin: float = 1e-7
    debug: bool = False


@dataclass(frozen=True, eq=False)
class BlockSdpProblem:
    """Block-diagonal LMI data.

    ``F0[b]`` is the ``(m_b, m_b)`` constant block and ``F[b]`` the
    ``(n, m_b, m_b)`` stack of variable coefficients for that block.
    """

    F0: tuple[np.ndarray, ...]
    F: tuple[np.ndarray, ...]
    c: np.ndarray

    @classmethod
    def from_blocks(cls, F0: Sequence, F: Sequence, c, check: bool = True) -> "BlockSdpProblem":
        c = np.asarray(c, dtype=float).ravel()
        n = len(c)
        F0 = tuple(np.asarray(b, dtype=complex) for b in F0)
        Fs = []
        for b0, fb in zip(F0, F):
            fb = np.asarray(fb, dtype=complex).reshape(n, *b0.shape)
            Fs.append(fb)
        if len(Fs) != len(F0):
            raise ValueError("F0 and F must list the same blocks")
        if check:
            for b0, fb in zip(F0, Fs):
                if b0.ndim != 2 or b0.shape[0] != b0.shape[1]:
                    raise ValueError("blocks must be square")
                scale = max(1.0, np.abs(b0).max(initial=0), np.abs(fb).max(initial=0))
                if np.abs(b0 - b0.conj().T).max(initial=0) > 1e-10 * scale or (
                    n and np.abs(fb - dag(fb)).max() > 1e-10 * scale
                ):
                    raise ValueError("every block must be Hermitian")
        F0 = tuple(herm_part(b) for b in F0)
        Fs = tuple(herm_part(b) for b in Fs)
        return cls(F0, Fs, c)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def blocks(self) -> list[int]:
        return [b.shape[0] for b in self.F0]

    def lmi(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [b0 + np.tensordot(x, fb, axes=1) for b0, fb in zip(self.F0, self.F)]

    def scaled(self, s: float) -> "BlockSdpProblem":
        return BlockSdpProblem(tuple(s * b for b in self.F0), tuple(s * b for b in self.F), self.c)

    def to_json(self) -> dict:
        return {
            "blocks": self.blocks,
            "c": self.c.tolist(),
            "F0": [matrix_to_json(b) for b in self.F0],
            "F": [[matrix_to_json(fb[i]) for fb in self.F] for i in range(self.n)],
        }

    @classmethod
    def from_json(cls, obj) -> "BlockSdpProblem":
        F0 = [matrix_from_json(b, tol=1e-10) for b in obj["F0"]]
        nb, n = len(F0), len(obj["c"])
        F = [np.array([matrix_from_json(obj["F"][i][b], tol=1e-10) for i in range(n)]).reshape(n, *F0[b].shape)
             for b in range(nb)]
        return cls.from_blocks(F0, F, obj["c"])


@dataclass(frozen=True, eq=False)
class SdpSolution:
    status: str
    x: np.ndarray
    Z: tuple[np.ndarray, ...] = field(repr=False)
    primal_obj: float
    dual_obj: float
    gap: float
    iterations: int
    trace: tuple = field(default=(), repr=False)


def _apply(F: tuple[np.ndarray, ...], Y: Sequence[np.ndarray]) -> np.ndarray:
    """``(Re Tr[F_i Y])_i`` summed over blocks."""
    out = 0.0
    for fb, yb in zip(F, Y):
        out = out + np.einsum("iab,ba->i", fb, yb).real
    return np.asarray(out, dtype=float)


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    w = np.linalg.eigvalsh(herm_part(Li @ dX @ dag(Li)))
    return np.inf if w[0] >= 0 else -1.0 / w[0]


def _inv_pd(S: np.ndarray) -> np.ndarray:
    c = sla.cho_factor(S, lower=True)
    return herm_part(sla.cho_solve(c, np.eye(len(S), dtype=complex)))


def solve(p: BlockSdpProblem, opts: SdpOptions = SdpOptions(), x0=None, Z0=None) -> SdpSolution:
    """Run the interior-point method to the configured tolerances.

    ``x0`` (with ``F(x0) > 0``) and ``Z0`` (positive definite) replace the
    default ``tau * 1`` start.  Residuals shrink by ``1 - step`` each
    iteration, so a feasible start keeps every iterate feasible.
    """
    n = p.n
    dims = p.blocks
    ntot = sum(dims)
    tau = 1.0 + max(np.abs(b).max(initial=0) for b in p.F0)
    if n:
        tau = max(tau, 1.0 + np.abs(p.c).max())
    X = [tau * np.eye(m, dtype=complex) for m in dims]  # dual matrix Z
    S = [tau * np.eye(m, dtype=complex) for m in dims]  # slack F0 + sum x F
    y = np.zeros(n)  # x = -y
    if x0 is not None:
        y = -np.asarray(x0, dtype=float)
        S = [herm_part(b) for b in p.lmi(x0)]
    if Z0 is not None:
        X = [herm_part(np.asarray(z, dtype=complex)) for z in Z0]
    trace = []
    status, it = NUMERICAL_FAILURE, 0
    stall = 0
    for it in range(opts.max_iter + 1):
        rp = p.c - _apply(p.F, X)
        Rd = [b0 - np.tensordot(y, fb, axes=1) - sb for b0, fb, sb in zip(p.F0, p.F, S)]
        pobj = -float(p.c @ y)
        dobj = -float(sum(np.einsum("ab,ba->", b0, xb).real for b0, xb in zip(p.F0, X)))
        gap = abs(pobj - dobj)
        mu = sum(np.einsum("ab,ba->", xb, sb).real for xb, sb in zip(X, S)) / ntot
        pinf = max((np.abs(r).max() for r in Rd), default=0.0)
        dinf = np.abs(rp).max(initial=0.0)
        if opts.debug:
            trace.append(dict(it=it, primal_obj=pobj, dual_obj=dobj, primal_infeas=pinf, dual_infeas=dinf, mu=mu))
        if pinf <= opts.feas_tol and dinf <= opts.feas_tol and gap <= opts.gap_tol:
            status = OPTIMAL
            break
        xnorm = sum(np.trace(xb).real for xb in X)
        if dobj > 1e8 * (1 + abs(pobj)) and dinf <= 1e-6 * xnorm:
            status = PRIMAL_INFEASIBLE
            break
        if it == opts.max_iter:
            break
        try:
            Sinv = [_inv_pd(sb) for sb in S]
        except (np.linalg.LinAlgError, ValueError):
            log.debug("slack lost positive definiteness at iteration %d", it)
            break
        # Schur complement M_ij = Re Tr[F_i X F_j S^-1]
        M = np.zeros((n, n))
        XF = []
        for fb, xb, si in zip(p.F, X, Sinv):
            P = xb @ fb @ si
            XF.append(P)
            M += (fb.reshape(n, -1).conj() @ P.reshape(n, -1).T).real
        M = (M + M.T) / 2
        try:
            cho = sla.cho_factor(M, lower=True)
            msolve = lambda r: sla.cho_solve(cho, r)  # noqa: E731
        except (np.linalg.LinAlgError, ValueError):
            Mp = np.linalg.pinv(M, rcond=1e-14, hermitian=True)
            msolve = lambda r: Mp @ r  # noqa: E731
        XRS = [xb @ r @ si for xb, r, si in zip(X, Rd, Sinv)]
        base = rp + _apply(p.F, XRS)

        def direction(Rc_Si):
            rhs = base - _apply(p.F, Rc_Si)
            dy = msolve(rhs)
            dS = [r - np.tensordot(dy, fb, axes=1) for r, fb in zip(Rd, p.F)]
            dX = [herm_part(rc - xb @ ds @ si) for rc, xb, ds, si in zip(Rc_Si, X, dS, Sinv)]
            return dy, dX, dS

        def steps(dX, dS):
            try:
                ap = min([_max_step(xb, d) for xb, d in zip(X, dX)] + [np.inf])
                ad = min([_max_step(sb, d) for sb, d in zip(S, dS)] + [np.inf])
            except np.linalg.LinAlgError:
                return 0.0, 0.0
            return min(1.0, opts.step_fraction * ap), min(1.0, opts.step_fraction * ad)

        # predictor
        dy, dX, dS = direction([-xb for xb in X])
        ap, ad = steps(dX, dS)
        mu_aff = sum(
            np.einsum("ab,ba->", xb + ap * a, sb + ad * b).real for xb, a, sb, b in zip(X, dX, S, dS)
        ) / ntot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        Rc_Si = [sigma * mu * si - xb - a @ b @ si for si, xb, a, b in zip(Sinv, X, dX, dS)]
        dy, dX, dS = direction(Rc_Si)
        ap, ad = steps(dX, dS)
        if ap < 1e-12 and ad < 1e-12:
            stall += 1
            if stall > 3:
                break
        else:
            stall = 0
        X = [herm_part(xb + ap * d) for xb, d in zip(X, dX)]
        S = [herm_part(sb + ad * d) for sb, d in zip(S, dS)]
        y = y + ad * dy
        if opts.debug:
            trace[-1].update(alpha_p=ap, alpha_d=ad, sigma=sigma)
    return SdpSolution(status, -y, tuple(X), pobj, dobj, gap, it, tuple(trace))


# ---------------------------------------------------------------------------
# min-t feasibility


FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNDECIDABLE = "undecidable"


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """Outcome of ``minimize t s.t. F0 + sum x F + t*1 >= 0`` (on the soft blocks)."""

    verdict: str
    t_opt: float
    x: np.ndarray
    Z: tuple[np.ndarray, ...] = field(repr=False)
    soft: tuple[bool, ...]
    solution: SdpSolution = field(repr=False)
    problem: BlockSdpProblem = field(repr=False)


def augment_min_t(p: BlockSdpProblem, soft: Sequence[bool] | None = None) -> BlockSdpProblem:
    """Add the variable ``t`` (last) times identity on soft blocks plus a ``t >= -T`` guard block."""
    soft = [True] * len(p.F0) if soft is None else list(soft)
    n = p.n
    T = 10.0 * (1.0 + max(np.linalg.norm(b, 2) for b in p.F0))
    F0 = list(p.F0) + [np.array([[T]], dtype=complex)]
    F = []
    for fb, s in zip(p.F, soft):
        m = fb.shape[-1]
        ft = (np.eye(m) if s else np.zeros((m, m)))[None].astype(complex)
        F.append(np.concatenate([fb, ft]))
    F.append(np.concatenate([np.zeros((n, 1, 1)), np.ones((1, 1, 1))]).astype(complex))
    c = np.zeros(n + 1)
    c[-1] = 1.0
    return BlockSdpProblem(tuple(F0), tuple(F), c)


def check_feasibility(
    p: BlockSdpProblem, soft: Sequence[bool] | None = None, opts: SdpOptions = SdpOptions()
) -> FeasibilityResult:
    """Decide ``F0 + sum x F >= 0`` through the min-t relaxation.

    Blocks with ``soft[b] = False`` are imposed as hard constraints.  The dual
    ``Z`` of an infeasible verdict is normalized to unit trace on the soft
    blocks and is the seed of an entanglement witness.
    """
    soft = tuple([True] * len(p.F0) if soft is None else soft)
    aug = augment_min_t(p, soft)
    sol = solve(aug, opts)
    if sol.status != OPTIMAL:
        raise NumericalFailure(f"min-t problem ended with status {sol.status} after {sol.iterations} iterations", p)
    t = float(sol.x[-1])
    Z = sol.Z[:-1]
    tr = sum(np.trace(zb).real for zb, s in zip(Z, soft) if s)
    if tr > 0.5:
        Z = tuple(zb / tr for zb in Z)
    if t <= -opts.feas_margin:
        verdict = FEASIBLE
    elif t > opts.feas_margin:
        verdict = INFEASIBLE
    else:
        verdict = UNDECIDABLE
    return FeasibilityResult(verdict, t, sol.x[:-1], Z, soft, sol, p)


# ---------------------------------------------------------------------------
# independent certificate checks


@dataclass
class ResidualReport:
    entries: list[tuple[str, float, float, bool]] = field(default_factory=list)

    def add(self, name, value, tol, passed):
        self.entries.append((name, float(value), float(tol), bool(passed)))

    @property
    def passed(self) -> bool:
        return all(e[3] for e in self.entries)

    def __getitem__(self, name):
        for e in self.entries:
            if e[0] == name:
                return e
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {val:.3e} (tol {tol:.1e})" for name, val, tol, ok in self.entries]


def _block_min_eig(blocks) -> float:
    return min((float(np.linalg.eigvalsh(herm_part(b))[0]) for b in blocks), default=np.inf)


def verify_solution(p: BlockSdpProblem, s, opts: SdpOptions = SdpOptions()) -> ResidualReport:
    """Recompute residuals of an optimal solution or an infeasibility certificate.

    ``s`` is either an :class:`SdpSolution` (checked against ``p``) or a
    :class:`FeasibilityResult` (its certificate is checked against the original,
    un-augmented problem ``p``).
    """
    rep = ResidualReport()
    tol, gtol = opts.feas_tol, opts.gap_tol
    if isinstance(s, FeasibilityResult):
        Z = s.Z
        mineig = _block_min_eig(Z)
        rep.add("dual_psd", -min(mineig, 0.0), 10 * tol, mineig >= -10 * tol)
        if s.verdict == INFEASIBLE:
            tr = sum(np.trace(zb).real for zb, soft in zip(Z, s.soft) if soft)
            rep.add("dual_trace", abs(tr - 1), 1e-7, abs(tr - 1) <= 1e-7)
            res = np.abs(_apply(p.F, Z)).max(initial=0.0)
            rep.add("dual_equalities", res, 1e-7, res <= 1e-7)
            val = -sum(np.einsum("ab,ba->", b0, zb).real for b0, zb in zip(p.F0, Z))
            rep.add("dual_bound", max(0.0, s.t_opt - val), 1e-7, val >= s.t_opt - 1e-7)
            rep.add("t_opt_positive", s.t_opt, opts.feas_margin, s.t_opt > opts.feas_margin)
        else:
            lmi = p.lmi(s.x)
            shifted = [b + (s.t_opt * np.eye(len(b)) if soft else 0) for b, soft in zip(lmi, s.soft)]
            me = _block_min_eig(shifted)
            rep.add("lmi_psd", -min(me, 0.0), 10 * tol, me >= -10 * tol)
        return rep
    x, Z = s.x, s.Z
    me = _block_min_eig(p.lmi(x))
    rep.add("lmi_psd", -min(me, 0.0), tol, me >= -tol)
    mz = _block_min_eig(Z)
    rep.add("dual_psd", -min(mz, 0.0), tol, mz >= -tol)
    res = np.abs(_apply(p.F, Z) - p.c).max(initial=0.0)
    rep.add("dual_equalities", res, tol, res <= tol)
    pobj = float(p.c @ x)
    dobj = -sum(np.einsum("ab,ba->", b0, zb).real for b0, zb in zip(p.F0, Z))
    rep.add("gap", abs(pobj - dobj), gtol, abs(pobj - dobj) <= gtol)
    rep.add("weak_duality", max(0.0, dobj - pobj), tol, pobj >= dobj - tol)
    return rep


# ---------------------------------------------------------------------------
# debug dump


def dump_problem(p: BlockSdpProblem, soft=None, note: str = "") -> dict:
    out = p.to_json()
    if soft is not None:
        out["soft"] = [bool(s) for s in soft]
    if note:
        out["note"] = note
    return out


def load_problem(obj) -> tuple[BlockSdpProblem, tuple[bool, ...] | None]:
    soft = obj.get("soft")
    return BlockSdpProblem.from_json(obj), (tuple(soft) if soft is not None else None)
