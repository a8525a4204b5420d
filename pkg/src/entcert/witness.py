"""Entanglement witnesses from infeasibility duals, and the bounds they imply."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import AffineStateFamily
from .hermitian import herm_part, partial_transpose
from .hierarchy import (
    NO_EXTENSION,
    PptseOutcome,
    assemble_lmi,
    build_extension_model,
    cut_factors,
    extension_template,
    independent_transpose_cuts,
    interval_block,
    lmi_blocks,
)
from .sdp import (
    FEASIBLE,
    INFEASIBLE,
    OPTIMAL,
    BlockSdpProblem,
    NumericalFailure,
    SdpOptions,
    check_feasibility,
    solve,
)
from .serialize import matrix_from_json, matrix_to_json

PRODUCT_SAMPLES = 10_000


class FamilyEmpty(ValueError):
    """No PSD matrix satisfies the constraints."""


class CertificateInconsistency(RuntimeError):
    pass


def _dims(fam_or_dims):
    if isinstance(fam_or_dims, AffineStateFamily):
        return fam_or_dims.d_A, fam_or_dims.d_B
    return tuple(fam_or_dims)


def lambda_map(X, k: int, fam) -> list[np.ndarray]:
    """Blocks of the fixed-part extension of ``X`` under every cut (``fam`` gives dimensions)."""
    tpl = extension_template(*_dims(fam), k)
    return lmi_blocks(tpl, tpl.extend(np.asarray(X, complex)))


def lambda_adjoint(Z, k: int, fam) -> np.ndarray:
    """``W`` with ``Tr[Lambda(X) Z] = Tr[X W]`` for all Hermitian ``X``.

    Extra trailing blocks (the interval block) are ignored.
    """
    tpl = extension_template(*_dims(fam), k)
    cuts = [None] + independent_transpose_cuts(k)
    if len(Z) < len(cuts):
        raise ValueError(f"expected {len(cuts)} blocks, got {len(Z)}")
    acc = np.zeros((tpl.dim, tpl.dim), complex)
    for zb, cut in zip(Z, cuts):
        zb = np.asarray(zb, complex)
        if zb.shape != (tpl.dim, tpl.dim):
            raise ValueError(f"block of shape {zb.shape}, expected {(tpl.dim, tpl.dim)}")
        acc += zb if cut is None else partial_transpose(zb, tpl.layout, cut_factors(k, cut))
    return herm_part(tpl.extend_adjoint(acc))


@dataclass(frozen=True, eq=False)
class Witness:
    W: np.ndarray = field(repr=False)
    margin: float
    eig_min: float
    eig_max: float
    source_level: int
    min_product_value: float = float("nan")

    @classmethod
    def from_matrix(cls, W, margin: float, level: int, **kw) -> "Witness":
        W = herm_part(np.asarray(W, complex))
        ev = np.linalg.eigvalsh(W)
        return cls(W, float(margin), float(ev[0]), float(ev[-1]), level, **kw)

    def scaled(self, c: float) -> "Witness":
        if c <= 0:
            raise ValueError("scale must be positive")
        return Witness(c * self.W, c * self.margin, c * self.eig_min, c * self.eig_max, self.source_level,
                       c * self.min_product_value)

    def to_json(self) -> dict:
        return {
            "W": matrix_to_json(self.W),
            "margin": self.margin,
            "eig_min": self.eig_min,
            "eig_max": self.eig_max,
            "source_level": self.source_level,
            "min_product_value": self.min_product_value,
        }

    @classmethod
    def from_json(cls, obj) -> "Witness":
        return cls.from_matrix(matrix_from_json(obj["W"], tol=1e-9), obj["margin"], int(obj["source_level"]),
                               min_product_value=float(obj.get("min_product_value", float("nan"))))


def product_state_minimum(W, d_A: int, d_B: int, samples: int = PRODUCT_SAMPLES, rng=None) -> float:
    """Smallest ``<ab|W|ab>`` over Haar-random pure product states."""
    rng = np.random.default_rng(rng)
    W = np.asarray(W).reshape(d_A, d_B, d_A, d_B)
    best = np.inf
    for start in range(0, samples, 2000):
        m = min(2000, samples - start)
        a = rng.normal(size=(m, d_A)) + 1j * rng.normal(size=(m, d_A))
        b = rng.normal(size=(m, d_B)) + 1j * rng.normal(size=(m, d_B))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        v = np.einsum("si,sj,ijkl,sk,sl->s", a.conj(), b.conj(), W, a, b).real
        best = min(best, v.min())
    return float(best)


def _family_lmi(fam: AffineStateFamily):
    """``rho(y, z) >= 0`` block plus the interval block, over ``(y, z)``."""
    gens = fam.generators()
    F0 = [fam.rho_part]
    F = [gens]
    if fam.n_z:
        i0, iF = interval_block(fam)
        full = np.zeros((len(gens),) + i0.shape, complex)
        full[fam.D_K:] = iF
        F0.append(i0)
        F.append(full)
    return F0, F


def witness_margin(W, fam: AffineStateFamily, opts: SdpOptions = SdpOptions()) -> float:
    """Upper bound on ``max Tr[W rho]`` over PSD family members (tight at the solver tolerance)."""
    W = herm_part(np.asarray(W, complex))
    w0 = float(np.einsum("ab,ba->", W, fam.rho_part).real)
    gens = fam.generators()
    if len(gens) == 0:
        if np.linalg.eigvalsh(herm_part(fam.rho_part))[0] < -1e-9:
            raise FamilyEmpty("the fully determined matrix is not PSD")
        return w0
    F0, F = _family_lmi(fam)
    feas = check_feasibility(BlockSdpProblem.from_blocks(F0, F, np.zeros(len(gens)), check=False),
                             [True] + [False] * (len(F0) - 1), opts)
    if feas.verdict == INFEASIBLE:
        raise FamilyEmpty(f"no PSD member (t_opt = {feas.t_opt:.3e})")
    g = np.einsum("ab,nba->n", W, gens).real
    sol = solve(BlockSdpProblem.from_blocks(F0, F, -g, check=False), opts)
    if sol.status != OPTIMAL:
        raise NumericalFailure(f"margin SDP ended with status {sol.status}")
    return w0 - min(sol.primal_obj, sol.dual_obj)


def build_witness(outcome: PptseOutcome, fam: AffineStateFamily, samples: int = PRODUCT_SAMPLES,
                  rng=None, opts: SdpOptions = SdpOptions()) -> Witness:
    if outcome.verdict != NO_EXTENSION:
        raise ValueError("a witness needs a NoExtension outcome")
    W = lambda_adjoint(outcome.dualZ, outcome.k, fam)
    margin = witness_margin(W, fam, opts)
    low = product_state_minimum(W, fam.d_A, fam.d_B, samples, rng) if samples else float("nan")
    if low < -1e-8:
        raise CertificateInconsistency(f"witness is negative ({low:.3e}) on a product state")
    return Witness.from_matrix(W, margin, outcome.k, min_product_value=low)


# ---------------------------------------------------------------------------
# bounds


def random_robustness_bound(t_opt: float, d_A: int, d_B: int, k: int = 2) -> float:
    """``d_A^k d_B t_opt``: noise needed to close the level-k min-t gap."""
    return max(0.0, d_A ** k * d_B * t_opt)


def robustness_sdp_bound(fam: AffineStateFamily, k: int, opts: SdpOptions = SdpOptions()) -> tuple[float, float]:
    """min-t restricted to PSD family members; returns ``(t, d_A^k d_B t)``."""
    model = build_extension_model(fam, k)
    prob, soft = assemble_lmi(model)
    n = prob.n
    nf = len(model.G_free)
    gens = fam.generators()
    F0 = list(prob.F0) + [fam.rho_part]
    F = list(prob.F) + [np.concatenate([gens, np.zeros((nf,) + fam.rho_part.shape, complex)])[:n]]
    res = check_feasibility(BlockSdpProblem.from_blocks(F0, F, np.zeros(n), check=False), list(soft) + [False], opts)
    if res.verdict == FEASIBLE:
        return res.t_opt, 0.0
    return res.t_opt, random_robustness_bound(res.t_opt, fam.d_A, fam.d_B, k)


def bsa_bound(w: Witness) -> float:
    """Lower bound on the entangled weight of the best separable approximation.

    ``W / |eig_min|`` is bounded below by ``-1``, which is all the argument needs.
    """
    if w.margin >= 0 or w.eig_min >= 0:
        return 0.0
    return max(0.0, w.margin / w.eig_min)


def witnessed_entanglement_bound(w: Witness, n: float, m: float) -> float:
    """Lower bound on ``E_{n,m}`` from the largest ``s`` with ``-n <= s W <= m``."""
    if n <= 0 or m <= 0:
        raise ValueError("n and m must be positive")
    if w.margin >= 0:
        return 0.0
    s = np.inf
    if w.eig_min < 0:
        s = min(s, n / -w.eig_min)
    if w.eig_max > 0:
        s = min(s, m / w.eig_max)
    return max(0.0, -s * w.margin)


DEFAULT_ENM = ((1.0, 1.0), (1.0, 10.0), (2.0, 1.0))


@dataclass(frozen=True)
class BoundsReport:
    t_opt: float
    random_robustness_lb: float
    bsa_lb: float
    e_nm_entries: tuple
    random_robustness_from_t: float = 0.0
    random_robustness_sdp: float = 0.0

    def to_json(self) -> dict:
        return {
            "t_opt": self.t_opt,
            "random_robustness_lb": self.random_robustness_lb,
            "random_robustness_from_t": self.random_robustness_from_t,
            "random_robustness_sdp": self.random_robustness_sdp,
            "bsa_lb": self.bsa_lb,
            "e_nm": [{"n": n, "m": m, "lb": v} for n, m, v in self.e_nm_entries],
        }


def compute_bounds(outcome: PptseOutcome, fam: AffineStateFamily, w: Witness,
                   enm=DEFAULT_ENM, opts: SdpOptions = SdpOptions()) -> BoundsReport:
    if outcome.verdict != NO_EXTENSION or w.margin >= 0:
        return BoundsReport(0.0, 0.0, 0.0, tuple((n, m, 0.0) for n, m in enm))
    from_t = random_robustness_bound(outcome.t_opt, fam.d_A, fam.d_B, outcome.k)
    _, from_sdp = robustness_sdp_bound(fam, outcome.k, opts)
    return BoundsReport(
        outcome.t_opt,
        max(from_t, from_sdp),
        bsa_bound(w),
        tuple((n, m, witnessed_entanglement_bound(w, n, m)) for n, m in enm),
        from_t,
        from_sdp,
    )
