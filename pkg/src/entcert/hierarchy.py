"""Level-k PPT symmetric extension test over an affine state family.

An extension of ``rho`` to ``k`` copies of ``A`` is expanded as::

    Xi = sum_{m, j} xi_{m j} S_m (x) s_j

where ``m`` runs over multisets of A-basis indices (``S_m`` is the sum over the
distinct orderings of ``s_{m_1} (x) ... (x) s_{m_k}``) and ``s_0 = 1/d``.  Since
only ``s_0`` has nonzero trace, tracing out copies ``2..k`` keeps exactly the
multisets with at least ``k - 1`` zeros; those coefficients are fixed by
``rho``, all others are free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .constraints import AffineStateFamily, coefficient_basis
from .hermitian import (
    SymmetricIndex,
    TensorLayout,
    hermitian_basis,
    herm_part,
    partial_trace,
    partial_transpose,
    symmetric_index_map,
    symmetrized_product,
)
from .sdp import (
    FEASIBLE,
    INFEASIBLE,
    BlockSdpProblem,
    FeasibilityResult,
    SdpOptions,
    check_feasibility,
)

EXTENSION_FOUND = "ExtensionFound"
NO_EXTENSION = "NoExtension"
BOUNDARY = "BoundaryUndecidable"


class InconsistentSolverOutput(RuntimeError):
    pass


def independent_transpose_cuts(k: int) -> list[tuple[int, int]]:
    """Classes ``(j, b)``: transpose ``j`` A-copies and B if ``b``.

    ``(j, b)`` and ``(k - j, 1 - b)`` differ by a global transpose, which keeps
    the spectrum, so one representative per class is kept.

    >>> independent_transpose_cuts(2)
    [(0, 1), (1, 0)]
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    reps = set()
    for j in range(k + 1):
        for b in (0, 1):
            rep = min((j, b), (k - j, 1 - b))
            if rep != (0, 0):
                reps.add(rep)
    return sorted(reps)


def cut_factors(k: int, cut: tuple[int, int]) -> list[int]:
    j, b = cut
    return list(range(j)) + ([k] if b else [])


@dataclass(frozen=True, eq=False)
class ExtensionTemplate:
    """Family-independent data of the level-k expansion for ``d_A x d_B``."""

    d_A: int
    d_B: int
    k: int
    sym_index: SymmetricIndex
    ext_basis: np.ndarray = field(repr=False)  # (n^2, D, D): ext of trace-orthonormal basis element p
    state_basis: np.ndarray = field(repr=False)  # (n^2, d, d)
    free: np.ndarray = field(repr=False)  # (F, D, D), unit Frobenius norm

    @property
    def layout(self) -> TensorLayout:
        return TensorLayout.extension(self.d_A, self.d_B, self.k)

    @property
    def dim(self) -> int:
        return self.d_A ** self.k * self.d_B

    def extend(self, x) -> np.ndarray:
        """Fixed-part extension of (a stack of) state-space matrices."""
        x = np.asarray(x)
        coef = np.einsum("pab,...ba->...p", self.state_basis, x)
        return np.einsum("...p,pij->...ij", coef, self.ext_basis)

    def extend_adjoint(self, y) -> np.ndarray:
        y = np.asarray(y)
        coef = np.einsum("pab,...ba->...p", self.ext_basis, y)
        return np.einsum("...p,pij->...ij", coef, self.state_basis)


@lru_cache(maxsize=16)
def extension_template(d_A: int, d_B: int, k: int) -> ExtensionTemplate:
    ba, bb = hermitian_basis(d_A), hermitian_basis(d_B)
    sidx = symmetric_index_map(d_A * d_A, k, d_B * d_B)
    ea, eb = ba.elements, bb.elements
    nA, nB = len(ea), len(eb)
    scale = 1.0 / np.sqrt(ba.alpha * bb.alpha)
    ext = []
    for i in range(nA):
        S = symmetrized_product(ea, (0,) * (k - 1) + (i,))
        for j in range(nB):
            # coefficient of s_i (x) s_j is Tr[x s_i (x) s_j] / (aA aB); the basis element is scaled by `scale`
            ext.append(np.kron(S, eb[j]) * scale)
    ext = np.array(ext)
    free = []
    for m in sidx.multisets:
        if m.count(0) >= k - 1:
            continue
        S = symmetrized_product(ea, m)
        for j in range(nB):
            g = np.kron(S, eb[j])
            free.append(g / np.linalg.norm(g))
    D = d_A ** k * d_B
    free = np.array(free).reshape(-1, D, D)
    ext.setflags(write=False)
    free.setflags(write=False)
    return ExtensionTemplate(d_A, d_B, k, sidx, ext, coefficient_basis(d_A, d_B), free)


@dataclass(frozen=True, eq=False)
class ExtensionModel:
    k: int
    family: AffineStateFamily = field(repr=False)
    template: ExtensionTemplate = field(repr=False)
    G0: np.ndarray = field(repr=False)
    G_y: np.ndarray = field(repr=False)
    G_z: np.ndarray = field(repr=False)
    G_free: np.ndarray = field(repr=False)

    @property
    def sym_index(self) -> SymmetricIndex:
        return self.template.sym_index

    @property
    def variable_count(self) -> int:
        return len(self.G_y) + len(self.G_z) + len(self.G_free)

    @property
    def generators(self) -> np.ndarray:
        return np.concatenate([self.G_y, self.G_z, self.G_free])

    def extension(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.G0 + np.tensordot(x, self.generators, axes=1) if len(x) else self.G0.copy()

    def split(self, x):
        ny, nz = len(self.G_y), len(self.G_z)
        return x[:ny], x[ny:ny + nz], x[ny + nz:]


def build_extension_model(fam: AffineStateFamily, k: int) -> ExtensionModel:
    tpl = extension_template(fam.d_A, fam.d_B, k)
    if k == 1:
        free = np.zeros((0, tpl.dim, tpl.dim), complex)
    else:
        free = tpl.free
    return ExtensionModel(
        k, fam, tpl, tpl.extend(fam.rho_part), tpl.extend(fam.mu), tpl.extend(fam.z_tau), free
    )


def lmi_blocks(model_or_tpl, X) -> list[np.ndarray]:
    """Untransposed block followed by one block per independent cut."""
    tpl = getattr(model_or_tpl, "template", model_or_tpl)
    lay = tpl.layout
    out = [X]
    for cut in independent_transpose_cuts(tpl.k):
        out.append(partial_transpose(X, lay, cut_factors(tpl.k, cut)))
    return out


def interval_block(fam: AffineStateFamily) -> tuple[np.ndarray, np.ndarray]:
    """``diag(z - lo, hi - z)`` as (constant, coefficients over z)."""
    b = fam.z_intervals
    nz = len(b)
    F0 = np.diag(np.concatenate([-b[:, 0], b[:, 1]])).astype(complex)
    F = np.zeros((nz, 2 * nz, 2 * nz), complex)
    for l in range(nz):
        F[l, l, l] = 1
        F[l, nz + l, nz + l] = -1
    return F0, F


def assemble_lmi(model: ExtensionModel) -> tuple[BlockSdpProblem, tuple[bool, ...]]:
    """Block problem over ``(y, z, free)`` with ``c = 0``, plus the soft-block mask."""
    gens = model.generators
    n = len(gens)
    F0 = lmi_blocks(model, model.G0)
    F = lmi_blocks(model, gens)
    soft = [True] * len(F0)
    fam = model.family
    if fam.n_z:
        i0, iF = interval_block(fam)
        full = np.zeros((n,) + i0.shape, complex)
        ny = len(model.G_y)
        full[ny:ny + fam.n_z] = iF
        F0.append(i0)
        F.append(full)
        soft.append(False)
    return BlockSdpProblem.from_blocks(F0, F, np.zeros(n), check=False), tuple(soft)


@dataclass(frozen=True, eq=False)
class PptseOutcome:
    verdict: str
    k: int
    t_opt: float
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    extension: np.ndarray | None = field(default=None, repr=False)
    dualZ: tuple | None = field(default=None, repr=False)
    feasibility: FeasibilityResult | None = field(default=None, repr=False)
    problem: BlockSdpProblem | None = field(default=None, repr=False)

    @property
    def soft(self):
        return self.feasibility.soft


def pptse_test(fam: AffineStateFamily, k: int, opts: SdpOptions = SdpOptions()) -> PptseOutcome:
    """Search for a level-k PPT symmetric extension of some family member."""
    model = build_extension_model(fam, k)
    prob, soft = assemble_lmi(model)
    res = check_feasibility(prob, soft, opts)
    if res.verdict == FEASIBLE:
        y, z, _ = model.split(res.x)
        z = np.clip(z, fam.z_intervals[:, 0], fam.z_intervals[:, 1]) if len(z) else z
        return PptseOutcome(EXTENSION_FOUND, k, res.t_opt, y, z, herm_part(model.extension(res.x)),
                            feasibility=res, problem=prob)
    if res.verdict == INFEASIBLE:
        return PptseOutcome(NO_EXTENSION, k, res.t_opt, dualZ=res.Z, feasibility=res, problem=prob)
    return PptseOutcome(BOUNDARY, k, res.t_opt, feasibility=res, problem=prob)


def reduce_extension(ext: np.ndarray, d_A: int, d_B: int, k: int) -> np.ndarray:
    if k == 1:
        return ext
    lay = TensorLayout.extension(d_A, d_B, k)
    return partial_trace(ext, lay, list(range(1, k)))


def candidate_state(fam: AffineStateFamily, outcome: PptseOutcome, tol: float = 1e-8) -> np.ndarray:
    """Family member selected by the extension search, after sanity checks."""
    if outcome.verdict != EXTENSION_FOUND:
        raise InconsistentSolverOutput(f"no candidate state for verdict {outcome.verdict}")
    rho = herm_part(fam.member(outcome.y, outcome.z, check=False))
    ev = np.linalg.eigvalsh(rho)[0]
    if ev < -tol:
        raise InconsistentSolverOutput(f"candidate state has eigenvalue {ev:.3e}")
    if abs(np.trace(rho).real - 1) > 1e-7:
        raise InconsistentSolverOutput(f"candidate state has trace {np.trace(rho).real:.9f}")
    b = fam.constraints.bounds()
    vals = fam.constraints.expectations(rho)
    bad = np.maximum(b[:, 0] - vals, vals - b[:, 1])
    if len(bad) and bad.max() > 1e-7:
        raise InconsistentSolverOutput(f"candidate state violates constraints by {bad.max():.3e}")
    red = reduce_extension(outcome.extension, fam.d_A, fam.d_B, outcome.k)
    if np.abs(red - rho).max() > 1e-7:
        raise InconsistentSolverOutput("extension does not reduce to the candidate state")
    return rho
