"""Hermitian matrix algebra on tensor-product spaces.

Matrices are plain complex ``numpy`` arrays.  :func:`hermitian` is the single
entry point that validates (and symmetrizes) user-supplied matrices; every other
function here assumes Hermitian input and preserves Hermiticity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12


class LayoutError(ValueError):
    """Tensor layout inconsistent with a matrix or with a label selection."""


class NotHermitianError(ValueError):
    pass


def hermitian(x, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``x`` as a complex Hermitian array.

    Inputs within ``tol`` (max-abs, relative to ``max(1, |x|)``) of Hermitian are
    symmetrized as ``(x + x^H) / 2``; anything else raises
    :class:`NotHermitianError`.
    """
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NotHermitianError(f"expected a non-empty square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol * max(1.0, float(np.max(np.abs(a)))):
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e}")
    return (a + a.conj().T) / 2


def dag(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2).conj()


def herm_part(x: np.ndarray) -> np.ndarray:
    return (x + dag(x)) / 2


# ---------------------------------------------------------------------------
# operator bases


@dataclass(frozen=True)
class OperatorBasis:
    """Trace-orthogonal Hermitian basis of ``d x d`` matrices.

    ``Tr[s_i s_j] = alpha * delta_ij`` and ``Tr[s_i] = delta_i0``: the first
    element (``identity / d``) carries all the trace.
    """

    d: int
    elements: np.ndarray = field(repr=False)  # (d*d, d, d)
    alpha: float

    def __len__(self):
        return len(self.elements)


@lru_cache(maxsize=None)
def _gell_mann(d: int) -> np.ndarray:
    mats = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            mats += [s, a]
    for l in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.arange(l), np.arange(l)] = 1
        g[l, l] = -l
        mats.append(g * np.sqrt(2 / (l * (l + 1))))
    out = np.array(mats)
    out[0] /= d
    # generalized Gell-Mann matrices have Tr[g^2] = 2; rescale to Tr[s^2] = 1/d
    out[1:] /= np.sqrt(2 * d)
    out.setflags(write=False)
    return out


def hermitian_basis(d: int) -> OperatorBasis:
    """Identity/d followed by scaled generalized Gell-Mann generators (alpha = 1/d).

    >>> b = hermitian_basis(2)
    >>> b.alpha, len(b)
    (0.5, 4)
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    return OperatorBasis(d, _gell_mann(d), 1.0 / d)


def product_basis(basis_a: OperatorBasis, basis_b: OperatorBasis) -> np.ndarray:
    """All ``sigma_i^A (x) sigma_j^B`` in row-major ``(i, j)`` order."""
    ea, eb = basis_a.elements, basis_b.elements
    da, db = basis_a.d, basis_b.d
    out = np.einsum("iab,jcd->ijacbd", ea, eb).reshape(len(ea) * len(eb), da * db, da * db)
    return out


def expand_in_basis(rho, basis_a: OperatorBasis, basis_b: OperatorBasis) -> np.ndarray:
    """Real coefficients ``rho_ij = Tr[rho s_i^A (x) s_j^B] / (alpha_A alpha_B)``."""
    rho = np.asarray(rho)
    n = basis_a.d * basis_b.d
    if rho.shape != (n, n):
        raise LayoutError(f"matrix shape {rho.shape} does not match {basis_a.d}x{basis_b.d}")
    prod = product_basis(basis_a, basis_b)
    coef = np.einsum("pab,ba->p", prod, rho).real / (basis_a.alpha * basis_b.alpha)
    return coef.reshape(len(basis_a), len(basis_b))


def reconstruct(coef, basis_a: OperatorBasis, basis_b: OperatorBasis) -> np.ndarray:
    prod = product_basis(basis_a, basis_b)
    return np.einsum("p,pab->ab", np.asarray(coef, dtype=float).ravel(), prod)


def orthonormal_hermitian_basis(n: int) -> np.ndarray:
    """Basis of ``n x n`` Hermitian matrices orthonormal under ``Re Tr[X Y]``."""
    return _orthonormal_hermitian_basis(n)


@lru_cache(maxsize=None)
def _orthonormal_hermitian_basis(n: int) -> np.ndarray:
    out = np.zeros((n * n, n, n), dtype=complex)
    q = 0
    for j in range(n):
        out[q, j, j] = 1
        q += 1
    r = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            out[q, j, k] = out[q, k, j] = r
            out[q + 1, j, k], out[q + 1, k, j] = -1j * r, 1j * r
            q += 2
    out.setflags(write=False)
    return out


def herm_coords(x: np.ndarray, n: int | None = None) -> np.ndarray:
    """Coordinates of (a stack of) Hermitian matrices in :func:`orthonormal_hermitian_basis`."""
    x = np.asarray(x)
    n = x.shape[-1] if n is None else n
    basis = orthonormal_hermitian_basis(n)
    return np.einsum("qab,...ba->...q", basis, x).real


def from_herm_coords(v: np.ndarray, n: int) -> np.ndarray:
    return np.einsum("...q,qab->...ab", v, orthonormal_hermitian_basis(n))


# ---------------------------------------------------------------------------
# tensor layouts


@dataclass(frozen=True)
class TensorLayout:
    """Ordered tensor factors with dimensions and labels."""

    factor_dims: tuple[int, ...]
    factor_labels: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise LayoutError(f"invalid factor dimensions {self.factor_dims}")
        labels = tuple(self.factor_labels) or tuple(str(i) for i in range(len(dims)))
        if len(labels) != len(dims) or len(set(labels)) != len(labels):
            raise LayoutError("need one distinct label per factor")
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "factor_labels", labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def index(self, label) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < len(self.factor_dims):
                raise LayoutError(f"factor index {label} out of range")
            return int(label)
        try:
            return self.factor_labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown factor label {label!r}") from None

    def indices(self, labels) -> list[int]:
        if isinstance(labels, (str, int, np.integer)):
            labels = [labels]
        return sorted({self.index(lab) for lab in labels})

    @classmethod
    def bipartite(cls, d_a: int, d_b: int) -> "TensorLayout":
        return cls((d_a, d_b), ("A", "B"))

    @classmethod
    def extension(cls, d_a: int, d_b: int, k: int) -> "TensorLayout":
        return cls((d_a,) * k + (d_b,), tuple(f"A{i + 1}" for i in range(k)) + ("B",))


def _check(x: np.ndarray, layout: TensorLayout):
    if x.shape[-2:] != (layout.dim, layout.dim):
        raise LayoutError(f"matrix of shape {x.shape[-2:]} does not fit layout {layout.factor_dims}")


def partial_trace(x, layout: TensorLayout, traced) -> np.ndarray:
    """Trace out the factors in ``traced``; works on stacks ``(..., n, n)``."""
    x = np.asarray(x)
    _check(x, layout)
    idx = layout.indices(traced)
    nf = len(layout.factor_dims)
    if not idx or len(idx) == nf:
        raise LayoutError("traced factors must be a non-empty proper subset")
    lead = x.shape[:-2]
    t = x.reshape(lead + layout.factor_dims * 2)
    keep = [i for i in range(nf) if i not in idx]
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows, cols = list(letters[:nf]), list(letters[nf:2 * nf])
    for i in idx:
        cols[i] = rows[i]
    out_sub = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    sub = "..." + "".join(rows) + "".join(cols) + "->..." + out_sub
    res = np.einsum(sub, t)
    m = int(np.prod([layout.factor_dims[i] for i in keep]))
    return res.reshape(lead + (m, m))


def partial_transpose(x, layout: TensorLayout, transposed) -> np.ndarray:
    """Transpose the factors in ``transposed``; works on stacks ``(..., n, n)``."""
    x = np.asarray(x)
    _check(x, layout)
    idx = layout.indices(transposed)
    nf = len(layout.factor_dims)
    lead = x.shape[:-2]
    if not idx:
        return x.copy()
    t = x.reshape(lead + layout.factor_dims * 2)
    off = len(lead)
    perm = list(range(off + 2 * nf))
    for i in idx:
        perm[off + i], perm[off + nf + i] = perm[off + nf + i], perm[off + i]
    return t.transpose(perm).reshape(x.shape)


def tensor_product(*mats) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def min_eigenvalue(x) -> float:
    return float(np.linalg.eigvalsh(np.asarray(x))[0])


def eig_range(x) -> tuple[float, float]:
    w = np.linalg.eigvalsh(np.asarray(x))
    return float(w[0]), float(w[-1])


def is_psd(x, tol: float = 1e-10) -> bool:
    return min_eigenvalue(x) >= -tol


def swap_subsystems(x, d_a: int, d_b: int) -> np.ndarray:
    """Reorder ``A (x) B`` as ``B (x) A``."""
    x = np.asarray(x)
    lead = x.shape[:-2]
    t = x.reshape(lead + (d_a, d_b, d_a, d_b))
    o = len(lead)
    perm = list(range(o)) + [o + 1, o, o + 3, o + 2]
    return t.transpose(perm).reshape(x.shape)


# ---------------------------------------------------------------------------
# copy-symmetric coefficient indexing


@dataclass(frozen=True)
class SymmetricIndex:
    """Free coefficients of a copy-symmetric expansion.

    Entries are ``(multiset, j)`` with ``multiset`` a sorted tuple of ``k``
    zero-based single-copy basis indices and ``j`` the second-factor index.
    Index 0 is the identity element of the single-copy basis.
    """

    d2: int
    k: int
    dB2: int
    multisets: tuple[tuple[int, ...], ...]

    @property
    def entries(self) -> list[tuple[tuple[int, ...], int]]:
        return [(m, j) for m in self.multisets for j in range(self.dB2)]

    def __len__(self):
        return len(self.multisets) * self.dB2


def symmetric_index_map(d2: int, k: int, dB2: int) -> SymmetricIndex:
    if d2 < 1 or dB2 < 1 or k < 1:
        raise ValueError("d2, dB2 and k must be positive")
    ms = tuple(itertools.combinations_with_replacement(range(d2), k))
    assert len(ms) == comb(d2 + k - 1, k)
    return SymmetricIndex(d2, k, dB2, ms)


def symmetrized_product(factors: Sequence[np.ndarray], multiset: Sequence[int]) -> np.ndarray:
    """Sum over distinct orderings of ``factors[i1] (x) ... (x) factors[ik]``."""
    total = None
    for order in sorted(set(itertools.permutations(multiset))):
        term = tensor_product(*(factors[i] for i in order))
        total = term if total is None else total + term
    return total


def copy_permutation(d: int, k: int, perm: Sequence[int], d_rest: int = 1) -> np.ndarray:
    """Unitary permuting ``k`` copies of ``C^d`` (followed by a spectator factor)."""
    n = d ** k * d_rest
    eye = np.eye(n).reshape((d,) * k + (d_rest,) + (n,))
    axes = list(perm) + [k, k + 1]
    return eye.transpose(axes).reshape(n, n)
