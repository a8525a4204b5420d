"""Symmetric-subspace bases and copy-splitting isometries.

``Sym^N(C^d)`` is represented in its occupation-number basis: each basis vector
is the normalized symmetrization of a computational basis string with
occupation numbers ``n = (n_1, ..., n_d)``, ``sum(n) = N``.  All vectors are
real, so transposition commutes with the restriction to the subspace.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import comb, factorial

import numpy as np


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def occupations(N: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Occupation vectors of ``Sym^N(C^d)`` in a fixed order."""
    if N < 0 or d < 1:
        raise ValueError("need N >= 0 and d >= 1")
    return tuple(_compositions(N, d))


def sym_dim(N: int, d: int) -> int:
    return comb(N + d - 1, d - 1)


def _multinomial(n) -> int:
    out = factorial(sum(n))
    for x in n:
        out //= factorial(x)
    return out


@lru_cache(maxsize=None)
def split_isometry(N: int, j: int, d: int) -> np.ndarray:
    """Isometry ``Sym^N -> Sym^j (x) Sym^(N-j)``, shape ``(s_j * s_{N-j}, s_N)``."""
    if not 0 <= j <= N:
        raise ValueError("need 0 <= j <= N")
    big = occupations(N, d)
    left, right = occupations(j, d), occupations(N - j, d)
    ridx = {r: i for i, r in enumerate(right)}
    V = np.zeros((len(left) * len(right), len(big)))
    for col, n in enumerate(big):
        total = _multinomial(n)
        for li, l in enumerate(left):
            r = tuple(a - b for a, b in zip(n, l))
            if min(r) < 0:
                continue
            V[li * len(right) + ridx[r], col] = np.sqrt(_multinomial(l) * _multinomial(r) / total)
    V.setflags(write=False)
    return V


@lru_cache(maxsize=None)
def sym_embedding(N: int, d: int) -> np.ndarray:
    """Isometry ``Sym^N(C^d) -> (C^d)^(x)N``, shape ``(d^N, s_N)`` (small N only)."""
    occ = occupations(N, d)
    idx = {o: i for i, o in enumerate(occ)}
    V = np.zeros((d ** N, len(occ)))
    for row, word in enumerate(product(range(d), repeat=N)):
        n = tuple(word.count(b) for b in range(d))
        V[row, idx[n]] = 1.0
    V /= np.sqrt((V ** 2).sum(axis=0))
    V.setflags(write=False)
    return V
