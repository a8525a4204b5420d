"""Two-photon polarization tomography observables.

Single-photon projectors in the ``{|H>, |V>}`` basis::

    mu0 = |H><H| + |V><V|      mu1 = |H><H|
    mu2 = |D><D|               mu3 = |R><R|

with ``|D> = (|H> - |V>)/sqrt(2)`` and ``|R> = (|H> - i|V>)/sqrt(2)``.
Two-photon observables are named ``muXY`` = ``muX (x) muY``.
"""

from __future__ import annotations

import re

import numpy as np

_H = np.array([1, 0], dtype=complex)
_V = np.array([0, 1], dtype=complex)
_D = (_H - _V) / np.sqrt(2)
_R = (_H - 1j * _V) / np.sqrt(2)

SINGLE = (
    np.eye(2, dtype=complex),
    np.outer(_H, _H.conj()),
    np.outer(_D, _D.conj()),
    np.outer(_R, _R.conj()),
)


def builtin_observable(name: str) -> np.ndarray:
    """Look up ``"mu0".."mu3"`` or a two-photon product ``"muXY"``.

    >>> builtin_observable("mu11").real.diagonal()
    array([1., 0., 0., 0.])
    """
    m = re.fullmatch(r"mu([0-3])([0-3])?", name)
    if m is None:
        raise KeyError(f"unknown builtin observable {name!r}")
    first = SINGLE[int(m.group(1))]
    if m.group(2) is None:
        return first.copy()
    return np.kron(first, SINGLE[int(m.group(2))])


def tomography_set() -> dict[str, np.ndarray]:
    """The 16 two-photon observables ``mu00 .. mu33``."""
    return {f"mu{i}{j}": builtin_observable(f"mu{i}{j}") for i in range(4) for j in range(4)}
