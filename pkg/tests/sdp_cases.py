"""Random block SDPs built around known strictly feasible primal/dual points."""

import numpy as np

from entcert.sdp import BlockSdpProblem


def strictly_feasible_problem(seed: int):
    rng = np.random.default_rng(seed)
    nb = int(rng.integers(1, 4))
    dims = rng.integers(1, 6, size=nb)
    n = int(rng.integers(1, 8))
    x0 = rng.normal(size=n)
    F0, F, Z0 = [], [], []
    for m in dims:
        fb = rng.normal(size=(n, m, m)) + 1j * rng.normal(size=(n, m, m))
        fb = fb + np.conj(np.swapaxes(fb, 1, 2))
        s = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        s = s @ s.conj().T + np.eye(m)
        F0.append(s - np.tensordot(x0, fb, axes=1))
        F.append(fb)
        z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        Z0.append(z @ z.conj().T + np.eye(m))
    c = sum(np.einsum("iab,ba->i", f, z).real for f, z in zip(F, Z0))
    return BlockSdpProblem.from_blocks(F0, F, c), x0, Z0
