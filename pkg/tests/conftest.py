import numpy as np
import pytest

from entcert.constraints import make_constraint_set
from entcert.observables import builtin_observable

PHOTON_INTERVALS = [("mu11", 0.48, 0.5), ("mu12", 0.24, 0.25), ("mu22", 0.48, 0.5), ("mu33", 0.0, 0.02)]
FIFTH = ("mu13", 0.24, 0.25)


def photon_constraints(fifth: bool = False):
    rows = PHOTON_INTERVALS + ([FIFTH] if fifth else [])
    return make_constraint_set(2, 2, [(builtin_observable(n), lo, hi, n) for n, lo, hi in rows])


def photon_document(fifth: bool = False) -> dict:
    rows = PHOTON_INTERVALS + ([FIFTH] if fifth else [])
    return {"dA": 2, "dB": 2,
            "constraints": [{"observable": {"builtin": n}, "min": lo, "max": hi} for n, lo, hi in rows]}


def printed_witness() -> np.ndarray:
    """Four-decimal witness listed for the interval example (HH, HV, VH, VV ordering)."""
    P = lambda a, b: np.outer(np.eye(4)[a], np.eye(4)[b])  # noqa: E731
    HH, HV, VH, VV = range(4)
    Z = 0.1343 * P(HH, HH) + 0.3977 * P(HV, HV) + 0.234 * (P(VH, VH) + P(VV, VV))
    X = (0.0658 + 0.1583j) * (P(HH, VH) + P(HV, VV) + P(VH, VV))
    Y = -0.2242 * P(HH, VV) + 0.0925 * P(HV, VH)
    Z = Z + X + X.conj().T + Y + Y.conj().T
    return Z.astype(complex)


def bell() -> np.ndarray:
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return np.outer(phi, phi).astype(complex)


def werner(p: float) -> np.ndarray:
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return p * np.outer(psi, psi) + (1 - p) * np.eye(4) / 4


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_state(rng, n, rank=None):
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_product_mixture(rng, terms=4, d_A=2, d_B=2, pure=False):
    """Convex mixture of product states; full-rank factors unless ``pure``."""
    w = rng.dirichlet(np.ones(terms))
    ra, rb = (1, 1) if pure else (d_A, d_B)
    rho = 0
    for wi in w:
        rho = rho + wi * np.kron(random_state(rng, d_A, ra), random_state(rng, d_B, rb))
    return rho


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tomography_constraints(rho):
    """Exact values of all 16 two-photon observables for ``rho``."""
    from entcert.observables import tomography_set

    items = [(m, np.trace(m @ rho).real, np.trace(m @ rho).real, n) for n, m in tomography_set().items()]
    return make_constraint_set(2, 2, items)


def ppt_min_eig(rho):
    from entcert.hermitian import TensorLayout, partial_transpose

    return float(np.linalg.eigvalsh(partial_transpose(rho, TensorLayout((2, 2)), [1]))[0])


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
