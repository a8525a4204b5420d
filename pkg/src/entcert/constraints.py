"""Linear constraints on a bipartite density matrix and the affine family they define.

A constraint reads ``lo <= Tr[rho M] <= hi`` (``lo == hi`` for exact data).
All linear algebra runs over the real vector space of Hermitian matrices,
vectorized in the product basis ``sigma_i^A (x) sigma_j^B`` scaled to be
orthonormal under the trace inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .hermitian import NotHermitianError, hermitian, hermitian_basis, product_basis
from .observables import builtin_observable
from .serialize import FormatError, matrix_from_json, matrix_to_json, read_json

RANK_RTOL = 1e-9
RESIDUAL_TOL = 1e-9


class ConstraintError(ValueError):
    """Malformed or inconsistent constraint document."""


class IncompatibleConstraints(ValueError):
    """The constraints admit no Hermitian solution."""


class DegenerateDualError(ValueError):
    """Observables are linearly dependent, so no dual basis exists."""


@dataclass(frozen=True)
class Constraint:
    observable: np.ndarray = field(repr=False)
    lo: float
    hi: float
    label: str = ""

    @property
    def exact(self) -> bool:
        return self.lo == self.hi


@dataclass(frozen=True)
class ConstraintSet:
    d_A: int
    d_B: int
    constraints: tuple[Constraint, ...]
    normalized_flag: bool = False

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    def __len__(self):
        return len(self.constraints)

    @property
    def all_exact(self) -> bool:
        return all(c.exact for c in self.constraints)

    def observables(self) -> np.ndarray:
        return np.array([c.observable for c in self.constraints])

    def bounds(self) -> np.ndarray:
        return np.array([[c.lo, c.hi] for c in self.constraints], dtype=float).reshape(-1, 2)

    def expectations(self, rho) -> np.ndarray:
        return np.einsum("lab,ba->l", self.observables(), rho).real

    def violations(self, rho) -> np.ndarray:
        """Distance of each ``Tr[rho M_l]`` outside its interval (zero when inside)."""
        e = self.expectations(rho)
        b = self.bounds()
        return np.maximum(0, np.maximum(b[:, 0] - e, e - b[:, 1]))

    def with_constraint(self, observable, lo, hi=None, label="") -> "ConstraintSet":
        hi = lo if hi is None else hi
        c = _make_constraint(observable, lo, hi, label, self.dim)
        return replace(self, constraints=self.constraints + (c,))

    def to_json(self) -> dict:
        items = []
        for c in self.constraints:
            obs = {"builtin": c.label} if _is_builtin(c) else matrix_to_json(c.observable)
            entry = {"observable": obs}
            if c.label and "builtin" not in obs:
                entry["label"] = c.label
            if c.exact:
                entry["value"] = c.lo
            else:
                entry["min"], entry["max"] = c.lo, c.hi
            items.append(entry)
        return {"dA": self.d_A, "dB": self.d_B, "constraints": items, "assume_normalized": False}


def _is_builtin(c: Constraint) -> bool:
    try:
        return np.array_equal(builtin_observable(c.label), c.observable)
    except KeyError:
        return False


def _make_constraint(observable, lo, hi, label, dim) -> Constraint:
    try:
        m = hermitian(observable)
    except NotHermitianError as exc:
        raise ConstraintError(f"observable {label or ''}: {exc}") from exc
    if m.shape != (dim, dim):
        raise ConstraintError(f"observable {label or ''} has dimension {m.shape[0]}, expected {dim}")
    lo, hi = float(np.real(lo)), float(np.real(hi))
    if not lo <= hi:
        raise ConstraintError(f"invalid interval [{lo}, {hi}] for {label or 'observable'}")
    return Constraint(m, lo, hi, label)


def make_constraint_set(d_A: int, d_B: int, items, assume_normalized: bool = True) -> ConstraintSet:
    """Build a set from ``(observable, lo, hi[, label])`` tuples."""
    dim = d_A * d_B
    cons = []
    for it in items:
        obs, lo, hi, *rest = it
        cons.append(_make_constraint(obs, lo, hi, rest[0] if rest else "", dim))
    cs = ConstraintSet(d_A, d_B, tuple(cons))
    return ensure_normalization(cs) if assume_normalized else cs


def ensure_normalization(cs: ConstraintSet) -> ConstraintSet:
    eye = np.eye(cs.dim)
    for c in cs.constraints:
        if c.lo == c.hi == 1 and np.allclose(c.observable, eye, atol=1e-12):
            return cs
    norm = Constraint(eye.astype(complex), 1.0, 1.0, "trace")
    return ConstraintSet(cs.d_A, cs.d_B, cs.constraints + (norm,), True)


def parse_constraints(document) -> ConstraintSet:
    """Validate a constraint document (dict, JSON path) into a :class:`ConstraintSet`."""
    if isinstance(document, (str, Path)):
        document = read_json(document)
    try:
        d_A, d_B = int(document["dA"]), int(document["dB"])
        raw = document["constraints"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConstraintError(f"missing dA/dB/constraints: {exc}") from exc
    if d_A < 1 or d_B < 1:
        raise ConstraintError("subsystem dimensions must be positive")
    items = []
    for n, entry in enumerate(raw):
        obs = entry.get("observable")
        if isinstance(obs, dict) and "builtin" in obs:
            label = obs["builtin"]
            try:
                m = builtin_observable(label)
            except KeyError as exc:
                raise ConstraintError(str(exc)) from exc
        else:
            label = entry.get("label", f"M{n}")
            try:
                m = matrix_from_json(obs)
            except (FormatError, NotHermitianError) as exc:
                raise ConstraintError(f"constraint {n}: {exc}") from exc
        if "value" in entry:
            lo = hi = entry["value"]
        elif "min" in entry and "max" in entry:
            lo, hi = entry["min"], entry["max"]
        else:
            raise ConstraintError(f"constraint {n}: need 'value' or 'min'/'max'")
        items.append((m, lo, hi, label))
    return make_constraint_set(d_A, d_B, items, bool(document.get("assume_normalized", True)))


# ---------------------------------------------------------------------------
# real coefficient space


def coefficient_basis(d_A: int, d_B: int) -> np.ndarray:
    """Product basis scaled to be trace-orthonormal, shape ``(n^2, n, n)``."""
    ba, bb = hermitian_basis(d_A), hermitian_basis(d_B)
    return product_basis(ba, bb) / np.sqrt(ba.alpha * bb.alpha)


def constraint_map(cs: ConstraintSet) -> np.ndarray:
    """Matrix ``A`` with ``A @ coords(rho) = (Tr[rho M_l])_l``."""
    basis = coefficient_basis(cs.d_A, cs.d_B)
    return np.einsum("pab,lba->lp", basis, cs.observables()).real


def _rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


@dataclass(frozen=True, eq=False)
class AffineStateFamily:
    """All Hermitian ``rho = rho_part + sum_l z_l tau_l + sum_a y_a mu_a``.

    ``tau`` holds one dual matrix per constraint (empty for the exact route);
    only constraints with ``lo < hi`` carry a free ``z`` variable, the others
    are folded into ``rho_part``.
    """

    d_A: int
    d_B: int
    rho_part: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)
    intervals: np.ndarray = field(repr=False)
    constraints: ConstraintSet = field(repr=False)

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    @property
    def D_K(self) -> int:
        return len(self.mu)

    @property
    def free_z(self) -> np.ndarray:
        b = self.intervals
        return np.flatnonzero(b[:, 0] < b[:, 1]) if len(b) else np.zeros(0, dtype=int)

    @property
    def z_tau(self) -> np.ndarray:
        return self.tau[self.free_z] if len(self.tau) else np.zeros((0, self.dim, self.dim), complex)

    @property
    def z_intervals(self) -> np.ndarray:
        return self.intervals[self.free_z] if len(self.intervals) else np.zeros((0, 2))

    @property
    def n_z(self) -> int:
        return len(self.free_z)

    @property
    def fully_determined(self) -> bool:
        return self.D_K == 0 and self.n_z == 0

    def generators(self) -> np.ndarray:
        """Matrices multiplying ``(y, z)`` in that order."""
        return np.concatenate([self.mu, self.z_tau]).reshape(-1, self.dim, self.dim)

    def member(self, y=None, z=None, check: bool = True) -> np.ndarray:
        y = np.zeros(self.D_K) if y is None else np.asarray(y, dtype=float)
        z = np.zeros(0) if z is None else np.asarray(z, dtype=float)
        if y.shape != (self.D_K,) or z.shape != (self.n_z,):
            raise ValueError(f"expected {self.D_K} y and {self.n_z} z values")
        if check and self.n_z:
            b = self.z_intervals
            if np.any(z < b[:, 0] - 1e-12) or np.any(z > b[:, 1] + 1e-12):
                raise ValueError("z outside its declared interval")
        out = self.rho_part + np.einsum("a,aij->ij", y, self.mu)
        if self.n_z:
            out = out + np.einsum("l,lij->ij", z, self.z_tau)
        return out

    def default_z(self) -> np.ndarray:
        return self.z_intervals.mean(axis=1)


def affine_solution_space(cs: ConstraintSet) -> AffineStateFamily:
    """Minimum-norm particular solution plus orthonormal nullspace (exact constraints)."""
    if not cs.all_exact:
        raise ValueError("interval constraints need dual_basis_tau")
    basis = coefficient_basis(cs.d_A, cs.d_B)
    A = constraint_map(cs)
    m = cs.bounds()[:, 0]
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    r = _rank(s)
    coef = Vt[:r].T @ ((U[:, :r].T @ m) / s[:r]) if r else np.zeros(A.shape[1])
    resid = np.max(np.abs(A @ coef - m)) if len(m) else 0.0
    if resid > RESIDUAL_TOL * max(1.0, np.max(np.abs(m), initial=0.0)):
        raise IncompatibleConstraints(f"constraints admit no Hermitian solution (residual {resid:.2e})")
    rho_part = np.einsum("p,pab->ab", coef, basis)
    mu = np.einsum("ap,pij->aij", Vt[r:], basis)
    empty = np.zeros((0, cs.dim, cs.dim), complex)
    return AffineStateFamily(cs.d_A, cs.d_B, rho_part, mu, empty, np.zeros((0, 2)), cs)


def merge_parallel(cs: ConstraintSet) -> ConstraintSet:
    """Merge constraints whose observables are scalar multiples of each other.

    ``M' = r M`` turns the bound on ``Tr[rho M']`` into one on ``Tr[rho M]``;
    the intervals are intersected.  Empty intersections are incompatible.
    """
    A = constraint_map(cs)
    norms = np.linalg.norm(A, axis=1)
    scale = max(norms.max(initial=0.0), 1.0)
    kept: list[int] = []
    bounds: dict[int, list[float]] = {}
    for l, c in enumerate(cs.constraints):
        if norms[l] <= RANK_RTOL * scale:
            if c.lo > 1e-12 or c.hi < -1e-12:
                raise IncompatibleConstraints(f"zero observable with nonzero value ({c.label})")
            continue
        for k in kept:
            r = A[l] @ A[k] / norms[k] ** 2
            if np.linalg.norm(A[l] - r * A[k]) <= RANK_RTOL * norms[l]:
                lo, hi = sorted((c.lo / r, c.hi / r))
                b = bounds[k]
                b[0], b[1] = max(b[0], lo), min(b[1], hi)
                if b[0] > b[1] + RESIDUAL_TOL:
                    raise IncompatibleConstraints(f"constraints {cs.constraints[k].label} and {c.label} conflict")
                b[1] = max(b[0], b[1])
                break
        else:
            kept.append(l)
            bounds[l] = [c.lo, c.hi]
    new = tuple(replace(cs.constraints[k], lo=bounds[k][0], hi=bounds[k][1]) for k in kept)
    return replace(cs, constraints=new)


def dual_basis_tau(cs: ConstraintSet) -> AffineStateFamily:
    """Dual matrices ``Tr[tau_p M_l] = delta_pl`` (minimum norm) plus the nullspace."""
    basis = coefficient_basis(cs.d_A, cs.d_B)
    A = constraint_map(cs)
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    r = _rank(s)
    if r < len(cs):
        raise DegenerateDualError(f"{len(cs)} observables span only {r} dimensions")
    pinv = Vt[:r].T @ (U[:, :r].T / s[:r, None])  # (n^2, L)
    tau = np.einsum("pl,pab->lab", pinv, basis)
    mu = np.einsum("ap,pij->aij", Vt[r:], basis)
    b = cs.bounds()
    fixed = b[:, 0] == b[:, 1]
    rho_part = np.einsum("l,lab->ab", b[fixed, 0], tau[fixed])
    return AffineStateFamily(cs.d_A, cs.d_B, rho_part, mu, tau, b, cs)


def build_family(cs: ConstraintSet) -> AffineStateFamily:
    """Route exact sets through the least-squares solution, interval sets through the dual basis."""
    if cs.all_exact:
        return affine_solution_space(cs)
    return dual_basis_tau(merge_parallel(cs))


def family_from_state(rho, d_A: int, d_B: int) -> AffineStateFamily:
    """Fully determined family: exact values of every product-basis observable."""
    rho = hermitian(rho)
    basis = coefficient_basis(d_A, d_B)
    vals = np.einsum("pab,ba->p", basis, rho).real
    items = [(basis[p], vals[p], vals[p], f"b{p}") for p in range(len(basis))]
    return affine_solution_space(make_constraint_set(d_A, d_B, items, assume_normalized=False))
