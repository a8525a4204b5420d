"""Interleaved outer (extension) and inner (separability) tests."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from .constraints import ConstraintSet, build_family
from .hierarchy import BOUNDARY, EXTENSION_FOUND, NO_EXTENSION, candidate_state, pptse_test
from .inner import INNER_MEMBER, InnerCertificate, InnerOutcome, family_inner_test, verify_inner_certificate
from .sdp import NumericalFailure, SdpOptions, dump_problem, verify_solution
from .serialize import write_json
from .witness import (
    DEFAULT_ENM,
    PRODUCT_SAMPLES,
    BoundsReport,
    CertificateInconsistency,
    Witness,
    build_witness,
    compute_bounds,
)

log = logging.getLogger(__name__)

ENTANGLED = "Entangled"
SEPARABLE_COMPATIBLE = "SeparableCompatible"
UNDECIDED = "Undecided"


@dataclass(frozen=True)
class RunConfig:
    max_outer_level: int = 3
    max_inner_level: int = 8
    feas_margin: float = 1e-7
    gap_tol: float = 1e-7
    feas_tol: float = 1e-8
    sample_count: int = PRODUCT_SAMPLES
    report_path: str | None = None
    seed: int = 0
    enm: tuple = DEFAULT_ENM
    debug_dump: str | None = None

    def __post_init__(self):
        if self.max_outer_level < 1 or self.max_inner_level < 1:
            raise ValueError("levels must be at least 1")
        if min(self.feas_margin, self.gap_tol, self.feas_tol) <= 0:
            raise ValueError("tolerances must be positive")

    @property
    def sdp_options(self) -> SdpOptions:
        return SdpOptions(feas_tol=self.feas_tol, gap_tol=self.gap_tol, feas_margin=self.feas_margin)

    def to_json(self) -> dict:
        return {
            "max_outer_level": self.max_outer_level,
            "max_inner_level": self.max_inner_level,
            "feas_margin": self.feas_margin,
            "gap_tol": self.gap_tol,
            "feas_tol": self.feas_tol,
            "sample_count": self.sample_count,
            "seed": self.seed,
        }


@dataclass
class Verdict:
    kind: str
    constraints: ConstraintSet = field(repr=False)
    level: int | None = None
    witness: Witness | None = None
    bounds: BoundsReport | None = None
    certificate: InnerCertificate | None = None
    max_k: int | None = None
    max_N: int | None = None
    levels: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def boundary_flags(self) -> list:
        return [r for r in self.levels if r["verdict"] == BOUNDARY]

    @property
    def exit_code(self) -> int:
        return {ENTANGLED: 0, SEPARABLE_COMPATIBLE: 1, UNDECIDED: 2}[self.kind]


def _dump_failure(exc: NumericalFailure, cfg: RunConfig, where: str):
    path = cfg.debug_dump or (cfg.report_path + ".failed-sdp.json" if cfg.report_path else None)
    if path and exc.problem is not None:
        write_json(dump_problem(exc.problem, note=where), path)
        log.error("failing SDP written to %s", path)
        exc.dump_path = str(Path(path))


def run_detection(cs: ConstraintSet, cfg: RunConfig = RunConfig()) -> Verdict:
    """Decide whether every state compatible with ``cs`` is entangled."""
    t_start = time.perf_counter()
    fam = build_family(cs)
    opts = cfg.sdp_options
    levels: list[dict] = []
    inner_cache: dict[int, InnerOutcome] = {}
    timings = {"outer": 0.0, "inner": 0.0}
    for k in range(1, cfg.max_outer_level + 1):
        t0 = time.perf_counter()
        try:
            out = pptse_test(fam, k, opts)
        except NumericalFailure as exc:
            _dump_failure(exc, cfg, f"outer level {k}")
            raise
        timings["outer"] += time.perf_counter() - t0
        levels.append({"test": "outer", "level": k, "verdict": out.verdict, "t_opt": out.t_opt,
                       "iterations": out.feasibility.solution.iterations})
        if out.verdict == NO_EXTENSION:
            res = verify_solution(out.problem, out.feasibility, opts)
            if not res.passed:
                raise CertificateInconsistency("infeasibility certificate failed re-verification: "
                                               + "; ".join(res.lines()))
            w = build_witness(out, fam, cfg.sample_count, cfg.seed, opts)
            if not w.margin < 0:
                raise CertificateInconsistency(f"witness margin {w.margin:.3e} is not negative")
            bounds = compute_bounds(out, fam, w, cfg.enm, opts)
            timings["total"] = time.perf_counter() - t_start
            return Verdict(ENTANGLED, cs, k, witness=w, bounds=bounds, levels=levels,
                           residuals={name: val for name, val, _, _ in res.entries}, timings=timings)
        if out.verdict == EXTENSION_FOUND:
            candidate_state(fam, out)
            for N in range(1, cfg.max_inner_level + 1):
                if N not in inner_cache:
                    t0 = time.perf_counter()
                    try:
                        inner_cache[N] = family_inner_test(fam, N, opts)
                    except NumericalFailure as exc:
                        _dump_failure(exc, cfg, f"inner level {N}")
                        raise
                    timings["inner"] += time.perf_counter() - t0
                    inn = inner_cache[N]
                    levels.append({"test": "inner", "level": N, "verdict": inn.verdict, "t_opt": inn.t_opt})
                inn = inner_cache[N]
                if inn.verdict == INNER_MEMBER:
                    rep = verify_inner_certificate(inn.certificate, fam, opts)
                    if not rep.passed:
                        raise CertificateInconsistency("inner certificate failed re-verification: "
                                                       + "; ".join(rep.lines()))
                    timings["total"] = time.perf_counter() - t_start
                    return Verdict(SEPARABLE_COMPATIBLE, cs, N, certificate=inn.certificate, levels=levels,
                                   residuals={name: val for name, val, _, _ in rep.entries}, timings=timings)
    timings["total"] = time.perf_counter() - t_start
    return Verdict(UNDECIDED, cs, None, max_k=cfg.max_outer_level,
                   max_N=cfg.max_inner_level if inner_cache else 0, levels=levels, timings=timings)

