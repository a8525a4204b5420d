"""JSON verdict reports and their independent re-verification."""

from __future__ import annotations

from importlib import metadata

import numpy as np

from .constraints import ConstraintSet, build_family, parse_constraints
from .driver import ENTANGLED, SEPARABLE_COMPATIBLE, UNDECIDED, RunConfig, Verdict
from .inner import InnerCertificate, verify_inner_certificate
from .sdp import ResidualReport, SdpOptions
from .serialize import read_json, write_json
from .witness import FamilyEmpty, Witness, product_state_minimum, witness_margin

REPORT_FORMAT = 1


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def emit_report(v: Verdict, cfg: RunConfig = RunConfig(), path=None) -> dict:
    """Serialize a verdict; writes to ``path`` (or ``cfg.report_path``) when given."""
    doc = {
        "format": REPORT_FORMAT,
        "tool": {"name": "entcert", "version": _version()},
        "config": cfg.to_json(),
        "verdict": v.kind,
        "level": v.level,
        "constraints": v.constraints.to_json(),
    }
    if v.kind == ENTANGLED:
        doc["witness"] = v.witness.to_json()
        doc["bounds"] = v.bounds.to_json()
    elif v.kind == SEPARABLE_COMPATIBLE:
        doc["inner_certificate"] = v.certificate.to_json()
    else:
        doc["max_outer_level"] = v.max_k
        doc["max_inner_level"] = v.max_N
        doc["boundary_flags"] = v.boundary_flags
    doc["levels"] = v.levels
    doc["residuals"] = v.residuals
    doc["timings"] = v.timings
    path = path or cfg.report_path
    if path:
        try:
            write_json(doc, path)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return doc


def verify_command(document, constraints=None, opts: SdpOptions = SdpOptions(), samples: int = 10_000,
                   seed: int = 0) -> ResidualReport:
    """Re-check a report (or a bare witness/certificate) from its serialized content.

    ``constraints`` overrides the constraint set embedded in the report.
    """
    if not isinstance(document, dict):
        document = read_json(document)
    if constraints is not None:
        cs = constraints if isinstance(constraints, ConstraintSet) else parse_constraints(constraints)
    elif "constraints" in document:
        cs = parse_constraints(document["constraints"])
    else:
        raise ValueError("no constraint set given or embedded")
    fam = build_family(cs)
    kind = document.get("verdict")
    if kind is None:
        kind = ENTANGLED if "W" in document else SEPARABLE_COMPATIBLE
        document = {"witness": document} if kind == ENTANGLED else {"inner_certificate": document}
    rep = ResidualReport()
    if kind == ENTANGLED:
        w = Witness.from_json(document["witness"])
        try:
            margin = witness_margin(w.W, fam, opts)
        except FamilyEmpty:
            rep.add("family_nonempty", 1.0, 0.0, False)
            return rep
        rep.add("margin", margin, 0.0, margin < 0)
        ev = np.linalg.eigvalsh(w.W)
        rec = document["witness"]
        for name, val in (("eig_min", ev[0]), ("eig_max", ev[-1])):
            if name in rec:
                err = abs(val - rec[name])
                rep.add(name, err, 1e-10, err <= 1e-10)
        low = product_state_minimum(w.W, cs.d_A, cs.d_B, samples, seed)
        rep.add("product_states", max(0.0, -low), 1e-8, low >= -1e-8)
        if "margin" in rec:
            degr = max(0.0, margin - rec["margin"])
            rep.add("margin_degradation", degr, np.inf, True)
    elif kind == SEPARABLE_COMPATIBLE:
        cert = InnerCertificate.from_json(document["inner_certificate"])
        rep.entries.extend(verify_inner_certificate(cert, fam, opts).entries)
    elif kind == UNDECIDED:
        rep.add("nothing_to_verify", 0.0, 0.0, True)
    else:
        raise ValueError(f"unknown verdict {kind!r}")
    return rep
