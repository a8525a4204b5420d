"""JSON interchange for Hermitian matrices: ``{"dim": n, "re": [[...]], "im": [[...]]}``."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .hermitian import hermitian


class FormatError(ValueError):
    pass


def matrix_to_json(x) -> dict:
    x = np.asarray(x, dtype=complex)
    out = {"dim": int(x.shape[0]), "re": x.real.tolist()}
    if np.any(x.imag != 0):
        out["im"] = x.imag.tolist()
    return out


def matrix_from_json(obj, tol: float = 1e-12) -> np.ndarray:
    try:
        n = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise FormatError(f"matrix entries do not match dim={n}")
    return hermitian(re + 1j * im, tol=tol)


def read_json(path) -> dict:
    with open(Path(path)) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def write_json(obj, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
