"""Entanglement of every state compatible with four interval measurements.

Runs the full pipeline on ``data/photon_intervals.json``, prints the witness and
bounds, then adds the ``mu13`` interval and shows how the certificate improves.

    python3 demos/photon_intervals.py
"""

from pathlib import Path

import numpy as np

from entcert import RunConfig, parse_constraints, run_detection
from entcert.constraints import make_constraint_set
from entcert.observables import builtin_observable

DATA = Path(__file__).with_name("data") / "photon_intervals.json"


def describe(v):
    b = v.bounds
    print(f"  verdict {v.kind} at k = {v.level}")
    print(f"  t_opt = {b.t_opt:.5f}, margin = {v.witness.margin:.5f}")
    print(f"  random robustness >= {b.random_robustness_lb:.4f}   BSA >= {b.bsa_lb:.4f}")
    for n, m, val in b.e_nm_entries:
        print(f"  E_{{{n:g},{m:g}}} >= {val:.4f}")


def main():
    cs = parse_constraints(DATA)
    print("four intervals:")
    v = run_detection(cs, RunConfig(max_outer_level=2))
    describe(v)
    np.set_printoptions(precision=4, suppress=True)
    print("  witness (normalized to trace 1):")
    print(v.witness.W / np.trace(v.witness.W).real)

    items = [(c.observable, c.lo, c.hi, c.label) for c in cs.constraints]
    items.append((builtin_observable("mu13"), 0.24, 0.25, "mu13"))
    print("\nwith mu13 in [0.24, 0.25]:")
    describe(run_detection(make_constraint_set(2, 2, items), RunConfig(max_outer_level=2)))


if __name__ == "__main__":
    main()
