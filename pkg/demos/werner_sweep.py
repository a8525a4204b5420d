"""Where the two hierarchies stop on the Werner line.

For each mixing weight p the state p|psi-><psi-| + (1-p) I/4 is handed over as
16 exact tomography values. Entangled states fall at k = 1; separable ones need
larger inner levels as p approaches 1/3.

    python3 demos/werner_sweep.py
"""

import time

import numpy as np

from entcert import RunConfig, run_detection
from entcert.constraints import make_constraint_set
from entcert.observables import tomography_set


def werner(p):
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return p * np.outer(psi, psi) + (1 - p) * np.eye(4) / 4


def constraints_for(rho):
    vals = [(m, np.trace(m @ rho).real, np.trace(m @ rho).real, n) for n, m in tomography_set().items()]
    return make_constraint_set(2, 2, vals)


def main():
    print(f"{'p':>5}  {'verdict':<20}{'level':>6}{'time':>9}")
    for p in (0.0, 0.1, 0.2, 0.25, 0.3, 0.34, 0.37, 0.5, 1.0):
        t0 = time.perf_counter()
        v = run_detection(constraints_for(werner(p)), RunConfig())
        print(f"{p:5.2f}  {v.kind:<20}{str(v.level):>6}{time.perf_counter() - t0:8.2f}s")


if __name__ == "__main__":
    main()
