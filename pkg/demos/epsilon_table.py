"""Perturbation weights eps_N for the inner test, with the mixing they allow.

A level-N Bose-symmetric PPT extension of omega certifies that
(1 - eps_N) omega + eps_N omega_A (x) I/d_B is separable.

    python3 demos/epsilon_table.py
"""

from entcert.inner import epsilon_N


def main():
    print(f"{'N':>3}" + "".join(f"{'d_B=' + str(d):>12}" for d in (2, 3, 4)))
    for N in range(1, 13):
        print(f"{N:3d}" + "".join(f"{epsilon_N(N, d):12.6f}" for d in (2, 3, 4)))


if __name__ == "__main__":
    main()
