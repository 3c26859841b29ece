"""Time the compiled cell kernel against its pure-Python twin.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from nftiles import kernels
from nftiles.energy import PotentialParams, cell_energy, cell_energy_gradient_generic, minimize_cell


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    cells = [np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], float)
             + 0.1 * rng.standard_normal((5, 3)) for _ in range(64)]
    p = PotentialParams()

    def run(fn):
        def body():
            for y in cells:
                fn(y)
        t = min(timeit.repeat(body, number=max(1, args.repeat // len(cells)), repeat=3))
        return 1e6 * t / (len(cells) * max(1, args.repeat // len(cells)))

    rows = [
        (f"kernel ({kernels.BACKEND})", run(lambda y: kernels.morse_quadratic_cell(y, p.alpha, p.c))),
        ("kernel (python)", run(lambda y: kernels.morse_quadratic_cell_py(y, p.alpha, p.c))),
        ("generic energy + gradient", run(lambda y: (cell_energy(y, p), cell_energy_gradient_generic(y, p)))),
    ]
    for name, us in rows:
        print(f"{name:28s} {us:9.2f} us/call")
    t = min(timeit.repeat(lambda: minimize_cell(p, seed=0, check=False), number=1, repeat=3))
    print(f"{'minimize_cell (default)':28s} {1e3 * t:9.2f} ms")


if __name__ == "__main__":
    main()
