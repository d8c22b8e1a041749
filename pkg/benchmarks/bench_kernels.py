"""Time the compiled element kernels against the NumPy fallback.

Usage: ``python benchmarks/bench_kernels.py [--cells 64] [--degree 2] [--repeat 5]``

Both backends run on identical inputs; the script also reports the largest
difference between their outputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from boussleray._kernels import get_backend
from boussleray.fem import FeSpace
from boussleray.mesh import build_rect_mesh


def _inputs(n_cells: int, degree: int, seed: int = 0):
    space = FeSpace(build_rect_mesh((0.0, 1.0), (0.0, 1.0), n_cells, n_cells), degree)
    phi, grads, wdet = space.tabulate()
    rng = np.random.default_rng(seed)
    wind = rng.standard_normal(wdet.shape + (2,))
    fvals = rng.standard_normal(wdet.shape)
    local = rng.standard_normal((wdet.shape[0], phi.shape[1]))
    return space, dict(phi=phi, grads=grads, wdet=wdet, wind=wind, fvals=fvals, local=local)


def _cases(k, space, a):
    return {
        "mass": lambda: k.element_mass(a["phi"], a["wdet"]),
        "stiffness": lambda: k.element_stiffness(a["grads"], a["wdet"]),
        "convection": lambda: k.element_convection(a["phi"], a["grads"], a["wind"], a["wdet"]),
        "load": lambda: k.element_load(a["phi"], a["fvals"], a["wdet"]),
        "scatter": lambda: k.scatter_add(space.elem_dofs, a["local"], space.ndofs),
        "evaluate": lambda: k.evaluate_local(a["phi"], a["local"]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    space, a = _inputs(args.cells, args.degree)
    ref, fast = get_backend("numpy"), get_backend("cython")
    c_ref, c_fast = _cases(ref, space, a), _cases(fast, space, a)
    print(f"P{args.degree}, {space.mesh.n_triangles} triangles, {space.ndofs} dofs")
    print(f"{'kernel':<12}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for name in c_ref:
        t_ref = min(timeit.repeat(c_ref[name], number=1, repeat=args.repeat))
        t_fast = min(timeit.repeat(c_fast[name], number=1, repeat=args.repeat))
        diff = np.max(np.abs(np.asarray(c_ref[name]()) - np.asarray(c_fast[name]())))
        print(f"{name:<12}{1e3 * t_ref:12.2f}{1e3 * t_fast:13.2f}{t_ref / t_fast:9.2f}{diff:11.1e}")


if __name__ == "__main__":
    main()
