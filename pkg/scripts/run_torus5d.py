"""Invariants of three 2-spheres against a torus in R^5, plus a refinement check.

    python scripts/run_torus5d.py [--refine] [--threads 8] [--out results/torus5d.json]
"""

import argparse
import json
import math
import time
from pathlib import Path

from homolink.invariant import phi_S
from homolink.mesh import sample_sphere, sample_torus
from homolink.quadrature import QuadConfig, QuadStats


def spheres(res):
    return {
        "omega(1)": sample_sphere(1.0, res),
        "omega(2)": sample_sphere(2.0, res),
        "omega'(1)": sample_sphere(math.sqrt(2), res, center=[0, 0, 0, 0, 1.0]),
    }


def run(torus_res, sphere_res, cfg, threads):
    torus = sample_torus(0.8, 1.6, torus_res)
    rows = {}
    for label, omega in spheres(sphere_res).items():
        stats = QuadStats()
        t0 = time.perf_counter()
        v = phi_S(omega, torus, cfg, threads, stats)
        rows[label] = {"value": v, "seconds": time.perf_counter() - t0, "pairs": stats.pairs}
        print(f"  {label:10s} {v:+.8f}  ({rows[label]['seconds']:.1f} s, {stats.pairs} pairs)")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refine", action="store_true", help="also run at twice the resolution")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--order", type=int, default=4)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    cfg = QuadConfig(order=args.order)
    print("torus 24x24, spheres 16x32")
    out = {"coarse": run((24, 24), (16, 32), cfg, args.threads)}
    if args.refine:
        print("torus 48x48, spheres 32x64")
        out["fine"] = run((48, 48), (32, 64), cfg, args.threads)
        for k in out["fine"]:
            print(f"  {k:10s} moved {abs(out['fine'][k]['value'] - out['coarse'][k]['value']):.2e}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
