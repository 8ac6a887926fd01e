"""Quotient planning on the collar scene: plain vs. quotient vs. connected variant.

    python scripts/quotient_experiment.py [--k 5] [--out results/quotient]
"""

import argparse
from pathlib import Path

from homolink.planner import EnumerateK, augmented_search, edge_signatures, mean_edge_weight
from homolink.quotient import (
    connected_quotient_search,
    lattice_from_subgraph,
    outside_components,
    quotient_augmented_search,
)
from homolink.scenario import ResultBundle, bundled_scenario_path, load_scenario
from homolink.svg import emit_svg


def rows(g, results, L):
    out = []
    for r in results:
        row = {"rank": r.rank, "cost": r.cost, "signature": r.signature.tolist(), "path": r.coordinates(g).tolist(),
               "outside_components": outside_components(r.path, L)}
        if getattr(r, "residue", None) is not None:
            row["residue"] = r.residue.tolist()
        out.append(row)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--out", type=Path, default=Path("results/quotient"))
    args = ap.parse_args()

    sc = load_scenario(bundled_scenario_path("collar_quotient.json"))
    g = sc.grid_graph()
    cache = edge_signatures(g, sc.skeleton_set())
    L = sc.subspace_mask(g)
    vs, vg = g.vertex_at(sc.doc["start"]), g.vertex_at(sc.doc["goal"])
    q = lattice_from_subgraph(g, cache, L)
    print(f"Q basis {q.basis.tolist()}")
    eps_w = sc.tolerances.eps_w_factor * mean_edge_weight(g)

    runs = {
        "plain": augmented_search(g, cache, vs, vg, EnumerateK(args.k)),
        "quotient": quotient_augmented_search(g, cache, q, vs, vg, args.k, L, eps_w=eps_w),
        "connected": connected_quotient_search(g, cache, q, vs, vg, args.k, L, eps_w=eps_w),
    }
    args.out.mkdir(parents=True, exist_ok=True)
    for name, res in runs.items():
        print(name)
        for row in rows(g, res, L):
            extra = f"  residue {[round(x, 4) for x in row['residue']]}" if "residue" in row else ""
            print(f"  {row['rank']}  cost {row['cost']:8.3f}  outside pieces {row['outside_components']}{extra}")
        bundle = ResultBundle(name, sc.name, classes=rows(g, res, L))
        (args.out / f"{name}.json").write_text(bundle.to_json())
        (args.out / f"{name}.svg").write_text(emit_svg(bundle, sc))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
