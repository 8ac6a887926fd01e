"""Command line entry point: ``homolink {invariant,plan,quotient-plan,validate}``.

Exit status: 0 success, 2 scenario or validation failure, 3 singular
proximity abort, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .invariant import FormField, pair_integrand, phi_vector, unit_sphere_volume
from .lowdim import ClosedFormKind, closed_form_coefficients
from .mesh import MeshError, chain_distance, point_chain, validate_skeleton_set
from .planner import (
    EnumerateK,
    PlanningError,
    SearchBudgetExceeded,
    SearchStats,
    TargetClass,
    augmented_search,
    edge_signatures,
    mean_edge_weight,
)
from .quadrature import QuadConfig, QuadStats, SingularProximityError
from .quotient import (
    QLattice,
    connected_quotient_search,
    lattice_from_loops,
    lattice_from_subgraph,
    outside_components,
    quotient_augmented_search,
)
from .scenario import ResultBundle, Scenario, ScenarioError, load_scenario
from .svg import ProjectionError, emit_svg, parse_projection

log = logging.getLogger("homolink")

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_SINGULAR = 0, 1, 2, 3


class ValidationFailed(Exception):
    pass


def _threads(args, sc: Scenario) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HOMOLINK_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ScenarioError(f"HOMOLINK_THREADS={env!r} is not an integer") from None
    return sc.threads


def _quad(args, sc: Scenario) -> QuadConfig:
    cfg = sc.quad
    return replace(cfg, order=args.quad_order) if args.quad_order is not None else cfg


def _stats_dict(q: QuadStats, s: SearchStats | None = None) -> dict:
    d = {"quad_pairs": int(q.pairs), "quad_splits": int(q.splits), "quad_max_depth": int(q.max_depth)}
    if s is not None:
        d.update(expansions=int(s.expansions), states=int(s.states))
    return d


def _write(args, sc: Scenario, bundle: ResultBundle, elapsed: float) -> None:
    if args.out is None:
        sys.stdout.write(bundle.to_json())
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(bundle.to_json(), "utf-8")
    (out / "timing.json").write_text(json.dumps({"wall_time_s": round(elapsed, 6)}) + "\n", "utf-8")
    if bundle.kind != "invariant":
        (out / "paths.csv").write_text(bundle.paths_csv(), "utf-8")
    if getattr(args, "svg", False):
        project = parse_projection(args.project) if args.project else None
        (out / "plan.svg").write_text(emit_svg(bundle, sc, project), "utf-8")
    print(f"wrote {out / 'result.json'}")


# --- subcommands ------------------------------------------------------------------


def cmd_invariant(args, sc: Scenario) -> ResultBundle:
    skel = sc.skeleton_set()
    cfg = _quad(args, sc)
    stats = QuadStats()
    rows = []
    for label, cand in sc.candidates():
        sig = phi_vector(cand, skel, cfg, _threads(args, sc), stats)
        rows.append({
            "candidate": label,
            "values": sig.values.tolist(),
            "rounded": sig.rounded().tolist(),
            "integrality_error": sig.integrality_error(),
        })
        print(f"{label}: " + ", ".join(f"{v:+.6f}" for v in sig.values))
    diag = {"skeletons": list(skel.labels), **_stats_dict(stats)}
    return ResultBundle("invariant", sc.name, rows, [], diag)


def _mode(args, sc: Scenario):
    if args.target_signature:
        try:
            sig = tuple(float(t) for t in args.target_signature.split(","))
        except ValueError:
            raise ScenarioError(f"cannot read target signature {args.target_signature!r}", "--target-signature")
        return TargetClass(sig)
    if args.classes is not None:
        return EnumerateK(args.classes)
    mode = sc.doc.get("mode")
    if mode and mode["type"] == "target":
        return TargetClass(tuple(mode["signature"]))
    return EnumerateK(mode["k"] if mode else 10)


def _setup_graph(args, sc: Scenario):
    g = sc.grid_graph()
    skel = sc.skeleton_set()
    log.info("grid: %d vertices, %d edges", g.n_vertices, len(g.segments))
    cache = edge_signatures(g, skel, _quad(args, sc), _threads(args, sc))
    return g, skel, cache, g.vertex_at(sc.doc["start"]), g.vertex_at(sc.doc["goal"])


def _class_rows(g, results, L=None) -> list[dict]:
    rows = []
    for r in results:
        row = {
            "rank": r.rank,
            "cost": float(r.cost),
            "signature": np.asarray(r.signature, float).tolist(),
            "vertices": [int(v) for v in r.path],
            "path": g.coords[r.path].tolist(),
        }
        if r.residue is not None:
            row["residue"] = np.asarray(r.residue, float).tolist()
        if L is not None:
            row["outside_components"] = outside_components(r.path, L)
        rows.append(row)
    return rows


def _report(rows) -> None:
    for r in rows:
        sig = ", ".join(f"{v:+.4f}" for v in r["signature"])
        print(f"class {r['rank']}: cost {r['cost']:.4f} signature [{sig}]")


def cmd_plan(args, sc: Scenario) -> ResultBundle:
    g, skel, cache, vs, vg = _setup_graph(args, sc)
    stats = SearchStats()
    tol = sc.tolerances
    res = augmented_search(g, cache, vs, vg, _mode(args, sc), tol.key, sc.doc["budget"], stats)
    rows = _class_rows(g, res)
    _report(rows)
    diag = {"skeletons": list(skel.labels), "vertices": g.n_vertices, "edges": int(len(g.segments)),
            **_stats_dict(cache.stats, stats)}
    return ResultBundle("plan", sc.name, [], rows, diag)


def _lattice(args, sc: Scenario, g, skel, cache, L) -> QLattice:
    sub = sc.doc.get("subspace") or {}
    tol = sc.tolerances
    if sub.get("generators"):
        return lattice_from_loops(sub["generators"], skel, _quad(args, sc), tol.eps_int, tol.eps_q)
    if sub.get("auto", True) and np.any(L):
        return lattice_from_subgraph(g, cache, L, tol.eps_int, tol.eps_q)
    return QLattice.trivial(len(skel), tol.eps_q)


def cmd_quotient(args, sc: Scenario) -> ResultBundle:
    g, skel, cache, vs, vg = _setup_graph(args, sc)
    L = sc.subspace_mask(g)
    q = _lattice(args, sc, g, skel, cache, L)
    mode = _mode(args, sc)
    if not isinstance(mode, EnumerateK):
        raise ScenarioError("quotient planning enumerates classes; target mode is not supported", "mode")
    tol = sc.tolerances
    stats = SearchStats()
    eps_w = tol.eps_w_factor * mean_edge_weight(g)
    if args.connected:
        res = connected_quotient_search(g, cache, q, vs, vg, mode.k, L, tol.key, eps_w, sc.doc["budget"], stats)
    else:
        res = quotient_augmented_search(g, cache, q, vs, vg, mode.k, L, tol.key, eps_w, sc.doc["budget"], stats)
    rows = _class_rows(g, res, L)
    _report(rows)
    diag = {"skeletons": list(skel.labels), "vertices": g.n_vertices, "edges": int(len(g.segments)),
            "q_basis": q.basis.tolist(), "connected": bool(args.connected), "L_vertices": int(L.sum()),
            **_stats_dict(cache.stats, stats)}
    return ResultBundle("quotient-plan", sc.name, [], rows, diag)


def _sample_points(sc: Scenario, skel, n: int, clearance: float) -> np.ndarray:
    rng = np.random.default_rng(sc.doc["seed"])
    pts = np.concatenate([c.points for _, c in skel]) if len(skel) else np.zeros((1, sc.D))
    lo, hi = pts.min(0), pts.max(0)
    pad = 0.5 * max(float(np.max(hi - lo)), 1.0)
    out = []
    while len(out) < n:
        x = rng.uniform(lo - pad, hi + pad)
        if all(chain_distance(point_chain(x), c) > clearance for _, c in skel):
            out.append(x)
    return np.array(out)


def determinant_integrand(sigma, tau, t, u) -> float:
    """The same kernel written as one D x D determinant [s | J' | J] / (A |s|^D)."""
    sigma, tau = np.asarray(sigma, float), np.asarray(tau, float)
    D = sigma.shape[1]
    N = sigma.shape[0]
    Jx, Jp = (sigma[1:] - sigma[0]).T, (tau[1:] - tau[0]).T
    s = sigma[0] + Jx @ np.asarray(t, float) - tau[0] - Jp @ np.asarray(u, float)
    M = np.column_stack([s, Jp, Jx])
    return (-1) ** (D - N) * float(np.linalg.det(M)) / (unit_sphere_volume(D) * np.linalg.norm(s) ** D)


def cmd_validate(args, sc: Scenario) -> ResultBundle:
    skel = sc.skeleton_set()
    cfg = _quad(args, sc)
    report = validate_skeleton_set(skel, sc.D, sc.N, cfg.eps_sing)
    checks = []
    for v in report.violations:
        print(f"violation [{v.kind}] {v.label}: {v.message}")
    if report.ok and len(skel):
        diam = max(float(np.ptp(c.points, axis=0).max()) for _, c in skel) or 1.0
        pts = _sample_points(sc, skel, 20, 0.05 * diam)
        try:
            kind = ClosedFormKind.for_scene(sc.D, sc.N)
        except ValueError:
            kind = None
        if kind is not None:
            for label, c in skel:
                gen = FormField(c, sc.N, cfg).coefficients(pts)
                ref = closed_form_coefficients(c, pts, cfg)
                err = float(np.max(np.abs(gen - ref)) / max(np.max(np.abs(ref)), 1e-300))
                checks.append({"skeleton": label, "check": kind.name.lower(), "rel_error": err, "ok": bool(err < 1e-8)})
        else:
            rng = np.random.default_rng(sc.doc["seed"])
            for label, c in skel:
                taus = c.simplex_vertices()
                worst = 0.0
                for j in range(min(10, len(taus))):
                    tau = taus[j]
                    sigma = pts[j % len(pts)] + 0.1 * diam * np.vstack([np.zeros(sc.D), rng.normal(size=(sc.N - 1, sc.D))])
                    t = rng.dirichlet(np.ones(sc.N))[: sc.N - 1]
                    u = rng.dirichlet(np.ones(c.dim + 1))[: c.dim]
                    a, b = pair_integrand(sigma, tau, t, u), determinant_integrand(sigma, tau, t, u)
                    worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
                checks.append({"skeleton": label, "check": "determinant", "rel_error": worst, "ok": bool(worst < 1e-9)})
    for ch in checks:
        print(f"{'ok  ' if ch['ok'] else 'FAIL'} {ch['check']} cross-check on {ch['skeleton']}: "
              f"rel error {ch['rel_error']:.2e}")
    violations = [{"label": v.label, "kind": v.kind, "message": v.message} for v in report.violations]
    bundle = ResultBundle("validate", sc.name, [], [], {"violations": violations, "checks": checks})
    ok = report.ok and all(ch["ok"] for ch in checks)
    print("valid" if ok else "invalid")
    if not ok:
        bundle.diagnostics["ok"] = False
        raise ValidationFailed(bundle)
    return bundle


COMMANDS = {"invariant": cmd_invariant, "plan": cmd_plan, "quotient-plan": cmd_quotient, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="homolink", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", help="output directory (default: print result JSON)")
        sp.add_argument("--threads", type=int, help="worker threads (fallback: HOMOLINK_THREADS)")
        sp.add_argument("--quad-order", type=int, help="override the quadrature order")
        if name in ("plan", "quotient-plan"):
            sp.add_argument("--classes", type=int, help="enumerate this many classes")
            sp.add_argument("--target-signature", help="comma-separated target signature")
            sp.add_argument("--svg", action="store_true", help="also write plan.svg into --out")
            sp.add_argument("--project", help="axis pair for D>2 drawings, e.g. xy or 0,2")
        if name == "quotient-plan":
            sp.add_argument("--connected", action="store_true", help="single outside-L component variant")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "svg", False) and args.out is None:
        parser.error("--svg needs --out")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    t0 = time.perf_counter()
    try:
        sc = load_scenario(args.scenario)
        bundle = COMMANDS[args.command](args, sc)
        _write(args, sc, bundle, time.perf_counter() - t0)
        return EXIT_OK
    except ValidationFailed as exc:
        if args.out is not None:
            _write(args, sc, exc.args[0], time.perf_counter() - t0)
        return EXIT_INVALID
    except (ScenarioError, MeshError, ProjectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SingularProximityError as exc:
        print(f"singular proximity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except SearchBudgetExceeded as exc:
        print(f"search budget exhausted after {len(exc.partial or [])} classes: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except PlanningError as exc:
        print(f"planning error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
