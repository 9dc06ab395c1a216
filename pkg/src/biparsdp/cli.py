"""Command-line interface.

Subcommands: certify (exactness pipeline), solve (relaxation + extraction),
graph (structure queries), transform (sign splitting / perturbations).
Reports are JSON; a one-line human summary goes to stderr.  Vertex indices
in all output are 1-based, matching the instance file format.

Exit codes for certify: 0 CertifiedExact, 2 NotCertified,
3 NumericallyExactOnly, 4 InexactObserved; 1 for any error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .certify import (
    DEFAULT_Y_CAP,
    MU_POSITIVITY_TOL,
    Verdict,
    certify,
)
from .graph import bipartition, build_graph, connected_components, cycle_basis, edge_signs, is_forest
from .model import InstanceError, load_instance, save_instance
from .relaxation import DEFAULT_RANK_TOL, solve_relaxation
from .sdp import DEFAULT_TOL
from .transform import (
    build_connecting_perturbation,
    build_full_graph_perturbation,
    sign_split_transform,
)

_EXIT_CODES = {
    Verdict.CERTIFIED_EXACT: 0,
    Verdict.NOT_CERTIFIED: 2,
    Verdict.NUMERICALLY_EXACT_ONLY: 3,
    Verdict.INEXACT_OBSERVED: 4,
}


def _default_tol() -> float:
    env = os.environ.get("BIPARSDP_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        tol = float(env)
    except ValueError as exc:
        raise InstanceError(f"BIPARSDP_TOL={env!r} is not a number") from exc
    if not (0 < tol <= 1e-4):
        raise InstanceError("BIPARSDP_TOL must lie in (0, 1e-4]")
    return tol


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biparsdp",
        description="Certify and solve semidefinite relaxations of QCQPs "
        "with bipartite sparsity structure.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="instance JSON file")
        p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
        p.add_argument("--tol", type=float, default=None,
                       help="solver tolerance (default 1e-8, or BIPARSDP_TOL)")

    p = sub.add_parser("certify", help="run the exactness certification pipeline")
    common(p)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--y-cap", type=float, default=DEFAULT_Y_CAP,
                   help="box bound on dual multipliers in the edge systems")
    p.add_argument("--mu-tol", type=float, default=MU_POSITIVITY_TOL,
                   help="positivity threshold for the edge-system values")
    p.add_argument("--parallel", type=int, default=1,
                   help="max concurrent per-edge system solves")

    p = sub.add_parser("solve", help="solve the relaxation and extract the optimizer")
    common(p)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)

    p = sub.add_parser("graph", help="report the aggregated sparsity structure")
    common(p)

    p = sub.add_parser("transform", help="sign-split or perturb an instance")
    common(p)
    p.add_argument("--mode", choices=["sign-split", "connect", "full-laplacian"],
                   default="sign-split")
    p.add_argument("--delta", type=float, default=1.0,
                   help="diagonal shift for the sign-splitting transformation")
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="perturbation magnitude for the Laplacian modes")
    return parser


def _report_header(tols: dict) -> dict:
    return {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "tolerances": tols,
    }


def _edge_1based(edge) -> list[int]:
    return [edge[0] + 1, edge[1] + 1]


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=1, default=_json_default) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _run_certify(args) -> int:
    inst = load_instance(args.input)
    tol = args.tol if args.tol is not None else _default_tol()
    report = certify(
        inst,
        tol=args.mu_tol,
        y_cap=args.y_cap,
        solver_tol=tol,
        rank_tol=args.rank_tol,
        parallel=args.parallel,
    )
    doc = _report_header({
        "solver_tol": tol,
        "mu_positivity_tol": args.mu_tol,
        "rank_tol": args.rank_tol,
        "y_cap": args.y_cap,
    })
    doc.update({
        "verdict": report.verdict.value,
        "applied_rule": report.applied_rule,
        "assumption_check": None if report.assumption_check is None else {
            "t_star": report.assumption_check.t_star,
            "holds": report.assumption_check.holds,
            "note": report.assumption_check.note,
        },
        "per_edge": [
            {
                "edge": _edge_1based(edge),
                "mu_min": res.mu_min,
                "min_attained": res.min_attained,
                "mu_max": res.mu_max,
                "max_attained": res.max_attained,
                "system_infeasible": res.infeasible,
            }
            for edge, res in sorted(report.per_edge.items())
        ],
        "edge_signs": [
            {"edge": _edge_1based(e), "sign": s}
            for e, s in sorted(report.sign_summary.items())
        ],
        "cycle_checks": [
            {
                "cycle": [_edge_1based(e) for e in c.cycle],
                "sign_product": c.product,
                "ok": c.ok,
            }
            for c in report.cycle_checks
        ],
        "notes": report.notes,
    })
    _emit(doc, args.output)
    print(
        f"verdict: {report.verdict.value}"
        + (f" (rule: {report.applied_rule})" if report.applied_rule else ""),
        file=sys.stderr,
    )
    return _EXIT_CODES[report.verdict]


def _run_solve(args) -> int:
    inst = load_instance(args.input)
    tol = args.tol if args.tol is not None else _default_tol()
    res = solve_relaxation(inst, tol=tol, rank_tol=args.rank_tol)
    doc = _report_header({"solver_tol": tol, "rank_tol": args.rank_tol})
    doc.update({
        "status": res.status.value,
        "primal_value": res.primal_value,
        "dual_value": res.dual_value,
        "rank": res.numeric_rank,
        "x": None if res.x_star is None else res.x_star,
        "X": res.X_star,
        "y": res.y_star,
        "gap": res.gap,
    })
    _emit(doc, args.output)
    print(
        f"status: {res.status.value}, value {res.primal_value:.9g}, "
        f"rank {res.numeric_rank}",
        file=sys.stderr,
    )
    return 0 if res.status.value == "Optimal" else 1


def _run_graph(args) -> int:
    inst = load_instance(args.input)
    graph = build_graph(inst)
    signs = edge_signs(inst, graph)
    bip = bipartition(graph)
    basis = cycle_basis(graph)
    doc = _report_header({})
    doc.update({
        "n": graph.n,
        "edges": [_edge_1based(e) for e in sorted(graph.edges)],
        "signs": [
            {"edge": _edge_1based(e), "sign": s} for e, s in sorted(signs.items())
        ],
        "bipartite": bip.bipartite,
        "parts": None if bip.parts is None else [
            sorted(v + 1 for v in part) for part in bip.parts
        ],
        "odd_walk": None if bip.witness is None else [v + 1 for v in bip.witness],
        "components": [
            sorted(v + 1 for v in comp) for comp in connected_components(graph)
        ],
        "cycle_basis": [
            [_edge_1based(e) for e in cyc] for cyc in basis.cycles
        ],
        "forest": is_forest(graph),
    })
    _emit(doc, args.output)
    print(
        f"{graph.n} vertices, {len(graph.edges)} edges, "
        f"{'bipartite' if bip.bipartite else 'not bipartite'}",
        file=sys.stderr,
    )
    return 0


def _run_transform(args) -> int:
    inst = load_instance(args.input)
    if args.mode == "sign-split":
        result = sign_split_transform(inst, delta=args.delta)
        out_inst = result.transformed
        mapping = {
            "mode": "sign-split",
            "delta": result.delta,
            "n_original": result.n_original,
            "variables": "1..n keep x; n+1..2n carry z = -x",
            "coupling_constraint": result.coupling_index + 1,
        }
    else:
        build = (
            build_connecting_perturbation
            if args.mode == "connect"
            else build_full_graph_perturbation
        )
        result = build(inst, args.epsilon)
        out_inst = result.instance
        mapping = {
            "mode": args.mode,
            "epsilon": result.epsilon,
            "connecting_edges": [_edge_1based(e) for e in sorted(result.F)],
        }
    if args.output:
        save_instance(out_inst, args.output)
        with open(args.output + ".mapping.json", "w") as fh:
            json.dump(mapping, fh, indent=1)
            fh.write("\n")
    else:
        _emit({"instance": _instance_doc(out_inst), "mapping": mapping}, None)
    print(f"transformed ({args.mode}): n={out_inst.n}, m={out_inst.m}", file=sys.stderr)
    return 0


def _instance_doc(inst) -> dict:
    """The instance in the JSON file schema, as a dict."""
    from .model import _triplets_of

    return {
        "n": inst.n,
        "m": inst.m,
        "objective": _triplets_of(inst.objective),
        "constraints": [
            {"matrix": _triplets_of(Q), "rhs": float(b)}
            for Q, b in zip(inst.constraint_matrices, inst.rhs)
        ],
    }


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "certify": _run_certify,
        "solve": _run_solve,
        "graph": _run_graph,
        "transform": _run_transform,
    }
    try:
        return handlers[args.command](args)
    except (InstanceError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
