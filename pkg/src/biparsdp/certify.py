"""A-priori exactness certification for the semidefinite relaxation.

Each rule here proves, from the structure of the data alone, that the
relaxation of a QCQP must have a rank-1 optimal solution:

* sign corollaries — all off-diagonals nonpositive (any graph), or the
  graph is bipartite with all off-diagonals nonnegative;
* the edge-sign cycle condition — every edge sign-definite and every
  basis cycle's sign product equal to (-1)^length;
* per-edge feasibility systems — for forests, no dual-feasible y makes
  S(y)_{kl} = 0; for bipartite graphs, none makes S(y)_{kl} <= 0.  Both
  reduce to small SDPs over the dual feasible set;
* sign-split reduction — a sign-definite but non-bipartite instance is
  transformed to an equivalent bipartite nonnegative-off-diagonal one.

The system-based rules additionally need the relaxation and its dual to
behave (attained optima, bounded solution sets).  That is undecidable from
the data in general, so the pipeline verifies the checkable sufficient
condition — some nonnegative combination of the constraint matrices is
positive definite — and refuses to certify when it cannot.

`certify` runs the rules from cheapest to most expensive and stops at the
first one that fires; everything evaluated along the way is kept in the
report.  When no rule applies it falls back to solving the relaxation and
reporting the observed rank, which is evidence, not a certificate.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import (
    Edge,
    SparsityGraph,
    bipartition,
    build_graph,
    connected_components,
    cycle_basis,
    edge_signs,
    is_forest,
)
from .model import QcqpInstance
from .sdp import (
    DEFAULT_TOL,
    DualSideEmpty,
    max_min_eigen_combination,
    minimize_linear_functional_over_dual_cone,
)

#: looser than the solver tolerance so solver noise cannot flip a verdict
MU_POSITIVITY_TOL = 1e-6

DEFAULT_Y_CAP = 1e6


class Verdict(enum.Enum):
    CERTIFIED_EXACT = "CertifiedExact"
    NOT_CERTIFIED = "NotCertified"
    NUMERICALLY_EXACT_ONLY = "NumericallyExactOnly"
    INEXACT_OBSERVED = "InexactObserved"


@dataclass
class EdgeSystemResult:
    mu_min: float | None = None
    min_attained: bool | None = None
    mu_max: float | None = None
    max_attained: bool | None = None
    infeasible: bool = False  # the certification system for this edge


@dataclass
class AssumptionCheck:
    t_star: float | None
    holds: bool
    note: str = ""


@dataclass
class CycleCheck:
    cycle: tuple[Edge, ...]
    product: int
    ok: bool  # product == (-1)^length


@dataclass
class CertificationReport:
    verdict: Verdict
    applied_rule: str | None = None
    assumption_check: AssumptionCheck | None = None
    per_edge: dict[Edge, EdgeSystemResult] = field(default_factory=dict)
    sign_summary: dict[Edge, int] = field(default_factory=dict)
    cycle_checks: list[CycleCheck] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _check_assumption(inst: QcqpInstance, tol: float, solver_tol: float) -> AssumptionCheck:
    """Sufficient condition: some y >= 0, sum y_p = 1 has sum y_p Qp > t*I, t > 0."""
    try:
        t_star, _ = max_min_eigen_combination(inst, tol=solver_tol)
    except RuntimeError as exc:
        return AssumptionCheck(None, False, f"assumption check failed to solve: {exc}")
    if t_star > tol:
        return AssumptionCheck(t_star, True)
    return AssumptionCheck(
        t_star, False,
        "assumption unverified: no strictly positive-definite nonnegative "
        "combination of constraint matrices found",
    )


def check_edge_system_nonpositive(
    inst: QcqpInstance,
    k: int,
    ell: int,
    tol: float = MU_POSITIVITY_TOL,
    y_cap: float = DEFAULT_Y_CAP,
    solver_tol: float = DEFAULT_TOL,
) -> tuple[bool, float, bool]:
    """Decide whether {y >= 0, S(y) PSD, S(y)_{k,ell} <= 0} is infeasible.

    Returns (infeasible, mu_star, attained) with mu_star the minimum of
    S(y)_{k,ell} over the dual feasible set (boxed by y <= y_cap).  The
    system is declared infeasible only when mu_star > tol and the minimum
    was attained inside the box; otherwise the answer is a conservative
    False.  k and ell are 0-based.
    """
    mu, attained, _ = minimize_linear_functional_over_dual_cone(
        inst, k, ell, y_cap=y_cap, tol=solver_tol
    )
    return bool(mu > tol and attained), mu, attained


def _solve_edges(
    inst: QcqpInstance,
    edges,
    y_cap: float,
    solver_tol: float,
    parallel: int,
    want_max: bool,
) -> dict[Edge, EdgeSystemResult]:
    """Per-edge minimum (and, for forests, maximum) of S(y)_{k,ell}."""

    def one(edge: Edge) -> EdgeSystemResult:
        k, ell = edge
        res = EdgeSystemResult()
        res.mu_min, res.min_attained, _ = minimize_linear_functional_over_dual_cone(
            inst, k, ell, y_cap=y_cap, tol=solver_tol
        )
        if want_max:
            res.mu_max, res.max_attained, _ = minimize_linear_functional_over_dual_cone(
                inst, k, ell, y_cap=y_cap, tol=solver_tol, maximize=True
            )
        return res

    edges = sorted(edges)
    if parallel > 1 and len(edges) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(one, edges))
    else:
        results = [one(e) for e in edges]
    return dict(zip(edges, results))


def certify_bipartite(
    inst: QcqpInstance,
    tol: float = MU_POSITIVITY_TOL,
    y_cap: float = DEFAULT_Y_CAP,
    solver_tol: float = DEFAULT_TOL,
    parallel: int = 1,
) -> CertificationReport:
    """Certify through per-edge systems {y >= 0, S(y) PSD, S(y)_{kl} <= 0}.

    All edges' systems infeasible (mu* > tol, attained) plus a verified
    assumption give CertifiedExact.  Connectivity only selects the name of
    the applied rule: the disconnected case is covered by the same per-edge
    systems through a vanishing Laplacian perturbation argument.
    """
    graph = build_graph(inst)
    report = CertificationReport(
        verdict=Verdict.NOT_CERTIFIED, sign_summary=edge_signs(inst, graph)
    )
    bip = bipartition(graph)
    if not bip.bipartite:
        report.notes.append(
            "graph is not bipartite (odd closed walk "
            f"{tuple(v + 1 for v in bip.witness)})"
        )
        return report
    connected = len(connected_components(graph)) <= 1
    rule = (
        "connected-bipartite-edge-systems"
        if connected
        else "disconnected-bipartite-edge-systems"
    )
    report.assumption_check = _check_assumption(inst, tol, solver_tol)
    try:
        report.per_edge = _solve_edges(
            inst, graph.edges, y_cap, solver_tol, parallel, want_max=False
        )
    except DualSideEmpty as exc:
        report.notes.append(f"edge systems unavailable: {exc}")
        return report
    except RuntimeError as exc:
        report.notes.append(f"edge-system solver failure: {exc}")
        return report
    all_pass = True
    for edge, res in report.per_edge.items():
        res.infeasible = bool(res.mu_min > tol and res.min_attained)
        if not res.infeasible:
            all_pass = False
            if not res.min_attained:
                report.notes.append(
                    f"edge {tuple(v + 1 for v in edge)}: minimum hit the "
                    f"y <= {y_cap:g} box; treating as unresolved"
                )
    if all_pass and report.assumption_check.holds:
        report.verdict = Verdict.CERTIFIED_EXACT
        report.applied_rule = rule
    elif all_pass:
        report.notes.append(report.assumption_check.note)
    return report


def certify_forest(
    inst: QcqpInstance,
    tol: float = MU_POSITIVITY_TOL,
    y_cap: float = DEFAULT_Y_CAP,
    solver_tol: float = DEFAULT_TOL,
    parallel: int = 1,
) -> CertificationReport:
    """Certify through per-edge systems {y >= 0, S(y) PSD, S(y)_{kl} = 0}.

    On a forest the system for edge (k, l) is infeasible iff 0 lies outside
    [mu_min, mu_max], the (convex) range of S(y)_{kl} over the dual feasible
    set.  Both endpoints are computed; a box-limited endpoint on the side
    that would exclude zero leaves the edge unresolved.
    """
    graph = build_graph(inst)
    report = CertificationReport(
        verdict=Verdict.NOT_CERTIFIED, sign_summary=edge_signs(inst, graph)
    )
    if not is_forest(graph):
        report.notes.append("graph has cycles; the forest rule does not apply")
        return report
    report.assumption_check = _check_assumption(inst, tol, solver_tol)
    try:
        report.per_edge = _solve_edges(
            inst, graph.edges, y_cap, solver_tol, parallel, want_max=True
        )
    except DualSideEmpty as exc:
        report.notes.append(f"edge systems unavailable: {exc}")
        return report
    except RuntimeError as exc:
        report.notes.append(f"edge-system solver failure: {exc}")
        return report
    all_pass = True
    for edge, res in report.per_edge.items():
        below = res.mu_min > tol and res.min_attained
        above = res.mu_max < -tol and res.max_attained
        res.infeasible = bool(below or above)
        if not res.infeasible:
            all_pass = False
    if all_pass and report.assumption_check.holds:
        report.verdict = Verdict.CERTIFIED_EXACT
        report.applied_rule = "forest-edge-systems"
    elif all_pass:
        report.notes.append(report.assumption_check.note)
    return report


def certify_sojoudi(inst: QcqpInstance) -> CertificationReport:
    """Purely sign-based certificate: sign-definite edges, matching cycles.

    Certifies when every edge sign is nonzero and every basis cycle has
    sign product (-1)^length.  The classic shortcut cases (forest with
    sign-definite edges, bipartite with all +1, arbitrary graph with all
    -1) are recorded in the notes when they hold.
    """
    graph = build_graph(inst)
    signs = edge_signs(inst, graph)
    report = CertificationReport(
        verdict=Verdict.NOT_CERTIFIED, sign_summary=signs
    )
    mixed = sorted(e for e, s in signs.items() if s == 0)
    if mixed:
        report.notes.append(
            "mixed-sign edges (sigma = 0): "
            + ", ".join(str(tuple(v + 1 for v in e)) for e in mixed)
        )
    basis = cycle_basis(graph)
    cycles_ok = True
    for cyc in basis.cycles:
        product = 1
        for e in cyc:
            product *= signs[e]
        ok = product == (-1) ** len(cyc)
        report.cycle_checks.append(CycleCheck(cyc, product, ok))
        if not ok:
            cycles_ok = False
            report.notes.append(
                f"cycle of length {len(cyc)} has sign product {product}, "
                f"expected {(-1) ** len(cyc)}"
            )
    if not mixed and cycles_ok:
        report.verdict = Verdict.CERTIFIED_EXACT
        report.applied_rule = "edge-sign-cycle-condition"
        # shortcut cases, for the record
        if is_forest(graph):
            report.notes.append("shortcut: forest with sign-definite edges")
        if all(s == 1 for s in signs.values()) and bipartition(graph).bipartite:
            report.notes.append("shortcut: bipartite with all edge signs +1")
        if all(s == -1 for s in signs.values()):
            report.notes.append("shortcut: all edge signs -1")
    return report


def certify_sign_corollaries(
    inst: QcqpInstance,
    tol: float = MU_POSITIVITY_TOL,
    solver_tol: float = DEFAULT_TOL,
) -> CertificationReport:
    """Direct sign rules: nonpositive off-diagonals, or bipartite + nonnegative.

    Both are consequences of the per-edge systems (any dual-feasible y
    keeps S(y)_{kl} pinned on one side), so they inherit the assumption
    check but need no SDP solves for the edges themselves.
    """
    graph = build_graph(inst)
    signs = edge_signs(inst, graph)
    report = CertificationReport(
        verdict=Verdict.NOT_CERTIFIED, sign_summary=signs
    )
    offdiag_nonneg = all(s == 1 for s in signs.values())
    offdiag_nonpos = all(s == -1 for s in signs.values())
    rule = None
    if graph.edges and offdiag_nonpos:
        rule = "nonpositive-off-diagonal"
    elif offdiag_nonneg and bipartition(graph).bipartite and graph.edges:
        rule = "bipartite-nonnegative-off-diagonal"
    if rule is None:
        report.notes.append("sign-corollary premises not met")
        return report
    report.assumption_check = _check_assumption(inst, tol, solver_tol)
    if report.assumption_check.holds:
        report.verdict = Verdict.CERTIFIED_EXACT
        report.applied_rule = rule
    else:
        report.notes.append(report.assumption_check.note)
    return report


def _merge(into: CertificationReport, other: CertificationReport, label: str) -> None:
    """Keep evidence from an evaluated rule in the pipeline report."""
    if other.assumption_check is not None and into.assumption_check is None:
        into.assumption_check = other.assumption_check
    for edge, res in other.per_edge.items():
        into.per_edge.setdefault(edge, res)
    if other.cycle_checks and not into.cycle_checks:
        into.cycle_checks = other.cycle_checks
    for note in other.notes:
        into.notes.append(f"{label}: {note}")
    if other.verdict is not Verdict.CERTIFIED_EXACT:
        into.notes.append(f"{label}: did not certify")


def certify(
    inst: QcqpInstance,
    tol: float = MU_POSITIVITY_TOL,
    y_cap: float = DEFAULT_Y_CAP,
    solver_tol: float = DEFAULT_TOL,
    rank_tol: float = 1e-6,
    parallel: int = 1,
) -> CertificationReport:
    """Run all certification rules, cheapest first; first success wins.

    Order: sign corollaries, edge-sign cycle condition, forest systems,
    bipartite systems, sign-split reduction, and finally an observational
    fallback that solves the relaxation and reports the numerical rank
    (NumericallyExactOnly / InexactObserved — evidence, not a proof).
    """
    graph = build_graph(inst)
    signs = edge_signs(inst, graph)
    report = CertificationReport(verdict=Verdict.NOT_CERTIFIED, sign_summary=signs)

    rule_args = dict(tol=tol, solver_tol=solver_tol)
    sys_args = dict(tol=tol, y_cap=y_cap, solver_tol=solver_tol, parallel=parallel)

    sub = certify_sign_corollaries(inst, **rule_args)
    _merge(report, sub, "sign-corollaries")
    if sub.verdict is Verdict.CERTIFIED_EXACT:
        report.verdict, report.applied_rule = sub.verdict, sub.applied_rule
        return report

    sub = certify_sojoudi(inst)
    _merge(report, sub, "edge-sign-cycle-condition")
    if sub.verdict is Verdict.CERTIFIED_EXACT:
        report.verdict, report.applied_rule = sub.verdict, sub.applied_rule
        return report

    if is_forest(graph):
        forest = certify_forest(inst, **sys_args)
        _merge(report, forest, "forest-edge-systems")
        # forests are bipartite; record the one-sided systems as well
        bip = certify_bipartite(inst, **sys_args)
        report.notes.append(
            "bipartite-edge-systems: "
            + ("also certifies" if bip.verdict is Verdict.CERTIFIED_EXACT
               else "did not certify")
        )
        if forest.verdict is Verdict.CERTIFIED_EXACT:
            report.verdict, report.applied_rule = forest.verdict, forest.applied_rule
            return report
    elif bipartition(graph).bipartite:
        sub = certify_bipartite(inst, **sys_args)
        _merge(report, sub, "bipartite-edge-systems")
        if sub.verdict is Verdict.CERTIFIED_EXACT:
            report.verdict, report.applied_rule = sub.verdict, sub.applied_rule
            return report
    elif all(s != 0 for s in signs.values()):
        from .transform import sign_split_transform

        doubled = sign_split_transform(inst).transformed
        sub = certify_sign_corollaries(doubled, **rule_args)
        if sub.verdict is Verdict.CERTIFIED_EXACT:
            report.verdict = Verdict.CERTIFIED_EXACT
            report.applied_rule = "sign-split-bipartite-reduction"
            report.assumption_check = sub.assumption_check
            report.notes.append(
                "sign-split reduction: doubled instance certified via "
                + str(sub.applied_rule)
            )
            return report
        _merge(report, sub, "sign-split-reduction")

    # observational fallback
    from .relaxation import solve_relaxation

    res = solve_relaxation(inst, tol=solver_tol, rank_tol=rank_tol)
    if res.status.value != "Optimal":
        report.notes.append(
            f"fallback relaxation solve failed: {res.status.value} {res.message}"
        )
        return report
    report.applied_rule = "relaxation-rank-check"
    if res.numeric_rank <= 1:
        report.verdict = Verdict.NUMERICALLY_EXACT_ONLY
        report.notes.append(
            f"relaxation solved with numerical rank {res.numeric_rank}; "
            "exactness observed, not certified"
        )
    else:
        report.verdict = Verdict.INEXACT_OBSERVED
        report.notes.append(
            f"relaxation solution has numerical rank {res.numeric_rank} > 1"
        )
    return report
