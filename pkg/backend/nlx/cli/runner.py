"""
Experiment Runner

Wires an ExperimentConfig to the engine modules as a graph of stage
functions over a shared RunState:

    setup → [axioms] → [dominate] → [solve] → [picard] → [doob-meyer]
          → [recover] → [represent] → emit

Unselected stages are skipped by the router. The emit stage writes
report.json, one CSV per table and any JSON artifacts; wall-clock timings
go to timing.json so the other outputs stay byte-identical across reruns.
"""

import json
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TypedDict

import numpy as np
import pandas as pd
import structlog
from langgraph.graph import END, START, StateGraph

from .. import __version__
from ..bsde import Scheme, comparison_check, solve_bsde, symmetry_check
from ..doobmeyer import decompose, penalize
from ..efsde import (
    EfsdeProblem,
    backward_oracle,
    compare_solutions,
    make_driver,
    martingale_part,
    picard_solve,
)
from ..fexp import (
    CLAIM_BUILDERS,
    FExpectationOperator,
    check_axioms,
    check_boundedness,
    check_supermartingale,
    make_operator,
    noise_claim,
    run_domination_suite,
)
from ..generators import Generator, make_generator
from ..lattice import AdaptedField, FiltrationTree, TimeGrid, build_tree
from ..represent import RecoveredGenerator, null_integral_check, recover_generator, verify_representation
from ..schemas import CheckReport, RunReport
from .config_models import STAGES, ExperimentConfig

logger = structlog.get_logger(__name__)

ORACLE_MATCH_TOL = 1e-11


class RunState(TypedDict):
    """Everything one run reads and produces."""

    config: ExperimentConfig
    stages: List[str]
    out_dir: Path

    # ========== SETUP ==========
    tree: Optional[FiltrationTree]
    operator: Optional[FExpectationOperator]
    generator: Optional[Generator]
    claims: List[AdaptedField]

    # ========== RESULTS ==========
    recovered: Optional[RecoveredGenerator]
    checks: List[CheckReport]
    tables: Dict[str, pd.DataFrame]
    artifacts: Dict[str, Any]
    summary: Dict[str, float]

    # ========== METADATA ==========
    completed: List[str]
    timing: Dict[str, float]
    report: Optional[RunReport]


def _timed(name: str):
    def wrap(fn):
        def stage(state: RunState) -> RunState:
            logger.info(f"→ [STAGE: {name}]")
            start = time.perf_counter()
            state = fn(state)
            state["timing"][name] = time.perf_counter() - start
            state["completed"].append(name)
            return state
        stage.__name__ = fn.__name__
        return stage
    return wrap


def _eta_field(tree: FiltrationTree, value: float) -> Optional[AdaptedField]:
    if value == 0:
        return None
    return AdaptedField.process(
        tree, [np.full(tree.node_count(k), value) for k in range(tree.N + 1)], f"eta={value:g}"
    )


def _z_grid(points: Sequence, d: int) -> np.ndarray:
    """Scalar grid points become multiples of the first unit vector when d > 1."""
    grid = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if d > 1:
        grid = [p if p.size == d else np.concatenate([p[:1], np.zeros(d - 1)]) for p in grid]
    return np.array(grid).reshape(len(grid), d)


def _table(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows)


# ==================== STAGES ====================

@_timed("setup")
def setup_stage(state: RunState) -> RunState:
    config = state["config"]
    tree = build_tree(TimeGrid(config.tree.T, config.tree.N), d=config.tree.d)

    generator = None
    if config.generator is not None:
        gcfg = config.generator
        modulus_params = gcfg.modulus.params if gcfg.modulus else {}
        generator = make_generator(gcfg.name, modulus=gcfg.modulus.name if gcfg.modulus else None,
                                   **gcfg.params, **modulus_params)

    operator = make_operator(config.operator.kind, tree, generator, mu=config.operator.mu)

    claims = []
    for key in config.claims.keys:
        if key == "const":
            claims.extend(AdaptedField.constant(tree, c) for c in config.claims.constants)
        elif key == "noise":
            claims.append(noise_claim(tree, config.seed))
        else:
            claims.append(CLAIM_BUILDERS[key](tree))

    state.update(tree=tree, operator=operator, generator=generator, claims=claims)
    logger.info("✓ setup", tree=repr(tree), operator=operator.name, claims=len(claims))
    return state


@_timed("axioms")
def axioms_stage(state: RunState) -> RunState:
    report = check_axioms(state["operator"], state["claims"])
    state["checks"].extend(report.reports())
    state["tables"]["axioms"] = _table([
        {"check": r.check, "passed": r.passed, "violations": r.violation_count,
         "cases": r.metrics.get("cases", 0.0)}
        for r in report.reports()
    ])
    return state


@_timed("dominate")
def dominate_stage(state: RunState) -> RunState:
    E = state["operator"]
    reports = run_domination_suite(E, None, state["claims"]) + [check_boundedness(E)]
    state["checks"].extend(reports)
    state["tables"]["dominate"] = _table([
        {"check": r.check, "passed": r.passed, "violations": r.violation_count}
        for r in reports
    ])
    return state


@_timed("solve")
def solve_stage(state: RunState) -> RunState:
    tree, g = state["tree"], state["generator"]
    rows = []
    for xi in state["claims"]:
        explicit = solve_bsde(g, xi, tree, Scheme.EXPLICIT)
        implicit_y0 = float("nan")
        if g.lipschitz_y * tree.dt < 1.0:
            implicit_y0 = solve_bsde(g, xi, tree, Scheme.IMPLICIT).y0
        rows.append({"claim": xi.label, "explicit_y0": explicit.y0, "implicit_y0": implicit_y0,
                     "gap": abs(explicit.y0 - implicit_y0), "residual": explicit.residual()})
    state["tables"]["solve"] = _table(rows)

    state["checks"].append(symmetry_check(g.modulus, state["claims"]))
    for xi in state["claims"]:
        state["checks"].append(comparison_check(g, xi + 1.0, xi))
    headline = next((r for r in rows if not r["claim"].startswith("const")), rows[0])
    state["summary"]["solve_y0"] = headline["explicit_y0"]
    state["summary"]["solve_gap"] = headline["gap"]
    return state


@_timed("picard")
def picard_stage(state: RunState) -> RunState:
    config, tree, E = state["config"].picard, state["tree"], state["operator"]
    driver = make_driver(config.driver.name, **config.driver.params)
    X = CLAIM_BUILDERS[config.claim](tree)
    problem = EfsdeProblem(E, driver, X, z=np.asarray(config.z), eta=_eta_field(tree, config.eta),
                           label=config.claim)
    result = picard_solve(problem)

    fixed_point = CheckReport(check="picard_fixed_point")
    fixed_point.compare_le(np.array([result.residual]), np.array([0.0]), ORACLE_MATCH_TOL,
                           detail="defining-equation residual")
    fixed_point.metrics.update(residual=result.residual, iterations=float(result.iterations),
                               windows=float(len(result.windows)))
    state["checks"].append(fixed_point)

    oracle = None
    if driver.lipschitz * tree.dt < 1.0:
        oracle = backward_oracle(problem)
        match = CheckReport(check="picard_oracle")
        for k in range(tree.N + 1):
            match.compare_eq(result.y.at(k), oracle.at(k), ORACLE_MATCH_TOL, step=k,
                             detail="picard = oracle")
        state["checks"].append(match)

    M = martingale_part(problem, result.y)
    state["checks"].append(check_supermartingale(E, M, "martingale"))

    shift = config.compare_shift
    problem_bar = EfsdeProblem(E, driver, X + shift, z=problem.z,
                               eta=_eta_field(tree, config.eta + shift), label=f"{config.claim}+{shift:g}")
    state["checks"].append(compare_solutions(problem, problem_bar))

    state["tables"]["picard"] = _table([
        {"step": k, "t": tree.time(k), "y_min": float(np.min(result.y.at(k))),
         "y_max": float(np.max(result.y.at(k))), "y_mean": float(np.mean(result.y.at(k))),
         "oracle_gap": float(np.max(np.abs(result.y.at(k) - oracle.at(k)))) if oracle else float("nan")}
        for k in range(tree.N + 1)
    ])
    state["summary"].update(picard_y0=float(result.y.at(0)[0]), picard_residual=result.residual)
    return state


@_timed("doob-meyer")
def doob_meyer_stage(state: RunState) -> RunState:
    config, tree, E = state["config"].doob_meyer, state["tree"], state["operator"]
    base = None
    if config.claim is not None:
        base = E.process(CLAIM_BUILDERS[config.claim](tree))
    steps = []
    for k in range(tree.N + 1):
        drift = np.full(tree.node_count(k), -config.drift * tree.time(k))
        steps.append(drift if base is None else base.at(k) + drift)
    Y = AdaptedField.process(tree, steps, "Y")

    run = penalize(E, Y, config.z, config.levels)
    state["checks"].extend([run.monotonicity_report(), run.increasing_report(), run.residual_report()])
    state["tables"]["doob_meyer"] = run.to_frame()
    last = run.diagnostics[-1]
    state["summary"].update(dm_residual=last.residual, dm_a_terminal_mean=last.a_terminal_mean,
                            dm_sup_gap=last.sup_gap)

    if config.target is not None:
        result = decompose(E, Y, config.z, target=config.target, start_level=config.levels[0])
        report = CheckReport(check="decomposition", passed=result.converged)
        if not result.converged:
            report.notes.append(f"level cap reached with residual {result.residual:.3e}")
        report.metrics.update(residual=result.residual, level=result.level)
        state["checks"].append(report)
        state["tables"]["doob_meyer_decompose"] = result.to_frame()
    return state


@_timed("recover")
def recover_stage(state: RunState) -> RunState:
    config, tree, E = state["config"].recover, state["tree"], state["operator"]
    grid = _z_grid(state["config"].recover.z_grid, tree.d)
    recovered = recover_generator(
        E, grid, t=config.steps, horizon_steps=config.horizon_steps,
        reference_node=config.reference_node, via_doob_meyer=config.via_doob_meyer,
        interpolation=config.interpolation, tol=config.tolerance,
    )
    state["recovered"] = recovered
    state["checks"].append(recovered.check_invariants(config.tolerance))
    state["tables"]["recover"] = _table([
        {"step": k, **{f"z{i}": float(z[i]) for i in range(tree.d)}, "g_hat": float(value)}
        for k, row in zip(recovered.steps, recovered.table)
        for z, value in zip(recovered.z_grid, row)
    ])
    state["artifacts"]["recovered.json"] = recovered.to_json()
    if recovered.richardson is not None:
        state["summary"]["recover_richardson"] = recovered.richardson
    return state


@_timed("represent")
def represent_stage(state: RunState) -> RunState:
    if state["recovered"] is None:
        state = recover_stage(state)
    config, tree, E = state["config"].recover, state["tree"], state["operator"]
    recovered = state["recovered"]
    verdict = verify_representation(E, recovered, state["claims"], tol=config.tolerance)
    summary = CheckReport(check="represent", passed=verdict.passed, notes=list(verdict.notes))
    summary.metrics.update(max_error=verdict.max_error, tolerance=verdict.tolerance)
    state["checks"].append(summary)
    state["tables"]["represent"] = _table([
        {"claim": c.claim, "max_error": c.max_error, "extrapolated": c.extrapolated_count}
        for c in verdict.claims
    ])

    radii = np.abs(recovered.z_grid[:, 0])
    z0 = float(np.min(radii[radii > 0])) if np.any(radii > 0) else 0.0
    eta_steps = {}
    for j in range(tree.N):
        sign = np.sign(tree.brownian_at(j)[:, 0])
        eta = np.zeros((tree.node_count(j), tree.d))
        eta[:, 0] = sign * z0
        eta_steps[j] = eta
    eta_field = AdaptedField.partial(tree, eta_steps, f"sign(B)*{z0:g}")
    state["checks"].append(null_integral_check(recovered, eta_field, 0, tree.N, config.tolerance))
    state["summary"]["represent_max_error"] = verdict.max_error
    return state


@_timed("emit")
def emit_stage(state: RunState) -> RunState:
    config = state["config"]
    out_dir = state["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)

    table_names = []
    for name in sorted(state["tables"]):
        path = out_dir / f"{name}.csv"
        state["tables"][name].to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        table_names.append(path.name)
    for name in sorted(state["artifacts"]):
        (out_dir / name).write_text(json.dumps(state["artifacts"][name], indent=2, sort_keys=True) + "\n")

    checks = state["checks"]
    report = RunReport(
        tool_version=__version__,
        config_hash=config.config_hash(),
        passed=all(c.passed for c in checks),
        checks=checks,
        tables=table_names,
        meta={
            "name": config.name,
            "stages": list(state["stages"]),
            "operator": state["operator"].name if state["operator"] else None,
            "tree": config.tree.model_dump(),
            "summary": dict(sorted(state["summary"].items())),
        },
    )
    (out_dir / "report.json").write_text(report.model_dump_json(indent=2) + "\n")
    state["report"] = report
    (out_dir / "timing.json").write_text(json.dumps(state["timing"], indent=2, sort_keys=True) + "\n")

    if report.passed:
        logger.info("✓ run complete", checks=len(checks), out_dir=str(out_dir))
    else:
        failed = [c.check for c in checks if not c.passed]
        logger.warning("✗ run complete with failures", failed=failed, out_dir=str(out_dir))
    return state


STAGE_NODES = {
    "axioms": axioms_stage,
    "dominate": dominate_stage,
    "solve": solve_stage,
    "picard": picard_stage,
    "doob-meyer": doob_meyer_stage,
    "recover": recover_stage,
    "represent": represent_stage,
}


# ==================== PIPELINE ====================

def _router(after: str):
    """Route to the next selected stage after `after`, or to emit."""
    order = ["setup", *STAGES]

    def route(state: RunState) -> str:
        selected = set(state["stages"])
        for name in order[order.index(after) + 1:]:
            if name in selected:
                return name
        return "emit"

    return route


def build_pipeline():
    builder = StateGraph(RunState)
    builder.add_node("setup", setup_stage)
    for name, fn in STAGE_NODES.items():
        builder.add_node(name, fn)
    builder.add_node("emit", emit_stage)

    builder.add_edge(START, "setup")
    targets = {name: name for name in [*STAGES, "emit"]}
    for name in ["setup", *STAGES]:
        builder.add_conditional_edges(name, _router(name), targets)
    builder.add_edge("emit", END)
    return builder.compile()


def initial_state(config: ExperimentConfig, out_dir: Path, stages: Sequence[str]) -> RunState:
    return {
        "config": config,
        "stages": [s for s in STAGES if s in set(stages)],
        "out_dir": out_dir,
        "tree": None,
        "operator": None,
        "generator": None,
        "claims": [],
        "recovered": None,
        "checks": [],
        "tables": {},
        "artifacts": {},
        "summary": {},
        "completed": [],
        "timing": {},
        "report": None,
    }


def run_experiment(
    config: ExperimentConfig,
    out_dir: Optional[Path] = None,
    stages: Optional[Sequence[str]] = None,
) -> RunReport:
    """Run the selected stages and write the outputs; returns the RunReport."""
    out_dir = Path(config.output.directory) if out_dir is None else Path(out_dir)
    stages = config.run if stages is None else list(stages)
    logger.info("🚀 run", name=config.name, stages=stages, out_dir=str(out_dir))
    final = build_pipeline().invoke(initial_state(config, out_dir, stages))
    return final["report"]
