"""End-to-end pipeline and benchmark harness.

Three phases: label a small training graph with a classical solver and fit
the teacher; distill the boosted student (plus a distillation-only student
for the ablation); then, on each test graph, run every configured solver on
the full node set (baseline) and on the teacher's and student's predicted
good nodes (pruned_pt / pruned), timing each and reporting quality, speedup,
prune ratio, recall, and inference cost.

Solver timing excludes graph construction and network inference; inference
is timed separately (forward pass plus thresholding). Non-timing fields are
deterministic given the config, which is what the determinism acceptance
check relies on.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import gcn
from .graph import Graph, derive_seed, generate_ba, load_edge_list
from .solvers import (
    MVC,
    Candidates,
    Solution,
    coverage,
    exact_solve,
    greedy_mis,
    greedy_mvc,
    local_search_mis,
    local_search_mvc,
    validate_solution,
    _norm_problem,
)
from .training import (
    StudentConfig,
    TeacherConfig,
    boost_weights,
    degree_features,
    generate_labels,
    predict_good_nodes,
    recall,
    train_student,
    train_teacher,
)

SOLVERS = ("greedy", "local-search", "exact")
VARIANTS = ("baseline", "pruned_pt", "pruned")

CSV_COLUMNS = [
    "graph", "n", "m", "problem", "solver", "variant", "size", "coverage",
    "runtime_s", "speedup", "prune_ratio", "recall_teacher", "recall_kd",
    "recall_student", "infer_teacher_ms", "infer_student_ms",
]
TIMING_COLUMNS = ("runtime_s", "speedup", "infer_teacher_ms", "infer_student_ms")

REPORT_NOTES = [
    "input features are node degrees divided by the maximum degree",
    "boost weights: error scaling, then degree normalization, then rescale to sum |train|",
    "per-variant solver seeds are derived deterministically from the master seed",
]


class PipelineError(RuntimeError):
    """A phase failed; the message starts with the phase tag."""

    def __init__(self, phase: str, message: str):
        super().__init__(f"phase {phase}: {message}")
        self.phase = phase
        self.detail = message

    def __reduce__(self):
        # keep (phase, message) so the exception survives process boundaries
        return (PipelineError, (self.phase, self.detail))


@dataclass(frozen=True)
class GraphSpec:
    """A test or train graph: either generator parameters or a file path."""

    name: str
    n: int | None = None
    m: int | None = None
    seed: int | None = None
    path: str | None = None

    def __post_init__(self):
        has_params = self.n is not None or self.m is not None or self.seed is not None
        if self.path is None:
            if self.n is None or self.m is None or self.seed is None:
                raise ValueError(
                    f"graph {self.name!r} needs either a path or all of n, m, seed"
                )
        elif has_params:
            raise ValueError(f"graph {self.name!r} has both a path and parameters")

    def materialize(self) -> Graph:
        if self.path is not None:
            return load_edge_list(self.path).graph
        return generate_ba(self.n, self.m, self.seed)


@dataclass
class PipelineConfig:
    problem: str
    train_graph: GraphSpec
    test_graphs: list[GraphSpec]
    solvers: list[str]
    label_oracle: str = "greedy"
    recall_oracle: str | None = None  # None: same as label_oracle
    seed: int = 0
    teacher: TeacherConfig | None = None
    student: StudentConfig | None = None
    exact_time_limit: float = 3600.0
    solver_repeats: int = 3
    inference_repeats: int = 5

    def __post_init__(self):
        self.problem = _norm_problem(self.problem)
        # Unset training configs inherit their seeds from the master seed so a
        # single integer pins the whole run; explicit configs are used as-is.
        if self.teacher is None:
            self.teacher = TeacherConfig(seed=derive_seed(self.seed, "teacher"))
        if self.student is None:
            self.student = StudentConfig(seed=derive_seed(self.seed, "student"))
        if not self.solvers:
            raise ValueError("config needs at least one solver")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ValueError(f"unknown solver {s!r}, expected one of {SOLVERS}")
        if not self.test_graphs:
            raise ValueError("config needs at least one test graph")
        if self.solver_repeats < 1 or self.inference_repeats < 1:
            raise ValueError("repeat counts must be at least 1")


@dataclass
class BenchRow:
    graph: str
    n: int
    m: int
    problem: str
    solver: str
    variant: str
    size: int
    coverage: float | None
    runtime_s: float
    speedup: float
    prune_ratio: float
    recall_teacher: float
    recall_kd: float
    recall_student: float
    infer_teacher_ms: float
    infer_student_ms: float


@dataclass
class BenchReport:
    config: PipelineConfig
    rows: list[BenchRow]
    notes: list[str]


def speedup(time_baseline: float, time_variant: float) -> float:
    """Baseline seconds over variant seconds."""
    if time_baseline <= 0 or time_variant <= 0:
        raise ValueError("times must be positive")
    return time_baseline / time_variant


def _solve_once(g: Graph, problem: str, solver: str, cand: Candidates,
                seed: int, time_limit: float) -> Solution:
    if solver == "greedy":
        return greedy_mvc(g, cand) if problem == MVC else greedy_mis(g, cand)
    if solver == "local-search":
        if problem == MVC:
            return local_search_mvc(g, cand, seed=seed)
        return local_search_mis(g, cand, seed=seed)
    return exact_solve(g, problem, cand, time_limit=time_limit)


def _run_cell(g: Graph, problem: str, solver: str, cand: Candidates,
              seed: int, time_limit: float, repeats: int) -> dict:
    """One (graph, solver, variant) measurement: repeated identical runs,
    median wall time, validity check on the final solution."""
    times = []
    sol = None
    for _ in range(repeats):
        sol = _solve_once(g, problem, solver, cand, seed, time_limit)
        times.append(sol.runtime)
    report = validate_solution(g, sol)
    if not report.ok:
        raise PipelineError("solve", f"{solver} produced an invalid solution: "
                                     + "; ".join(report.failures))
    return {
        "size": sol.size,
        "coverage": coverage(g, sol) if problem == MVC else None,
        "runtime": float(np.median(times)),
        "timed_out": sol.optimal is False,
    }


def _time_predict(g: Graph, params, x, repeats: int) -> float:
    """Median milliseconds for an eval forward pass plus thresholding."""
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        logits = gcn.forward(g, params, x)
        _ = logits[:, 1] >= logits[:, 0]
        times.append((time.perf_counter() - t0) * 1e3)
    return float(np.median(times))


def run_pipeline(cfg: PipelineConfig, jobs: int = 1, log=None) -> BenchReport:
    """Execute all three phases and assemble the report.

    ``jobs > 1`` runs independent (graph, solver, variant) cells in worker
    processes; each cell stays single-threaded so its timing is meaningful.
    Results are identical to a sequential run because every cell's seed is
    derived from the config alone.
    """
    def say(msg):
        if log:
            log(msg)

    notes = list(REPORT_NOTES)
    problem = cfg.problem

    # phase 1: oracle labels on the training graph, teacher fit
    try:
        say(f"phase 1: labeling {cfg.train_graph.name} and training teacher")
        train_g = cfg.train_graph.materialize()
        labels = generate_labels(
            train_g, problem, cfg.label_oracle,
            seed=derive_seed(cfg.seed, "labels"),
            time_limit=cfg.exact_time_limit,
        )
        teacher = train_teacher(train_g, labels, cfg.teacher)
    except PipelineError:
        raise
    except Exception as e:
        raise PipelineError("labels+teacher", str(e)) from e

    # phase 2: boosted student plus distillation-only student
    try:
        say("phase 2: training students")
        bw = boost_weights(teacher.params, train_g, labels, problem)
        student = train_student(train_g, labels, teacher.params, bw, cfg.student)
        kd_student = train_student(train_g, labels, teacher.params, None, cfg.student)
    except Exception as e:
        raise PipelineError("students", str(e)) from e

    # phase 3: per-test-graph prediction and solver runs
    rows: list[BenchRow] = []
    try:
        cells = []
        per_graph = []
        for spec in cfg.test_graphs:
            say(f"phase 3: benchmarking on {spec.name}")
            tg = spec.materialize()
            x = degree_features(tg)
            good_t = predict_good_nodes(teacher.params, tg, x)
            good_s = predict_good_nodes(student.params, tg, x)
            good_kd = predict_good_nodes(kd_student.params, tg, x)
            if good_t.size == 0 or good_s.size == 0:
                raise PipelineError(
                    "solve", f"empty good-node set on {spec.name}: nothing to prune to"
                )
            truth = generate_labels(
                tg, problem, cfg.recall_oracle or cfg.label_oracle,
                seed=derive_seed(cfg.seed, "recall-labels", spec.name),
                time_limit=cfg.exact_time_limit,
            )
            info = {
                "spec": spec,
                "graph": tg,
                "recall_teacher": recall(good_t, truth),
                "recall_kd": recall(good_kd, truth),
                "recall_student": recall(good_s, truth),
                "infer_teacher_ms": _time_predict(tg, teacher.params, x,
                                                  cfg.inference_repeats),
                "infer_student_ms": _time_predict(tg, student.params, x,
                                                  cfg.inference_repeats),
                "cands": {
                    "baseline": (Candidates.all(), 1.0),
                    "pruned_pt": (Candidates.restrict(good_t), good_t.size / tg.n),
                    "pruned": (Candidates.restrict(good_s), good_s.size / tg.n),
                },
            }
            per_graph.append(info)
            for solver in cfg.solvers:
                for variant in VARIANTS:
                    cand, _ = info["cands"][variant]
                    cell_seed = derive_seed(cfg.seed, "solve", spec.name,
                                            solver, variant)
                    cells.append((info, solver, variant, cand, cell_seed))

        results = {}
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                futs = {
                    pool.submit(_run_cell, info["graph"], problem, solver,
                                cand, cell_seed, cfg.exact_time_limit,
                                cfg.solver_repeats): (id(info), solver, variant)
                    for info, solver, variant, cand, cell_seed in cells
                }
                for fut, key in futs.items():
                    results[key] = fut.result()
        else:
            for info, solver, variant, cand, cell_seed in cells:
                results[(id(info), solver, variant)] = _run_cell(
                    info["graph"], problem, solver, cand, cell_seed,
                    cfg.exact_time_limit, cfg.solver_repeats,
                )

        for info in per_graph:
            spec, tg = info["spec"], info["graph"]
            for solver in cfg.solvers:
                base = results[(id(info), solver, "baseline")]
                if base["timed_out"]:
                    notes.append(
                        f"exact baseline on {spec.name} hit the time limit; "
                        "best incumbent reported"
                    )
                for variant in VARIANTS:
                    cell = results[(id(info), solver, variant)]
                    rows.append(BenchRow(
                        graph=spec.name,
                        n=tg.n,
                        m=tg.m,
                        problem=problem,
                        solver=solver,
                        variant=variant,
                        size=cell["size"],
                        coverage=cell["coverage"],
                        runtime_s=cell["runtime"],
                        speedup=speedup(base["runtime"], cell["runtime"]),
                        prune_ratio=info["cands"][variant][1],
                        recall_teacher=info["recall_teacher"],
                        recall_kd=info["recall_kd"],
                        recall_student=info["recall_student"],
                        infer_teacher_ms=info["infer_teacher_ms"],
                        infer_student_ms=info["infer_student_ms"],
                    ))
    except PipelineError:
        raise
    except Exception as e:
        raise PipelineError("solve", str(e)) from e
    return BenchReport(cfg, rows, notes)


# ---------------------------------------------------------------------------
# Report emission


def _fmt(value, spec: str) -> str:
    if value is None:
        return ""
    return format(value, spec)


def emit_report(report: BenchReport, fmt: str, path) -> None:
    """Write the report as CSV rows or JSON with a config echo."""
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for r in report.rows:
                writer.writerow([
                    r.graph, r.n, r.m, r.problem, r.solver, r.variant, r.size,
                    _fmt(r.coverage, ".6f"), _fmt(r.runtime_s, ".6f"),
                    _fmt(r.speedup, ".6f"), _fmt(r.prune_ratio, ".6f"),
                    _fmt(r.recall_teacher, ".6f"), _fmt(r.recall_kd, ".6f"),
                    _fmt(r.recall_student, ".6f"),
                    _fmt(r.infer_teacher_ms, ".3f"),
                    _fmt(r.infer_student_ms, ".3f"),
                ])
    elif fmt == "json":
        payload = {
            "config": asdict(report.config),
            "notes": report.notes,
            "rows": [asdict(r) for r in report.rows],
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}, expected csv or json")


def load_config(path) -> PipelineConfig:
    """Parse a JSON config mirroring PipelineConfig field for field.

    Unknown keys are rejected so typos do not silently fall back to
    defaults.
    """
    with open(path) as f:
        raw = json.load(f)
    return config_from_dict(raw)


def _build(cls, raw: dict, context: str):
    import dataclasses

    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}")
    return raw


def config_from_dict(raw: dict) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ValueError("config root must be a JSON object")
    raw = dict(raw)
    _build(PipelineConfig, raw, "config")
    for key in ("train_graph",):
        if key not in raw:
            raise ValueError(f"config: missing required key {key!r}")
    if "problem" not in raw:
        raise ValueError("config: missing required key 'problem'")
    if "test_graphs" not in raw or "solvers" not in raw:
        raise ValueError("config: missing required key 'test_graphs' or 'solvers'")
    raw["train_graph"] = GraphSpec(**_build(
        GraphSpec, raw["train_graph"], "train_graph"))
    raw["test_graphs"] = [
        GraphSpec(**_build(GraphSpec, g, f"test_graphs[{i}]"))
        for i, g in enumerate(raw["test_graphs"])
    ]
    if "teacher" in raw:
        raw["teacher"] = TeacherConfig(**{
            **_build(TeacherConfig, raw["teacher"], "teacher"),
            "hidden_dims": tuple(raw["teacher"].get("hidden_dims", (128, 128, 128))),
        })
    if "student" in raw:
        student = _build(StudentConfig, raw["student"], "student")
        if student.get("hidden_dims") is not None:
            student = {**student, "hidden_dims": tuple(student["hidden_dims"])}
        raw["student"] = StudentConfig(**student)
    return PipelineConfig(**raw)
