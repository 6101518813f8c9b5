"""Benchmark harness: resolve configs into runs, execute, report.

This is the layer that turns a declarative ``ExperimentConfig`` into
concrete model/problem objects with per-representation defaults, runs the
seeded repetitions (optionally across worker threads), and serializes the
results.  Reports are reproducible by construction: run ``i`` always uses
seed ``base + i`` and every random decision inside a run flows from that
seed, so the only fields that vary between identical invocations are the
wall-clock timings.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .blackbox import (
    BlackBoxProblem,
    BooleanFamily,
    Metric,
    REGRESSION_BENCHMARKS,
    gen_boolean,
    gen_regression,
    load_dataset,
    load_truth_table,
)
from .cgp import CartesianGP
from .core import (
    ConfigurationError,
    GPModel,
    Hyperparameters,
    Problem,
    RunResult,
    Scheme,
    evolve,
)
from .policy import (
    CartPole,
    EpisodeConfig,
    PolicyProblem,
    environment_from_name,
)
from .primitives import Domain, FunctionSet, default_boolean, default_real
from .schemas import (
    AggregateStats,
    BenchmarkReport,
    CatalogueDomain,
    CatalogueEntry,
    CatalogueResponse,
    CgpModelParams,
    ExperimentConfig,
    ModelSection,
    ProblemParams,
    ProblemSection,
    RunRecord,
    TgpModelParams,
)
from .tgp import TgpParams, TreeGP

DOMAIN_LOGIC = "logic_synthesis"
DOMAIN_REGRESSION = "symbolic_regression"
DOMAIN_POLICY = "policy_search"
CATALOGUE_DOMAINS = (DOMAIN_LOGIC, DOMAIN_REGRESSION, DOMAIN_POLICY)

# Hyperparameter defaults applied per representation when the config
# leaves a field unset.  Trees default to a generational population with
# tournament selection; grids default to a 1+lambda hill climber.
MODEL_HP_DEFAULTS = {
    "tgp": dict(
        population_size=100,
        max_evaluations=10_000,
        mutation_rate=0.1,
        crossover_rate=0.9,
        tournament_size=5,
        elitism=1,
        mu=1,
        lambda_=4,
    ),
    "cgp": dict(
        population_size=5,
        max_evaluations=10_000,
        mutation_rate=0.05,
        crossover_rate=0.0,
        tournament_size=2,
        elitism=1,
        mu=1,
        lambda_=4,
    ),
}

MODEL_DEFAULT_SCHEME = {
    "tgp": Scheme.GENERATIONAL,
    "cgp": Scheme.ONE_PLUS_LAMBDA,
}


# -- catalogue -------------------------------------------------------------------

_CATALOGUE = {
    DOMAIN_LOGIC: [
        ("adder:N", "ideal_epsilon",
         "ripple-carry adder with carry-in; 2N+1 inputs, N+1 outputs (N <= 9)"),
        ("multiplier:N", "ideal_epsilon",
         "N x N bit unsigned multiplier; 2N inputs, 2N outputs (N <= 10)"),
        ("parity:N", "ideal_epsilon",
         "odd parity of N bits; N inputs, 1 output (N <= 20)"),
        ("comparator:N", "ideal_epsilon",
         "N-bit compare; 2N inputs, outputs (a<b, a=b, a>b) (N <= 10)"),
        ("multiplexer:K", "ideal_epsilon",
         "K address bits select one of 2^K data lines; K+2^K inputs (K <= 4)"),
        ("majority:N", "ideal_epsilon",
         "majority vote of N bits, N odd; N inputs, 1 output (N <= 19)"),
    ],
    DOMAIN_REGRESSION: [
        ("koza1", "count, low, high, seed, metric, ideal_epsilon",
         "x^4 + x^3 + x^2 + x, 20 points on [-1, 1]"),
        ("koza2", "count, low, high, seed, metric, ideal_epsilon",
         "x^5 - 2x^3 + x, 20 points on [-1, 1]"),
        ("koza3", "count, low, high, seed, metric, ideal_epsilon",
         "x^6 - 2x^4 + x^2, 20 points on [-1, 1]"),
        ("nguyen_f1", "count, low, high, seed, metric, ideal_epsilon",
         "x^3 + x^2 + x, 20 points on [-1, 1]"),
        ("nguyen_f2", "count, low, high, seed, metric, ideal_epsilon",
         "x^4 + x^3 + x^2 + x, 20 points on [-1, 1]"),
        ("nguyen_f3", "count, low, high, seed, metric, ideal_epsilon",
         "x^5 + x^4 + x^3 + x^2 + x, 20 points on [-1, 1]"),
        ("nguyen_f4", "count, low, high, seed, metric, ideal_epsilon",
         "x^6 + x^5 + x^4 + x^3 + x^2 + x, 20 points on [-1, 1]"),
        ("nguyen_f5", "count, low, high, seed, metric, ideal_epsilon",
         "sin(x^2) cos(x) - 1, 20 points on [-1, 1]"),
        ("nguyen_f6", "count, low, high, seed, metric, ideal_epsilon",
         "sin(x) + sin(x + x^2), 20 points on [-1, 1]"),
        ("nguyen_f7", "count, low, high, seed, metric, ideal_epsilon",
         "ln(x+1) + ln(x^2+1), 20 points on [0, 2]"),
        ("nguyen_f8", "count, low, high, seed, metric, ideal_epsilon",
         "sqrt(x), 20 points on [0, 4]"),
        ("nguyen_f9", "count, low, high, seed, metric, ideal_epsilon",
         "sin(x0) + sin(x1^2), 100 points on [0, 1]^2"),
        ("nguyen_f10", "count, low, high, seed, metric, ideal_epsilon",
         "2 sin(x0) cos(x1), 100 points on [0, 1]^2"),
    ],
    DOMAIN_POLICY: [
        ("cartpole", "episodes, max_steps, gamma, base_seed, target_return",
         "pole balancing with bang-bang force; 4 state inputs, binary action"),
        ("gridworld:WxH:GX,GY", "episodes, max_steps, gamma, base_seed, target_return",
         "deterministic grid from (0,0) to the goal; bare 'gridworld' is 5x5"),
    ],
}

_PARAMS_LOGIC = {"ideal_epsilon"}
_PARAMS_REGRESSION = {"metric", "ideal_epsilon", "count", "low", "high", "seed"}
_PARAMS_DATASET = {"metric", "ideal_epsilon"}
_PARAMS_POLICY = {"episodes", "max_steps", "gamma", "base_seed", "target_return"}


def catalogue(domain: Optional[str] = None) -> CatalogueResponse:
    """Structured listing of built-in problems, optionally one domain."""
    if domain is not None and domain not in CATALOGUE_DOMAINS:
        raise ConfigurationError(
            f"unknown domain {domain!r}; available: {', '.join(CATALOGUE_DOMAINS)}"
        )
    selected = [domain] if domain is not None else list(CATALOGUE_DOMAINS)
    domains = [
        CatalogueDomain(
            domain=d,
            entries=[
                CatalogueEntry(name=n, parameters=p, description=t)
                for n, p, t in _CATALOGUE[d]
            ],
        )
        for d in selected
    ]
    width = max(len(n) for d in domains for n, _, _ in _CATALOGUE[d.domain])
    lines = []
    for block in domains:
        lines.append(block.domain)
        for entry in block.entries:
            lines.append(f"  {entry.name.ljust(width)}  {entry.description}")
        lines.append("")
    return CatalogueResponse(domains=domains, text="\n".join(lines).rstrip() + "\n")


# -- problem resolution ----------------------------------------------------------

def _reject_foreign_params(params: ProblemParams, allowed: set, context: str) -> None:
    # an explicit null is as good as absent, so only non-None values count
    extras = sorted(
        f for f in params.model_fields_set - allowed if getattr(params, f) is not None
    )
    if extras:
        raise ConfigurationError(
            f"problem parameter(s) {', '.join(extras)} do not apply to {context}"
        )


def _metric_from_params(params: ProblemParams) -> Optional[Metric]:
    return None if params.metric is None else Metric(params.metric)


def _problem_from_file(path: str, params: ProblemParams) -> Problem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read problem file {path!r}: {exc}") from exc
    name = Path(path).name
    if path.lower().endswith(".csv"):
        _reject_foreign_params(params, _PARAMS_DATASET, "a dataset file")
        payload = load_dataset(text, name=name)
        return BlackBoxProblem(
            payload,
            metric=_metric_from_params(params),
            ideal_epsilon=params.ideal_epsilon,
        )
    _reject_foreign_params(params, _PARAMS_LOGIC, "a truth table file")
    return BlackBoxProblem(
        load_truth_table(text, name=name), ideal_epsilon=params.ideal_epsilon
    )


def _logic_problem(name: str, params: ProblemParams) -> Problem:
    _reject_foreign_params(params, _PARAMS_LOGIC, f"logic problem {name!r}")
    family_name, sep, size_text = name.partition(":")
    if not sep or not size_text:
        raise ConfigurationError(
            f"logic problem {name!r} needs a size suffix, e.g. {family_name}:3"
        )
    try:
        size = int(size_text)
    except ValueError:
        raise ConfigurationError(
            f"logic problem size must be an integer, got {size_text!r}"
        ) from None
    table = gen_boolean(BooleanFamily(family_name), size)
    return BlackBoxProblem(table, ideal_epsilon=params.ideal_epsilon)


def _regression_problem(name: str, params: ProblemParams) -> Problem:
    _reject_foreign_params(params, _PARAMS_REGRESSION, f"regression problem {name!r}")
    dataset = gen_regression(
        name,
        count=params.count,
        low=params.low,
        high=params.high,
        seed=0 if params.seed is None else params.seed,
    )
    return BlackBoxProblem(
        dataset,
        metric=_metric_from_params(params),
        ideal_epsilon=params.ideal_epsilon,
    )


def _policy_problem(name: str, params: ProblemParams) -> Problem:
    _reject_foreign_params(params, _PARAMS_POLICY, f"policy problem {name!r}")
    factory = environment_from_name(name)
    probe = factory()
    max_steps = probe.max_steps if params.max_steps is None else params.max_steps
    if isinstance(probe, CartPole):
        if params.max_steps is not None:
            def factory(steps=max_steps):
                return CartPole(max_steps=steps)
        episodes = 5 if params.episodes is None else params.episodes
        default_target = float(max_steps)
    else:
        episodes = 1 if params.episodes is None else params.episodes
        gx, gy = probe.goal
        default_target = (gx + gy) * probe.step_reward + probe.goal_reward
    cfg = EpisodeConfig(
        episodes=episodes,
        gamma=1.0 if params.gamma is None else params.gamma,
        max_steps=max_steps,
        base_seed=0 if params.base_seed is None else params.base_seed,
    )
    target = default_target if params.target_return is None else params.target_return
    return PolicyProblem(factory, cfg, target_return=target, name=name)


def resolve_problem(section: ProblemSection) -> Problem:
    """Build the problem named (or pointed at) by a config section."""
    if section.path is not None:
        return _problem_from_file(section.path, section.params)
    name = section.name
    head = name.partition(":")[0]
    if head in {f.value for f in BooleanFamily}:
        return _logic_problem(name, section.params)
    if name in REGRESSION_BENCHMARKS:
        return _regression_problem(name, section.params)
    if head in ("cartpole", "gridworld"):
        return _policy_problem(name, section.params)
    known = [n for d in CATALOGUE_DOMAINS for n, _, _ in _CATALOGUE[d]]
    raise ConfigurationError(
        f"unknown problem {name!r}; available: {', '.join(known)}"
    )


# -- model assembly --------------------------------------------------------------

def build_model(section: ModelSection, problem: Problem) -> GPModel:
    """Construct the representation sized to the problem's signature."""
    params = section.params
    functions = getattr(params, "functions", None)
    if functions is not None:
        try:
            fset = FunctionSet.from_names(problem.domain, functions)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
    else:
        fset = default_real() if problem.domain is Domain.REAL else default_boolean()

    if section.name == "tgp":
        if params is None:
            params = TgpModelParams()
        elif not isinstance(params, TgpModelParams):
            raise ConfigurationError("model params do not match model 'tgp'")
        tree_params = TgpParams(
            max_depth=params.max_depth,
            init_depth_min=params.init_depth_min,
            init_depth_max=params.init_depth_max,
            erc_probability=params.erc_probability,
            boolean_constants=params.boolean_constants,
            crossover_retries=params.crossover_retries,
        )
        return TreeGP(fset, problem.n_inputs, problem.n_outputs, tree_params)

    if params is None:
        params = CgpModelParams()
    elif not isinstance(params, CgpModelParams):
        raise ConfigurationError("model params do not match model 'cgp'")
    return CartesianGP(
        fset,
        problem.n_inputs,
        problem.n_outputs,
        n_columns=params.columns,
        n_rows=params.rows,
        levels_back=params.levels_back,
    )


def resolve_scheme(config: ExperimentConfig) -> Scheme:
    if config.model.scheme is not None:
        return Scheme(config.model.scheme)
    return MODEL_DEFAULT_SCHEME[config.model.name]


def build_hyperparameters(config: ExperimentConfig, seed: int) -> Hyperparameters:
    merged = dict(MODEL_HP_DEFAULTS[config.model.name])
    section = config.hyperparameters
    for field in merged:
        value = getattr(section, field)
        if value is not None:
            merged[field] = value
    return Hyperparameters(seed=seed, **merged)


def resolve_seeds(config: ExperimentConfig) -> list[int]:
    """Repetition ``i`` runs with ``base + i``; an explicit
    hyperparameters.seed overrides the run section's base_seed."""
    base = config.hyperparameters.seed
    if base is None:
        base = config.run.base_seed
    return [base + i for i in range(config.run.repetitions)]


# -- execution -------------------------------------------------------------------

def _run_record(result: RunResult, wall_ms: float) -> RunRecord:
    data = asdict(result)
    data["trajectory"] = [tuple(point) for point in data["trajectory"]]
    return RunRecord(**data, wall_ms=wall_ms)


def _execute_one(
    model: GPModel, problem: Problem, config: ExperimentConfig, scheme: Scheme, seed: int
) -> RunRecord:
    hp = build_hyperparameters(config, seed)
    start = time.perf_counter()
    result = evolve(model, problem, hp, scheme)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return _run_record(result, wall_ms)


def _aggregate(records: list[RunRecord]) -> AggregateStats:
    successes = [r for r in records if r.success]
    to_success = [float(r.evaluations_to_success) for r in successes]
    return AggregateStats(
        success_rate=len(successes) / len(records),
        median_best_cost=float(statistics.median(r.best_cost for r in records)),
        median_evaluations_to_success=(
            statistics.median(to_success) if to_success else None
        ),
        mean_wall_ms=sum(r.wall_ms for r in records) / len(records),
    )


def run_experiment(config: ExperimentConfig, workers: int = 1) -> BenchmarkReport:
    """Execute every repetition of an experiment and aggregate the results.

    Worker threads only change scheduling: each run is sealed off by its
    own seed, so the report content is identical for any worker count.
    """
    if workers < 1:
        raise ConfigurationError("workers must be at least 1")
    problem = resolve_problem(config.problem)
    model = build_model(config.model, problem)
    scheme = resolve_scheme(config)
    seeds = resolve_seeds(config)
    # Validate merged hyperparameters before spending any compute.
    build_hyperparameters(config, seeds[0])

    def one(seed: int) -> RunRecord:
        return _execute_one(model, problem, config, scheme, seed)

    if workers == 1 or len(seeds) == 1:
        records = [one(seed) for seed in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, seeds))
    return BenchmarkReport(
        config=config,
        representation=model.model_name,
        problem=problem.name,
        scheme=scheme.value,
        runs=records,
        aggregates=_aggregate(records),
    )


def run_single(config: ExperimentConfig) -> BenchmarkReport:
    """One run regardless of the configured repetition count."""
    single = config.model_copy(deep=True)
    single.run.repetitions = 1
    return run_experiment(single, workers=1)


# -- report serialization --------------------------------------------------------

def _csv_number(value: float) -> str:
    return repr(float(value))


def report_to_json(report: BenchmarkReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def report_from_json(text: str) -> BenchmarkReport:
    return BenchmarkReport.model_validate_json(text)


def report_to_csv(report: BenchmarkReport) -> str:
    """Flat per-run table plus an aggregate trailer comment.

    The CSV view is for spreadsheets; it intentionally drops expressions
    and trajectories, so only the JSON form can be loaded back.
    """
    lines = ["seed,best_cost,success,evaluations,wall_ms"]
    for r in report.runs:
        lines.append(
            f"{r.seed},{_csv_number(r.best_cost)},"
            f"{'true' if r.success else 'false'},"
            f"{r.evaluations_used},{_csv_number(r.wall_ms)}"
        )
    agg = report.aggregates
    median_ts = (
        "na"
        if agg.median_evaluations_to_success is None
        else _csv_number(agg.median_evaluations_to_success)
    )
    lines.append(
        "# aggregate: "
        f"success_rate={_csv_number(agg.success_rate)} "
        f"median_best_cost={_csv_number(agg.median_best_cost)} "
        f"median_evaluations_to_success={median_ts} "
        f"mean_wall_ms={_csv_number(agg.mean_wall_ms)}"
    )
    return "\n".join(lines) + "\n"


def render_report(report: BenchmarkReport, fmt: str) -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "csv":
        return report_to_csv(report)
    raise ConfigurationError(f"unknown report format {fmt!r}; use json or csv")
