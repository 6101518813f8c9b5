"""End-to-end gate: one test per release criterion.

Each test states its threshold inline and computes expected values from
an independent oracle (hand arithmetic, full-graph interpretation,
breadth-first search, closed forms) rather than from the code under
test.  Run with -v to get one pass/fail line per criterion.
"""

import math
import time
from collections import deque

import numpy as np

from gpbench.blackbox import (
    BooleanFamily,
    Dataset,
    TruthTable,
    fitness_logic,
    gen_boolean,
    load_dataset,
    load_truth_table,
    save_dataset,
    save_truth_table,
)
from gpbench.cgp import (
    CartesianGP,
    CgpConfig,
    CgpProgram,
    init_random_cgp,
    point_mutation,
    validate_genome,
)
from gpbench.core import Scheme
from gpbench.harness import report_from_json, report_to_json, run_experiment
from gpbench.policy import (
    Agent,
    CartPole,
    Discrete,
    Environment,
    EpisodeConfig,
    rollout,
)
from gpbench.primitives import Domain, FunctionSet, default_boolean, default_real
from gpbench.rng import derive_rng
from gpbench.schemas import (
    AggregateStats,
    BenchmarkReport,
    ExperimentConfig,
    RunRecord,
)
from gpbench.tgp import (
    TgpParams,
    TreeForest,
    TreeGP,
    TreeProgram,
    func_node,
    init_ramped,
    subtree_crossover,
    subtree_mutation,
    validate_forest,
    var_node,
)


def _config(data: dict) -> ExperimentConfig:
    return ExperimentConfig.model_validate(data)


def _random_table(rng, n: int, m: int) -> TruthTable:
    nbytes = ((1 << n) + 7) // 8
    mask = (1 << (1 << n)) - 1
    cols = tuple(int.from_bytes(rng.bytes(nbytes), "little") & mask for _ in range(m))
    return TruthTable(n_inputs=n, n_outputs=m, packed_outputs=cols)


# -- 1: active-set decoding against a full-graph interpreter ------------------------

_GATES = {
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "xor": lambda a, b: a != b,
    "nand": lambda a, b: not (a and b),
    "not": lambda a: not a,
}


def _full_graph_eval(genome, cfg, fset, bits):
    """Evaluate every node in index order, ignoring reachability."""
    values = list(bits)
    k = cfg.genes_per_node
    for pos in range(cfg.n_nodes):
        genes = genome.node_genes[pos * k:(pos + 1) * k]
        prim = fset.primitives[genes[0]]
        args = (values[g] for g in genes[1:1 + prim.arity])
        values.append(bool(_GATES[prim.name](*args)))
    return [values[g] for g in genome.output_genes]


def test_01_cgp_decoding_matches_full_graph_interpreter():
    fset = FunctionSet.from_names(Domain.BOOLEAN, ("and", "or", "xor", "nand", "not"))
    rng = derive_rng(101)
    start = time.perf_counter()
    for n in range(2, 9):
        if n == 4:  # one multi-row grid in the sweep
            cfg = CgpConfig(n_inputs=n, n_outputs=2, n_columns=6, n_rows=2,
                            levels_back=3, max_arity=fset.max_arity)
        else:
            cfg = CgpConfig(n_inputs=n, n_outputs=2, n_columns=12, n_rows=1,
                            levels_back=4, max_arity=fset.max_arity)
        rows = [[bool((r >> i) & 1) for i in range(n)] for r in range(1 << n)]
        for _ in range(1000):
            genome = init_random_cgp(cfg, fset, rng)
            program = CgpProgram(genome, cfg, fset)
            for bits in rows:
                assert program.evaluate(bits) == _full_graph_eval(
                    genome, cfg, fset, bits
                )
    assert time.perf_counter() - start < 60.0


# -- 2: word-packed fitness against naive per-row evaluation -------------------------

def _naive_hamming(program, table: TruthTable) -> float:
    errors = 0
    for r in range(table.n_rows):
        bits, expected = table.row(r)
        out = program.evaluate([bool(b) for b in bits])
        errors += sum(1 for o, e in zip(out, expected) if bool(o) != bool(e))
    return float(errors)


def test_02_packed_logic_fitness_matches_per_row_evaluation():
    rng = derive_rng(102)
    fset = default_boolean()
    start = time.perf_counter()
    for representation in ("tgp", "cgp"):
        for _ in range(1000):
            n = 2 + int(rng.integers(0, 9))  # tables up to 10 inputs
            m = 1 + int(rng.integers(0, 3))
            table = _random_table(rng, n, m)
            if representation == "tgp":
                model = TreeGP(fset, n, m, TgpParams(init_depth_min=1, init_depth_max=4))
            else:
                model = CartesianGP(fset, n, m, n_columns=20)
            program = model.decode(model.initialize(1, rng)[0])
            assert fitness_logic(program, table) == _naive_hamming(program, table)
    assert time.perf_counter() - start < 60.0


# -- 3: variation operators keep genomes structurally valid --------------------------

def test_03_variation_operators_always_produce_valid_genomes():
    rng = derive_rng(103)
    fset = default_real()
    params = TgpParams(max_depth=9, init_depth_min=2, init_depth_max=5)
    pool = init_ramped(64, fset, 3, 2, params, rng)
    for _ in range(10_000):
        i, j = rng.integers(0, len(pool), size=2)
        child = subtree_crossover(pool[int(i)], pool[int(j)], params, rng)
        validate_forest(child, fset, 3, params)
        pool[int(rng.integers(0, len(pool)))] = child
    for _ in range(10_000):
        k = int(rng.integers(0, len(pool)))
        child = subtree_mutation(pool[k], fset, 3, params, rng)
        validate_forest(child, fset, 3, params)
        pool[k] = child

    bset = default_boolean()
    cfg = CgpConfig(n_inputs=4, n_outputs=2, n_columns=20, n_rows=1,
                    levels_back=5, max_arity=bset.max_arity)
    genome = init_random_cgp(cfg, bset, rng)
    for _ in range(10_000):
        genome = point_mutation(genome, cfg, bset, 0.1, rng)
        validate_genome(genome, cfg, bset)


# -- 4: generated tables against per-row integer arithmetic --------------------------

def _check_family(family, size, n_inputs, n_outputs, oracle):
    table = gen_boolean(family, size)
    assert (table.n_inputs, table.n_outputs) == (n_inputs, n_outputs)
    for r in range(table.n_rows):
        expected = oracle(r)
        got = [table.output_bit(j, r) for j in range(table.n_outputs)]
        assert got == expected, (family, size, r)


def test_04_boolean_generators_match_arithmetic_oracles():
    start = time.perf_counter()
    low = lambda r, n: r & ((1 << n) - 1)           # field helpers per row index
    mid = lambda r, n: (r >> n) & ((1 << n) - 1)

    for n in (1, 2):
        def adder(r, n=n):
            total = low(r, n) + mid(r, n) + ((r >> (2 * n)) & 1)
            return [(total >> j) & 1 for j in range(n + 1)]
        _check_family(BooleanFamily.ADDER, n, 2 * n + 1, n + 1, adder)

    for n in (1, 2):
        def multiplier(r, n=n):
            product = low(r, n) * mid(r, n)
            return [(product >> j) & 1 for j in range(2 * n)]
        _check_family(BooleanFamily.MULTIPLIER, n, 2 * n, 2 * n, multiplier)

    for n in range(2, 9):
        _check_family(
            BooleanFamily.PARITY, n, n, 1,
            lambda r: [bin(r).count("1") & 1],
        )

    for n in (1, 2, 3):
        def comparator(r, n=n):
            a, b = low(r, n), mid(r, n)
            return [int(a < b), int(a == b), int(a > b)]
        _check_family(BooleanFamily.COMPARATOR, n, 2 * n, 3, comparator)

    for k in (1, 2, 3):
        def multiplexer(r, k=k):
            address = low(r, k)
            return [(r >> (k + address)) & 1]
        _check_family(BooleanFamily.MULTIPLEXER, k, k + (1 << k), 1, multiplexer)

    for n in (3, 5, 7):
        _check_family(
            BooleanFamily.MAJORITY, n, n, 1,
            lambda r, n=n: [int(bin(r).count("1") > n // 2)],
        )
    assert time.perf_counter() - start < 10.0


# -- 5: reports identical for any worker count ---------------------------------------

def _scrub_wall(report: BenchmarkReport) -> BenchmarkReport:
    clone = report.model_copy(deep=True)
    for run in clone.runs:
        run.wall_ms = 0.0
    clone.aggregates.mean_wall_ms = 0.0
    return clone


def test_05_reports_identical_across_worker_counts():
    configs = [
        {
            "model": {"name": "cgp", "params": {"columns": 30}},
            "problem": {"name": "parity:3"},
            "hyperparameters": {"max_evaluations": 2000},
            "run": {"repetitions": 4, "base_seed": 3},
        },
        {
            "model": {"name": "tgp"},
            "problem": {"name": "koza1"},
            "hyperparameters": {"population_size": 30, "max_evaluations": 600},
            "run": {"repetitions": 4, "base_seed": 11},
        },
    ]
    for data in configs:
        serial = run_experiment(_config(data), workers=1)
        threaded = run_experiment(_config(data), workers=4)
        assert report_to_json(_scrub_wall(serial)) == report_to_json(
            _scrub_wall(threaded)
        )


# -- 6: elitist trajectories never lose ground ----------------------------------------

def test_06_best_cost_trajectories_never_increase():
    experiments = [
        ({"name": "cgp", "params": {"columns": 20}}, "parity:3",
         {"max_evaluations": 500}, 17, 0),
        ({"name": "tgp"}, "parity:2",
         {"population_size": 20, "max_evaluations": 400}, 17, 100),
        ({"name": "tgp"}, "koza1",
         {"population_size": 25, "max_evaluations": 500}, 17, 200),
        ({"name": "cgp"}, "nguyen_f1", {"max_evaluations": 500}, 16, 300),
        ({"name": "tgp"}, "gridworld:4x4:3,3",
         {"population_size": 20, "max_evaluations": 400}, 17, 400),
        ({"name": "tgp"}, "cartpole",
         {"population_size": 16, "max_evaluations": 160}, 16, 500),
    ]
    total = 0
    for model, problem, hp, repetitions, base_seed in experiments:
        report = run_experiment(_config({
            "model": model,
            "problem": {"name": problem},
            "hyperparameters": hp,
            "run": {"repetitions": repetitions, "base_seed": base_seed},
        }))
        for run in report.runs:
            costs = [cost for _, cost in run.trajectory]
            assert all(b <= a for a, b in zip(costs, costs[1:])), (problem, run.seed)
            total += 1
    assert total == 100


# -- 7: logic synthesis smoke floor ----------------------------------------------------

def test_07_cgp_solves_small_logic_benchmarks():
    start = time.perf_counter()
    for problem in ("parity:3", "multiplexer:2"):
        report = run_experiment(_config({
            "model": {"name": "cgp"},  # defaults: 100 columns, 1+4, rate 0.05
            "problem": {"name": problem},
            "hyperparameters": {"max_evaluations": 200_000},
            "run": {"repetitions": 10, "base_seed": 0},
        }))
        assert report.scheme == Scheme.ONE_PLUS_LAMBDA.value
        solved = sum(run.success for run in report.runs)
        assert solved >= 5, f"{problem}: {solved}/10"
    assert time.perf_counter() - start < 120.0


# -- 8: symbolic regression smoke floor -------------------------------------------------

def test_08_tgp_recovers_koza1_polynomial():
    start = time.perf_counter()
    report = run_experiment(_config({
        "model": {"name": "tgp"},
        "problem": {"name": "koza1"},
        "hyperparameters": {"population_size": 500, "max_evaluations": 100_000},
        "run": {"repetitions": 10, "base_seed": 0},
    }))
    close = sum(run.best_cost < 0.1 for run in report.runs)
    exact = sum(run.best_cost < 1e-10 for run in report.runs)
    assert close >= 5, f"MSE<0.1 in {close}/10"
    assert exact >= 1, f"exact in {exact}/10"
    assert time.perf_counter() - start < 120.0


# -- 9: policy search against independent optima ----------------------------------------

def _bfs_return(width: int, height: int, goal, step_reward: float) -> float:
    """Shortest-path return from (0,0) under unit step costs."""
    seen = {(0, 0): 0}
    frontier = deque([(0, 0)])
    while frontier:
        cell = frontier.popleft()
        if cell == goal:
            return seen[cell] * step_reward
        col, row = cell
        for dc, dr in ((0, 1), (0, -1), (-1, 0), (1, 0)):
            nxt = (
                min(max(col + dc, 0), width - 1),
                min(max(row + dr, 0), height - 1),
            )
            if nxt not in seen:
                seen[nxt] = seen[cell] + 1
                frontier.append(nxt)
    raise AssertionError("goal unreachable")


def test_09_policy_search_reaches_independent_optima():
    optimum = _bfs_return(5, 5, (4, 4), -1.0)
    assert optimum == -8.0
    report = run_experiment(_config({
        "model": {"name": "tgp"},
        "problem": {
            "name": "gridworld:5x5:4,4",
            "params": {"target_return": optimum},
        },
        "hyperparameters": {"max_evaluations": 50_000},
        "run": {"repetitions": 10, "base_seed": 0},
    }))
    solved = sum(run.success for run in report.runs)
    assert solved >= 8, f"optimal policy in {solved}/10"

    # Environment and rollout sanity, independent of any evolution: a
    # hand-written bang-bang balancer (push toward theta + theta_dot)
    # holds the pole for the whole horizon on the standard battery.
    fset = default_real()
    tree = func_node(fset.index("add"), (var_node(2), var_node(3)))
    controller = TreeProgram(TreeForest((tree,)), fset, 4)
    battery = EpisodeConfig(episodes=5, gamma=1.0, max_steps=200, base_seed=0)
    mean_return = rollout(Agent(controller, Discrete(2)), CartPole(), battery)
    assert mean_return == 200.0  # = max_steps


# -- 10: discounting against the geometric closed form -----------------------------------

class _UnitRewardEnv(Environment):
    state_dim = 1
    action_space = Discrete(2)
    max_steps = 50
    return_upper_bound = 50.0

    def reset(self, seed):
        return (0.0,)

    def step(self, action):
        return ((0.0,), 1.0, False, False)


class _ConstantAction:
    def evaluate(self, state):
        return [1.0]


def test_10_discounted_return_matches_geometric_sum():
    horizon = 50
    for gamma in (0.5, 0.9, 0.99):
        cfg = EpisodeConfig(episodes=1, gamma=gamma, max_steps=horizon)
        value = rollout(Agent(_ConstantAction(), Discrete(2)), _UnitRewardEnv(), cfg)
        closed_form = gamma * (1.0 - gamma ** horizon) / (1.0 - gamma)
        assert abs(value - closed_form) < 1e-12, gamma


# -- 11: serialization round-trips --------------------------------------------------------

def _random_report(rng) -> BenchmarkReport:
    config = _config({
        "model": {"name": "tgp" if rng.random() < 0.5 else "cgp"},
        "problem": {"name": "koza1"},
        "hyperparameters": {"seed": int(rng.integers(0, 1000))},
        "run": {"repetitions": int(rng.integers(1, 5))},
    })
    runs = []
    for i in range(config.run.repetitions):
        success = bool(rng.random() < 0.4)
        best = 0.0 if success else float(rng.uniform(0, 1e6))
        if not success and rng.random() < 0.05:
            best = math.inf
        evals = int(rng.integers(1, 100_000))
        trajectory = [(0, best + float(rng.uniform(0, 10)))]
        trajectory.append((evals, best))
        runs.append(RunRecord(
            seed=i,
            best_cost=best,
            success=success,
            evaluations_used=evals,
            evaluations_to_success=evals if success else None,
            best_expression="(add x0 1.0)",
            trajectory=trajectory,
            wall_ms=float(rng.uniform(0, 5000)),
        ))
    finite = [r.best_cost for r in runs if math.isfinite(r.best_cost)]
    aggregates = AggregateStats(
        success_rate=sum(r.success for r in runs) / len(runs),
        median_best_cost=finite[0] if finite else math.inf,
        median_evaluations_to_success=None,
        mean_wall_ms=sum(r.wall_ms for r in runs) / len(runs),
    )
    return BenchmarkReport(
        config=config,
        representation="tgp-forest" if config.model.name == "tgp" else "cgp",
        problem="koza1",
        scheme="generational",
        runs=runs,
        aggregates=aggregates,
    )


def test_11_serialization_round_trips_are_identities():
    rng = derive_rng(111)

    for _ in range(1000):
        n = 1 + int(rng.integers(0, 10))
        m = 1 + int(rng.integers(0, 4))
        table = _random_table(rng, n, m)
        assert load_truth_table(save_truth_table(table)) == table

    for _ in range(1000):
        rows = 1 + int(rng.integers(0, 20))
        n = 1 + int(rng.integers(0, 3))
        m = 1 + int(rng.integers(0, 2))
        scale = 10.0 ** rng.integers(-8, 9, size=(rows, n + m))
        values = rng.standard_normal((rows, n + m)) * scale
        dataset = Dataset(values[:, :n], values[:, n:])
        assert load_dataset(save_dataset(dataset)) == dataset

    for _ in range(1000):
        report = _random_report(rng)
        assert report_from_json(report_to_json(report)) == report
