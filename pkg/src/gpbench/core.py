"""Representation-independent evolution engine.

The engine knows nothing about trees or graph genomes.  A
:class:`GPModel` owns a concrete representation (how to create random
genomes, how to breed them, how to turn one into an executable
:class:`Program`), a :class:`Problem` owns the cost function, and
:func:`evolve` wires the two together under one of two schemes:

* ``GENERATIONAL``    tournament selection, optional elitism,
* ``ONE_PLUS_LAMBDA`` a single parent plus ``lambda`` mutants, where an
  offspring replaces the parent when its cost is less than *or equal*,
  allowing neutral drift across plateaus.

Costs are minimized everywhere; 0 is a perfect score unless the problem
declares another ideal threshold.
"""

from __future__ import annotations

import abc
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence

import numpy as np

from .primitives import Domain, FunctionSet
from .rng import STREAM_EVOLVE, derive_rng

logger = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    """Raised when a configuration or contract violation is detected."""


class Scheme(enum.Enum):
    GENERATIONAL = "generational"
    ONE_PLUS_LAMBDA = "one_plus_lambda"


@dataclass(frozen=True)
class Hyperparameters:
    """Search settings shared by every representation.

    ``crossover_rate`` is ignored by models that do not recombine, and
    ``lambda_`` only matters under ``ONE_PLUS_LAMBDA``.  The evaluation
    budget is checked between generations, so a run may overshoot
    ``max_evaluations`` by at most one generation batch (population_size
    minus elitism, or ``lambda_``).
    """

    population_size: int = 50
    max_evaluations: int = 10_000
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    tournament_size: int = 3
    elitism: int = 1
    mu: int = 1
    lambda_: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigurationError("population_size must be at least 1")
        if self.max_evaluations < 1:
            raise ConfigurationError("max_evaluations must be at least 1")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {rate}")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigurationError(
                "tournament_size must lie in [1, population_size], "
                f"got {self.tournament_size}"
            )
        if not 0 <= self.elitism < self.population_size:
            raise ConfigurationError(
                "elitism must lie in [0, population_size), got "
                f"{self.elitism}"
            )
        if self.mu < 1 or self.lambda_ < 1:
            raise ConfigurationError("mu and lambda_ must be at least 1")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")


@dataclass(frozen=True)
class Fitness:
    """Cost of one evaluated genome plus the evaluation counter at that point."""

    cost: float
    evaluations_used: int

    def __post_init__(self):
        if math.isnan(self.cost):
            raise ValueError("fitness cost must not be NaN")
        if self.cost < 0.0:
            raise ValueError(f"fitness cost must be non-negative, got {self.cost}")


@dataclass
class Individual:
    genome: Any
    fitness: Optional[Fitness] = None


class Program(Protocol):
    """Executable phenotype: maps one input vector to an output vector."""

    def evaluate(self, inputs: Sequence) -> list: ...


class GPModel(abc.ABC):
    """A genome representation plugged into the engine.

    Subclasses set ``model_name`` and ``parents_required`` and implement
    the four genome operations.  ``decode`` and the resulting program
    must be pure: evaluation order across a population must not matter.
    """

    model_name: str = "abstract"
    parents_required: int = 1

    def __init__(self, function_set: FunctionSet, n_inputs: int, n_outputs: int):
        if n_inputs < 1 or n_outputs < 1:
            raise ConfigurationError("models need at least one input and one output")
        self.function_set = function_set
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs

    @abc.abstractmethod
    def initialize(self, count: int, rng: np.random.Generator) -> list:
        """Create ``count`` random genomes."""

    @abc.abstractmethod
    def breed(self, parents: Sequence, hp: Hyperparameters, rng: np.random.Generator):
        """Produce one child genome from ``parents_required`` parents."""

    @abc.abstractmethod
    def decode(self, genome) -> Program:
        """Turn a genome into an executable program."""

    @abc.abstractmethod
    def expression(self, genome) -> str:
        """Human-readable prefix expression, one line per output."""


class Problem(abc.ABC):
    """A cost function over programs of a fixed signature.

    ``ideal_threshold`` is the cost at or below which a program counts as
    a full solution, or None when the problem has no success notion.
    """

    name: str = "problem"
    domain: Domain
    n_inputs: int
    n_outputs: int
    ideal_threshold: Optional[float] = 0.0

    @abc.abstractmethod
    def evaluate(self, program: Program) -> float:
        """Return the cost of ``program`` (non-negative, may be inf)."""


@dataclass
class RunResult:
    """Outcome of one evolutionary run."""

    seed: int
    best_cost: float
    best_expression: str
    success: bool
    evaluations_used: int
    evaluations_to_success: Optional[int]
    trajectory: list = field(default_factory=list)


def is_ideal(fitness: Fitness, problem: Problem) -> bool:
    threshold = problem.ideal_threshold
    return threshold is not None and fitness.cost <= threshold


def tournament_select(
    population: Sequence[Individual], k: int, rng: np.random.Generator
) -> int:
    """Pick k distinct individuals at random, return the index of the best.

    Cost ties go to the lowest population index, which keeps selection
    deterministic for a given generator state.
    """
    if not population:
        raise ConfigurationError("cannot select from an empty population")
    if not 1 <= k <= len(population):
        raise ConfigurationError(
            f"tournament size {k} out of range for population of {len(population)}"
        )
    drawn = rng.choice(len(population), size=k, replace=False)
    best_index = -1
    best_cost = math.inf
    for i in sorted(int(i) for i in drawn):
        fit = population[i].fitness
        if fit is None:
            raise ValueError(f"individual {i} has not been evaluated")
        if fit.cost < best_cost:
            best_cost = fit.cost
            best_index = i
    return best_index


@dataclass
class _Budget:
    evaluations: int = 0
    evaluations_to_success: Optional[int] = None


def _evaluate_population(
    population: Sequence[Individual],
    model: GPModel,
    problem: Problem,
    budget: _Budget,
) -> None:
    """Evaluate every not-yet-scored individual, in population order."""
    for ind in population:
        if ind.fitness is not None:
            continue
        cost = problem.evaluate(model.decode(ind.genome))
        budget.evaluations += 1
        ind.fitness = Fitness(cost, budget.evaluations)
        if budget.evaluations_to_success is None and is_ideal(ind.fitness, problem):
            budget.evaluations_to_success = budget.evaluations


def _best_index(population: Sequence[Individual]) -> int:
    return min(
        range(len(population)), key=lambda i: (population[i].fitness.cost, i)
    )


def evolve(
    model: GPModel,
    problem: Problem,
    hp: Hyperparameters,
    scheme: Scheme = Scheme.GENERATIONAL,
) -> RunResult:
    """Run one seeded evolutionary search and return its result.

    Terminates as soon as a generation contains an ideal individual or
    the evaluation budget is spent; either way the generation in flight
    is evaluated completely.
    """
    if model.function_set.domain is not problem.domain:
        raise ConfigurationError(
            f"model works on {model.function_set.domain.value} values but problem "
            f"{problem.name!r} is {problem.domain.value}"
        )
    if (model.n_inputs, model.n_outputs) != (problem.n_inputs, problem.n_outputs):
        raise ConfigurationError(
            f"model signature {model.n_inputs}->{model.n_outputs} does not match "
            f"problem signature {problem.n_inputs}->{problem.n_outputs}"
        )
    if scheme is Scheme.ONE_PLUS_LAMBDA and hp.mu != 1:
        raise ConfigurationError("the one-plus-lambda scheme requires mu == 1")

    rng = derive_rng(hp.seed, STREAM_EVOLVE)
    budget = _Budget()

    population = [Individual(g) for g in model.initialize(hp.population_size, rng)]
    _evaluate_population(population, model, problem, budget)

    best = population[_best_index(population)]
    best_genome, best_fitness = best.genome, best.fitness
    trajectory = [(0, best_fitness.cost)]
    generation = 0

    while (
        budget.evaluations_to_success is None
        and budget.evaluations < hp.max_evaluations
    ):
        generation += 1
        if scheme is Scheme.GENERATIONAL:
            population = _next_generation(population, model, hp, rng)
        else:
            population = _next_offspring_batch(
                population[_best_index(population)], model, hp, rng
            )
        _evaluate_population(population, model, problem, budget)

        gen_best = population[_best_index(population)]
        trajectory.append((generation, gen_best.fitness.cost))
        if gen_best.fitness.cost < best_fitness.cost:
            best_genome, best_fitness = gen_best.genome, gen_best.fitness
        logger.debug(
            "gen %d: best cost %.6g (evaluations %d)",
            generation,
            gen_best.fitness.cost,
            budget.evaluations,
        )

    success = budget.evaluations_to_success is not None
    return RunResult(
        seed=hp.seed,
        best_cost=best_fitness.cost,
        best_expression=model.expression(best_genome),
        success=success,
        evaluations_used=budget.evaluations,
        evaluations_to_success=budget.evaluations_to_success,
        trajectory=trajectory,
    )


def _next_generation(
    population: list, model: GPModel, hp: Hyperparameters, rng: np.random.Generator
) -> list:
    """Elites survive unchanged; the rest are bred from tournament winners."""
    order = sorted(
        range(len(population)), key=lambda i: (population[i].fitness.cost, i)
    )
    survivors = [population[i] for i in order[: hp.elitism]]
    while len(survivors) < hp.population_size:
        parents = tuple(
            population[tournament_select(population, hp.tournament_size, rng)].genome
            for _ in range(model.parents_required)
        )
        survivors.append(Individual(model.breed(parents, hp, rng)))
    return survivors


def _next_offspring_batch(
    parent: Individual, model: GPModel, hp: Hyperparameters, rng: np.random.Generator
) -> list:
    """Return lambda mutants of the parent, with the parent appended last.

    Ordering matters: the next parent is picked by lowest (cost, index),
    so listing offspring first makes an equal-cost mutant displace its
    parent.  That acceptance rule is what lets the search drift across
    neutral plateaus.
    """
    offspring = [
        Individual(model.breed((parent.genome,), hp, rng)) for _ in range(hp.lambda_)
    ]
    return offspring + [parent]
