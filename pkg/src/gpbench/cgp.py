"""Cartesian genetic programming on a feed-forward node grid.

A genome is a flat integer vector: one block of
``(function gene, max_arity connection genes)`` per grid node, followed
by one gene per output.  Nodes are indexed ``n_inputs ..
n_inputs + n_columns*n_rows - 1`` in column-major order, and a node in
column c may only read inputs or nodes from the previous ``levels_back``
columns, so every genome is a DAG by construction.

Only nodes reachable backward from the output genes (the active set)
are ever evaluated; the rest is neutral material that point mutation is
free to rearrange, which is where CGP's characteristic drift across
fitness plateaus comes from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ConfigurationError, GPModel, Hyperparameters
from .primitives import Domain, FunctionSet


@dataclass(frozen=True)
class CgpConfig:
    """Grid geometry.  ``levels_back=None`` means unconstrained (= n_columns)."""

    n_inputs: int
    n_outputs: int
    n_columns: int = 100
    n_rows: int = 1
    levels_back: Optional[int] = None
    max_arity: int = 2

    def __post_init__(self):
        if self.levels_back is None:
            object.__setattr__(self, "levels_back", self.n_columns)
        if min(self.n_inputs, self.n_outputs, self.n_columns, self.n_rows) < 1:
            raise ConfigurationError("all grid dimensions must be at least 1")
        if self.max_arity < 1:
            raise ConfigurationError("max_arity must be at least 1")
        if not 1 <= self.levels_back <= self.n_columns:
            raise ConfigurationError(
                f"levels_back must lie in [1, n_columns], got {self.levels_back}"
            )

    @property
    def n_nodes(self) -> int:
        return self.n_columns * self.n_rows

    @property
    def genes_per_node(self) -> int:
        return 1 + self.max_arity

    @property
    def genome_length(self) -> int:
        return self.n_nodes * self.genes_per_node + self.n_outputs

    def column_of(self, position: int) -> int:
        """Grid column of node position (0-based, before the input offset)."""
        return position // self.n_rows

    def connection_choices(self, column: int) -> int:
        """How many distinct values a connection gene in this column may take."""
        first = max(0, column - self.levels_back)
        return self.n_inputs + (column - first) * self.n_rows

    def connection_value(self, column: int, rank: int) -> int:
        """Map a choice rank to a concrete input/node index."""
        if rank < self.n_inputs:
            return rank
        first = max(0, column - self.levels_back)
        return self.n_inputs + first * self.n_rows + (rank - self.n_inputs)

    def connection_rank(self, column: int, value: int) -> int:
        if value < self.n_inputs:
            return value
        first = max(0, column - self.levels_back)
        return self.n_inputs + (value - self.n_inputs - first * self.n_rows)


@dataclass(frozen=True)
class CgpGenome:
    node_genes: tuple
    output_genes: tuple


def init_random_cgp(
    cfg: CgpConfig, fset: FunctionSet, rng: np.random.Generator
) -> CgpGenome:
    """Sample every gene uniformly from its valid range."""
    n_fns = len(fset)
    genes = []
    for position in range(cfg.n_nodes):
        column = cfg.column_of(position)
        choices = cfg.connection_choices(column)
        genes.append(int(rng.integers(0, n_fns)))
        for _ in range(cfg.max_arity):
            genes.append(cfg.connection_value(column, int(rng.integers(0, choices))))
    outputs = tuple(
        int(rng.integers(0, cfg.n_inputs + cfg.n_nodes)) for _ in range(cfg.n_outputs)
    )
    return CgpGenome(tuple(genes), outputs)


def decode_active(genome: CgpGenome, cfg: CgpConfig, fset: FunctionSet) -> list:
    """Node indices reachable backward from the outputs, ascending.

    Only the first ``arity`` connection genes of a node are followed;
    connection genes beyond the node function's arity carry no meaning.
    """
    needed = [False] * cfg.n_nodes
    stack = [v for v in genome.output_genes if v >= cfg.n_inputs]
    while stack:
        position = stack.pop() - cfg.n_inputs
        if needed[position]:
            continue
        needed[position] = True
        base = position * cfg.genes_per_node
        arity = fset.primitives[genome.node_genes[base]].arity
        for slot in range(1, arity + 1):
            value = genome.node_genes[base + slot]
            if value >= cfg.n_inputs:
                stack.append(value)
    return [cfg.n_inputs + p for p in range(cfg.n_nodes) if needed[p]]


def validate_genome(genome: CgpGenome, cfg: CgpConfig, fset: FunctionSet) -> None:
    """Raise ValueError when any gene is outside its valid range."""
    if len(genome.node_genes) != cfg.n_nodes * cfg.genes_per_node:
        raise ValueError(
            f"expected {cfg.n_nodes * cfg.genes_per_node} node genes, "
            f"found {len(genome.node_genes)}"
        )
    if len(genome.output_genes) != cfg.n_outputs:
        raise ValueError(
            f"expected {cfg.n_outputs} output genes, found {len(genome.output_genes)}"
        )
    if cfg.max_arity != fset.max_arity:
        raise ValueError(
            f"config max_arity {cfg.max_arity} does not match function set "
            f"max arity {fset.max_arity}"
        )
    for position in range(cfg.n_nodes):
        base = position * cfg.genes_per_node
        fid = genome.node_genes[base]
        if not 0 <= fid < len(fset):
            raise ValueError(f"node {position}: function gene {fid} out of range")
        column = cfg.column_of(position)
        first = max(0, column - cfg.levels_back)
        lo = cfg.n_inputs + first * cfg.n_rows
        hi = cfg.n_inputs + column * cfg.n_rows
        for slot in range(1, cfg.max_arity + 1):
            value = genome.node_genes[base + slot]
            if value < cfg.n_inputs:
                if value < 0:
                    raise ValueError(f"node {position}: negative connection gene")
            elif not lo <= value < hi:
                raise ValueError(
                    f"node {position} (column {column}): connection {value} violates "
                    f"the levels-back window [{lo}, {hi})"
                )
    for j, value in enumerate(genome.output_genes):
        if not 0 <= value < cfg.n_inputs + cfg.n_nodes:
            raise ValueError(f"output gene {j} = {value} out of range")


def point_mutation(
    genome: CgpGenome,
    cfg: CgpConfig,
    fset: FunctionSet,
    rate: float,
    rng: np.random.Generator,
) -> CgpGenome:
    """Independently resample each gene with probability ``rate``.

    A mutated gene is redrawn uniformly from its valid values excluding
    the current one; genes whose range holds a single value stay put.
    """
    if not 0.0 <= rate <= 1.0:
        raise ConfigurationError(f"mutation rate must lie in [0, 1], got {rate}")
    node_genes = list(genome.node_genes)
    output_genes = list(genome.output_genes)
    n_node_genes = len(node_genes)
    n_fns = len(fset)
    draws = rng.random(n_node_genes + len(output_genes))
    for gene in np.flatnonzero(draws < rate):
        gene = int(gene)
        if gene < n_node_genes:
            position, slot = divmod(gene, cfg.genes_per_node)
            if slot == 0:
                if n_fns < 2:
                    continue
                value = int(rng.integers(0, n_fns - 1))
                if value >= node_genes[gene]:
                    value += 1
                node_genes[gene] = value
            else:
                column = cfg.column_of(position)
                choices = cfg.connection_choices(column)
                if choices < 2:
                    continue
                current = cfg.connection_rank(column, node_genes[gene])
                rank = int(rng.integers(0, choices - 1))
                if rank >= current:
                    rank += 1
                node_genes[gene] = cfg.connection_value(column, rank)
        else:
            j = gene - n_node_genes
            choices = cfg.n_inputs + cfg.n_nodes
            if choices < 2:
                continue
            value = int(rng.integers(0, choices - 1))
            if value >= output_genes[j]:
                value += 1
            output_genes[j] = value
    return CgpGenome(tuple(node_genes), tuple(output_genes))


class CgpProgram:
    """Executable view of a genome: a topologically ordered instruction list.

    Active nodes are resolved once at decode time and flattened into
    (destination, primitive, source indices) tuples, so each evaluation
    is a plain forward pass.  That keeps the per-call cost low enough
    for packed whole-table evaluation inside tight evolution loops.
    """

    def __init__(self, genome: CgpGenome, cfg: CgpConfig, fset: FunctionSet):
        self.genome = genome
        self.cfg = cfg
        self.fset = fset
        self.n_inputs = cfg.n_inputs
        self.n_outputs = cfg.n_outputs
        self.active = decode_active(genome, cfg, fset)
        self._instructions = []
        for index in self.active:
            base = (index - cfg.n_inputs) * cfg.genes_per_node
            prim = fset.primitives[genome.node_genes[base]]
            if prim.arity > 2:
                raise ConfigurationError(
                    "grid nodes support primitives of arity 1 or 2, "
                    f"{prim.name!r} has arity {prim.arity}"
                )
            a = genome.node_genes[base + 1]
            b = genome.node_genes[base + 2] if prim.arity == 2 else None
            self._instructions.append((index, prim, a, b))

    def evaluate(self, inputs) -> list:
        boolean = self.fset.domain is Domain.BOOLEAN
        values = [int(v) for v in inputs] if boolean else list(inputs)
        values += [None] * self.cfg.n_nodes
        for index, prim, a, b in self._instructions:
            if b is None:
                values[index] = prim.fn(values[a])
            else:
                values[index] = prim.fn(values[a], values[b])
        outs = [values[o] for o in self.genome.output_genes]
        return [bool(v) for v in outs] if boolean else outs

    def evaluate_packed(self, columns: Sequence[int], mask: int) -> list:
        values = list(columns) + [None] * self.cfg.n_nodes
        for index, prim, a, b in self._instructions:
            if b is None:
                values[index] = prim.fn_packed(values[a], mask)
            else:
                values[index] = prim.fn_packed(values[a], values[b], mask)
        return [values[o] for o in self.genome.output_genes]

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        values = [x[:, i] for i in range(x.shape[1])] + [None] * self.cfg.n_nodes
        for index, prim, a, b in self._instructions:
            if b is None:
                values[index] = prim.fn_vec(values[a])
            else:
                values[index] = prim.fn_vec(values[a], values[b])
        return np.stack([values[o] for o in self.genome.output_genes], axis=1)


def evaluate_cgp(genome: CgpGenome, cfg: CgpConfig, fset: FunctionSet, inputs) -> list:
    """One-shot evaluation on a single input vector."""
    return CgpProgram(genome, cfg, fset).evaluate(inputs)


def cgp_to_expression(genome: CgpGenome, cfg: CgpConfig, fset: FunctionSet) -> str:
    """Nested prefix expression per output; shared subgraphs are duplicated."""
    memo: dict = {}

    def render(value: int) -> str:
        if value < cfg.n_inputs:
            return f"x{value}"
        if value not in memo:
            base = (value - cfg.n_inputs) * cfg.genes_per_node
            prim = fset.primitives[genome.node_genes[base]]
            args = " ".join(
                render(genome.node_genes[base + 1 + s]) for s in range(prim.arity)
            )
            memo[value] = f"({prim.name} {args})"
        return memo[value]

    return "\n".join(render(v) for v in genome.output_genes)


class CartesianGP(GPModel):
    """Grid representation bred by point mutation only (no crossover)."""

    model_name = "cgp"
    parents_required = 1

    def __init__(
        self,
        function_set: FunctionSet,
        n_inputs: int,
        n_outputs: int,
        n_columns: int = 100,
        n_rows: int = 1,
        levels_back: Optional[int] = None,
    ):
        super().__init__(function_set, n_inputs, n_outputs)
        self.config = CgpConfig(
            n_inputs=n_inputs,
            n_outputs=n_outputs,
            n_columns=n_columns,
            n_rows=n_rows,
            levels_back=levels_back,
            max_arity=function_set.max_arity,
        )

    def initialize(self, count: int, rng: np.random.Generator) -> list:
        return [init_random_cgp(self.config, self.function_set, rng) for _ in range(count)]

    def breed(self, parents, hp: Hyperparameters, rng: np.random.Generator):
        return point_mutation(
            parents[0], self.config, self.function_set, hp.mutation_rate, rng
        )

    def decode(self, genome: CgpGenome) -> CgpProgram:
        return CgpProgram(genome, self.config, self.function_set)

    def expression(self, genome: CgpGenome) -> str:
        return cgp_to_expression(genome, self.config, self.function_set)
