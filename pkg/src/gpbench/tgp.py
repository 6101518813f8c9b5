"""Tree-based genetic programming over forests of expression trees.

A genome is a :class:`TreeForest` holding one tree per program output.
Trees are immutable; variation operators build new trees that share
untouched subtrees with their parents, so copying is cheap and genomes
can be handed between generations without defensive copies.

Depth counts edges: a lone terminal has depth 0.  Every operator keeps
trees within ``TgpParams.max_depth``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import ConfigurationError, GPModel, Hyperparameters
from .primitives import Domain, FunctionSet

K_FUNC = 0
K_VAR = 1
K_CONST = 2


@dataclass(frozen=True, slots=True)
class TreeNode:
    """One node: a primitive application, an input variable, or a constant.

    ``index`` is the primitive position for K_FUNC nodes and the input
    position for K_VAR nodes; ``value`` is only set for K_CONST nodes.
    """

    kind: int
    index: int = 0
    value: Optional[float] = None
    children: tuple = ()


def func_node(index: int, children: Sequence[TreeNode]) -> TreeNode:
    return TreeNode(K_FUNC, index=int(index), children=tuple(children))


def var_node(index: int) -> TreeNode:
    return TreeNode(K_VAR, index=int(index))


def const_node(value) -> TreeNode:
    return TreeNode(K_CONST, value=value)


@dataclass(frozen=True, slots=True)
class TreeForest:
    """One tree per output; tree i computes output i."""

    trees: tuple

    @property
    def n_outputs(self) -> int:
        return len(self.trees)


@dataclass(frozen=True)
class TgpParams:
    """Tree-shape settings.

    ``init_depth_min``/``init_depth_max`` bound the ramped initial trees
    and also cap subtrees grown by mutation.  ``erc_probability`` is the
    chance a fresh terminal becomes a constant instead of an input
    (real domain: uniform from [-1, 1]; Boolean domain: only when
    ``boolean_constants`` is on).
    """

    max_depth: int = 12
    init_depth_min: int = 2
    init_depth_max: int = 6
    erc_probability: float = 0.2
    boolean_constants: bool = False
    crossover_retries: int = 3

    def __post_init__(self):
        if not 0 <= self.init_depth_min <= self.init_depth_max <= self.max_depth:
            raise ConfigurationError(
                "need 0 <= init_depth_min <= init_depth_max <= max_depth, got "
                f"{self.init_depth_min}/{self.init_depth_max}/{self.max_depth}"
            )
        if not 0.0 <= self.erc_probability <= 1.0:
            raise ConfigurationError("erc_probability must lie in [0, 1]")
        if self.crossover_retries < 0:
            raise ConfigurationError("crossover_retries must be non-negative")


# -- structure helpers -------------------------------------------------------

def tree_depth(node: TreeNode) -> int:
    if not node.children:
        return 0
    return 1 + max(tree_depth(c) for c in node.children)


def node_count(node: TreeNode) -> int:
    return 1 + sum(node_count(c) for c in node.children)


def _subtree_at(node: TreeNode, k: int) -> TreeNode:
    """Return the k-th node in preorder (root is 0)."""
    if k == 0:
        return node
    k -= 1
    for child in node.children:
        size = node_count(child)
        if k < size:
            return _subtree_at(child, k)
        k -= size
    raise IndexError("node index out of range")


def _depth_at(node: TreeNode, k: int) -> int:
    """Distance from the root to the k-th preorder node."""
    if k == 0:
        return 0
    k -= 1
    for child in node.children:
        size = node_count(child)
        if k < size:
            return 1 + _depth_at(child, k)
        k -= size
    raise IndexError("node index out of range")


def _replace_at(node: TreeNode, k: int, replacement: TreeNode) -> TreeNode:
    """Rebuild the path to the k-th preorder node, grafting `replacement`."""
    if k == 0:
        return replacement
    k -= 1
    for i, child in enumerate(node.children):
        size = node_count(child)
        if k < size:
            new_child = _replace_at(child, k, replacement)
            children = node.children[:i] + (new_child,) + node.children[i + 1 :]
            return TreeNode(node.kind, node.index, node.value, children)
        k -= size
    raise IndexError("node index out of range")


# -- random construction -----------------------------------------------------

def _random_terminal(
    fset: FunctionSet, n_inputs: int, params: TgpParams, rng: np.random.Generator
) -> TreeNode:
    if fset.domain is Domain.REAL:
        if rng.random() < params.erc_probability:
            return const_node(float(rng.uniform(-1.0, 1.0)))
    elif params.boolean_constants:
        if rng.random() < params.erc_probability:
            return const_node(int(rng.integers(0, 2)))
    return var_node(int(rng.integers(0, n_inputs)))


def _grow(
    fset: FunctionSet,
    n_inputs: int,
    params: TgpParams,
    rng: np.random.Generator,
    budget: int,
) -> TreeNode:
    n_funcs = len(fset)
    n_terminals = n_inputs + (
        1
        if (fset.domain is Domain.REAL and params.erc_probability > 0)
        or (fset.domain is Domain.BOOLEAN and params.boolean_constants)
        else 0
    )
    if budget > 0 and rng.random() < n_funcs / (n_funcs + n_terminals):
        fid = int(rng.integers(0, n_funcs))
        arity = fset.primitives[fid].arity
        return func_node(
            fid, [_grow(fset, n_inputs, params, rng, budget - 1) for _ in range(arity)]
        )
    return _random_terminal(fset, n_inputs, params, rng)


def _full(
    fset: FunctionSet,
    n_inputs: int,
    params: TgpParams,
    rng: np.random.Generator,
    budget: int,
) -> TreeNode:
    if budget == 0:
        return _random_terminal(fset, n_inputs, params, rng)
    fid = int(rng.integers(0, len(fset)))
    arity = fset.primitives[fid].arity
    return func_node(
        fid, [_full(fset, n_inputs, params, rng, budget - 1) for _ in range(arity)]
    )


def init_ramped(
    count: int,
    fset: FunctionSet,
    n_inputs: int,
    n_outputs: int,
    params: TgpParams,
    rng: np.random.Generator,
) -> list:
    """Ramped half-and-half initialization.

    Target depths cycle through [init_depth_min, init_depth_max] while
    the construction method alternates between full and grow, giving the
    classic mix of bushy and sparse starting trees.
    """
    span = params.init_depth_max - params.init_depth_min + 1
    forests = []
    for i in range(count):
        depth = params.init_depth_min + (i // 2) % span
        build = _full if i % 2 == 0 else _grow
        trees = tuple(
            build(fset, n_inputs, params, rng, depth) for _ in range(n_outputs)
        )
        forests.append(TreeForest(trees))
    return forests


# -- variation ---------------------------------------------------------------

def subtree_crossover(
    a: TreeForest,
    b: TreeForest,
    params: TgpParams,
    rng: np.random.Generator,
) -> TreeForest:
    """Replace one subtree of `a` with a subtree taken from `b`.

    Both slots are derived from a single uniform draw so that crossing a
    forest with itself picks the same position twice and returns a forest
    equal to `a`.  A child deeper than max_depth is retried with fresh
    draws; after `crossover_retries` failures the parent `a` wins.
    """
    if a.n_outputs != b.n_outputs:
        raise ConfigurationError("cannot cross forests with different arities")
    t = int(rng.integers(0, a.n_outputs))
    tree_a, tree_b = a.trees[t], b.trees[t]
    count_a, count_b = node_count(tree_a), node_count(tree_b)
    for _ in range(params.crossover_retries + 1):
        u = rng.random()
        donor = _subtree_at(tree_b, int(u * count_b))
        child_tree = _replace_at(tree_a, int(u * count_a), donor)
        if tree_depth(child_tree) <= params.max_depth:
            return TreeForest(a.trees[:t] + (child_tree,) + a.trees[t + 1 :])
    return a


def subtree_mutation(
    a: TreeForest,
    fset: FunctionSet,
    n_inputs: int,
    params: TgpParams,
    rng: np.random.Generator,
) -> TreeForest:
    """Replace one uniformly chosen subtree with a freshly grown one.

    The replacement depth is drawn from [0, budget] where the budget
    keeps the whole tree within max_depth (and within init_depth_max so
    mutants stay modest).
    """
    t = int(rng.integers(0, a.n_outputs))
    tree = a.trees[t]
    k = int(rng.integers(0, node_count(tree)))
    room = params.max_depth - _depth_at(tree, k)
    budget = int(rng.integers(0, min(room, params.init_depth_max) + 1))
    replacement = _grow(fset, n_inputs, params, rng, budget)
    child_tree = _replace_at(tree, k, replacement)
    return TreeForest(a.trees[:t] + (child_tree,) + a.trees[t + 1 :])


# -- evaluation --------------------------------------------------------------

def _eval_scalar(node: TreeNode, fset: FunctionSet, inputs):
    if node.kind == K_FUNC:
        prim = fset.primitives[node.index]
        ch = node.children
        if len(ch) == 2:
            return prim.fn(
                _eval_scalar(ch[0], fset, inputs), _eval_scalar(ch[1], fset, inputs)
            )
        if len(ch) == 1:
            return prim.fn(_eval_scalar(ch[0], fset, inputs))
        return prim.fn(*[_eval_scalar(c, fset, inputs) for c in ch])
    if node.kind == K_VAR:
        return inputs[node.index]
    return node.value


def _eval_batch(node: TreeNode, fset: FunctionSet, columns):
    if node.kind == K_FUNC:
        prim = fset.primitives[node.index]
        args = [_eval_batch(c, fset, columns) for c in node.children]
        return prim.fn_vec(*args)
    if node.kind == K_VAR:
        return columns[node.index]
    return node.value


def _eval_packed(node: TreeNode, fset: FunctionSet, columns, mask: int) -> int:
    if node.kind == K_FUNC:
        prim = fset.primitives[node.index]
        args = [_eval_packed(c, fset, columns, mask) for c in node.children]
        return prim.fn_packed(*args, mask)
    if node.kind == K_VAR:
        return columns[node.index]
    return mask if node.value else 0


def evaluate_forest(forest: TreeForest, fset: FunctionSet, inputs) -> list:
    """Evaluate every tree on one input vector."""
    return [_eval_scalar(tree, fset, inputs) for tree in forest.trees]


class ForestMetrics(NamedTuple):
    depth: int
    node_count: int


def forest_metrics(forest: TreeForest) -> ForestMetrics:
    """(max depth over trees, total node count) of a forest."""
    return ForestMetrics(
        max(tree_depth(t) for t in forest.trees),
        sum(node_count(t) for t in forest.trees),
    )


def _node_expression(node: TreeNode, fset: FunctionSet) -> str:
    if node.kind == K_FUNC:
        parts = " ".join(_node_expression(c, fset) for c in node.children)
        return f"({fset.primitives[node.index].name} {parts})"
    if node.kind == K_VAR:
        return f"x{node.index}"
    if fset.domain is Domain.BOOLEAN:
        return "true" if node.value else "false"
    return repr(float(node.value))


def to_expression_string(forest: TreeForest, fset: FunctionSet) -> str:
    """Prefix notation, one line per output tree."""
    return "\n".join(_node_expression(t, fset) for t in forest.trees)


def validate_forest(
    forest: TreeForest, fset: FunctionSet, n_inputs: int, params: TgpParams
) -> None:
    """Raise ValueError when the forest is not a well-formed genome."""
    if not forest.trees:
        raise ValueError("forest has no trees")

    def check(node: TreeNode) -> None:
        if node.kind == K_FUNC:
            if not 0 <= node.index < len(fset):
                raise ValueError(f"function id {node.index} out of range")
            arity = fset.primitives[node.index].arity
            if len(node.children) != arity:
                raise ValueError(
                    f"{fset.primitives[node.index].name} expects {arity} children, "
                    f"found {len(node.children)}"
                )
            for c in node.children:
                check(c)
        elif node.kind == K_VAR:
            if not 0 <= node.index < n_inputs:
                raise ValueError(f"input index {node.index} out of range")
            if node.children:
                raise ValueError("terminal node has children")
        elif node.kind == K_CONST:
            if node.children:
                raise ValueError("terminal node has children")
            if fset.domain is Domain.BOOLEAN:
                if node.value not in (0, 1):
                    raise ValueError(f"Boolean constant must be 0 or 1, got {node.value}")
            elif not isinstance(node.value, float):
                raise ValueError(f"real constant must be a float, got {node.value!r}")
        else:
            raise ValueError(f"unknown node kind {node.kind}")

    for tree in forest.trees:
        check(tree)
        depth = tree_depth(tree)
        if depth > params.max_depth:
            raise ValueError(f"tree depth {depth} exceeds cap {params.max_depth}")


class TreeProgram:
    """Executable view of a forest."""

    def __init__(self, forest: TreeForest, fset: FunctionSet, n_inputs: int):
        self.forest = forest
        self.fset = fset
        self.n_inputs = n_inputs
        self.n_outputs = forest.n_outputs

    def evaluate(self, inputs) -> list:
        outputs = evaluate_forest(self.forest, self.fset, inputs)
        if self.fset.domain is Domain.BOOLEAN:
            return [bool(v) for v in outputs]
        return outputs

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over a (rows, n_inputs) real matrix."""
        m = x.shape[0]
        columns = [x[:, i] for i in range(x.shape[1])]
        outs = []
        for tree in self.forest.trees:
            value = _eval_batch(tree, self.fset, columns)
            if np.ndim(value) == 0:
                value = np.full(m, float(value))
            outs.append(value)
        return np.stack(outs, axis=1)

    def evaluate_packed(self, columns: Sequence[int], mask: int) -> list:
        """Bit-parallel evaluation over packed truth-table columns."""
        return [
            _eval_packed(tree, self.fset, columns, mask) for tree in self.forest.trees
        ]


class TreeGP(GPModel):
    """Forest representation with subtree crossover and subtree mutation."""

    model_name = "tgp-forest"
    parents_required = 2

    def __init__(
        self,
        function_set: FunctionSet,
        n_inputs: int,
        n_outputs: int,
        params: TgpParams = TgpParams(),
    ):
        super().__init__(function_set, n_inputs, n_outputs)
        self.params = params

    def initialize(self, count: int, rng: np.random.Generator) -> list:
        return init_ramped(
            count, self.function_set, self.n_inputs, self.n_outputs, self.params, rng
        )

    def breed(self, parents, hp: Hyperparameters, rng: np.random.Generator):
        child = parents[0]
        if len(parents) > 1 and rng.random() < hp.crossover_rate:
            child = subtree_crossover(child, parents[1], self.params, rng)
            if rng.random() < hp.mutation_rate:
                child = subtree_mutation(
                    child, self.function_set, self.n_inputs, self.params, rng
                )
            return child
        # no recombination this time: fall back to plain mutation
        return subtree_mutation(
            child, self.function_set, self.n_inputs, self.params, rng
        )

    def decode(self, genome: TreeForest) -> TreeProgram:
        return TreeProgram(genome, self.function_set, self.n_inputs)

    def expression(self, genome: TreeForest) -> str:
        return to_expression_string(genome, self.function_set)
