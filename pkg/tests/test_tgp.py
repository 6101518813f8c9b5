import math

import numpy as np
import pytest

from gpbench.core import ConfigurationError
from gpbench.primitives import default_boolean, default_real, extended_real
from gpbench.rng import derive_rng
from gpbench.tgp import (
    K_CONST,
    TgpParams,
    TreeForest,
    TreeProgram,
    const_node,
    forest_metrics,
    func_node,
    init_ramped,
    node_count,
    subtree_crossover,
    subtree_mutation,
    to_expression_string,
    tree_depth,
    validate_forest,
    var_node,
    evaluate_forest,
)

REAL = default_real()
BOOL = default_boolean()


def _full_binary(depth, fset, leaf=lambda i: var_node(0)):
    if depth == 0:
        return leaf(0)
    return func_node(
        fset.index("add") if fset is REAL else fset.index("and"),
        (_full_binary(depth - 1, fset), _full_binary(depth - 1, fset)),
    )


def _all_subtrees(node):
    found = [node]
    for child in node.children:
        found.extend(_all_subtrees(child))
    return found


# -- structure helpers -------------------------------------------------------------

def test_depth_counts_edges():
    assert tree_depth(var_node(0)) == 0
    assert tree_depth(_full_binary(2, REAL)) == 2


def test_node_count_full_binary():
    assert node_count(_full_binary(2, REAL)) == 7


def test_forest_metrics_shapes():
    single = TreeForest((var_node(0),))
    assert forest_metrics(single) == (0, 1)
    full = TreeForest((_full_binary(2, REAL),))
    assert forest_metrics(full) == (2, 7)
    two = TreeForest((_full_binary(1, REAL), _full_binary(3, REAL)))
    assert forest_metrics(two) == (3, 3 + 15)


# -- initialization -----------------------------------------------------------------

def test_init_zero_depth_yields_single_terminals():
    params = TgpParams(init_depth_min=0, init_depth_max=0)
    rng = derive_rng(0)
    for forest in init_ramped(50, REAL, 2, 1, params, rng):
        assert node_count(forest.trees[0]) == 1


def test_init_full_method_binary_set_is_complete_tree():
    # even slots use the full method; with a binary-only set and a pinned
    # depth the tree must have 2^(d+1)-1 nodes
    params = TgpParams(init_depth_min=2, init_depth_max=2)
    rng = derive_rng(1)
    forests = init_ramped(10, REAL, 2, 1, params, rng)
    for i in range(0, 10, 2):
        assert node_count(forests[i].trees[0]) == 7
        assert tree_depth(forests[i].trees[0]) == 2


def test_init_respects_depth_cap_across_many_samples():
    params = TgpParams(init_depth_min=2, init_depth_max=6)
    rng = derive_rng(2)
    for forest in init_ramped(2000, REAL, 3, 2, params, rng):
        validate_forest(forest, REAL, 3, params)
        assert all(tree_depth(t) <= 6 for t in forest.trees)


def test_init_forest_width_matches_outputs():
    params = TgpParams()
    rng = derive_rng(3)
    forest = init_ramped(1, BOOL, 4, 3, params, rng)[0]
    assert forest.n_outputs == 3


def test_boolean_terminals_exclude_constants_by_default():
    params = TgpParams(init_depth_min=0, init_depth_max=0)
    rng = derive_rng(4)
    for forest in init_ramped(200, BOOL, 2, 1, params, rng):
        node = forest.trees[0]
        assert node.kind != K_CONST  # no constant leaves unless enabled


def test_real_constant_leaves_sampled_in_unit_interval():
    params = TgpParams(init_depth_min=0, init_depth_max=0, erc_probability=1.0)
    rng = derive_rng(5)
    for forest in init_ramped(300, REAL, 2, 1, params, rng):
        node = forest.trees[0]
        assert node.children == ()
        assert -1.0 <= node.value <= 1.0


def test_params_validation():
    with pytest.raises(ConfigurationError):
        TgpParams(init_depth_min=4, init_depth_max=2)
    with pytest.raises(ConfigurationError):
        TgpParams(init_depth_max=20, max_depth=10)
    with pytest.raises(ConfigurationError):
        TgpParams(erc_probability=1.5)


# -- crossover ---------------------------------------------------------------------

def test_crossover_of_single_terminals_takes_donor_leaf():
    params = TgpParams()
    rng = derive_rng(6)
    a = TreeForest((var_node(0),))
    b = TreeForest((var_node(1),))
    child = subtree_crossover(a, b, params, rng)
    assert child.trees[0] == var_node(1)


def test_crossover_child_subtree_comes_from_donor():
    params = TgpParams()
    rng = derive_rng(7)
    a = TreeForest((var_node(0),))
    b = TreeForest((_full_binary(3, REAL),))
    donor_parts = _all_subtrees(b.trees[0])
    for _ in range(50):
        child = subtree_crossover(a, b, params, rng)
        assert child.trees[0] in donor_parts


def test_crossover_identical_parents_is_semantically_identity():
    params = TgpParams(init_depth_min=2, init_depth_max=5)
    rng = derive_rng(8)
    probes = derive_rng(9).uniform(-2.0, 2.0, size=(20, 3))
    for forest in init_ramped(200, REAL, 3, 2, params, rng):
        child = subtree_crossover(forest, forest, params, rng)
        for row in probes:
            assert evaluate_forest(child, REAL, list(row)) == \
                evaluate_forest(forest, REAL, list(row))


def test_crossover_respects_depth_cap():
    params = TgpParams(init_depth_min=3, init_depth_max=6, max_depth=7)
    rng = derive_rng(10)
    pool = init_ramped(100, REAL, 2, 1, params, rng)
    for _ in range(1000):
        i, j = rng.integers(0, len(pool), size=2)
        child = subtree_crossover(pool[int(i)], pool[int(j)], params, rng)
        validate_forest(child, REAL, 2, params)


def test_crossover_shape_mismatch_rejected():
    params = TgpParams()
    rng = derive_rng(11)
    a = TreeForest((var_node(0),))
    b = TreeForest((var_node(0), var_node(1)))
    with pytest.raises(ConfigurationError):
        subtree_crossover(a, b, params, rng)


# -- mutation ----------------------------------------------------------------------

def test_mutation_zero_depth_swaps_terminals():
    params = TgpParams(init_depth_min=0, init_depth_max=0, max_depth=0)
    rng = derive_rng(12)
    forest = TreeForest((var_node(0),))
    for _ in range(100):
        mutant = subtree_mutation(forest, REAL, 3, params, rng)
        assert node_count(mutant.trees[0]) == 1
        validate_forest(mutant, REAL, 3, params)


def test_mutants_stay_valid():
    params = TgpParams(init_depth_min=2, init_depth_max=6)
    rng = derive_rng(13)
    pool = init_ramped(100, BOOL, 3, 2, params, rng)
    for _ in range(1000):
        idx = int(rng.integers(0, len(pool)))
        mutant = subtree_mutation(pool[idx], BOOL, 3, params, rng)
        validate_forest(mutant, BOOL, 3, params)
        pool[idx] = mutant


# -- evaluation --------------------------------------------------------------------

def test_input_identity():
    forest = TreeForest((var_node(0),))
    assert evaluate_forest(forest, REAL, [7.0]) == [7.0]


def test_hand_evaluated_arithmetic():
    add, mul = REAL.index("add"), REAL.index("mul")
    tree = func_node(add, (var_node(0), func_node(mul, (var_node(0), var_node(0)))))
    assert evaluate_forest(TreeForest((tree,)), REAL, [3.0]) == [12.0]


def test_boolean_nand_and_program_output_types():
    tree = func_node(BOOL.index("nand"), (var_node(0), var_node(1)))
    program = TreeProgram(TreeForest((tree,)), BOOL, 2)
    assert program.evaluate([True, True]) == [False]
    assert program.evaluate([True, False]) == [True]
    assert all(isinstance(v, bool) for v in program.evaluate([False, False]))


def test_batch_evaluation_matches_scalar():
    params = TgpParams(init_depth_min=2, init_depth_max=6)
    rng = derive_rng(14)
    x = derive_rng(15).uniform(-3.0, 3.0, size=(40, 2))
    fset = extended_real()
    for forest in init_ramped(60, fset, 2, 2, params, rng):
        program = TreeProgram(forest, fset, 2)
        with np.errstate(all="ignore"):
            batch = program.evaluate_many(x)
        for r in range(x.shape[0]):
            row = program.evaluate([float(v) for v in x[r]])
            for j in range(2):
                a, b = batch[r, j], row[j]
                assert (a == b) or (math.isnan(a) and math.isnan(b))


def test_packed_evaluation_matches_scalar():
    params = TgpParams(init_depth_min=2, init_depth_max=5)
    rng = derive_rng(16)
    n = 3
    mask = (1 << (1 << n)) - 1
    columns = []
    for i in range(n):
        col = 0
        for r in range(1 << n):
            col |= ((r >> i) & 1) << r
        columns.append(col)
    for forest in init_ramped(100, BOOL, n, 2, params, rng):
        program = TreeProgram(forest, BOOL, n)
        packed = program.evaluate_packed(columns, mask)
        for r in range(1 << n):
            bits = [(r >> i) & 1 for i in range(n)]
            outputs = program.evaluate(bits)
            for j, out in enumerate(outputs):
                assert ((packed[j] >> r) & 1) == int(out)


# -- rendering and validation --------------------------------------------------------

def test_expression_rendering():
    add, mul, nand = REAL.index("add"), REAL.index("mul"), BOOL.index("nand")
    assert to_expression_string(
        TreeForest((func_node(add, (var_node(0), const_node(1.0))),)), REAL
    ) == "(add x0 1.0)"
    assert to_expression_string(
        TreeForest((func_node(nand, (var_node(0), var_node(1))),)), BOOL
    ) == "(nand x0 x1)"
    nested = func_node(mul, (func_node(add, (var_node(0), var_node(1))), var_node(0)))
    assert to_expression_string(TreeForest((nested,)), REAL) == "(mul (add x0 x1) x0)"


def test_boolean_constant_rendering():
    assert to_expression_string(TreeForest((const_node(1),)), BOOL) == "true"
    assert to_expression_string(TreeForest((const_node(0),)), BOOL) == "false"


def test_multi_output_expression_is_one_line_per_tree():
    forest = TreeForest((var_node(0), var_node(1)))
    assert to_expression_string(forest, REAL) == "x0\nx1"


def test_validator_catches_structural_damage():
    params = TgpParams()
    with pytest.raises(ValueError):
        validate_forest(TreeForest((var_node(9),)), REAL, 2, params)  # input range
    bad_arity = func_node(REAL.index("add"), (var_node(0),))
    with pytest.raises(ValueError):
        validate_forest(TreeForest((bad_arity,)), REAL, 2, params)
    deep = _full_binary(4, REAL)
    with pytest.raises(ValueError):
        validate_forest(TreeForest((deep,)), REAL, 2, TgpParams(max_depth=3))
