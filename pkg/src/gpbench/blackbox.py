"""Supervised black-box problems: regression datasets and truth tables.

Logic synthesis uses bit-parallel evaluation: every input variable is a
precomputed 2^n-bit column packed into one arbitrary-precision integer
(row r sits at bit r, input 0 is the least significant bit of r), so a
program is evaluated once per table instead of once per row, and the
Hamming cost falls out of a popcount.  Regression uses the vectorized
primitive path over the whole dataset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .core import ConfigurationError, Problem, Program
from .primitives import Domain
from .rng import STREAM_PROBLEM, derive_rng

MAX_TABLE_INPUTS = 20
PENALTY = 1e15


class TableSizeError(ConfigurationError):
    """Truth table would exceed the exhaustive-enumeration input cap."""


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Metric(enum.Enum):
    MSE = "mse"
    MAE = "mae"
    HAMMING = "hamming"


@dataclass(eq=False)
class Dataset:
    """Real-valued supervision: x is (rows, n_inputs), y is (rows, n_outputs)."""

    x: np.ndarray
    y: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValueError("dataset arrays must be 2-dimensional")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]}"
            )
        if self.x.shape[0] < 1:
            raise ValueError("dataset needs at least one row")
        if self.x.shape[1] < 1 or self.y.shape[1] < 1:
            raise ValueError("dataset needs at least one input and one output column")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("dataset values must be finite")

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.x.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.y.shape[1]

    def __eq__(self, other) -> bool:
        # name is a label, not content
        return (
            isinstance(other, Dataset)
            and self.x.shape == other.x.shape
            and self.y.shape == other.y.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Exhaustive Boolean supervision over all 2^n_inputs rows.

    ``packed_outputs[j]`` holds output j's column: bit r is the expected
    output for input row r, where row r assigns input i the bit
    ``(r >> i) & 1``.
    """

    n_inputs: int
    n_outputs: int
    packed_outputs: tuple
    name: str = ""

    def __post_init__(self):
        if self.n_inputs < 1:
            raise ValueError("truth table needs at least one input")
        if self.n_inputs > MAX_TABLE_INPUTS:
            raise TableSizeError(
                f"{self.n_inputs} inputs would need 2^{self.n_inputs} rows; "
                f"the exhaustive cap is {MAX_TABLE_INPUTS} inputs"
            )
        if self.n_outputs < 1:
            raise ValueError("truth table needs at least one output")
        if len(self.packed_outputs) != self.n_outputs:
            raise ValueError(
                f"expected {self.n_outputs} packed columns, "
                f"found {len(self.packed_outputs)}"
            )
        for j, column in enumerate(self.packed_outputs):
            if not 0 <= column <= self.mask:
                raise ValueError(f"output column {j} has bits beyond row 2^n-1")

    @property
    def n_rows(self) -> int:
        return 1 << self.n_inputs

    @property
    def mask(self) -> int:
        return (1 << self.n_rows) - 1

    @cached_property
    def input_columns(self) -> tuple:
        """Packed column per input: bit r of column i is (r >> i) & 1.

        Built from the closed form for the periodic bit pattern (2^i
        zeros then 2^i ones, repeated), so construction is cheap even
        for 2^20-row tables.
        """
        columns = []
        for i in range(self.n_inputs):
            block = 1 << i
            period = ((1 << block) - 1) << block
            repeats = 1 << (self.n_inputs - i - 1)
            ratio = ((1 << (2 * block * repeats)) - 1) // ((1 << (2 * block)) - 1)
            columns.append(period * ratio)
        return tuple(columns)

    def output_bit(self, output: int, row: int) -> int:
        return (self.packed_outputs[output] >> row) & 1

    def row(self, row: int) -> tuple:
        """(input bits, output bits) of one row, index order."""
        inputs = tuple((row >> i) & 1 for i in range(self.n_inputs))
        outputs = tuple(self.output_bit(j, row) for j in range(self.n_outputs))
        return inputs, outputs

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruthTable)
            and self.n_inputs == other.n_inputs
            and self.n_outputs == other.n_outputs
            and self.packed_outputs == other.packed_outputs
        )


# -- fitness -----------------------------------------------------------------

def fitness_regression(program: Program, dataset: Dataset, metric: Metric) -> float:
    """Mean squared/absolute error over all rows and outputs.

    Non-finite program outputs are clamped to the PENALTY constant before
    differencing so overflowing programs rank as bad, not as crashes.
    """
    if metric not in (Metric.MSE, Metric.MAE):
        raise ConfigurationError(f"regression fitness cannot use metric {metric.value}")
    if (program.n_inputs, program.n_outputs) != (dataset.n_inputs, dataset.n_outputs):
        raise ConfigurationError(
            f"program signature {program.n_inputs}->{program.n_outputs} does not "
            f"match dataset {dataset.n_inputs}->{dataset.n_outputs}"
        )
    with np.errstate(all="ignore"):
        predicted = program.evaluate_many(dataset.x)
        predicted = np.where(np.isfinite(predicted), predicted, PENALTY)
        error = predicted - dataset.y
        if metric is Metric.MSE:
            return float(np.mean(error * error))
        return float(np.mean(np.abs(error)))


def fitness_logic(program: Program, table: TruthTable) -> float:
    """Total Hamming distance between the program and the table."""
    if (program.n_inputs, program.n_outputs) != (table.n_inputs, table.n_outputs):
        raise ConfigurationError(
            f"program signature {program.n_inputs}->{program.n_outputs} does not "
            f"match table {table.n_inputs}->{table.n_outputs}"
        )
    outputs = program.evaluate_packed(table.input_columns, table.mask)
    distance = 0
    for predicted, expected in zip(outputs, table.packed_outputs):
        distance += (predicted ^ expected).bit_count()
    return float(distance)


class BlackBoxProblem(Problem):
    """Dataset or truth table plus a metric and a success threshold."""

    def __init__(
        self,
        payload: Union[Dataset, TruthTable],
        metric: Optional[Metric] = None,
        ideal_epsilon: Optional[float] = None,
        name: Optional[str] = None,
    ):
        if isinstance(payload, Dataset):
            self.domain = Domain.REAL
            metric = Metric.MSE if metric is None else metric
            if metric not in (Metric.MSE, Metric.MAE):
                raise ConfigurationError(
                    f"metric {metric.value} requires a Boolean payload"
                )
            ideal_epsilon = 1e-10 if ideal_epsilon is None else ideal_epsilon
        elif isinstance(payload, TruthTable):
            self.domain = Domain.BOOLEAN
            metric = Metric.HAMMING if metric is None else metric
            if metric is not Metric.HAMMING:
                raise ConfigurationError(
                    f"metric {metric.value} requires a real-valued payload"
                )
            ideal_epsilon = 0.0 if ideal_epsilon is None else ideal_epsilon
        else:
            raise ConfigurationError(
                f"payload must be a Dataset or TruthTable, got {type(payload).__name__}"
            )
        if ideal_epsilon < 0:
            raise ConfigurationError("ideal_epsilon must be non-negative")
        self.payload = payload
        self.metric = metric
        self.ideal_threshold = float(ideal_epsilon)
        self.n_inputs = payload.n_inputs
        self.n_outputs = payload.n_outputs
        self.name = payload.name if name is None else name

    def evaluate(self, program: Program) -> float:
        if self.domain is Domain.REAL:
            return fitness_regression(program, self.payload, self.metric)
        return fitness_logic(program, self.payload)


# -- Boolean benchmark generators ---------------------------------------------

class BooleanFamily(enum.Enum):
    ADDER = "adder"
    MULTIPLIER = "multiplier"
    PARITY = "parity"
    COMPARATOR = "comparator"
    MULTIPLEXER = "multiplexer"
    MAJORITY = "majority"


def _pack_column(bits: np.ndarray) -> int:
    """Pack a 0/1 vector (row r at position r) into one integer."""
    data = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    return int.from_bytes(data, "little")


def _check_table_size(n_inputs: int, family: BooleanFamily, size: int) -> None:
    if n_inputs > MAX_TABLE_INPUTS:
        raise TableSizeError(
            f"{family.value}({size}) needs {n_inputs} inputs; "
            f"the exhaustive cap is {MAX_TABLE_INPUTS}"
        )


def gen_boolean(family: Union[BooleanFamily, str], size: int) -> TruthTable:
    """Exhaustive truth table for one benchmark family instance.

    Input layout (input 0 = least significant bit of the row index):
    Adder(n) takes a then b (n bits each, LSB first) then carry-in and
    yields n sum bits plus carry-out; Multiplier(n) takes a then b and
    yields the 2n product bits; Comparator(n) takes a then b and yields
    (a<b, a=b, a>b); Multiplexer(k) takes k address bits then 2^k data
    lines and yields the addressed line; Parity(n) yields odd parity;
    Majority(n, odd) yields 1 when more than half the inputs are 1.
    """
    family = BooleanFamily(family)
    if size < 1:
        raise ConfigurationError(f"{family.value} size must be at least 1")

    if family is BooleanFamily.ADDER:
        n_inputs = 2 * size + 1
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        low_mask = np.uint64((1 << size) - 1)
        a = r & low_mask
        b = (r >> np.uint64(size)) & low_mask
        cin = (r >> np.uint64(2 * size)) & np.uint64(1)
        total = a + b + cin
        columns = [(total >> np.uint64(j)) & np.uint64(1) for j in range(size + 1)]
    elif family is BooleanFamily.MULTIPLIER:
        n_inputs = 2 * size
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        low_mask = np.uint64((1 << size) - 1)
        a = r & low_mask
        b = (r >> np.uint64(size)) & low_mask
        product = a * b
        columns = [(product >> np.uint64(j)) & np.uint64(1) for j in range(2 * size)]
    elif family is BooleanFamily.PARITY:
        n_inputs = size
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        columns = [np.bitwise_count(r) & np.uint64(1)]
    elif family is BooleanFamily.COMPARATOR:
        n_inputs = 2 * size
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        low_mask = np.uint64((1 << size) - 1)
        a = r & low_mask
        b = (r >> np.uint64(size)) & low_mask
        columns = [a < b, a == b, a > b]
    elif family is BooleanFamily.MULTIPLEXER:
        n_inputs = size + (1 << size)
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        address = r & np.uint64((1 << size) - 1)
        columns = [(r >> (np.uint64(size) + address)) & np.uint64(1)]
    else:
        if size % 2 == 0:
            raise ConfigurationError("majority needs an odd number of inputs")
        n_inputs = size
        _check_table_size(n_inputs, family, size)
        r = np.arange(1 << n_inputs, dtype=np.uint64)
        columns = [np.bitwise_count(r) * np.uint64(2) > np.uint64(size)]

    packed = tuple(_pack_column(np.asarray(c)) for c in columns)
    return TruthTable(n_inputs, len(packed), packed, name=f"{family.value}:{size}")


# -- regression benchmark generators ------------------------------------------

@dataclass(frozen=True)
class _RegressionBenchmark:
    fn: callable
    n_inputs: int
    low: float
    high: float
    count: int


REGRESSION_BENCHMARKS: dict = {
    "koza1": _RegressionBenchmark(
        lambda x: x[:, 0] ** 4 + x[:, 0] ** 3 + x[:, 0] ** 2 + x[:, 0], 1, -1.0, 1.0, 20
    ),
    "koza2": _RegressionBenchmark(
        lambda x: x[:, 0] ** 5 - 2 * x[:, 0] ** 3 + x[:, 0], 1, -1.0, 1.0, 20
    ),
    "koza3": _RegressionBenchmark(
        lambda x: x[:, 0] ** 6 - 2 * x[:, 0] ** 4 + x[:, 0] ** 2, 1, -1.0, 1.0, 20
    ),
    "nguyen_f1": _RegressionBenchmark(
        lambda x: x[:, 0] ** 3 + x[:, 0] ** 2 + x[:, 0], 1, -1.0, 1.0, 20
    ),
    "nguyen_f2": _RegressionBenchmark(
        lambda x: x[:, 0] ** 4 + x[:, 0] ** 3 + x[:, 0] ** 2 + x[:, 0], 1, -1.0, 1.0, 20
    ),
    "nguyen_f3": _RegressionBenchmark(
        lambda x: sum(x[:, 0] ** k for k in range(1, 6)), 1, -1.0, 1.0, 20
    ),
    "nguyen_f4": _RegressionBenchmark(
        lambda x: sum(x[:, 0] ** k for k in range(1, 7)), 1, -1.0, 1.0, 20
    ),
    "nguyen_f5": _RegressionBenchmark(
        lambda x: np.sin(x[:, 0] ** 2) * np.cos(x[:, 0]) - 1.0, 1, -1.0, 1.0, 20
    ),
    "nguyen_f6": _RegressionBenchmark(
        lambda x: np.sin(x[:, 0]) + np.sin(x[:, 0] + x[:, 0] ** 2), 1, -1.0, 1.0, 20
    ),
    "nguyen_f7": _RegressionBenchmark(
        lambda x: np.log(x[:, 0] + 1.0) + np.log(x[:, 0] ** 2 + 1.0), 1, 0.0, 2.0, 20
    ),
    "nguyen_f8": _RegressionBenchmark(lambda x: np.sqrt(x[:, 0]), 1, 0.0, 4.0, 20),
    "nguyen_f9": _RegressionBenchmark(
        lambda x: np.sin(x[:, 0]) + np.sin(x[:, 1] ** 2), 2, 0.0, 1.0, 100
    ),
    "nguyen_f10": _RegressionBenchmark(
        lambda x: 2.0 * np.sin(x[:, 0]) * np.cos(x[:, 1]), 2, 0.0, 1.0, 100
    ),
}


def gen_regression(
    name: str,
    count: Optional[int] = None,
    low: Optional[float] = None,
    high: Optional[float] = None,
    seed: int = 0,
) -> Dataset:
    """Sample one classic benchmark: uniform inputs, closed-form targets."""
    try:
        bench = REGRESSION_BENCHMARKS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown regression benchmark {name!r}; "
            f"available: {sorted(REGRESSION_BENCHMARKS)}"
        ) from None
    count = bench.count if count is None else count
    low = bench.low if low is None else low
    high = bench.high if high is None else high
    if count < 1:
        raise ConfigurationError("sample count must be at least 1")
    if not low < high:
        raise ConfigurationError("sampling range must satisfy low < high")
    rng = derive_rng(seed, STREAM_PROBLEM)
    x = rng.uniform(low, high, size=(count, bench.n_inputs))
    y = np.asarray(bench.fn(x), dtype=np.float64).reshape(count, 1)
    return Dataset(x, y, name=name)


# -- text formats --------------------------------------------------------------

def save_truth_table(table: TruthTable) -> str:
    """Render the exhaustive table format.

    Header ``inputs N outputs M``, then one line per row: N input bits,
    a space, M output bits.  Bit 0 of each group is the rightmost
    character.  Rows appear in ascending row-index order.
    """
    lines = [f"inputs {table.n_inputs} outputs {table.n_outputs}"]
    for r in range(table.n_rows):
        out_value = 0
        for j in range(table.n_outputs):
            out_value |= table.output_bit(j, r) << j
        lines.append(
            f"{r:0{table.n_inputs}b} {out_value:0{table.n_outputs}b}"
        )
    return "\n".join(lines) + "\n"


def _parse_bits(token: str, width: int, what: str, line_no: int) -> int:
    if len(token) != width:
        raise ParseError(
            f"expected {width} {what} bits, found {len(token)}", line_no
        )
    if set(token) - {"0", "1"}:
        raise ParseError(f"{what} bits must be 0 or 1, got {token!r}", line_no)
    return int(token, 2)


def load_truth_table(text: str, name: str = "") -> TruthTable:
    """Parse the save_truth_table format; tables must be fully specified."""
    lines = [
        (i + 1, stripped)
        for i, raw in enumerate(text.splitlines())
        if (stripped := raw.strip())
    ]
    if not lines:
        raise ParseError("empty truth-table file")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "inputs" or parts[2] != "outputs":
        raise ParseError("header must read 'inputs N outputs M'", header_no)
    try:
        n_inputs, n_outputs = int(parts[1]), int(parts[3])
    except ValueError:
        raise ParseError("header counts must be integers", header_no) from None
    if n_inputs < 1 or n_outputs < 1:
        raise ParseError("header counts must be positive", header_no)
    if n_inputs > MAX_TABLE_INPUTS:
        raise TableSizeError(
            f"table declares {n_inputs} inputs; the cap is {MAX_TABLE_INPUTS}"
        )

    n_rows = 1 << n_inputs
    seen = 0
    columns = [0] * n_outputs
    for line_no, line in lines[1:]:
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(
                f"expected '<input bits> <output bits>', got {line!r}", line_no
            )
        r = _parse_bits(tokens[0], n_inputs, "input", line_no)
        out_value = _parse_bits(tokens[1], n_outputs, "output", line_no)
        if (seen >> r) & 1:
            raise ParseError(f"duplicate row {tokens[0]}", line_no)
        seen |= 1 << r
        for j in range(n_outputs):
            columns[j] |= ((out_value >> j) & 1) << r
    if seen != (1 << n_rows) - 1:
        missing = (~seen) & ((1 << n_rows) - 1)
        first = (missing & -missing).bit_length() - 1
        raise ParseError(f"missing row {first:0{n_inputs}b}")
    return TruthTable(n_inputs, n_outputs, tuple(columns), name=name)


def save_dataset(dataset: Dataset) -> str:
    """CSV with header x0..x{n-1},y0..y{m-1} and repr-exact decimal reals."""
    header = [f"x{i}" for i in range(dataset.n_inputs)]
    header += [f"y{j}" for j in range(dataset.n_outputs)]
    lines = [",".join(header)]
    for i in range(dataset.n_rows):
        row = [repr(float(v)) for v in dataset.x[i]]
        row += [repr(float(v)) for v in dataset.y[i]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def load_dataset(text: str, name: str = "") -> Dataset:
    lines = [
        (i + 1, stripped)
        for i, raw in enumerate(text.splitlines())
        if (stripped := raw.strip())
    ]
    if not lines:
        raise ParseError("empty dataset file")
    header_no, header = lines[0]
    names = [c.strip() for c in header.split(",")]
    n_inputs = 0
    while n_inputs < len(names) and names[n_inputs] == f"x{n_inputs}":
        n_inputs += 1
    n_outputs = len(names) - n_inputs
    expected = [f"x{i}" for i in range(n_inputs)]
    expected += [f"y{j}" for j in range(n_outputs)]
    if n_inputs == 0 or n_outputs == 0 or names != expected:
        raise ParseError(
            "header must read x0,..,x{n-1},y0,..,y{m-1}", header_no
        )
    if len(lines) == 1:
        raise ParseError("dataset needs at least one data row")
    x_rows, y_rows = [], []
    for line_no, line in lines[1:]:
        tokens = line.split(",")
        if len(tokens) != len(names):
            raise ParseError(
                f"expected {len(names)} columns, found {len(tokens)}", line_no
            )
        try:
            values = [float(tok) for tok in tokens]
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", line_no) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("dataset values must be finite", line_no)
        x_rows.append(values[:n_inputs])
        y_rows.append(values[n_inputs:])
    return Dataset(np.asarray(x_rows), np.asarray(y_rows), name=name)
