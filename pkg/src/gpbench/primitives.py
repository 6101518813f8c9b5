"""Primitive operations and function sets.

A genome never calls Python operators directly; it references primitives
by position inside a :class:`FunctionSet`.  Each primitive carries up to
three implementations that must agree bit-for-bit on shared inputs:

* ``fn``        scalar evaluation (floats, or 0/1 ints for Boolean logic),
* ``fn_vec``    vectorized evaluation over numpy arrays (real domain),
* ``fn_packed`` bit-parallel evaluation over arbitrary-precision ints,
                where every int packs one truth-table column (Boolean
                domain); ``mask`` is the all-ones column.

Real arithmetic is protected so that programs are total functions:
division by (near) zero yields 1, log takes ``log |x|`` with ``log 0 = 0``
and sqrt takes ``sqrt |x|``.  Overflow follows IEEE rules and produces
infinities, which the fitness layer penalizes.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DIV_EPS = 1e-9


class Domain(enum.Enum):
    """Value domain a function set (and thus a genome) operates on."""

    REAL = "real"
    BOOLEAN = "boolean"


@dataclass(frozen=True)
class Primitive:
    name: str
    arity: int
    domain: Domain
    fn: Callable
    fn_vec: Optional[Callable] = None
    fn_packed: Optional[Callable] = None

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"primitive {self.name!r} must take at least one argument")


# -- real-valued operations -------------------------------------------------

def _div(a: float, b: float) -> float:
    if -DIV_EPS < b < DIV_EPS:
        return 1.0
    return a / b


def _div_vec(a, b):
    shape = np.broadcast_shapes(np.shape(a), np.shape(b))
    out = np.ones(shape, dtype=np.float64)
    np.divide(a, b, out=out, where=np.abs(b) >= DIV_EPS)
    return out


# largest argument with a finite exp; beyond it overflow saturates to +inf
_EXP_MAX = math.log(sys.float_info.max)


def _exp(x: float) -> float:
    # routed through numpy so scalar and batch evaluation agree bit for bit
    if x > _EXP_MAX:
        return math.inf
    return float(np.exp(x))


def _log(x: float) -> float:
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    return float(np.log(ax))


def _log_vec(x):
    ax = np.abs(np.asarray(x, dtype=np.float64))
    zero = ax == 0.0
    return np.where(zero, 0.0, np.log(np.where(zero, 1.0, ax)))


def _sqrt(x: float) -> float:
    return math.sqrt(abs(x))


def _sin(x: float) -> float:
    # math.sin raises on infinite arguments where numpy returns nan
    try:
        return math.sin(x)
    except ValueError:
        return math.nan


def _cos(x: float) -> float:
    try:
        return math.cos(x)
    except ValueError:
        return math.nan


def _sqrt_vec(x):
    return np.sqrt(np.abs(x))


# -- Boolean operations (mask = all-ones column) -----------------------------

def _and_p(a: int, b: int, mask: int) -> int:
    return a & b


def _or_p(a: int, b: int, mask: int) -> int:
    return a | b


def _nand_p(a: int, b: int, mask: int) -> int:
    return (a & b) ^ mask


def _nor_p(a: int, b: int, mask: int) -> int:
    return (a | b) ^ mask


def _xor_p(a: int, b: int, mask: int) -> int:
    return a ^ b


def _xnor_p(a: int, b: int, mask: int) -> int:
    return (a ^ b) ^ mask


def _not_p(a: int, mask: int) -> int:
    return a ^ mask


def _real(name, arity, fn, fn_vec) -> Primitive:
    return Primitive(name, arity, Domain.REAL, fn, fn_vec=fn_vec)


def _boolean(name, arity, fn_packed) -> Primitive:
    if arity == 1:
        scalar = lambda a, _f=fn_packed: _f(a & 1, 1)
    else:
        scalar = lambda a, b, _f=fn_packed: _f(a & 1, b & 1, 1)
    return Primitive(name, arity, Domain.BOOLEAN, scalar, fn_packed=fn_packed)


REAL_PRIMITIVES: dict[str, Primitive] = {
    "add": _real("add", 2, lambda a, b: a + b, np.add),
    "sub": _real("sub", 2, lambda a, b: a - b, np.subtract),
    "mul": _real("mul", 2, lambda a, b: a * b, np.multiply),
    "div": _real("div", 2, _div, _div_vec),
    "sin": _real("sin", 1, _sin, np.sin),
    "cos": _real("cos", 1, _cos, np.cos),
    "exp": _real("exp", 1, _exp, np.exp),
    "log": _real("log", 1, _log, _log_vec),
    "sqrt": _real("sqrt", 1, _sqrt, _sqrt_vec),
}

BOOLEAN_PRIMITIVES: dict[str, Primitive] = {
    "and": _boolean("and", 2, _and_p),
    "or": _boolean("or", 2, _or_p),
    "nand": _boolean("nand", 2, _nand_p),
    "nor": _boolean("nor", 2, _nor_p),
    "xor": _boolean("xor", 2, _xor_p),
    "xnor": _boolean("xnor", 2, _xnor_p),
    "not": _boolean("not", 1, _not_p),
}

DEFAULT_REAL_NAMES = ("add", "sub", "mul", "div")
EXTENDED_REAL_NAMES = ("add", "sub", "mul", "div", "sin", "cos", "exp", "log")
DEFAULT_BOOLEAN_NAMES = ("and", "or", "nand", "nor")


@dataclass(frozen=True)
class FunctionSet:
    """Ordered collection of primitives; position is the function id."""

    domain: Domain
    primitives: tuple[Primitive, ...]

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("function set must not be empty")
        names = [p.name for p in self.primitives]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate primitive names: {names}")
        for p in self.primitives:
            if p.domain is not self.domain:
                raise ValueError(
                    f"primitive {p.name!r} has domain {p.domain.value}, "
                    f"expected {self.domain.value}"
                )

    def __len__(self) -> int:
        return len(self.primitives)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.primitives)

    @property
    def max_arity(self) -> int:
        return max(p.arity for p in self.primitives)

    def index(self, name: str) -> int:
        for i, p in enumerate(self.primitives):
            if p.name == name:
                return i
        raise KeyError(name)

    @classmethod
    def from_names(cls, domain: Domain, names) -> "FunctionSet":
        table = REAL_PRIMITIVES if domain is Domain.REAL else BOOLEAN_PRIMITIVES
        missing = [n for n in names if n not in table]
        if missing:
            raise ValueError(
                f"unknown {domain.value} primitives {missing}; "
                f"available: {sorted(table)}"
            )
        return cls(domain, tuple(table[n] for n in names))


def default_real() -> FunctionSet:
    return FunctionSet.from_names(Domain.REAL, DEFAULT_REAL_NAMES)


def extended_real() -> FunctionSet:
    return FunctionSet.from_names(Domain.REAL, EXTENDED_REAL_NAMES)


def default_boolean() -> FunctionSet:
    return FunctionSet.from_names(Domain.BOOLEAN, DEFAULT_BOOLEAN_NAMES)
