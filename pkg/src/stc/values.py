"""Closed value universe and structural port types.

Values are immutable tagged trees drawn from a fixed grammar: unit, bool,
64-bit int, 64-bit float, string, homogeneous list, pair, and the two sum
injections. Equality and hashing are structural and *total*: floats
compare by their IEEE-754 bit pattern (NaN equals NaN, 0.0 differs from
-0.0), so two equal values are interchangeable in any executor.

A ``PortType`` is the type of a graph vertex. Its ``name`` identifies the
vertex; its kind/args describe the values that flow through it. Two port
types are *compatible* (can carry the same values) when their structures
match, even if their names differ, which lets distinct vertices share a
carrier type.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum, unique
from typing import Any, Iterable, Optional, Tuple

from .errors import PortTypeError, SchemaError

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
_U64 = (1 << 64) - 1


def wrap64(n: int) -> int:
    """Reduce an arbitrary int to 64-bit two's-complement."""
    return ((n - INT64_MIN) & _U64) + INT64_MIN


@unique
class TypeKind(Enum):
    UNIT = "unit"
    BOOL = "bool"
    INT = "int"
    FLOAT = "float"
    STR = "str"
    LIST = "list"
    PAIR = "pair"
    SUM = "sum"


@dataclass(frozen=True)
class PortType:
    name: str
    kind: TypeKind
    args: Tuple["PortType", ...] = ()

    def structure(self) -> tuple:
        """Name-free structural descriptor, compared for compatibility."""
        return (self.kind, tuple(a.structure() for a in self.args))

    def compatible(self, other: "PortType") -> bool:
        return self.structure() == other.structure()

    def __str__(self) -> str:
        return self.name


UNIT_T = PortType("unit", TypeKind.UNIT)
BOOL_T = PortType("bool", TypeKind.BOOL)
INT_T = PortType("int", TypeKind.INT)
FLOAT_T = PortType("float", TypeKind.FLOAT)
STR_T = PortType("str", TypeKind.STR)


def list_of(elem: PortType) -> PortType:
    return PortType(f"list({elem.name})", TypeKind.LIST, (elem,))


def pair_of(first: PortType, second: PortType) -> PortType:
    return PortType(f"pair({first.name},{second.name})", TypeKind.PAIR, (first, second))


def sum_of(left: PortType, right: PortType) -> PortType:
    return PortType(f"sum({left.name},{right.name})", TypeKind.SUM, (left, right))


def vertex(name: str, carrier: PortType) -> PortType:
    """A distinctly named vertex sharing ``carrier``'s structure."""
    return PortType(name, carrier.kind, carrier.args)


def parse_port(text: str, path: str = "") -> PortType:
    """Parse a canonical port-type string such as ``sum(int,list(str))``."""
    pt, rest = _parse_port(text.strip(), path)
    if rest:
        raise SchemaError(path, f"trailing text {rest!r} after port type")
    return pt


_ATOMS = {"unit": UNIT_T, "bool": BOOL_T, "int": INT_T, "float": FLOAT_T, "str": STR_T}


def _parse_port(text: str, path: str) -> Tuple[PortType, str]:
    for name, pt in _ATOMS.items():
        if text.startswith(name):
            return pt, text[len(name):]
    for name, arity, build in (
        ("list", 1, lambda a: list_of(a[0])),
        ("pair", 2, lambda a: pair_of(a[0], a[1])),
        ("sum", 2, lambda a: sum_of(a[0], a[1])),
    ):
        if text.startswith(name + "("):
            rest = text[len(name) + 1:]
            args = []
            for i in range(arity):
                arg, rest = _parse_port(rest, path)
                args.append(arg)
                sep = "," if i < arity - 1 else ")"
                if not rest.startswith(sep):
                    raise SchemaError(path, f"expected {sep!r} in port type near {rest!r}")
                rest = rest[1:]
            return build(args), rest
    raise SchemaError(path, f"unrecognized port type {text!r}")


@unique
class Tag(Enum):
    UNIT = "unit"
    BOOL = "bool"
    INT = "int"
    FLOAT = "float"
    STR = "str"
    LIST = "list"
    PAIR = "pair"
    SUML = "inl"
    SUMR = "inr"


@dataclass(frozen=True, eq=False, repr=False)
class Value:
    """One immutable runtime value.

    Payload by tag: UNIT -> None; BOOL/INT/FLOAT/STR -> the python scalar;
    LIST -> tuple of Values (with ``elem`` giving the declared element
    type); PAIR -> (Value, Value); SUML/SUMR -> the injected Value.
    """

    tag: Tag
    payload: Any = None
    elem: Optional[PortType] = None

    def _key(self) -> tuple:
        t = self.tag
        if t is Tag.FLOAT:
            return (t, struct.pack("<d", self.payload))
        if t is Tag.LIST:
            return (t, self.elem.structure(), tuple(v._key() for v in self.payload))
        if t is Tag.PAIR:
            return (t, self.payload[0]._key(), self.payload[1]._key())
        if t in (Tag.SUML, Tag.SUMR):
            return (t, self.payload._key())
        return (t, self.payload)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Value):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        t = self.tag
        if t is Tag.UNIT:
            return "unit"
        if t is Tag.LIST:
            return f"[{', '.join(map(repr, self.payload))}]:{self.elem.name}"
        if t is Tag.PAIR:
            return f"({self.payload[0]!r}, {self.payload[1]!r})"
        if t in (Tag.SUML, Tag.SUMR):
            return f"{t.value}({self.payload!r})"
        return repr(self.payload)

    def matches(self, pt: PortType) -> bool:
        """True when the value inhabits ``pt`` (structurally)."""
        k = pt.kind
        if k is TypeKind.UNIT:
            return self.tag is Tag.UNIT
        if k is TypeKind.BOOL:
            return self.tag is Tag.BOOL
        if k is TypeKind.INT:
            return self.tag is Tag.INT
        if k is TypeKind.FLOAT:
            return self.tag is Tag.FLOAT
        if k is TypeKind.STR:
            return self.tag is Tag.STR
        if k is TypeKind.LIST:
            return self.tag is Tag.LIST and self.elem.compatible(pt.args[0])
        if k is TypeKind.PAIR:
            return (
                self.tag is Tag.PAIR
                and self.payload[0].matches(pt.args[0])
                and self.payload[1].matches(pt.args[1])
            )
        if k is TypeKind.SUM:
            if self.tag is Tag.SUML:
                return self.payload.matches(pt.args[0])
            if self.tag is Tag.SUMR:
                return self.payload.matches(pt.args[1])
        return False


UNIT = Value(Tag.UNIT)


def v_bool(b: bool) -> Value:
    if type(b) is not bool:
        raise PortTypeError(f"expected bool, got {type(b).__name__}")
    return Value(Tag.BOOL, b)


def v_int(n: int) -> Value:
    if type(n) is not int:
        raise PortTypeError(f"expected int, got {type(n).__name__}")
    if not INT64_MIN <= n <= INT64_MAX:
        raise PortTypeError(f"{n} outside 64-bit range")
    return Value(Tag.INT, n)


def v_float(x: float) -> Value:
    if type(x) is not float:
        raise PortTypeError(f"expected float, got {type(x).__name__}")
    return Value(Tag.FLOAT, x)


def v_str(s: str) -> Value:
    if type(s) is not str:
        raise PortTypeError(f"expected str, got {type(s).__name__}")
    return Value(Tag.STR, s)


def v_list(elem: PortType, items: Iterable[Value]) -> Value:
    tup = tuple(items)
    for i, item in enumerate(tup):
        if not item.matches(elem):
            raise PortTypeError(f"list element {i} ({item!r}) is not a {elem.name}")
    return Value(Tag.LIST, tup, elem)


def v_pair(first: Value, second: Value) -> Value:
    return Value(Tag.PAIR, (first, second))


def v_inl(inner: Value) -> Value:
    return Value(Tag.SUML, inner)


def v_inr(inner: Value) -> Value:
    return Value(Tag.SUMR, inner)
