#!/usr/bin/env python3
"""
Shared vocabulary: antenna configurations, bursty traffic, regime tags, symbol
identities and DoF regions.
"""
import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import sympy as sy
from beartype import beartype

from burstyrelay.aliases import List, Tuple, Optional, Union, Iterable, FrozenSet
from burstyrelay.errors import ConfigError

Number = Union[int, float, str, sy.Rational]


@beartype
def to_rational(value: Number) -> sy.Rational:
    """Exact rational from an int, a decimal string or a float (via its repr)."""
    if isinstance(value, sy.Rational):
        return value
    if isinstance(value, float):
        value = repr(value)
    try:
        result = sy.Rational(value)
    except (TypeError, ValueError, sy.SympifyError) as err:
        raise ConfigError(f"not a rational number: {value!r}") from err
    if not isinstance(result, sy.Rational):
        raise ConfigError(f"not a rational number: {value!r}")
    return result


def _check_antennas(M: int, N: int, L: int) -> None:
    if M < 1:
        raise ConfigError("M must be positive")
    if N < 1:
        raise ConfigError("N must be positive")
    if L < 0:
        raise ConfigError("L must be non-negative")


def _check_traffic(p: sy.Rational, epsilon: sy.Rational, q: sy.Rational) -> None:
    if not 0 <= p <= 1:
        raise ConfigError(f"p out of range: {p}")
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon out of range: {epsilon}")
    if not 0 <= q <= 1:
        raise ConfigError(f"q out of range: {q}")


@dataclass(frozen=True)
class AntennaConfig:
    """Antennas per transmitter (M), per receiver (N) and at the relay (L)."""

    M: int
    N: int
    L: int

    def __post_init__(self) -> None:
        _check_antennas(self.M, self.N, self.L)

    def __str__(self) -> str:
        return f"({self.M},{self.N},{self.L})"


@dataclass(frozen=True)
class TrafficModel:
    """Activation probability ``p``, throttle slack ``epsilon``, throttle ``q``."""

    p: sy.Rational
    epsilon: sy.Rational = sy.Rational(1, 100)
    q: sy.Rational = sy.Integer(1)

    def __post_init__(self) -> None:
        _check_traffic(self.p, self.epsilon, self.q)

    @classmethod
    @beartype
    def create(cls, p: Number, epsilon: Number = "0.01", q: Number = 1) -> "TrafficModel":
        return cls(to_rational(p), to_rational(epsilon), to_rational(q))


class TrafficState(NamedTuple):
    s1: int
    s2: int

    def bit(self, user: int) -> int:
        return self.s1 if user == 1 else self.s2

    def __str__(self) -> str:
        return f"({self.s1},{self.s2})"


IDLE = TrafficState(0, 0)


@dataclass(frozen=True)
class TrafficTrace:
    states: Tuple[TrafficState, ...]

    def __post_init__(self) -> None:
        if len(self.states) == 0:
            raise ConfigError("a traffic trace needs at least one slot")
        for state in self.states:
            if state.s1 not in (0, 1) or state.s2 not in (0, 1):
                raise ConfigError(f"traffic bits must be 0 or 1, got {state}")

    def __len__(self) -> int:
        return len(self.states)

    @classmethod
    @beartype
    def from_pairs(cls, pairs: Iterable[Tuple[int, int]]) -> "TrafficTrace":
        return cls(tuple(TrafficState(s1, s2) for s1, s2 in pairs))


class RegimeClass(enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3PRIME = "C3prime"
    C3ONLY = "C3only"
    SISO = "SISO"
    NONE = "None"


class StreamClass(str, enum.Enum):
    DIRECT = "direct"
    RELAY_BOUND = "relay_bound"
    COOPERATION = "cooperation"
    SIDE_INFO = "side_info"


class SymbolId(NamedTuple):
    """
    A fresh symbol. ``seq`` counts the user's fresh symbols from 1 in emission
    order across all stream classes (relay-bound ones of a slot first), so
    ``SymbolId(1, 3, ...)`` is a_3 whatever its class; ``label`` adds the class.
    """

    user: int
    seq: int
    stream_class: StreamClass

    def __str__(self) -> str:
        return f"{'ab'[self.user - 1]}_{self.seq}"

    @property
    def label(self) -> str:
        return f"{self}({self.stream_class.value})"


@beartype
def classify(config: AntennaConfig) -> RegimeClass:
    M, N, L = config.M, config.N, config.L
    if M == 1 and N == 1 and L >= 1:
        return RegimeClass.SISO
    if 2 * M <= N:
        return RegimeClass.C1
    if M >= 2 * N + L and L >= 2 * N:
        return RegimeClass.C2
    if M >= 2 * N + L and 3 * L <= N:
        return RegimeClass.C3PRIME
    if M >= 2 * N and 3 * L <= N:
        return RegimeClass.C3ONLY
    return RegimeClass.NONE


@beartype
def validate_config(config: AntennaConfig, model: Optional[TrafficModel] = None) -> None:
    """Re-check both invariants; the dataclasses already enforce them on construction."""
    _check_antennas(config.M, config.N, config.L)
    if model is not None:
        _check_traffic(model.p, model.epsilon, model.q)


@dataclass(frozen=True)
class HalfPlane:
    """The constraint ``a*d1 + b*d2 <= c``."""

    a: sy.Rational
    b: sy.Rational
    c: sy.Rational

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0 or self.c < 0:
            raise ConfigError(f"coefficients must be non-negative: {self}")
        if self.a == 0 and self.b == 0:
            raise ConfigError("a half-plane needs a nonzero normal")

    def holds(self, d1: sy.Rational, d2: sy.Rational) -> bool:
        return bool(self.a * d1 + self.b * d2 <= self.c)


Point = Tuple[sy.Rational, sy.Rational]


@dataclass(frozen=True)
class DofRegion:
    """A bounded polygon in the non-negative quadrant given by half-planes."""

    constraints: Tuple[HalfPlane, ...]
    _vertices: Optional[FrozenSet[Point]] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not any(h.a > 0 for h in self.constraints) or not any(h.b > 0 for h in self.constraints):
            raise ConfigError("region is unbounded")

    @classmethod
    @beartype
    def from_caps(cls, individual: Number, total: Optional[Number] = None) -> "DofRegion":
        """Symmetric region ``d1, d2 <= individual`` (and ``d1 + d2 <= total``)."""
        one, zero = sy.Integer(1), sy.Integer(0)
        cap = to_rational(individual)
        halfplanes = [HalfPlane(one, zero, cap), HalfPlane(zero, one, cap)]
        if total is not None:
            halfplanes.append(HalfPlane(one, one, to_rational(total)))
        return cls(tuple(halfplanes))

    def contains_point(self, d1: Number, d2: Number) -> bool:
        x, y = to_rational(d1), to_rational(d2)
        if x < 0 or y < 0:
            return False
        return all(h.holds(x, y) for h in self.constraints)

    def vertices(self) -> FrozenSet[Point]:
        if self._vertices is not None:
            return self._vertices
        zero, one = sy.Integer(0), sy.Integer(1)
        # Axes d1 = 0 and d2 = 0 close the polygon.
        lines = [(h.a, h.b, h.c) for h in self.constraints] + [(one, zero, zero), (zero, one, zero)]
        found = set()
        for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            x = (c1 * b2 - c2 * b1) / det
            y = (a1 * c2 - a2 * c1) / det
            if self.contains_point(x, y):
                found.add((sy.Rational(x), sy.Rational(y)))
        vertices = frozenset(found)
        object.__setattr__(self, "_vertices", vertices)
        return vertices

    def is_subset(self, other: "DofRegion") -> bool:
        return all(other.contains_point(x, y) for x, y in self.vertices())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DofRegion):
            return NotImplemented
        return self.vertices() == other.vertices()

    def __hash__(self) -> int:
        return hash(self.vertices())

    def per_user_cap(self) -> sy.Rational:
        return max(x for x, _ in self.vertices())

    def sum_cap(self) -> sy.Rational:
        return max(x + y for x, y in self.vertices())

    def __str__(self) -> str:
        parts: List[str] = []
        for h in self.constraints:
            lhs = " + ".join(
                f"{'' if coef == 1 else coef}{name}"
                for coef, name in ((h.a, "d1"), (h.b, "d2"))
                if coef != 0
            )
            parts.append(f"{lhs} <= {h.c}")
        return "{" + "; ".join(parts) + "}"
