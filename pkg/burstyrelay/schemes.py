#!/usr/bin/env python3
"""
The four transmission schemes as slot-by-slot state machines.

Transmitters see their own current activity bit and the effective traffic
history through the previous slot; the relay additionally sees the current
effective state and its own past receptions. Everything here is deterministic
given the throttle and data streams held by each ``TransmitterState``.
"""
import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import sympy as sy
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Dict, List, Set, Tuple, Deque, Sequence, CoefficientMap
from burstyrelay.channel import Beam, BasisKind, PrecoderBank
from burstyrelay.core import (
    AntennaConfig,
    Number,
    RegimeClass,
    StreamClass,
    SymbolId,
    TrafficState,
    classify,
    to_rational,
)
from burstyrelay.errors import ConfigError, NoSchemeError


class SchemeKind(enum.Enum):
    NAIVE_C1 = "NaiveC1"
    COOP_NULL_C2 = "CoopNullC2"
    SIDE_INFO_C3 = "SideInfoC3"
    SISO_RELAY = "SisoRelay"


SCHEME_REGIMES: Dict[SchemeKind, RegimeClass] = {
    SchemeKind.NAIVE_C1: RegimeClass.C1,
    SchemeKind.COOP_NULL_C2: RegimeClass.C2,
    SchemeKind.SIDE_INFO_C3: RegimeClass.C3PRIME,
    SchemeKind.SISO_RELAY: RegimeClass.SISO,
}


@beartype
def scheme_for(config: AntennaConfig) -> SchemeKind:
    regime = classify(config)
    for kind, scheme_regime in SCHEME_REGIMES.items():
        if scheme_regime is regime:
            return kind
    raise NoSchemeError(f"no scheme for {config} (regime {regime.value})")


@beartype
def check_compatible(kind: SchemeKind, config: AntennaConfig) -> None:
    regime = classify(config)
    if SCHEME_REGIMES[kind] is not regime:
        raise NoSchemeError(f"scheme {kind.value} does not apply to {config} (regime {regime.value})")


def _unit_interval(name: str, value: sy.Rational) -> sy.Rational:
    if not 0 <= value <= 1:
        raise ConfigError(f"{name} out of range: {value}")
    return value


@beartype
def derive_throttle(kind: SchemeKind, p: Number, epsilon: Number, config: AntennaConfig) -> sy.Rational:
    """Throttle ``q``: 1 in low traffic, just inside the stability boundary otherwise."""
    p = _unit_interval("p", to_rational(p))
    epsilon = to_rational(epsilon)
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon out of range: {epsilon}")
    q: sy.Rational = sy.Integer(1)
    if kind is SchemeKind.COOP_NULL_C2:
        threshold = sy.Rational(config.N, config.N + config.L)
        if p >= threshold:
            q = (threshold - epsilon) / p
    elif kind is SchemeKind.SIDE_INFO_C3:
        if p >= sy.Rational(1, 2):
            q = (1 - p - epsilon) / p
    elif kind is SchemeKind.SISO_RELAY:
        if p >= sy.Rational(1, 2):
            q = (1 - epsilon) / (2 * p)
    return _unit_interval("q", sy.Rational(q))


@beartype
def scheme_rate(kind: SchemeKind, config: AntennaConfig, p: Number, epsilon: Number) -> sy.Rational:
    """Per-user DoF of the scheme at finite slack ``epsilon``."""
    p = to_rational(p)
    q = derive_throttle(kind, p, epsilon, config)
    M, N, L = config.M, config.N, config.L
    if kind is SchemeKind.NAIVE_C1:
        return sy.Rational(p * M)
    if kind is SchemeKind.COOP_NULL_C2:
        return sy.Rational(p * q * (N + L))
    if kind is SchemeKind.SIDE_INFO_C3:
        return sy.Rational(p * N + p * q * L)
    return sy.Rational(p * q)


@beartype
def stability_conditions(kind: SchemeKind, config: AntennaConfig, p: Number, q: Number) -> Dict[str, bool]:
    """Queue-drift inequalities with the effective rate in place of ``p``."""
    p, q = to_rational(p), to_rational(q)
    N, L = config.N, config.L
    rate = p * q
    if kind is SchemeKind.COOP_NULL_C2:
        return {
            "type1": bool(rate**2 * L < (1 - rate) * rate * N),
            "type2": bool(rate * (1 - rate) * L < (1 - rate) ** 2 * N),
        }
    if kind is SchemeKind.SIDE_INFO_C3:
        return {
            "relay": bool(rate * L < (1 - p) * L),
            "side_info": bool(rate * L < (1 - p) * p * (N - L)),
        }
    if kind is SchemeKind.SISO_RELAY:
        return {"siso": bool(rate**2 < (1 - rate) ** 2)}
    return {}


def _ratio(arrivals: sy.Expr, service: sy.Expr) -> sy.Expr:
    if service == 0:
        return sy.oo if arrivals > 0 else sy.Integer(0)
    return sy.Rational(arrivals / service)


@beartype
def queue_loads(kind: SchemeKind, config: AntennaConfig, p: Number, q: Number) -> Dict[str, sy.Expr]:
    """
    Arrival-to-service ratio of every queue in ``stability_conditions``. A
    queue is stable below 1, but close to 1 it can stay busy for longer than a
    stability window.
    """
    p, q = to_rational(p), to_rational(q)
    N, L = config.N, config.L
    rate = p * q
    if kind is SchemeKind.COOP_NULL_C2:
        return {
            "type1": _ratio(rate**2 * L, (1 - rate) * rate * N),
            "type2": _ratio(rate * (1 - rate) * L, (1 - rate) ** 2 * N),
        }
    if kind is SchemeKind.SIDE_INFO_C3:
        return {
            "relay": _ratio(rate * L, (1 - p) * L),
            "side_info": _ratio(rate * L, (1 - p) * p * (N - L)),
        }
    if kind is SchemeKind.SISO_RELAY:
        return {"siso": _ratio(rate**2, (1 - rate) ** 2)}
    return {}


class Emission(NamedTuple):
    """One basis vector scaled by a linear combination of symbols."""

    beam: Beam
    content: CoefficientMap
    stream_class: StreamClass
    value: int


class SlotRecord(NamedTuple):
    """What every node learns about a past slot through feedback."""

    state: TrafficState


FEEDBACK: Dict[TrafficState, SlotRecord] = {
    TrafficState(s1, s2): SlotRecord(TrafficState(s1, s2)) for s1 in (0, 1) for s2 in (0, 1)
}


class TxDecision(NamedTuple):
    emissions: Tuple[Emission, ...]
    active: bool
    relay_bound: Tuple[SymbolId, ...] = ()
    fresh: Tuple[SymbolId, ...] = ()


@dataclass
class TransmitterState:
    """
    Private state of transmitter ``user``: its message (symbol values drawn on
    demand from ``data_rng``), its throttle stream and the FIFOs it keeps from
    feedback.
    """

    user: int
    config: AntennaConfig
    bank: PrecoderBank
    q: float
    prime: int
    throttle_rng: np.random.Generator
    data_rng: np.random.Generator
    next_seq: int = 1
    values: Dict[SymbolId, int] = field(default_factory=dict)
    born: Dict[SymbolId, int] = field(default_factory=dict)
    pending_cooperation: Deque[SymbolId] = field(default_factory=Deque)
    pending_side_info: Deque[SymbolId] = field(default_factory=Deque)
    in_flight: int = 0
    last_relay_bound: Tuple[SymbolId, ...] = ()
    seen: int = 0

    @property
    def other(self) -> int:
        return 3 - self.user

    def fresh_symbols(self, count: int, stream_class: StreamClass, slot: int) -> List[SymbolId]:
        symbols = [SymbolId(self.user, self.next_seq + i, stream_class) for i in range(count)]
        self.next_seq += count
        if count > 0:
            draws = self.data_rng.integers(0, self.prime, size=count).tolist()
            for symbol, value in zip(symbols, draws):
                self.values[symbol] = int(value)
                self.born[symbol] = slot
        return symbols

    def held(self) -> Set[SymbolId]:
        """Own symbols that a later emission may still carry."""
        return set(self.pending_cooperation) | set(self.pending_side_info) | set(self.last_relay_bound)

    def forget(self, keep: Set[SymbolId]) -> int:
        """Drop values and birth slots of symbols outside ``keep``; return how many went."""
        stale = [symbol for symbol in self.values if symbol not in keep]
        for symbol in stale:
            del self.values[symbol]
            del self.born[symbol]
        return len(stale)


def _emit(tx: TransmitterState, beam: Beam, symbol: SymbolId, stream_class: StreamClass, sign: int = 1) -> Emission:
    coef = sign % tx.prime
    return Emission(beam, {symbol: coef}, stream_class, coef * tx.values[symbol] % tx.prime)


def _absorb_feedback(kind: SchemeKind, tx: TransmitterState, history: Sequence[SlotRecord]) -> None:
    assert len(history) - tx.seen <= 1, "transmitters must be driven every slot"
    for record in history[tx.seen :]:
        own, other = record.state.bit(tx.user), record.state.bit(tx.other)
        if kind is SchemeKind.COOP_NULL_C2 and own:
            if other:
                tx.pending_cooperation.extend(tx.last_relay_bound)
            else:
                for _ in range(tx.in_flight):
                    tx.pending_cooperation.popleft()
        if kind is SchemeKind.SIDE_INFO_C3 and own and not other:
            for _ in range(tx.in_flight):
                tx.pending_side_info.popleft()
        tx.in_flight = 0
        tx.last_relay_bound = ()
    tx.seen = len(history)


def tx_decision(kind: SchemeKind, tx: TransmitterState, own_bit: int, history: Sequence[SlotRecord]) -> TxDecision:
    """``tx_policy`` without the argument checks, for the slot loop."""
    _absorb_feedback(kind, tx, history)
    slot = len(history) + 1
    # One throttle draw per slot keeps the stream aligned across traces.
    admitted = bool(tx.throttle_rng.random() < tx.q)
    if not own_bit:
        return TxDecision((), False)

    N, L, M = tx.config.N, tx.config.L, tx.config.M
    emissions: List[Emission] = []

    if kind is SchemeKind.NAIVE_C1:
        symbols = tx.fresh_symbols(M, StreamClass.DIRECT, slot)
        beams = tx.bank.get(tx.user, BasisKind.ANTENNA)
        emissions = [_emit(tx, b, s, StreamClass.DIRECT) for b, s in zip(beams, symbols)]
        return TxDecision(tuple(emissions), True, (), tuple(symbols))

    if kind is SchemeKind.SISO_RELAY:
        if not admitted:
            return TxDecision((), False)
        symbols = tx.fresh_symbols(1, StreamClass.DIRECT, slot)
        beam = tx.bank.get(tx.user, BasisKind.ANTENNA)[0]
        return TxDecision((_emit(tx, beam, symbols[0], StreamClass.DIRECT),), True, (), tuple(symbols))

    if kind is SchemeKind.COOP_NULL_C2:
        if not admitted:
            return TxDecision((), False)
        relay_bound = tx.fresh_symbols(L, StreamClass.RELAY_BOUND, slot)
        direct = tx.fresh_symbols(N, StreamClass.DIRECT, slot)
        for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.RELAY), relay_bound):
            emissions.append(_emit(tx, beam, symbol, StreamClass.RELAY_BOUND))
        for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.OWN_RX), direct):
            emissions.append(_emit(tx, beam, symbol, StreamClass.DIRECT))
        cooperation = list(tx.pending_cooperation)[:N]
        for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.CROSS_RX), cooperation):
            emissions.append(_emit(tx, beam, symbol, StreamClass.COOPERATION, sign=-1))
        tx.in_flight = len(cooperation)
        tx.last_relay_bound = tuple(relay_bound)
        return TxDecision(tuple(emissions), True, tuple(relay_bound), tuple(relay_bound + direct))

    assert kind is SchemeKind.SIDE_INFO_C3
    relay_bound = tx.fresh_symbols(L, StreamClass.RELAY_BOUND, slot) if admitted else []
    direct = tx.fresh_symbols(N, StreamClass.DIRECT, slot)
    for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.RELAY), relay_bound):
        emissions.append(_emit(tx, beam, symbol, StreamClass.RELAY_BOUND))
    for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.OWN_RX), direct):
        emissions.append(_emit(tx, beam, symbol, StreamClass.DIRECT))
    tx.pending_side_info.extend(relay_bound)
    duplicates = list(tx.pending_side_info)[: N - L]
    for beam, symbol in zip(tx.bank.get(tx.user, BasisKind.CROSS_RX), duplicates):
        emissions.append(_emit(tx, beam, symbol, StreamClass.SIDE_INFO))
    tx.in_flight = len(duplicates)
    tx.last_relay_bound = tuple(relay_bound)
    return TxDecision(tuple(emissions), True, tuple(relay_bound), tuple(relay_bound + direct))


@beartype
def tx_policy(
    kind: SchemeKind,
    tx: TransmitterState,
    own_bit: int,
    history: Sequence[SlotRecord],
) -> TxDecision:
    """
    Emissions of one transmitter for the current slot. Only ``own_bit`` and the
    history through the previous slot are read.
    """
    return tx_decision(kind, tx, own_bit, history)


@dataclass
class RelayEntry:
    """Stored relay reception: one coefficient map and value per component."""

    content: Tuple[CoefficientMap, ...]
    values: Tuple[int, ...]
    users: frozenset
    pending: set
    stored_at: int = 0


@dataclass
class RelayQueues:
    type1: Dict[int, Deque[RelayEntry]] = field(default_factory=lambda: {1: Deque(), 2: Deque()})
    type2: Dict[int, Deque[RelayEntry]] = field(default_factory=lambda: {1: Deque(), 2: Deque()})
    undelivered: Dict[int, Deque[RelayEntry]] = field(default_factory=lambda: {1: Deque(), 2: Deque()})
    siso_pending: Deque[RelayEntry] = field(default_factory=Deque)
    type1_alive: int = 0

    def deliver(self, entry: RelayEntry, user: int) -> bool:
        """Mark ``entry`` delivered to ``user``; True once no user is waiting."""
        entry.pending.discard(user)
        return not entry.pending


def measure_queues(kind: SchemeKind, queues: RelayQueues, txs: Sequence[TransmitterState]) -> Dict[str, int]:
    """Length of every queue the stability verdict watches."""
    if kind is SchemeKind.COOP_NULL_C2:
        return {
            "type1": queues.type1_alive,
            "type2_user1": len(queues.type2[1]),
            "type2_user2": len(queues.type2[2]),
        }
    if kind is SchemeKind.SIDE_INFO_C3:
        lengths = {f"relay_user{k}": len(queues.undelivered[k]) for k in (1, 2)}
        lengths.update({f"side_info_user{tx.user}": len(tx.pending_side_info) for tx in txs})
        return lengths
    if kind is SchemeKind.SISO_RELAY:
        return {"siso": len(queues.siso_pending)}
    return {}


@beartype
def queue_lengths(kind: SchemeKind, queues: RelayQueues, txs: Sequence[TransmitterState]) -> Dict[str, int]:
    return measure_queues(kind, queues, txs)


def _relay_emission(beam: Beam, content: CoefficientMap, value: int, stream_class: StreamClass) -> Emission:
    return Emission(beam, dict(content), stream_class, value)


def _sum_maps(first: CoefficientMap, second: CoefficientMap, prime: int) -> CoefficientMap:
    total = dict(first)
    for var, coef in second.items():
        total[var] = (total.get(var, 0) + coef) % prime
    return {var: coef for var, coef in total.items() if coef != 0}


def relay_emissions(
    kind: SchemeKind,
    queues: RelayQueues,
    state: TrafficState,
    bank: PrecoderBank,
    config: AntennaConfig,
    prime: int,
    opportunistic: bool = False,
) -> Tuple[Emission, ...]:
    N, L = config.N, config.L
    emissions: List[Emission] = []

    if kind is SchemeKind.COOP_NULL_C2:
        to_rx = {1: bank.get("relay", BasisKind.TO_RX1), 2: bank.get("relay", BasisKind.TO_RX2)}
        for user in (1, 2):
            helper_active = state.bit(3 - user)
            if helper_active:
                # The partner cancels its share of these sums on its cross beams.
                matched = list(queues.type1[user])[:N]
                for beam, entry in zip(to_rx[user], matched):
                    emissions.append(_relay_emission(beam, entry.content[0], entry.values[0], StreamClass.COOPERATION))
                if not state.bit(user):
                    for _ in matched:
                        if queues.deliver(queues.type1[user].popleft(), user):
                            queues.type1_alive -= 1
                    if opportunistic:
                        for beam in to_rx[user][len(matched) :]:
                            if not queues.type2[user]:
                                break
                            entry = queues.type2[user].popleft()
                            emissions.append(_relay_emission(beam, entry.content[0], entry.values[0], StreamClass.RELAY_BOUND))
            elif state == TrafficState(0, 0):
                for beam in to_rx[user]:
                    if not queues.type2[user]:
                        break
                    entry = queues.type2[user].popleft()
                    emissions.append(_relay_emission(beam, entry.content[0], entry.values[0], StreamClass.RELAY_BOUND))
        return tuple(emissions)

    if kind is SchemeKind.SIDE_INFO_C3:
        antennas = bank.get("relay", BasisKind.ANTENNA)
        if state == TrafficState(1, 1):
            return ()
        heads = [queues.undelivered[k][0] if queues.undelivered[k] and not state.bit(k) else None for k in (1, 2)]
        first, second = heads
        if first is not None and second is not None and first is not second:
            for i, beam in enumerate(antennas):
                content = _sum_maps(first.content[i], second.content[i], prime)
                value = (first.values[i] + second.values[i]) % prime
                emissions.append(_relay_emission(beam, content, value, StreamClass.RELAY_BOUND))
        else:
            entry = first if first is not None else second
            if entry is not None:
                for i, beam in enumerate(antennas):
                    emissions.append(_relay_emission(beam, entry.content[i], entry.values[i], StreamClass.RELAY_BOUND))
        for k in (1, 2):
            if heads[k - 1] is not None:
                queues.deliver(queues.undelivered[k].popleft(), k)
        return tuple(emissions)

    if kind is SchemeKind.SISO_RELAY:
        if state != TrafficState(0, 0) or not queues.siso_pending:
            return ()
        entry = queues.siso_pending.popleft()
        antennas = bank.get("relay", BasisKind.ANTENNA)
        return tuple(
            _relay_emission(beam, entry.content[i], entry.values[i], StreamClass.RELAY_BOUND)
            for i, beam in enumerate(antennas)
        )

    return ()


@beartype
def relay_policy(
    kind: SchemeKind,
    queues: RelayQueues,
    state: TrafficState,
    bank: PrecoderBank,
    config: AntennaConfig,
    prime: int,
    opportunistic: bool = False,
) -> Tuple[Emission, ...]:
    """Relay emissions for the current effective state; pops delivered entries."""
    return relay_emissions(kind, queues, state, bank, config, prime, opportunistic)


def _users_in(content: Sequence[CoefficientMap]) -> frozenset:
    return frozenset(var.user for component in content for var in component)


def file_reception(
    kind: SchemeKind,
    queues: RelayQueues,
    state: TrafficState,
    content: Sequence[CoefficientMap],
    values: Sequence[int],
    slot: int,
) -> None:
    if not any(content):
        return
    if kind is SchemeKind.COOP_NULL_C2:
        for component, value in zip(content, values):
            if not component:
                continue
            users = _users_in([component])
            entry = RelayEntry((dict(component),), (value,), users, set(users), slot)
            if len(users) == 2:
                queues.type1[1].append(entry)
                queues.type1[2].append(entry)
                queues.type1_alive += 1
            else:
                (user,) = users
                queues.type2[user].append(entry)
        return

    users = _users_in(content)
    entry = RelayEntry(tuple(dict(c) for c in content), tuple(values), users, set(users), slot)
    if kind is SchemeKind.SIDE_INFO_C3:
        for user in sorted(users):
            queues.undelivered[user].append(entry)
    elif kind is SchemeKind.SISO_RELAY and state == TrafficState(1, 1):
        queues.siso_pending.append(entry)


@beartype
def relay_store(
    kind: SchemeKind,
    queues: RelayQueues,
    state: TrafficState,
    content: Sequence[CoefficientMap],
    values: Sequence[int],
    slot: int,
) -> None:
    """File the relay's reception of the current slot into its queues."""
    file_reception(kind, queues, state, content, values, slot)


def live_symbols(queues: RelayQueues, txs: Sequence[TransmitterState]) -> Set[SymbolId]:
    """Every symbol a later slot may still emit, from either transmitter or the relay."""
    live: Set[SymbolId] = set()
    for tx in txs:
        live |= tx.held()
    fifos = [queues.siso_pending]
    for group in (queues.type1, queues.type2, queues.undelivered):
        fifos.extend(group.values())
    for queue in fifos:
        for entry in queue:
            for component in entry.content:
                live.update(component)
    return live


@beartype
def new_transmitters(
    kind: SchemeKind,
    config: AntennaConfig,
    bank: PrecoderBank,
    q: Number,
    prime: int,
    throttle_rngs: Sequence[np.random.Generator],
    data_rngs: Sequence[np.random.Generator],
) -> Tuple[TransmitterState, TransmitterState]:
    q_value = float(to_rational(q))
    txs = tuple(
        TransmitterState(user, config, bank, q_value, prime, throttle_rngs[user - 1], data_rngs[user - 1])
        for user in (1, 2)
    )
    logger.debug(f"{kind.value} transmitters ready with q={q_value:.5f}")
    return txs  # type: ignore[return-value]
