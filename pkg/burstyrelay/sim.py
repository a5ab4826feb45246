#!/usr/bin/env python3
"""
The discrete-time loop. Each slot draws (or reads) the traffic state, lets
both transmitters and the relay choose their emissions, pushes the signals
through the channel, and hands every receiver its equations.
"""
import dataclasses
import functools
import json
import math
import concurrent.futures
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import sympy as sy
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Any, Dict, List, Set, Tuple, Counter, Optional, Sequence, CoefficientMap
from burstyrelay.channel import (
    Node,
    SlotTransmission,
    instantiate,
    receive_slot,
    receiver,
    signal_paths,
    zero_forcing_residuals,
)
from burstyrelay.core import (
    IDLE,
    AntennaConfig,
    Number,
    SymbolId,
    TrafficModel,
    TrafficState,
    TrafficTrace,
    validate_config,
)
from burstyrelay.errors import ConfigError, ExactnessError
from burstyrelay.field import DEFAULT_PRIME
from burstyrelay.ledger import ReceiverLedger
from burstyrelay.schemes import (
    FEEDBACK,
    SCHEME_REGIMES,
    Emission,
    RelayQueues,
    SchemeKind,
    SlotRecord,
    TransmitterState,
    check_compatible,
    derive_throttle,
    file_reception,
    live_symbols,
    measure_queues,
    new_transmitters,
    queue_loads,
    relay_emissions,
    scheme_for,
    tx_decision,
)

DEFAULT_SLOTS = 200000
DEFAULT_DRAIN = 5000
DEFAULT_WARMUP = 10000
DEFAULT_WINDOW = 10000

# Decoded values and birth slots of dead symbols are dropped this often.
PRUNE_INTERVAL = 1000
# Above this arrival-to-service ratio a queue may stay busy through a whole window.
MARGINAL_LOAD = sy.Rational(9, 10)


@dataclass(frozen=True)
class SimConfig:
    """
    One run. ``model.q`` is rewritten on construction to the throttle the run
    uses: the scheme's derived throttle, or 1 with ``throttle=False``.
    """

    config: AntennaConfig
    model: TrafficModel
    scheme: SchemeKind
    slots: int = DEFAULT_SLOTS
    drain: int = DEFAULT_DRAIN
    prime: int = DEFAULT_PRIME
    seed: int = 0
    forced_trace: Optional[TrafficTrace] = None
    throttle: bool = True
    opportunistic: bool = False
    record_log: bool = False
    warmup: int = DEFAULT_WARMUP
    window: int = DEFAULT_WINDOW

    def __post_init__(self) -> None:
        validate_config(self.config, self.model)
        if self.slots < 1:
            raise ConfigError(f"slots must be positive, got {self.slots}")
        if self.drain < 0:
            raise ConfigError(f"drain must be non-negative, got {self.drain}")
        if self.window < 1 or self.warmup < 0:
            raise ConfigError("stability windows need window >= 1 and warmup >= 0")
        if self.forced_trace is not None and len(self.forced_trace) != self.slots:
            raise ConfigError(f"forced trace has {len(self.forced_trace)} slots, expected {self.slots}")
        q = sy.Integer(1)
        if self.throttle:
            q = derive_throttle(self.scheme, self.model.p, self.model.epsilon, self.config)
        if q != self.model.q:
            object.__setattr__(self, "model", dataclasses.replace(self.model, q=q))

    def throttle_q(self) -> sy.Rational:
        return self.model.q


@beartype
def make_sim(config: AntennaConfig, p: Number, epsilon: Number = "0.01", **overrides: Any) -> SimConfig:
    """SimConfig with the scheme of the configuration's regime."""
    scheme = overrides.pop("scheme", None) or scheme_for(config)
    return SimConfig(config, TrafficModel.create(p, epsilon), scheme, **overrides)


class DecodeEvent(NamedTuple):
    slot: int
    node: str
    symbol: str
    own: bool
    stream_class: str


@dataclass
class Metrics:
    slots: int
    emitted_fresh: Dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0})
    decoded_fresh: Dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0})
    queue_max: Dict[str, int] = field(default_factory=dict)
    zero_returns: Dict[str, Dict[int, int]] = field(default_factory=dict)
    windows: int = 0
    latency: Counter = field(default_factory=Counter)
    decode_events: List[DecodeEvent] = field(default_factory=list)
    slot_log: List[Dict[str, Any]] = field(default_factory=list)
    value_mismatches: int = 0
    zero_forcing_residuals: int = 0
    interference_violations: int = 0
    verdict: str = "stable"
    first_violation: Optional[Tuple[str, int]] = None
    # Per user: where the symbols emitted in the horizon ended up.
    accounting: Dict[int, Dict[str, int]] = field(default_factory=dict)
    pruned: int = 0

    @property
    def empirical_dof(self) -> Dict[int, float]:
        return {user: count / self.slots for user, count in self.decoded_fresh.items()}

    @property
    def sum_dof(self) -> float:
        return sum(self.empirical_dof.values())

    @property
    def undelivered(self) -> Dict[int, int]:
        return {user: self.emitted_fresh[user] - self.decoded_fresh[user] for user in (1, 2)}

    def events_at(self, slot: int, node: str) -> List[str]:
        return [e.symbol for e in self.decode_events if e.slot == slot and e.node == node]


def _generate_trace(sim: SimConfig, rng: np.random.Generator) -> List[TrafficState]:
    if sim.forced_trace is not None:
        return list(sim.forced_trace.states)
    p = float(sim.model.p)
    draws = rng.random((sim.slots, 2)) < p
    states = {(s1, s2): TrafficState(s1, s2) for s1 in (0, 1) for s2 in (0, 1)}
    return [states[(int(a), int(b))] for a, b in draws]


def _compose(emissions: Sequence[Emission], size: int, prime: int) -> Tuple[int, ...]:
    if not emissions:
        return (0,) * size
    x = [0] * size
    for emission in emissions:
        for i, component in enumerate(emission.beam.vector):
            if component:
                x[i] += component * emission.value
    return tuple(v % prime for v in x)


def _coefficient_maps(emissions: Sequence[Emission], node: Node, size: int, prime: int) -> List[CoefficientMap]:
    maps: List[CoefficientMap] = [{} for _ in range(size)]
    for emission in emissions:
        image = emission.beam.images.get(node)
        if image is None:
            continue
        for r, gain in enumerate(image):
            if gain == 0:
                continue
            row = maps[r]
            for symbol, coef in emission.content.items():
                row[symbol] = (row.get(symbol, 0) + gain * coef) % prime
    return [{s: c for s, c in row.items() if c != 0} for row in maps]


def _describe(emissions: Sequence[Emission]) -> List[Dict[str, Any]]:
    return [
        {
            "basis": e.beam.kind.value,
            "index": e.beam.index,
            "class": e.stream_class.value,
            "content": {str(s): c for s, c in e.content.items()},
        }
        for e in emissions
    ]


def _track_queues(metrics: Metrics, lengths: Dict[str, int], slot: int, sim: SimConfig) -> None:
    for name, length in lengths.items():
        metrics.queue_max[name] = max(metrics.queue_max.get(name, 0), length)
        if slot > sim.warmup and length == 0:
            window = (slot - sim.warmup - 1) // sim.window
            metrics.zero_returns.setdefault(name, {}).setdefault(window, slot)


def _prune(txs: Sequence[TransmitterState], queues: RelayQueues, ledgers: Dict[int, ReceiverLedger]) -> int:
    """
    Forget decoded values no later equation can carry, and symbol values no
    receiver can still decode.
    """
    live = live_symbols(queues, txs)
    pruned = sum(ledger.forget(live) for ledger in ledgers.values())
    keep = set(live)
    for ledger in ledgers.values():
        keep |= ledger.unknowns()
    for tx in txs:
        pruned += tx.forget(keep)
    return pruned


def _account(
    metrics: Metrics,
    outstanding: Dict[int, Set[SymbolId]],
    queues: RelayQueues,
    txs: Sequence[TransmitterState],
    ledgers: Dict[int, ReceiverLedger],
) -> None:
    live = live_symbols(queues, txs)
    for user, missing in outstanding.items():
        queued = missing & live
        in_flight = (missing - live) & ledgers[user].unknowns()
        metrics.accounting[user] = {
            "emitted": metrics.emitted_fresh[user],
            "decoded": metrics.decoded_fresh[user],
            "queued": len(queued),
            "in_flight": len(in_flight),
            "lost": len(missing) - len(queued) - len(in_flight),
        }


def _decode_note(node: Node, slot: int, fresh: Sequence[Tuple[SymbolId, int]]) -> str:
    return f"{node.value} slot {slot}: decoded {', '.join(symbol.label for symbol, _ in fresh)}"


def _warn_on_marginal_load(sim: SimConfig) -> None:
    loads = queue_loads(sim.scheme, sim.config, sim.model.p, sim.model.q)
    for name, load in sorted(loads.items()):
        if load >= MARGINAL_LOAD:
            logger.warning(
                f"Queue {name} runs at load {float(load):.3f}; "
                f"{sim.window}-slot windows may miss its returns to zero"
            )


@beartype
def run(sim: SimConfig) -> Metrics:
    kind = sim.scheme
    check_compatible(kind, sim.config)
    q = sim.throttle_q()
    net, bank = instantiate(sim.config, SCHEME_REGIMES[kind], sim.prime, sim.seed)
    M, N, L = sim.config.M, sim.config.N, sim.config.L
    prime = sim.prime
    paths = signal_paths(net)

    traffic_seq, throttle1, throttle2, data1, data2 = np.random.SeedSequence(sim.seed).spawn(5)
    trace = _generate_trace(sim, np.random.default_rng(traffic_seq))
    txs = new_transmitters(
        kind,
        sim.config,
        bank,
        q,
        prime,
        [np.random.default_rng(throttle1), np.random.default_rng(throttle2)],
        [np.random.default_rng(data1), np.random.default_rng(data2)],
    )
    queues = RelayQueues()
    ledgers = {user: ReceiverLedger(prime, receiver(user).value) for user in (1, 2)}
    history: List[SlotRecord] = []
    outstanding: Dict[int, Set[SymbolId]] = {1: set(), 2: set()}
    metrics = Metrics(sim.slots, zero_forcing_residuals=zero_forcing_residuals(bank))
    if metrics.zero_forcing_residuals:
        raise ExactnessError(f"{metrics.zero_forcing_residuals} zero-forced components are nonzero")
    logger.info(f"Running {kind.value} on {sim.config} for {sim.slots}+{sim.drain} slots, q={float(q):.5f}")
    _warn_on_marginal_load(sim)

    total = sim.slots + sim.drain
    for index in range(total):
        slot = index + 1
        in_horizon = index < sim.slots
        state = trace[index] if in_horizon else IDLE
        decisions = [tx_decision(kind, tx, state.bit(tx.user), history) for tx in txs]
        effective = TrafficState(int(decisions[0].active), int(decisions[1].active))
        relay_out = relay_emissions(kind, queues, effective, bank, sim.config, prime, sim.opportunistic)
        emissions = decisions[0].emissions + decisions[1].emissions + relay_out

        if in_horizon:
            for decision in decisions:
                for symbol in decision.fresh:
                    metrics.emitted_fresh[symbol.user] += 1
                    outstanding[symbol.user].add(symbol)

        decoded_names: Dict[str, List[str]] = {}
        if emissions:
            transmission = SlotTransmission(
                (effective.s1, effective.s2),
                _compose(decisions[0].emissions, M, prime),
                _compose(decisions[1].emissions, M, prime),
                _compose(relay_out, L, prime),
            )
            reception = receive_slot(paths, transmission, N, L, prime)
            for user, ledger in ledgers.items():
                node = receiver(user)
                maps = _coefficient_maps(emissions, node, N, prime)
                if kind is SchemeKind.COOP_NULL_C2 and any(s.user != user for row in maps for s in row):
                    metrics.interference_violations += 1
                    raise ExactnessError(f"{node.value} received interference at slot {slot}")
                fresh = ledger.ingest(maps, reception.at(node), slot)
                for symbol, value in fresh:
                    if txs[symbol.user - 1].values[symbol] != value:
                        metrics.value_mismatches += 1
                        raise ExactnessError(f"{node.value} decoded {symbol.label} = {value} at slot {slot}")
                    own = symbol.user == user
                    if own:
                        born = txs[user - 1].born[symbol]
                        metrics.latency[slot - born] += 1
                        if born <= sim.slots:
                            metrics.decoded_fresh[user] += 1
                            outstanding[user].discard(symbol)
                    if sim.record_log:
                        metrics.decode_events.append(
                            DecodeEvent(slot, node.value, str(symbol), own, symbol.stream_class.value)
                        )
                if fresh:
                    logger.opt(lazy=True).debug("{}", functools.partial(_decode_note, node, slot, fresh))
                decoded_names[node.value] = [str(symbol) for symbol, _ in fresh]
            relay_maps = _coefficient_maps(emissions, Node.RELAY, L, prime)
            file_reception(kind, queues, effective, relay_maps, reception.yR, slot)
        else:
            decoded_names = {Node.RX1.value: [], Node.RX2.value: []}

        lengths = measure_queues(kind, queues, txs)
        if in_horizon:
            _track_queues(metrics, lengths, slot, sim)
        history.append(FEEDBACK[effective])
        if slot % PRUNE_INTERVAL == 0:
            metrics.pruned += _prune(txs, queues, ledgers)

        if sim.record_log:
            metrics.slot_log.append(
                {
                    "slot": slot,
                    "state": [effective.s1, effective.s2],
                    "emissions": {
                        "tx1": _describe(decisions[0].emissions),
                        "tx2": _describe(decisions[1].emissions),
                        "relay": _describe(relay_out),
                    },
                    "decoded": decoded_names,
                    "queues": lengths,
                }
            )

    _account(metrics, outstanding, queues, txs, ledgers)
    metrics.windows = max(0, (sim.slots - sim.warmup) // sim.window)
    verdict, violation = stability_report(metrics)
    metrics.verdict, metrics.first_violation = verdict, violation
    logger.info(
        f"{kind.value} on {sim.config}: dof {metrics.empirical_dof[1]:.4f}/{metrics.empirical_dof[2]:.4f}, "
        f"undelivered {metrics.undelivered}, {verdict}"
    )
    if verdict == "unstable":
        logger.warning(f"Queue {violation[0]} never emptied in window {violation[1]}")
    return metrics


@beartype
def stability_report(metrics: Metrics) -> Tuple[str, Optional[Tuple[str, int]]]:
    """
    "stable" iff every queue hits zero in every window after warm-up;
    otherwise "unstable" with the first (queue, window) that failed.
    """
    first: Optional[Tuple[str, int]] = None
    for name in sorted(metrics.queue_max):
        hits = metrics.zero_returns.get(name, {})
        for window in range(metrics.windows):
            if window not in hits:
                if first is None or window < first[1]:
                    first = (name, window)
                break
    return ("stable", None) if first is None else ("unstable", first)


@beartype
def run_forced(
    config: AntennaConfig,
    scheme: SchemeKind,
    trace: TrafficTrace,
    drain: int = 0,
    prime: int = DEFAULT_PRIME,
    seed: int = 0,
) -> Metrics:
    """Unthrottled run over a fixed trace, keeping the decode events and slot log."""
    sim = SimConfig(
        config,
        TrafficModel.create(0),
        scheme,
        slots=len(trace),
        drain=drain,
        prime=prime,
        seed=seed,
        forced_trace=trace,
        throttle=False,
        record_log=True,
    )
    return run(sim)


@dataclass(frozen=True)
class DofEstimate:
    mean: Dict[int, float]
    stderr: Dict[int, float]
    verdicts: Tuple[str, ...]

    @property
    def sum_mean(self) -> float:
        return self.mean[1] + self.mean[2]


@beartype
def estimate_dof(sim: SimConfig, repetitions: int, workers: int = 1) -> DofEstimate:
    if repetitions < 1:
        raise ConfigError(f"repetitions must be positive, got {repetitions}")
    seeds = [int(s) for s in np.random.SeedSequence(sim.seed).generate_state(repetitions)]
    sims = [dataclasses.replace(sim, seed=seed) for seed in seeds]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, sims))
    else:
        results = [run(s) for s in sims]
    mean: Dict[int, float] = {}
    stderr: Dict[int, float] = {}
    for user in (1, 2):
        samples = np.array([m.empirical_dof[user] for m in results])
        mean[user] = float(samples.mean())
        stderr[user] = float(samples.std(ddof=1) / math.sqrt(repetitions)) if repetitions > 1 else 0.0
    return DofEstimate(mean, stderr, tuple(m.verdict for m in results))


@beartype
def read_trace(path: str) -> TrafficTrace:
    """Traffic trace from a text file of ``s1 s2`` lines; blank lines and # comments skipped."""
    pairs: List[Tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            fields = text.split()
            if len(fields) != 2 or not all(f in ("0", "1") for f in fields):
                raise ConfigError(f"{path}:{number}: expected two bits, got {line.strip()!r}")
            pairs.append((int(fields[0]), int(fields[1])))
    return TrafficTrace.from_pairs(pairs)


@beartype
def write_slot_log(metrics: Metrics, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in metrics.slot_log:
            handle.write(json.dumps(record) + "\n")
