#!/usr/bin/env python3
"""
A concrete noiseless linear-deterministic network: channel matrices drawn over
a prime field, zero-forcing precoders derived from them, and slot propagation.
"""
import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Any, Dict, List, Tuple, Optional, Mapping, Sequence
from burstyrelay.core import AntennaConfig, RegimeClass, validate_config
from burstyrelay.errors import DimensionError, GenericityError
from burstyrelay.field import (
    DEFAULT_PRIME,
    MAX_ATTEMPTS,
    Matrix,
    hstack,
    inverse,
    is_full_rank,
    matvec,
    null_space_basis,
    random_matrix_with_property,
    rank,
    stack,
)


class Node(enum.Enum):
    RX1 = "rx1"
    RX2 = "rx2"
    RELAY = "relay"


def receiver(user: int) -> Node:
    return Node.RX1 if user == 1 else Node.RX2


class BasisKind(enum.Enum):
    OWN_RX = "own_rx"
    RELAY = "relay"
    CROSS_RX = "cross_rx"
    TO_RX1 = "to_rx1"
    TO_RX2 = "to_rx2"
    ANTENNA = "antenna"


@dataclass(frozen=True)
class Beam:
    """A precoding vector together with its images at every receiving node."""

    kind: BasisKind
    index: int
    vector: Tuple[int, ...]
    images: Mapping[Node, Tuple[int, ...]]
    nulled_at: Tuple[Node, ...] = ()


@dataclass(frozen=True)
class NetworkInstance:
    config: AntennaConfig
    prime: int
    seed: int
    H_dd: Mapping[Tuple[int, int], Matrix]  # (j, i): transmitter i -> receiver j
    H_rd: Mapping[int, Matrix]  # i: transmitter i -> relay
    H_dr: Mapping[int, Matrix]  # j: relay -> receiver j

    def channel(self, source: str, target: Node) -> Matrix:
        """Matrix from ``source`` ("tx1", "tx2" or "relay") to ``target``."""
        if source == "relay":
            assert target is not Node.RELAY
            return self.H_dr[1 if target is Node.RX1 else 2]
        i = int(source[-1])
        if target is Node.RELAY:
            return self.H_rd[i]
        return self.H_dd[(1 if target is Node.RX1 else 2, i)]


@dataclass(frozen=True)
class PrecoderBank:
    """Beams per transmitting node (1, 2 and "relay") and kind."""

    beams: Mapping[Any, Mapping[BasisKind, Tuple[Beam, ...]]] = field(default_factory=dict)

    def get(self, node: Any, kind: BasisKind) -> Tuple[Beam, ...]:
        return self.beams.get(node, {}).get(kind, ())


class SlotTransmission(NamedTuple):
    active: Tuple[int, int]
    x1: Tuple[int, ...]
    x2: Tuple[int, ...]
    xR: Tuple[int, ...]


class SlotReception(NamedTuple):
    y1: Tuple[int, ...]
    y2: Tuple[int, ...]
    yR: Tuple[int, ...]

    def at(self, node: Node) -> Tuple[int, ...]:
        return {Node.RX1: self.y1, Node.RX2: self.y2, Node.RELAY: self.yR}[node]


def _draw_matrix(rows: int, cols: int, rng: np.random.Generator, prime: int) -> Matrix:
    if rows == 0 or cols == 0:
        return Matrix.zeros(rows, cols, prime)
    return random_matrix_with_property(rows, cols, is_full_rank, rng, prime)


@beartype
def draw_network(config: AntennaConfig, prime: int, seed: int, attempt: int = 0) -> NetworkInstance:
    rng = np.random.default_rng([seed, attempt])
    M, N, L = config.M, config.N, config.L
    H_dd = {(j, i): _draw_matrix(N, M, rng, prime) for j in (1, 2) for i in (1, 2)}
    H_rd = {i: _draw_matrix(L, M, rng, prime) for i in (1, 2)}
    H_dr = {j: _draw_matrix(N, L, rng, prime) for j in (1, 2)}
    return NetworkInstance(config, prime, seed, H_dd, H_rd, H_dr)


def _targets(source: Any) -> Tuple[Node, ...]:
    return (Node.RX1, Node.RX2) if source == "relay" else (Node.RX1, Node.RX2, Node.RELAY)


def _images(net: NetworkInstance, source: Any, vector: Sequence[int]) -> Dict[Node, Tuple[int, ...]]:
    name = "relay" if source == "relay" else f"tx{source}"
    return {
        node: tuple(matvec(net.channel(name, node).entries, vector, net.prime))
        for node in _targets(source)
    }


def _normalized_beams(
    net: NetworkInstance,
    source: Any,
    kind: BasisKind,
    nulled_at: Tuple[Node, ...],
    target: Node,
    count: int,
) -> Optional[Tuple[Beam, ...]]:
    """
    Beams nulled at ``nulled_at`` whose images at ``target`` are the first
    ``count`` unit vectors. None when the draw is not generic enough.
    """
    name = "relay" if source == "relay" else f"tx{source}"
    if count == 0:
        return ()
    null_stack = stack([net.channel(name, node) for node in nulled_at])
    null_vectors = null_space_basis(null_stack)
    if len(null_vectors) < count:
        return None
    Z = Matrix.from_columns(null_vectors[:count], null_stack.cols, net.prime)
    image = net.channel(name, target) @ Z
    if image.rows != count or rank(image) < count:
        return None
    V = Z @ inverse(image)
    return tuple(
        Beam(kind, index, tuple(vector), _images(net, source, vector), nulled_at)
        for index, vector in enumerate(V.columns())
    )


def _antenna_beams(net: NetworkInstance, source: Any, count: int) -> Tuple[Beam, ...]:
    beams = []
    for index in range(count):
        vector = tuple(int(i == index) for i in range(count))
        beams.append(Beam(BasisKind.ANTENNA, index, vector, _images(net, source, vector)))
    return tuple(beams)


def _check_dimensions(config: AntennaConfig, regime: RegimeClass) -> None:
    M, N, L = config.M, config.N, config.L
    if regime in (RegimeClass.C2, RegimeClass.C3PRIME) and M - (N + L) < N:
        raise GenericityError(f"genericity failure: {config} leaves {M - N - L} < N dimensions for own/cross bases")
    if regime in (RegimeClass.C2, RegimeClass.C3PRIME) and M - 2 * N < L:
        raise GenericityError(f"genericity failure: {config} leaves {M - 2 * N} < L dimensions for the relay basis")
    if regime is RegimeClass.C2 and L - N < N:
        raise GenericityError(f"genericity failure: {config} leaves {L - N} < N dimensions for relay beams")
    if regime is RegimeClass.C1 and N < 2 * M:
        raise GenericityError(f"genericity failure: {config} cannot separate {2 * M} streams on {N} antennas")
    if regime is RegimeClass.SISO and (M, N) != (1, 1) or regime is RegimeClass.SISO and L < 1:
        raise GenericityError(f"genericity failure: {config} is not a SISO shape with a relay")
    if regime in (RegimeClass.C3ONLY, RegimeClass.NONE):
        raise GenericityError(f"genericity failure: no precoders exist for regime {regime.value}")


def _build_bank(net: NetworkInstance, regime: RegimeClass) -> Optional[PrecoderBank]:
    M, N, L = net.config.M, net.config.N, net.config.L
    beams: Dict[Any, Dict[BasisKind, Tuple[Beam, ...]]] = {}
    if regime in (RegimeClass.C2, RegimeClass.C3PRIME):
        for k in (1, 2):
            own, other = (Node.RX1, Node.RX2) if k == 1 else (Node.RX2, Node.RX1)
            own_rx = _normalized_beams(net, k, BasisKind.OWN_RX, (other, Node.RELAY), own, N)
            relay = _normalized_beams(net, k, BasisKind.RELAY, (Node.RX1, Node.RX2), Node.RELAY, L)
            cross = _normalized_beams(net, k, BasisKind.CROSS_RX, (own, Node.RELAY), other, N)
            if own_rx is None or relay is None or cross is None:
                return None
            beams[k] = {BasisKind.OWN_RX: own_rx, BasisKind.RELAY: relay, BasisKind.CROSS_RX: cross}
    if regime is RegimeClass.C2:
        to_rx1 = _normalized_beams(net, "relay", BasisKind.TO_RX1, (Node.RX2,), Node.RX1, N)
        to_rx2 = _normalized_beams(net, "relay", BasisKind.TO_RX2, (Node.RX1,), Node.RX2, N)
        if to_rx1 is None or to_rx2 is None:
            return None
        beams["relay"] = {BasisKind.TO_RX1: to_rx1, BasisKind.TO_RX2: to_rx2}
    if regime is RegimeClass.C3PRIME:
        beams["relay"] = {BasisKind.ANTENNA: _antenna_beams(net, "relay", L)}
        # Side information on antennas 1..N-L must stay separable from the broadcast.
        side = Matrix.from_columns([[int(i == r) for i in range(N)] for r in range(N - L)], N, net.prime)
        for j in (1, 2):
            if rank(hstack([side, net.H_dr[j]])) < N:
                return None
    if regime in (RegimeClass.C1, RegimeClass.SISO):
        for k in (1, 2):
            beams[k] = {BasisKind.ANTENNA: _antenna_beams(net, k, M)}
    if regime is RegimeClass.C1:
        for j in (1, 2):
            if rank(hstack([net.H_dd[(j, 1)], net.H_dd[(j, 2)]])) < 2 * M:
                return None
    if regime is RegimeClass.SISO:
        beams["relay"] = {BasisKind.ANTENNA: _antenna_beams(net, "relay", L)}
        for j in (1, 2):
            via_relay = [(net.H_dr[j] @ net.H_rd[i]).entries[0][0] for i in (1, 2)]
            direct = [net.H_dd[(j, i)].entries[0][0] for i in (1, 2)]
            if (direct[0] * via_relay[1] - direct[1] * via_relay[0]) % net.prime == 0:
                return None
    return PrecoderBank(beams)


@beartype
def zero_forcing_residuals(bank: PrecoderBank) -> int:
    """Number of nonzero components that should have been nulled."""
    residuals = 0
    for kinds in bank.beams.values():
        for beams in kinds.values():
            for beam in beams:
                for node in beam.nulled_at:
                    residuals += sum(1 for x in beam.images[node] if x != 0)
    return residuals


@beartype
def instantiate(
    config: AntennaConfig,
    regime: RegimeClass,
    prime: int = DEFAULT_PRIME,
    seed: int = 0,
    attempts: int = MAX_ATTEMPTS,
) -> Tuple[NetworkInstance, PrecoderBank]:
    validate_config(config)
    _check_dimensions(config, regime)
    for attempt in range(attempts):
        net = draw_network(config, prime, seed, attempt)
        bank = _build_bank(net, regime)
        if bank is None:
            logger.debug(f"Draw {attempt} for {config} is not generic, redrawing")
            continue
        if zero_forcing_residuals(bank) != 0:
            raise GenericityError("zero-forcing beams leak into a nulled node")
        logger.debug(f"Instantiated {config} ({regime.value}) over GF({prime}) after {attempt + 1} draws")
        return net, bank
    raise GenericityError(f"genericity failure: {config} ({regime.value}) after {attempts} draws")


# Per receiving node: (index into (x1, x2, xR), channel rows) for every transmitter it hears.
SignalPaths = Dict[Node, Tuple[Tuple[int, Tuple[Tuple[int, ...], ...]], ...]]


@beartype
def signal_paths(net: NetworkInstance) -> SignalPaths:
    paths: SignalPaths = {}
    for node in Node:
        sources = [(0, net.channel("tx1", node)), (1, net.channel("tx2", node))]
        if node is not Node.RELAY:
            sources.append((2, net.channel("relay", node)))
        paths[node] = tuple((index, matrix.entries) for index, matrix in sources)
    return paths


def _receive(links: Sequence[Tuple[int, Any]], signals: Sequence[Any], size: int, prime: int) -> Tuple[int, ...]:
    total = [0] * size
    for index, rows in links:
        x = signals[index]
        if x is None:
            continue
        for r, row in enumerate(rows):
            total[r] += sum(a * v for a, v in zip(row, x) if v)
    return tuple(v % prime for v in total)


def receive_slot(paths: SignalPaths, tx: SlotTransmission, N: int, L: int, prime: int) -> SlotReception:
    """``propagate`` over precomputed paths, without the shape checks."""
    signals = (
        tx.x1 if tx.active[0] and any(tx.x1) else None,
        tx.x2 if tx.active[1] and any(tx.x2) else None,
        tx.xR if any(tx.xR) else None,
    )
    return SlotReception(
        _receive(paths[Node.RX1], signals, N, prime),
        _receive(paths[Node.RX2], signals, N, prime),
        _receive(paths[Node.RELAY], signals, L, prime),
    )


@beartype
def propagate(net: NetworkInstance, tx: SlotTransmission) -> SlotReception:
    M, N, L = net.config.M, net.config.N, net.config.L
    if len(tx.x1) != M or len(tx.x2) != M or len(tx.xR) != L:
        raise DimensionError(f"transmission shapes {len(tx.x1)},{len(tx.x2)},{len(tx.xR)} do not match {net.config}")
    return receive_slot(signal_paths(net), tx, N, L, net.prime)


@beartype
def dump_channels(net: NetworkInstance) -> str:
    doc = {
        "M": net.config.M,
        "N": net.config.N,
        "L": net.config.L,
        "prime": net.prime,
        "seed": net.seed,
        "H_dd": {f"{j}{i}": [list(r) for r in m.entries] for (j, i), m in net.H_dd.items()},
        "H_rd": {str(i): [list(r) for r in m.entries] for i, m in net.H_rd.items()},
        "H_dr": {str(j): [list(r) for r in m.entries] for j, m in net.H_dr.items()},
    }
    return json.dumps(doc)


@beartype
def load_channels(text: str) -> NetworkInstance:
    doc = json.loads(text)
    config = AntennaConfig(doc["M"], doc["N"], doc["L"])
    prime = doc["prime"]

    def matrix(rows: List[List[int]], n_rows: int, n_cols: int) -> Matrix:
        if n_rows == 0 or n_cols == 0:
            return Matrix.zeros(n_rows, n_cols, prime)
        return Matrix.from_rows(rows, prime)

    M, N, L = config.M, config.N, config.L
    H_dd = {(int(key[0]), int(key[1])): matrix(rows, N, M) for key, rows in doc["H_dd"].items()}
    H_rd = {int(key): matrix(rows, L, M) for key, rows in doc["H_rd"].items()}
    H_dr = {int(key): matrix(rows, N, L) for key, rows in doc["H_dr"].items()}
    return NetworkInstance(config, prime, doc["seed"], H_dd, H_rd, H_dr)
