#!/usr/bin/env python3
import numpy as np
import pytest
import sympy as sy

from burstyrelay.channel import BasisKind, instantiate
from burstyrelay.core import AntennaConfig, RegimeClass, StreamClass, SymbolId, TrafficState
from burstyrelay.errors import ConfigError, NoSchemeError
from burstyrelay.schemes import (
    RelayQueues,
    SchemeKind,
    SlotRecord,
    check_compatible,
    derive_throttle,
    live_symbols,
    new_transmitters,
    queue_loads,
    queue_lengths,
    relay_policy,
    relay_store,
    scheme_for,
    scheme_rate,
    stability_conditions,
    tx_policy,
)

P = 10007
C2 = AntennaConfig(4, 1, 2)
C3 = AntennaConfig(7, 3, 1)
SISO = AntennaConfig(1, 1, 2)


def transmitters(kind: SchemeKind, config: AntennaConfig, regime: RegimeClass, q: str = "1") -> tuple:
    _, bank = instantiate(config, regime, P, seed=0)
    rngs = [np.random.default_rng(i) for i in range(4)]
    return bank, new_transmitters(kind, config, bank, q, P, rngs[:2], rngs[2:])


def test_scheme_selection() -> None:
    assert scheme_for(C2) is SchemeKind.COOP_NULL_C2
    assert scheme_for(C3) is SchemeKind.SIDE_INFO_C3
    assert scheme_for(SISO) is SchemeKind.SISO_RELAY
    assert scheme_for(AntennaConfig(1, 2, 0)) is SchemeKind.NAIVE_C1
    with pytest.raises(NoSchemeError):
        scheme_for(AntennaConfig(4, 2, 1))
    with pytest.raises(NoSchemeError):
        check_compatible(SchemeKind.COOP_NULL_C2, C3)


def test_throttle_values() -> None:
    assert derive_throttle(SchemeKind.COOP_NULL_C2, "0.2", "0.01", C2) == 1
    assert derive_throttle(SchemeKind.COOP_NULL_C2, "0.6", "0.01", C2) == sy.Rational(97, 180)
    assert derive_throttle(SchemeKind.SIDE_INFO_C3, "0.75", "0.01", C3) == sy.Rational(8, 25)
    assert derive_throttle(SchemeKind.SISO_RELAY, "0.7", "0.02", SISO) == sy.Rational(7, 10)
    assert derive_throttle(SchemeKind.NAIVE_C1, "0.9", "0.01", AntennaConfig(1, 2, 0)) == 1


def test_throttle_rejects_impossible_slack() -> None:
    with pytest.raises(ConfigError):
        derive_throttle(SchemeKind.SIDE_INFO_C3, 1, "0.01", C3)
    with pytest.raises(ConfigError):
        derive_throttle(SchemeKind.COOP_NULL_C2, "0.5", 0, C2)


def test_scheme_rates() -> None:
    assert scheme_rate(SchemeKind.COOP_NULL_C2, C2, "0.6", "0.01") == sy.Rational(97, 100)
    assert scheme_rate(SchemeKind.SIDE_INFO_C3, C3, "0.75", "0.01") == sy.Rational(249, 100)
    assert scheme_rate(SchemeKind.SISO_RELAY, SISO, "0.7", "0.02") == sy.Rational(49, 100)
    assert scheme_rate(SchemeKind.COOP_NULL_C2, C2, "0.2", "0.01") == sy.Rational(3, 5)


def test_stability_conditions() -> None:
    assert all(stability_conditions(SchemeKind.COOP_NULL_C2, C2, "0.2", 1).values())
    assert not stability_conditions(SchemeKind.COOP_NULL_C2, C2, "0.5", 1)["type1"]
    assert all(stability_conditions(SchemeKind.COOP_NULL_C2, C2, "0.6", sy.Rational(97, 180)).values())
    assert all(stability_conditions(SchemeKind.SIDE_INFO_C3, C3, "0.75", sy.Rational(8, 25)).values())
    assert all(stability_conditions(SchemeKind.SISO_RELAY, SISO, "0.7", "0.7").values())
    assert stability_conditions(SchemeKind.NAIVE_C1, AntennaConfig(1, 2, 0), "0.5", 1) == {}


def test_cooperative_emissions_number_relay_bound_symbols_first() -> None:
    _, (tx1, _) = transmitters(SchemeKind.COOP_NULL_C2, C2, RegimeClass.C2)
    decision = tx_policy(SchemeKind.COOP_NULL_C2, tx1, 1, [])
    assert [str(s) for s in decision.relay_bound] == ["a_1", "a_2"]
    assert [str(s) for s in decision.fresh] == ["a_1", "a_2", "a_3"]
    assert [e.beam.kind for e in decision.emissions] == [BasisKind.RELAY, BasisKind.RELAY, BasisKind.OWN_RX]


def test_cooperation_follows_a_busy_slot() -> None:
    _, (tx1, _) = transmitters(SchemeKind.COOP_NULL_C2, C2, RegimeClass.C2)
    history = []
    tx_policy(SchemeKind.COOP_NULL_C2, tx1, 1, history)
    history.append(SlotRecord(TrafficState(1, 1)))
    decision = tx_policy(SchemeKind.COOP_NULL_C2, tx1, 1, history)
    cooperation = [e for e in decision.emissions if e.stream_class is StreamClass.COOPERATION]
    assert len(cooperation) == 1
    [(symbol, coef)] = list(cooperation[0].content.items())
    assert str(symbol) == "a_1"
    assert coef == P - 1
    assert cooperation[0].beam.kind is BasisKind.CROSS_RX

    # Sent while the partner was silent, so the pending symbol is retired.
    history.append(SlotRecord(TrafficState(1, 0)))
    tx_policy(SchemeKind.COOP_NULL_C2, tx1, 0, history)
    assert [str(s) for s in tx1.pending_cooperation] == ["a_2"]


def test_idle_transmitter_emits_nothing() -> None:
    _, (tx1, _) = transmitters(SchemeKind.COOP_NULL_C2, C2, RegimeClass.C2)
    decision = tx_policy(SchemeKind.COOP_NULL_C2, tx1, 0, [])
    assert decision.emissions == ()
    assert not decision.active
    assert tx1.next_seq == 1


def test_zero_throttle_silences_the_cooperative_scheme() -> None:
    _, (tx1, _) = transmitters(SchemeKind.COOP_NULL_C2, C2, RegimeClass.C2, q="0")
    decision = tx_policy(SchemeKind.COOP_NULL_C2, tx1, 1, [])
    assert not decision.active


def test_side_information_throttle_only_gates_relay_symbols() -> None:
    _, (tx1, _) = transmitters(SchemeKind.SIDE_INFO_C3, C3, RegimeClass.C3PRIME, q="0")
    decision = tx_policy(SchemeKind.SIDE_INFO_C3, tx1, 1, [])
    assert decision.active
    assert decision.relay_bound == ()
    assert [str(s) for s in decision.fresh] == ["a_1", "a_2", "a_3"]


def test_side_information_duplicates_relay_symbols_immediately() -> None:
    _, (tx1, _) = transmitters(SchemeKind.SIDE_INFO_C3, C3, RegimeClass.C3PRIME)
    decision = tx_policy(SchemeKind.SIDE_INFO_C3, tx1, 1, [])
    duplicates = [e for e in decision.emissions if e.stream_class is StreamClass.SIDE_INFO]
    assert [str(s) for e in duplicates for s in e.content] == ["a_1"]
    assert len(tx1.pending_side_info) == 1


def test_cooperative_relay_queues() -> None:
    _, bank = instantiate(C2, RegimeClass.C2, P, seed=0)
    queues = RelayQueues()
    a1 = SymbolId(1, 1, StreamClass.RELAY_BOUND)
    b1 = SymbolId(2, 1, StreamClass.RELAY_BOUND)
    a2 = SymbolId(1, 2, StreamClass.RELAY_BOUND)
    relay_store(SchemeKind.COOP_NULL_C2, queues, TrafficState(1, 1), [{a1: 1, b1: 1}, {a2: 1}], [3, 4], 1)
    assert queue_lengths(SchemeKind.COOP_NULL_C2, queues, []) == {"type1": 1, "type2_user1": 1, "type2_user2": 0}

    # Receiver 1 idles while transmitter 2 can cancel b_1.
    emissions = relay_policy(SchemeKind.COOP_NULL_C2, queues, TrafficState(0, 1), bank, C2, P)
    assert [e.beam.kind for e in emissions] == [BasisKind.TO_RX1]
    assert emissions[0].content == {a1: 1, b1: 1}
    assert queues.type1_alive == 1

    relay_policy(SchemeKind.COOP_NULL_C2, queues, TrafficState(1, 0), bank, C2, P)
    assert queues.type1_alive == 0

    emissions = relay_policy(SchemeKind.COOP_NULL_C2, queues, TrafficState(0, 0), bank, C2, P)
    assert [e.content for e in emissions] == [{a2: 1}]
    assert queue_lengths(SchemeKind.COOP_NULL_C2, queues, []) == {"type1": 0, "type2_user1": 0, "type2_user2": 0}


def test_side_information_relay_sends_one_sum() -> None:
    _, bank = instantiate(C3, RegimeClass.C3PRIME, P, seed=0)
    queues = RelayQueues()
    a1 = SymbolId(1, 1, StreamClass.RELAY_BOUND)
    b1 = SymbolId(2, 1, StreamClass.RELAY_BOUND)
    relay_store(SchemeKind.SIDE_INFO_C3, queues, TrafficState(1, 0), [{a1: 1}], [5], 1)
    relay_store(SchemeKind.SIDE_INFO_C3, queues, TrafficState(0, 1), [{b1: 1}], [7], 2)
    assert relay_policy(SchemeKind.SIDE_INFO_C3, queues, TrafficState(1, 1), bank, C3, P) == ()
    (emission,) = relay_policy(SchemeKind.SIDE_INFO_C3, queues, TrafficState(0, 0), bank, C3, P)
    assert emission.content == {a1: 1, b1: 1}
    assert emission.value == 12
    assert not queues.undelivered[1] and not queues.undelivered[2]


def test_siso_relay_stores_only_collisions() -> None:
    _, bank = instantiate(SISO, RegimeClass.SISO, P, seed=0)
    queues = RelayQueues()
    a1 = SymbolId(1, 1, StreamClass.DIRECT)
    b1 = SymbolId(2, 1, StreamClass.DIRECT)
    relay_store(SchemeKind.SISO_RELAY, queues, TrafficState(1, 0), [{a1: 2}, {a1: 3}], [2, 3], 1)
    assert not queues.siso_pending
    relay_store(SchemeKind.SISO_RELAY, queues, TrafficState(1, 1), [{a1: 2, b1: 5}, {a1: 3, b1: 1}], [9, 4], 2)
    assert relay_policy(SchemeKind.SISO_RELAY, queues, TrafficState(0, 1), bank, SISO, P) == ()
    emissions = relay_policy(SchemeKind.SISO_RELAY, queues, TrafficState(0, 0), bank, SISO, P)
    assert [e.value for e in emissions] == [9, 4]
    assert queue_lengths(SchemeKind.SISO_RELAY, queues, []) == {"siso": 0}


def test_queue_loads_at_high_traffic() -> None:
    c2 = queue_loads(SchemeKind.COOP_NULL_C2, C2, "0.6", sy.Rational(97, 180))
    assert c2["type1"] == sy.Rational(194, 203)
    c3 = queue_loads(SchemeKind.SIDE_INFO_C3, C3, "0.75", sy.Rational(8, 25))
    assert c3 == {"relay": sy.Rational(24, 25), "side_info": sy.Rational(16, 25)}
    siso = queue_loads(SchemeKind.SISO_RELAY, SISO, "0.7", "0.7")
    assert siso == {"siso": sy.Rational(2401, 2601)}


def test_queue_loads_with_wider_slack_stay_moderate() -> None:
    q = derive_throttle(SchemeKind.COOP_NULL_C2, "0.6", "0.08", C2)
    assert max(queue_loads(SchemeKind.COOP_NULL_C2, C2, "0.6", q).values()) < sy.Rational(9, 10)
    q = derive_throttle(SchemeKind.SIDE_INFO_C3, "0.75", "0.08", C3)
    assert max(queue_loads(SchemeKind.SIDE_INFO_C3, C3, "0.75", q).values()) < sy.Rational(9, 10)


def test_queue_loads_without_service() -> None:
    loads = queue_loads(SchemeKind.SIDE_INFO_C3, C3, 1, 1)
    assert loads["relay"] == sy.oo
    assert queue_loads(SchemeKind.NAIVE_C1, AntennaConfig(1, 2, 0), "0.5", 1) == {}


def test_cooperative_relay_delivers_in_arrival_order() -> None:
    _, bank = instantiate(C2, RegimeClass.C2, P, seed=0)
    queues = RelayQueues()
    symbols = [SymbolId(1, seq, StreamClass.RELAY_BOUND) for seq in (1, 2, 3)]
    for slot, symbol in enumerate(symbols, start=1):
        relay_store(SchemeKind.COOP_NULL_C2, queues, TrafficState(1, 0), [{symbol: 1}], [slot], slot)
    sent = []
    for _ in symbols:
        for emission in relay_policy(SchemeKind.COOP_NULL_C2, queues, TrafficState(0, 0), bank, C2, P):
            sent.extend(emission.content)
    assert sent == symbols


def test_side_information_relay_delivers_in_arrival_order() -> None:
    _, bank = instantiate(C3, RegimeClass.C3PRIME, P, seed=0)
    queues = RelayQueues()
    symbols = [SymbolId(1, seq, StreamClass.RELAY_BOUND) for seq in (1, 2, 3)]
    for slot, symbol in enumerate(symbols, start=1):
        relay_store(SchemeKind.SIDE_INFO_C3, queues, TrafficState(1, 0), [{symbol: 1}], [slot], slot)
    sent = []
    for _ in symbols:
        (emission,) = relay_policy(SchemeKind.SIDE_INFO_C3, queues, TrafficState(0, 1), bank, C3, P)
        sent.extend(emission.content)
    assert sent == symbols
    assert not queues.undelivered[1]


def test_siso_relay_delivers_in_arrival_order() -> None:
    _, bank = instantiate(SISO, RegimeClass.SISO, P, seed=0)
    queues = RelayQueues()
    for seq in (1, 2, 3):
        a = SymbolId(1, seq, StreamClass.DIRECT)
        b = SymbolId(2, seq, StreamClass.DIRECT)
        relay_store(SchemeKind.SISO_RELAY, queues, TrafficState(1, 1), [{a: 1, b: 1}, {a: 2, b: 3}], [seq, 0], seq)
    firsts = []
    for _ in range(3):
        emissions = relay_policy(SchemeKind.SISO_RELAY, queues, TrafficState(0, 0), bank, SISO, P)
        firsts.append(emissions[0].value)
    assert firsts == [1, 2, 3]


def test_live_symbols_cover_queued_and_pending() -> None:
    _, (tx1, tx2) = transmitters(SchemeKind.SIDE_INFO_C3, C3, RegimeClass.C3PRIME)
    decision = tx_policy(SchemeKind.SIDE_INFO_C3, tx1, 1, [])
    queues = RelayQueues()
    b1 = SymbolId(2, 1, StreamClass.RELAY_BOUND)
    relay_store(SchemeKind.SIDE_INFO_C3, queues, TrafficState(0, 1), [{b1: 1}], [4], 1)
    live = live_symbols(queues, [tx1, tx2])
    assert b1 in live
    assert set(tx1.pending_side_info) <= live
    assert decision.fresh[-1] not in live
