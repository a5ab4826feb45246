#!/usr/bin/env python3
import itertools

import pytest
import sympy as sy

from burstyrelay.core import AntennaConfig, DofRegion, RegimeClass, classify
from burstyrelay.dof import (
    achievable_cap,
    achievable_region,
    interference_free_check,
    necessary_condition,
    no_relay_dof,
    numeric_necessity_oracle,
    outer_bounds,
    outer_region,
    relay_channel_dof,
    sufficient_condition,
    sum_dof_bound,
)
from burstyrelay.errors import ConfigError, NoSchemeError


def test_relay_channel_dof_for_large_transmit_arrays() -> None:
    config = AntennaConfig(10, 1, 2)
    for k in range(1, 10):
        p = sy.Rational(k, 10)
        assert relay_channel_dof(config, p) == min(3 * p, 1)


def test_relay_channel_dof_at_zero_traffic() -> None:
    for config in (AntennaConfig(4, 1, 2), AntennaConfig(7, 3, 1), AntennaConfig(1, 1, 0)):
        assert relay_channel_dof(config, 0) == 0


def test_no_relay_dof() -> None:
    assert no_relay_dof(AntennaConfig(4, 1, 2), "0.2") == sy.Rational(1, 5)
    assert no_relay_dof(AntennaConfig(7, 3, 1), "0.5") == sy.Rational(3, 2)


def test_sum_bound_known_values() -> None:
    assert sum_dof_bound(AntennaConfig(4, 1, 2), "0.2") == sy.Rational(8, 5)
    assert sum_dof_bound(AntennaConfig(4, 1, 0), "0.2") == sy.Rational(14, 25)
    assert sum_dof_bound(AntennaConfig(3, 2, 1), "0.9") == sy.Rational(289, 100)


def test_sum_bound_at_zero_traffic_keeps_relay_terms() -> None:
    config = AntennaConfig(4, 1, 2)
    assert sum_dof_bound(config, 0) == min(config.L, config.N)
    assert relay_channel_dof(config, 0) == 0


def test_outer_regions() -> None:
    assert outer_region(AntennaConfig(4, 1, 2), "0.2") == DofRegion.from_caps("0.6", "1.6")
    region = outer_region(AntennaConfig(4, 1, 0), "0.2")
    assert region.per_user_cap() == sy.Rational(1, 5)
    assert outer_region(AntennaConfig(4, 1, 0), 0).vertices() == frozenset({(0, 0)})
    bounds = outer_bounds(AntennaConfig(4, 1, 2), "0.2")
    assert bounds.individual_cap == sy.Rational(3, 5)


def test_probability_out_of_range() -> None:
    with pytest.raises(ConfigError):
        relay_channel_dof(AntennaConfig(4, 1, 2), "1.5")


def test_conditions() -> None:
    assert necessary_condition(AntennaConfig(4, 1, 2))
    assert sufficient_condition(AntennaConfig(4, 1, 2))
    assert not necessary_condition(AntennaConfig(3, 2, 1))
    assert necessary_condition(AntennaConfig(6, 3, 1))
    assert not sufficient_condition(AntennaConfig(6, 3, 1))


def test_oracle_known_configs() -> None:
    assert not numeric_necessity_oracle(AntennaConfig(3, 2, 1))
    assert numeric_necessity_oracle(AntennaConfig(4, 1, 2))
    with pytest.raises(ConfigError):
        numeric_necessity_oracle(AntennaConfig(4, 1, 2), grid_size=1)


def test_oracle_agrees_with_closed_form_condition() -> None:
    for M, N, L in itertools.product(range(1, 9), range(1, 9), range(0, 9)):
        config = AntennaConfig(M, N, L)
        assert necessary_condition(config) == numeric_necessity_oracle(config), config


def test_achievable_caps() -> None:
    assert achievable_cap(AntennaConfig(4, 1, 2), "0.2") == sy.Rational(3, 5)
    assert achievable_cap(AntennaConfig(7, 3, 1), "0.75") == sy.Rational(5, 2)
    assert achievable_cap(AntennaConfig(1, 2, 0), "0.4") == sy.Rational(2, 5)
    assert achievable_region(AntennaConfig(1, 1, 2), "0.3") == DofRegion.from_caps("0.3", "0.6")
    assert achievable_region(AntennaConfig(1, 1, 2), "0.7").sum_cap() == 1
    with pytest.raises(NoSchemeError):
        achievable_cap(AntennaConfig(6, 3, 1), "0.5")
    with pytest.raises(NoSchemeError):
        achievable_cap(AntennaConfig(4, 2, 1), "0.5")


def test_interference_free_known_configs() -> None:
    assert interference_free_check(AntennaConfig(4, 1, 2), "0.2")
    assert interference_free_check(AntennaConfig(7, 3, 1), "0.75")
    assert interference_free_check(AntennaConfig(1, 2, 0), "0.4")


def test_interference_free_identity() -> None:
    grid = [sy.Rational(k, 100) for k in range(1, 100)]
    for M, N, L in itertools.product(range(1, 11), range(1, 11), range(0, 11)):
        config = AntennaConfig(M, N, L)
        if classify(config) not in (RegimeClass.C1, RegimeClass.C2, RegimeClass.C3PRIME):
            continue
        for p in grid:
            assert achievable_cap(config, p) == relay_channel_dof(config, p), (config, p)


def test_achievable_region_sits_inside_outer_region() -> None:
    for config in (AntennaConfig(4, 1, 2), AntennaConfig(7, 3, 1), AntennaConfig(1, 1, 2), AntennaConfig(1, 2, 0)):
        for p in ("0.1", "0.4", "0.8"):
            assert achievable_region(config, p).is_subset(outer_region(config, p))


def test_bounds_are_monotone_in_antenna_counts() -> None:
    p = sy.Rational(2, 5)
    for M, N, L in itertools.product(range(1, 5), range(1, 5), range(0, 5)):
        base = AntennaConfig(M, N, L)
        for grown in (AntennaConfig(M + 1, N, L), AntennaConfig(M, N + 1, L), AntennaConfig(M, N, L + 1)):
            assert relay_channel_dof(grown, p) >= relay_channel_dof(base, p)
            assert sum_dof_bound(grown, p) >= sum_dof_bound(base, p)
