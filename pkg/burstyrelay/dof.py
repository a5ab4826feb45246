#!/usr/bin/env python3
"""
Closed-form DoF expressions: the single-user bursty relay channel, the two
outer bounds of the interference channel, the interference-free conditions and
the regions achieved by the transmission schemes.

All evaluation is exact: ``p`` is converted to a ``sympy.Rational`` and every
antenna-count term is an integer.
"""
from dataclasses import dataclass

import sympy as sy
from beartype import beartype
from loguru import logger

from burstyrelay.aliases import Tuple
from burstyrelay.core import (
    AntennaConfig,
    DofRegion,
    Number,
    RegimeClass,
    classify,
    to_rational,
    validate_config,
)
from burstyrelay.errors import ConfigError, NoSchemeError

DEFAULT_GRID_SIZE = 99


@dataclass(frozen=True)
class BoundSet:
    """Right-hand sides of the per-user and sum outer bounds."""

    individual_cap: sy.Rational
    sum_cap: sy.Rational


def _positive_part(x: int) -> int:
    return max(x, 0)


def _probability(p: Number) -> sy.Rational:
    value = to_rational(p)
    if not 0 <= value <= 1:
        raise ConfigError(f"p out of range: {value}")
    return value


def _relay_channel_terms(config: AntennaConfig) -> Tuple[int, int, int]:
    M, N, L = config.M, config.N, config.L
    return min(M, N + L), min(M + L, N), min(L, N)


def _sum_bound_terms(config: AntennaConfig) -> Tuple[int, int, int, int, int, int]:
    M, N, L = config.M, config.N, config.L
    return (
        min(_positive_part(M - N), N + L),
        min(_positive_part(M + L - N), N),
        min(_positive_part(L - N), N),
        min(2 * M + L, N),
        min(M + L, N),
        min(L, N),
    )


@beartype
def relay_channel_dof(config: AntennaConfig, p: Number) -> sy.Rational:
    """
    DoF of the bursty MIMO relay channel; identical to the per-user cut-set
    bound of the interference channel.
    """
    validate_config(config)
    p = _probability(p)
    broadcast, multiple_access, relay_only = _relay_channel_terms(config)
    return sy.Rational(min(p * broadcast, p * multiple_access + (1 - p) * relay_only))


@beartype
def no_relay_dof(config: AntennaConfig, p: Number) -> sy.Rational:
    """The single-user DoF with the relay removed, ``p * min(M, N)``."""
    return relay_channel_dof(AntennaConfig(config.M, config.N, 0), p)


@beartype
def sum_dof_bound(config: AntennaConfig, p: Number) -> sy.Rational:
    validate_config(config)
    p = _probability(p)
    a, b, c, both, one, none = _sum_bound_terms(config)
    genie = min(p * a, p * b + (1 - p) * c)
    return sy.Rational(genie + p**2 * both + 2 * p * (1 - p) * one + (1 - p) ** 2 * none)


@beartype
def outer_bounds(config: AntennaConfig, p: Number) -> BoundSet:
    return BoundSet(relay_channel_dof(config, p), sum_dof_bound(config, p))


@beartype
def outer_region(config: AntennaConfig, p: Number) -> DofRegion:
    bounds = outer_bounds(config, p)
    return DofRegion.from_caps(bounds.individual_cap, bounds.sum_cap)


@beartype
def necessary_condition(config: AntennaConfig) -> bool:
    M, N, L = config.M, config.N, config.L
    return 2 * M <= N or (M >= 2 * N + L and L >= 2 * N) or (M >= 2 * N and 3 * L <= N)


@beartype
def sufficient_condition(config: AntennaConfig) -> bool:
    M, N, L = config.M, config.N, config.L
    return 2 * M <= N or (M >= 2 * N + L and L >= 2 * N) or (M >= 2 * N + L and 3 * L <= N)


@beartype
def numeric_necessity_oracle(config: AntennaConfig, grid_size: int = DEFAULT_GRID_SIZE) -> bool:
    """
    Brute-force check that the sum bound never binds below twice the per-user
    bound on the open grid ``k / (grid_size + 1)``.

    Equality at a grid point counts as not binding.
    """
    if grid_size < 2:
        raise ConfigError(f"grid size must be at least 2, got {grid_size}")
    validate_config(config)
    broadcast, multiple_access, relay_only = _relay_channel_terms(config)
    a, b, c, both, one, none = _sum_bound_terms(config)
    for k in range(1, grid_size + 1):
        p = sy.Rational(k, grid_size + 1)
        individual = min(p * broadcast, p * multiple_access + (1 - p) * relay_only)
        total = min(p * a, p * b + (1 - p) * c) + p**2 * both + 2 * p * (1 - p) * one + (1 - p) ** 2 * none
        if 2 * individual > total:
            logger.debug(f"{config}: sum bound binds at p={p} ({2 * individual} > {total})")
            return False
    return True


@beartype
def achievable_cap(config: AntennaConfig, p: Number) -> sy.Rational:
    """Per-user DoF the scheme of the configuration's regime achieves."""
    validate_config(config)
    p = _probability(p)
    M, N, L = config.M, config.N, config.L
    regime = classify(config)
    if regime is RegimeClass.C1:
        return sy.Rational(p * M)
    if regime is RegimeClass.C2:
        return sy.Rational(min(p * (N + L), sy.Integer(N)))
    if regime is RegimeClass.C3PRIME:
        return sy.Rational(p * N + min(p, 1 - p) * L)
    if regime is RegimeClass.SISO:
        return p
    raise NoSchemeError(f"no scheme for {config} (regime {regime.value})")


@beartype
def achievable_region(config: AntennaConfig, p: Number) -> DofRegion:
    cap = achievable_cap(config, p)
    if classify(config) is RegimeClass.SISO:
        return DofRegion.from_caps(cap, min(2 * cap, sy.Integer(1)))
    return DofRegion.from_caps(cap)


@beartype
def interference_free_check(config: AntennaConfig, p: Number) -> bool:
    return achievable_cap(config, p) == relay_channel_dof(config, p)
