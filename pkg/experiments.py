#!/usr/bin/env python3
from loguru import logger
from beartype import beartype

import sympy as sy

from burstyrelay.aliases import Tuple
from burstyrelay.core import AntennaConfig
from burstyrelay.dof import (
    achievable_cap,
    no_relay_dof,
    relay_channel_dof,
    sum_dof_bound,
)
from burstyrelay.schemes import scheme_for, scheme_rate
from burstyrelay.sim import make_sim, run


@beartype
def check_relay_gain(M: int, N: int, L: int, steps: int = 19) -> None:
    """
    Check that the relay never hurts and strictly helps at low traffic, where
    idle slots give it room to forward.
    """
    config = AntennaConfig(M, N, L)
    logger.info(f"Relay gain on {config}")
    for k in range(1, steps + 1):
        p = sy.Rational(k, steps + 1)
        with_relay = achievable_cap(config, p)
        without = no_relay_dof(config, p)
        assert with_relay >= without
        logger.info(f"p={float(p):.3f}  relay {float(with_relay):.4f}  no relay {float(without):.4f}")
    assert achievable_cap(config, sy.Rational(1, steps + 1)) > no_relay_dof(config, sy.Rational(1, steps + 1))


@beartype
def check_linear_growth_in_relay_antennas(N: int, p: sy.Rational, relay_sizes: Tuple[int, ...]) -> None:
    """Below saturation the per-user DoF is p(N + L) when M = 2N + L."""
    for L in relay_sizes:
        config = AntennaConfig(2 * N + L, N, L)
        cap = achievable_cap(config, p)
        assert cap == min(p * (N + L), N)
        assert cap == relay_channel_dof(config, p)
        logger.info(f"{config}: per-user {cap}, sum bound {sum_dof_bound(config, p)}")


@beartype
def check_simulation_tracks_scheme_rate(M: int, N: int, L: int, p: str, slots: int = 40000) -> None:
    config = AntennaConfig(M, N, L)
    kind = scheme_for(config)
    expected = float(scheme_rate(kind, config, p, "0.01"))
    metrics = run(make_sim(config, p, slots=slots, drain=slots // 10, warmup=slots // 10, window=slots // 10))
    logger.info(f"{config} p={p}: simulated {metrics.empirical_dof}, expected {expected:.4f}, {metrics.verdict}")
    for value in metrics.empirical_dof.values():
        assert abs(value - expected) < 0.05


def main() -> None:
    check_relay_gain(4, 1, 2)
    check_linear_growth_in_relay_antennas(1, sy.Rational(1, 10), (2, 4, 8))
    check_simulation_tracks_scheme_rate(4, 1, 2, "0.2")
    check_simulation_tracks_scheme_rate(7, 3, 1, "0.75")


if __name__ == "__main__":
    main()
