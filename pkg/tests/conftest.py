"""Shared fixtures and instance generators for the test suite."""

from __future__ import annotations

import random

import pytest

from storkit.core import PriceSeries, StorageSpec


@pytest.fixture
def unit_storage():
    """Lossless 2 kWh storage, unit power caps, starting half full."""
    return StorageSpec(s_min=0, s_max=2, p_ch_max=1, p_dis_max=1,
                       eta_ch=1, eta_dis=1, rho=1, s_init=1, dt=1)


@pytest.fixture
def fast_storage():
    """10 kWh system, 1 kW caps, 90% efficiencies, no leakage, half full."""
    return StorageSpec(s_min=0, s_max=10, p_ch_max=1, p_dis_max=1,
                       eta_ch=0.9, eta_dis=0.9, rho=1.0, s_init=5, dt=1)


def random_instance(rng: random.Random, max_T: int = 10, eta_low: float = 0.5,
                    rho_low: float = 0.95, price_scale: float = 1.0):
    """One random (spec, prices, T) triple for property tests."""
    smax = rng.uniform(1.0, 5.0)
    spec = StorageSpec(
        s_min=0.0,
        s_max=smax,
        p_ch_max=rng.uniform(0.3, 1.5),
        p_dis_max=rng.uniform(0.3, 1.5),
        eta_ch=rng.uniform(eta_low, 1.0),
        eta_dis=rng.uniform(eta_low, 1.0),
        rho=rng.uniform(rho_low, 1.0),
        s_init=rng.uniform(0.0, smax),
        dt=1.0,
    )
    T = rng.randint(1, max_T)
    prices = PriceSeries(
        tuple(rng.uniform(-price_scale, price_scale) for _ in range(T)),
        price_floor=-50.0 * price_scale,
        price_cap=50.0 * price_scale,
    )
    return spec, prices, T


def spiky_prices(rng: random.Random, n: int, levels=(-5.0, -1.0, 0.0, 1.0, 5.0),
                 jitter: float = 0.2, floor: float = -1000.0, cap: float = 1000.0):
    """Price paths with strong spreads, so forecast horizons tend to exist."""
    vals = [rng.choice(levels) + rng.uniform(-jitter, jitter) for _ in range(n)]
    return PriceSeries(tuple(vals), price_floor=floor, price_cap=cap)


def nonneg_spiky_prices(rng: random.Random, n: int, levels=(0.0, 0.5, 1.0, 5.0),
                        jitter: float = 0.2, floor: float = -1000.0, cap: float = 1000.0):
    """Spread-heavy but strictly nonnegative price paths.

    The forecast-horizon certificate is provably sound on this domain; see
    the horizon module notes on negative window prices.
    """
    vals = [max(0.0, rng.choice(levels) + rng.uniform(-jitter, jitter)) for _ in range(n)]
    return PriceSeries(tuple(vals), price_floor=floor, price_cap=cap)
