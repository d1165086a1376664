import datetime as dt

import numpy as np
import pytest

from tradelab.data import PriceBar, PriceSeries


def make_series(closes, start=dt.date(2020, 1, 1)):
    bars = tuple(
        PriceBar(date=start + dt.timedelta(days=i), open=float(c), high=float(c),
                 low=float(c), close=float(c), volume=0.0)
        for i, c in enumerate(closes)
    )
    return PriceSeries(bars=bars)


def alternating_series(n, start_price=100.0, pct=1.0):
    """Deterministic series whose percentage changes alternate +pct, -pct."""
    closes = [start_price]
    for i in range(n - 1):
        factor = 1.0 + pct / 100.0 if i % 2 == 0 else 1.0 - pct / 100.0
        closes.append(closes[-1] * factor)
    return make_series(closes)


def random_walk(n, rng, start_price=100.0, scale=0.02):
    closes = [start_price]
    for _ in range(n - 1):
        closes.append(max(closes[-1] * (1.0 + rng.normal(0.0, scale)), 1e-3))
    return make_series(closes)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
