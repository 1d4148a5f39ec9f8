"""Synthetic data generation: transaction files and GARCH-driven price paths.

Used by tests and the `synth` CLI command to exercise the full pipeline
without real blockchain data.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .garchx import ArmaGarchXParams, ModelSpec, simulate
from .ingest import atomic_write_text

SECONDS_PER_DAY = 86400


@dataclass
class SynthConfig:
    days: int = 60
    txs_per_day: float = 50.0
    extreme_prob: float = 0.05
    threshold: int = 20
    start: dt.date = dt.date(2015, 1, 1)
    start_price: float = 250.0
    garch_params: ArmaGarchXParams = field(
        default_factory=lambda: ArmaGarchXParams(alpha0=1e-4, alpha1=0.08, beta=0.88, nu=6.0, xi=1.1)
    )
    distribution: str = "skewt"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.extreme_prob <= 1.0:
            raise ValueError(f"extreme_prob must be in [0, 1], got {self.extreme_prob}")
        if self.days < 1:
            raise ValueError("need at least one day")

    def to_dict(self) -> dict:
        return {
            "days": self.days,
            "txs_per_day": self.txs_per_day,
            "extreme_prob": self.extreme_prob,
            "threshold": self.threshold,
            "start": self.start.isoformat(),
            "start_price": self.start_price,
            "garch_params": self.garch_params.to_dict(),
            "distribution": self.distribution,
            "seed": self.seed,
        }


def synth_transactions(config: SynthConfig, rng: np.random.Generator) -> list[str]:
    """CSV lines for a synthetic transaction file, grouped by day.

    Extreme transactions get an input or output count at or above the
    threshold; ordinary ones stay strictly below it.
    """
    lines = ["# timestamp,n_inputs,n_outputs,amount_satoshi"]
    n = config.threshold
    for day_idx in range(config.days):
        day_start = int(
            dt.datetime.combine(
                config.start + dt.timedelta(days=day_idx), dt.time(), dt.timezone.utc
            ).timestamp()
        )
        count = max(1, rng.poisson(config.txs_per_day))
        for _ in range(count):
            ts = day_start + int(rng.integers(0, SECONDS_PER_DAY))
            amount = int(rng.lognormal(mean=13.0, sigma=1.5)) + 1
            if rng.uniform() < config.extreme_prob:
                if rng.uniform() < 0.5:
                    n_in = n + int(rng.integers(0, 30))
                    n_out = int(rng.integers(1, n))
                else:
                    n_in = int(rng.integers(1, n))
                    n_out = n + int(rng.integers(0, 30))
            else:
                n_in = int(rng.integers(1, min(n, 6)))
                n_out = int(rng.integers(1, min(n, 6)))
            lines.append(f"{ts},{n_in},{n_out},{amount}")
    return lines


def synth_prices(config: SynthConfig) -> list[str]:
    """CSV lines for a GARCH-driven daily close series (days + 1 rows, so the
    return series spans all matrix days)."""
    spec = ModelSpec(p=0, q=0, k=0, distribution=config.distribution)
    y, _, _ = simulate(config.garch_params, spec, None, config.days, config.seed + 1)
    prices = config.start_price * np.exp(np.concatenate([[0.0], np.cumsum(y)]))
    lines = ["date,close"]
    for i, p in enumerate(prices):
        day = config.start + dt.timedelta(days=i)
        lines.append(f"{day.isoformat()},{float(p)!r}")
    return lines


def write_synth_dataset(config: SynthConfig, out_dir) -> dict:
    """Write transactions.csv, prices.csv and manifest.json; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    tx_path = os.path.join(out_dir, "transactions.csv")
    price_path = os.path.join(out_dir, "prices.csv")
    manifest_path = os.path.join(out_dir, "manifest.json")
    atomic_write_text(tx_path, "\n".join(synth_transactions(config, rng)) + "\n")
    atomic_write_text(price_path, "\n".join(synth_prices(config)) + "\n")
    atomic_write_text(manifest_path, json.dumps(config.to_dict(), indent=2) + "\n")
    return {"transactions": tx_path, "prices": price_path, "manifest": manifest_path}
