"""Synthetic trace generators for benchmarks and acceptance tests.

Profiles:

- ``thermal-cpu``: server power as random step workloads with additive
  noise, a threshold fan policy, a slowly drifting inlet temperature, and a
  first-order CPU temperature recurrence
      TS(t+1) = TS(t) + g1*PS(t) - g2*FS(t)*(TS(t) - TIN(t)),
  whose fixed point under constant drive is TIN + g1*PS/(g2*FS).
- ``thermal-inlet``: cooling supply setpoint steps, humidity drift, tile
  pressure noise, and an inlet temperature pulled toward the supply.
- ``arma``: a known ARMA(p, q) process with Gaussian innovations.
- ``planted``: y(t+1) = exp(-0.5*x1(t)) + 2.3*x2(t) + noise, so the closed
  form is recoverable at horizon 1 with lag-0 features.

All profiles are deterministic per seed.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .dataset import TimeSeriesDataset
from .errors import ConfigError

# thermal-cpu default gains; transients span roughly 20 samples
CPU_GAIN_POWER = 0.3  # degC per power unit per sample
CPU_GAIN_COOLING = 0.05  # per sample per fan unit

PLANTED_EXPRESSION = "exp(-0.5*x1)+2.3*x2"


def generate_planted(seed: int, length: int, noise: float = 0.01) -> TimeSeriesDataset:
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0.0, 2.0, size=length)
    x2 = rng.uniform(0.0, 2.0, size=length)
    y = np.empty(length)
    eps = rng.normal(0.0, noise, size=length)
    y[0] = np.exp(-0.5 * x1[0]) + 2.3 * x2[0] + eps[0]
    y[1:] = np.exp(-0.5 * x1[:-1]) + 2.3 * x2[:-1] + eps[1:]
    return TimeSeriesDataset({"x1": x1, "x2": x2, "y": y})


def generate_thermal_cpu(seed: int, length: int, noise: float = 0.2) -> TimeSeriesDataset:
    rng = np.random.default_rng(seed)
    # workload: piecewise-constant power steps plus measurement noise
    ps = np.empty(length)
    t = 0
    while t < length:
        hold = int(rng.integers(50, 300))
        ps[t:t + hold] = rng.uniform(1.0, 10.0)
        t += hold
    ps = ps + rng.normal(0.0, noise, size=length)
    ps = np.clip(ps, 0.5, None)

    tin = np.empty(length)
    tin[0] = 22.0
    steps = rng.normal(0.0, 0.02, size=length)
    for t in range(1, length):
        tin[t] = np.clip(tin[t - 1] + steps[t], 18.0, 26.0)

    ts = np.empty(length)
    fs = np.empty(length)
    ts[0] = 40.0
    fs[0] = _fan_policy(ts[0])
    for t in range(length - 1):
        fs[t] = _fan_policy(ts[t])
        ts[t + 1] = cpu_temperature_step(ts[t], ps[t], fs[t], tin[t])
    fs[-1] = _fan_policy(ts[-1])
    return TimeSeriesDataset({"TS": ts, "TIN": tin, "PS": ps, "FS": fs}, sample_interval=10.0)


def cpu_temperature_step(ts: float, ps: float, fs: float, tin: float) -> float:
    """One step of the CPU temperature recurrence."""
    return ts + CPU_GAIN_POWER * ps - CPU_GAIN_COOLING * fs * (ts - tin)


def _fan_policy(temp: float) -> float:
    if temp < 45.0:
        return 1.0
    if temp < 65.0:
        return 2.0
    return 3.0


def generate_thermal_inlet(seed: int, length: int, noise: float = 0.05) -> TimeSeriesDataset:
    rng = np.random.default_rng(seed)
    tsup = np.empty(length)
    t = 0
    while t < length:
        hold = int(rng.integers(200, 800))
        tsup[t:t + hold] = rng.uniform(16.0, 26.0)
        t += hold

    hum = np.empty(length)
    hum[0] = 45.0
    drift = rng.normal(0.0, 0.05, size=length)
    for t in range(1, length):
        hum[t] = np.clip(hum[t - 1] + drift[t], 30.0, 60.0)

    pdif = 0.05 + 0.01 * np.sin(np.arange(length) / 150.0) + rng.normal(0.0, 0.002, size=length)

    tin = np.empty(length)
    tin[0] = tsup[0] + 2.0
    eps = rng.normal(0.0, noise, size=length)
    for t in range(length - 1):
        pull = 0.02 * (tsup[t] - tin[t])
        recirc = 0.5 * (0.06 - pdif[t]) + 0.002 * (hum[t] - 45.0)
        tin[t + 1] = tin[t] + pull + recirc + eps[t + 1] * 0.1
    tret2 = tin + 8.0 + rng.normal(0.0, noise, size=length)
    tret3 = tin + 9.5 + rng.normal(0.0, noise, size=length)
    return TimeSeriesDataset(
        {"TIN": tin, "TSUP": tsup, "HUM": hum, "PDIF": pdif, "TRET2": tret2, "TRET3": tret3},
        sample_interval=120.0,
    )


def generate_arma(
    seed: int,
    length: int,
    ar: Sequence[float] = (0.75, -0.3),
    ma: Sequence[float] = (0.4,),
    sigma: float = 1.0,
    burn_in: int = 200,
) -> TimeSeriesDataset:
    rng = np.random.default_rng(seed)
    ar = np.asarray(ar, dtype=np.float64)
    ma = np.asarray(ma, dtype=np.float64)
    n = length + burn_in
    e = rng.normal(0.0, sigma, size=n)
    y = np.zeros(n)
    p, q = len(ar), len(ma)
    for t in range(n):
        v = e[t]
        for i in range(1, p + 1):
            if t - i >= 0:
                v += ar[i - 1] * y[t - i]
        for j in range(1, q + 1):
            if t - j >= 0:
                v += ma[j - 1] * e[t - j]
        y[t] = v
    return TimeSeriesDataset({"y": y[burn_in:]})


def generate(profile: str, seed: int, length: int, noise: Optional[float] = None) -> TimeSeriesDataset:
    kwargs = {} if noise is None else {"noise": noise}
    if profile == "planted":
        return generate_planted(seed, length, **kwargs)
    if profile == "thermal-cpu":
        return generate_thermal_cpu(seed, length, **kwargs)
    if profile == "thermal-inlet":
        return generate_thermal_inlet(seed, length, **kwargs)
    if profile == "arma":
        if noise is not None:
            return generate_arma(seed, length, sigma=noise)
        return generate_arma(seed, length)
    raise ConfigError(f"unknown synthetic profile {profile!r}")
