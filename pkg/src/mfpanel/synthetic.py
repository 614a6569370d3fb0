"""Seeded synthetic series with analytically known fractal and tail
properties, used as ground truth by the test and acceptance suites.

All generators draw from Philox, a counter-based 64-bit generator whose
streams are platform-independent, so a seed pins the output bytes down
everywhere.  Independent streams come from numpy SeedSequence spawning:
stream i of seed s is SeedSequence(s).spawn(i + 1)[i].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rng_stream(seed: int, stream: int | None = None) -> np.random.Generator:
    """A Philox generator for ``seed``; ``stream`` selects a spawned child."""
    ss = np.random.SeedSequence(seed)
    if stream is not None:
        ss = ss.spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class GeneratorSpec:
    """A reproducible recipe for one synthetic series (or pair)."""

    kind: str  # cascade | fgn | iid_gaussian | pareto | correlated_pair
    length: int
    seed: int
    p: float | None = None  # cascade multiplier
    hurst: float | None = None  # fgn
    gamma: float | None = None  # pareto tail exponent
    c: float | None = None  # correlated_pair target Pearson


def binomial_cascade(levels: int, p: float, seed: int, randomize: bool = True) -> np.ndarray:
    """Multiplicative binomial cascade of length 2^levels.

    Every cell mass v splits into v*p and v*(1-p); which side receives the
    larger factor is decided uniformly at random per cell, so the series is
    not trivially ordered (``randomize=False`` always feeds p to the left,
    for debugging).  Total mass is conserved.  The generalized Hurst
    exponent obeys h(q) = 1/q - log2(p^q + (1-p)^q) / q.
    """
    if not 8 <= levels <= 24:
        raise ValueError("levels must be in [8, 24]")
    if not 0.5 < p < 1.0:
        raise ValueError("p must be in the open interval (0.5, 1)")
    rng = rng_stream(seed)
    w = np.array([1.0])
    for _ in range(levels):
        if randomize:
            left = np.where(rng.random(w.size) < 0.5, p, 1.0 - p)
        else:
            left = np.full(w.size, p)
        out = np.empty(2 * w.size)
        out[0::2] = w * left
        out[1::2] = w * (1.0 - left)
        w = out
    return w


def cascade_hurst(q, p: float):
    """Analytic h(q) of the binomial cascade (the oracle the estimator is
    checked against)."""
    q = np.asarray(q, dtype=np.float64)
    return 1.0 / q - np.log2(p**q + (1.0 - p) ** q) / q


def fgn(hurst: float, length: int, seed: int) -> np.ndarray:
    """Fractional Gaussian noise by exact circulant spectral embedding.

    Stationary Gaussian increments with autocovariance
    0.5 (|k+1|^2H - 2|k|^2H + |k-1|^2H) and unit variance.  ``length`` must
    be a power of two; the circulant embedding of the exact fGn
    autocovariance is non-negative definite for every H in (0, 1), so the
    synthesis is exact up to floating-point round-off.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError("hurst must be in (0, 1)")
    n = int(length)
    if n < 2 or n & (n - 1):
        raise ValueError("length must be a power of two")
    rng = rng_stream(seed)
    k = np.arange(n, dtype=np.float64)
    acov = 0.5 * (np.abs(k + 1) ** (2 * hurst) - 2 * np.abs(k) ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([acov, [0.0], acov[-1:0:-1]])
    eig = np.fft.rfft(row).real
    if eig.min() < -1e-8:
        raise ValueError(f"circulant embedding not positive semidefinite (min eigenvalue {eig.min():g})")
    eig = np.clip(eig, 0.0, None)
    z = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    z[0] = z[0].real * np.sqrt(2.0)
    z[-1] = z[-1].real * np.sqrt(2.0)
    w = np.fft.irfft(np.sqrt(eig) * z, 2 * n) * np.sqrt(n)
    return w[:n]


def iid_gaussian(length: int, seed: int) -> np.ndarray:
    """Standard normal draws (the h(2) = 0.5 monofractal reference)."""
    return rng_stream(seed).standard_normal(int(length))


def pareto(gamma: float, length: int, seed: int) -> np.ndarray:
    """Pareto magnitudes with survival P(X > x) = x^-gamma for x >= 1."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    u = 1.0 - rng_stream(seed).random(int(length))  # in (0, 1]
    return u ** (-1.0 / gamma)


def correlated_pair(c: float, length: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two standard Gaussian series with target Pearson correlation c:
    y = c x + sqrt(1 - c^2) z for independent x, z."""
    if not -1.0 <= c <= 1.0:
        raise ValueError("c must be in [-1, 1]")
    rng = rng_stream(seed)
    x = rng.standard_normal(int(length))
    z = rng.standard_normal(int(length))
    return x, c * x + np.sqrt(1.0 - c * c) * z


def generate(spec: GeneratorSpec):
    """Dispatch a GeneratorSpec to its generator."""
    if spec.kind == "cascade":
        levels = int(np.log2(spec.length))
        if 2**levels != spec.length:
            raise ValueError("cascade length must be a power of two")
        if spec.p is None:
            raise ValueError("cascade needs p")
        return binomial_cascade(levels, spec.p, spec.seed)
    if spec.kind == "fgn":
        if spec.hurst is None:
            raise ValueError("fgn needs hurst")
        return fgn(spec.hurst, spec.length, spec.seed)
    if spec.kind == "iid_gaussian":
        return iid_gaussian(spec.length, spec.seed)
    if spec.kind == "pareto":
        if spec.gamma is None:
            raise ValueError("pareto needs gamma")
        return pareto(spec.gamma, spec.length, spec.seed)
    if spec.kind == "correlated_pair":
        if spec.c is None:
            raise ValueError("correlated_pair needs c")
        return correlated_pair(spec.c, spec.length, spec.seed)
    raise ValueError(f"unknown generator kind {spec.kind!r}")


def prices_from_series(
    values: np.ndarray,
    start_ms: int = 0,
    interval_ms: int = 60_000,
    price0: float = 100.0,
    vol: float = 0.001,
) -> tuple[np.ndarray, np.ndarray]:
    """Turn a generated series into a lognormal price path on a uniform
    grid, closing the loop with the CSV ingestion schema.

    The series is z-scored and used as log-return increments of size
    ``vol``, so analyzing the resulting prices recovers it (up to the
    affine normalization the pipeline applies anyway).
    """
    v = np.asarray(values, dtype=np.float64)
    sd = v.std()
    if sd == 0:
        raise ValueError("constant series cannot drive a price path")
    z = (v - v.mean()) / sd
    logp = np.concatenate([[0.0], np.cumsum(z * vol)])
    prices = price0 * np.exp(logp)
    timestamps = start_ms + interval_ms * np.arange(prices.size, dtype=np.int64)
    return timestamps, prices
