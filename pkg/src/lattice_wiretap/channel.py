"""Channel models: Gaussian, static fading and i.i.d. ergodic Rayleigh.

Rates are in nats per complex channel use. Noise variance is per complex
dimension, so each real coordinate of the noise has variance ``noise_variance / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

__all__ = [
    "ChannelModel",
    "ChannelRealization",
    "splitmix64",
    "derive_seed",
    "spawn_rng",
    "sample_channel",
    "sample_channels",
    "transmit",
    "capacity",
    "rayleigh_capacity",
    "secrecy_capacity",
    "lln_diagnostic",
    "wilson_interval",
    "complex_normal",
]

KINDS = ("gaussian", "static", "ergodic_rayleigh")
_MASK = (1 << 64) - 1
Z99 = 2.5758293035489004


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (64-bit mixing function)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-stream seed ``seed XOR splitmix64(index)``; streams for distinct indices are disjoint in practice."""
    return (int(seed) & _MASK) ^ splitmix64(int(index))


def spawn_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, index))


@dataclass(frozen=True)
class ChannelModel:
    kind: str
    noise_variance: float = 1.0
    h: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {KINDS}")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        if self.kind == "static":
            h = tuple(complex(v) for v in self.h)
            if not h or any(v == 0 for v in h):
                raise ValueError("static channel needs nonzero coefficients")
            object.__setattr__(self, "h", h)

    @classmethod
    def gaussian(cls, noise_variance: float = 1.0) -> "ChannelModel":
        return cls("gaussian", noise_variance)

    @classmethod
    def static(cls, h: Sequence[complex], noise_variance: float = 1.0) -> "ChannelModel":
        return cls("static", noise_variance, tuple(h))

    @classmethod
    def rayleigh(cls, noise_variance: float = 1.0) -> "ChannelModel":
        return cls("ergodic_rayleigh", noise_variance)

    @property
    def is_random(self) -> bool:
        return self.kind == "ergodic_rayleigh"


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    noise_variance: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        if len(h) == 0:
            raise ValueError("empty realization")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def k(self) -> int:
        return len(self.h)


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    s = math.sqrt(variance / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channels(model: ChannelModel, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` coefficient vectors of length ``k`` as an (n, k) complex array."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if model.kind == "gaussian":
        return np.ones((n, k), dtype=complex)
    if model.kind == "static":
        if len(model.h) != k:
            raise ValueError(f"static channel has {len(model.h)} coefficients, k={k}")
        return np.tile(np.array(model.h), (n, 1))
    return complex_normal(rng, (n, k))


def sample_channel(model: ChannelModel, k: int, rng: np.random.Generator) -> ChannelRealization:
    return ChannelRealization(sample_channels(model, k, 1, rng)[0], model.noise_variance)


def transmit(x: np.ndarray, real: ChannelRealization, rng: np.random.Generator) -> np.ndarray:
    """``y = h * x + w`` elementwise; ``x`` may be a k-vector or an (n, k) batch."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != real.k:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]} entries, channel has {real.k}")
    return real.h * x + complex_normal(rng, x.shape, real.noise_variance)


def rayleigh_capacity(snr: float) -> float:
    """Ergodic Rayleigh capacity ``e^{1/snr} E1(1/snr)`` in nats."""
    a = 1.0 / snr
    # exp1 underflows for large a; the scaled form keeps precision there
    return float(special.exp1(a) * math.exp(a)) if a < 500 else float(1.0 / a - 1.0 / a**2 + 2.0 / a**3)


def capacity(model: ChannelModel, snr: float, samples: int = 0, rng: np.random.Generator | None = None):
    """Return ``(estimate, ci_halfwidth)``: closed form for deterministic models, 99% CI Monte Carlo for Rayleigh."""
    if not snr > 0:
        raise ValueError("snr must be positive")
    if model.kind == "gaussian":
        return math.log1p(snr), 0.0
    if model.kind == "static":
        return float(np.mean(np.log1p(snr * np.abs(np.array(model.h)) ** 2))), 0.0
    if samples < 2 or rng is None:
        raise ValueError("Monte Carlo capacity needs samples >= 2 and an rng")
    g = np.log1p(snr * np.abs(complex_normal(rng, samples)) ** 2)
    return float(g.mean()), Z99 * float(g.std(ddof=1)) / math.sqrt(samples)


def exact_capacity(model: ChannelModel, snr: float) -> float:
    if model.kind == "ergodic_rayleigh":
        return rayleigh_capacity(snr)
    return capacity(model, snr)[0]


def secrecy_capacity(c_b: float, c_e: float) -> float:
    return c_b - c_e


def lln_diagnostic(
    model: ChannelModel, snr: float, k: int, delta: float, trials: int, rng: np.random.Generator
) -> float:
    """Fraction of trials with ``|k^-1 sum ln(1 + snr |h_i|^2) - C| > delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    c = exact_capacity(model, snr)
    h = sample_channels(model, k, trials, rng)
    avg = np.log1p(snr * np.abs(h) ** 2).mean(axis=1)
    return float(np.mean(np.abs(avg - c) > delta))


def wilson_interval(successes: int, n: int, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    d = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / d
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d
    return max(0.0, centre - half), min(1.0, centre + half)
