"""Discrete-time flat block-fading AWGN channel with coherent equalization."""

import math
from dataclasses import dataclass

import numpy as np

AWGN = "awgn"
RAYLEIGH = "rayleigh"


@dataclass
class ChannelState:
    """Per-block channel realization: fading coefficient, noise density, average SNR."""

    h: complex
    n0: float
    gamma: float

    def __post_init__(self):
        if self.n0 <= 0:
            raise ValueError("n0 must be positive")

    @property
    def instantaneous_snr(self) -> float:
        return abs(self.h) ** 2 * self.gamma


def sample_fading(model: str, rng) -> complex:
    """One fading coefficient per transmitted block.

    awgn returns exactly 1; rayleigh draws a circular complex Gaussian with
    unit mean-square magnitude (real/imaginary parts of variance 1/2).
    """
    if model == AWGN:
        return 1.0 + 0.0j
    if model == RAYLEIGH:
        a, b = rng.normal(0.0, math.sqrt(0.5), size=2)
        return complex(a, b)
    raise ValueError(f"unknown channel model {model!r}")


def transmit(s, h: complex, n0: float, rng) -> np.ndarray:
    """r = h s + z with z i.i.d. complex Gaussian of total variance n0.

    n0 = 0 is the noiseless limit (used by deterministic fixtures).
    """
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    s = np.asarray(s, dtype=np.complex128)
    z = rng.normal(0.0, 1.0, size=(s.size, 2)) * math.sqrt(n0 / 2.0)
    return h * s + z[:, 0] + 1j * z[:, 1]


def equalize(r, h: complex) -> np.ndarray:
    """Coherent equalization r * h^* / |h|^2."""
    if h == 0:
        raise ValueError("cannot equalize with h = 0")
    return np.asarray(r, dtype=np.complex128) * (np.conj(h) / abs(h) ** 2)
