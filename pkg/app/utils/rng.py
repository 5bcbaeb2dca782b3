# ==============================================================================
# rng.py — Seeded random streams
# ==============================================================================
# Purpose: Deterministic randomness for update draws, starts and PMU noise
# Sections: Imports, Public exports, Main Classes
# ==============================================================================

# ==============================================================================
# Imports
# ==============================================================================

# Standard Library -----
from typing import Optional

# Third Party -----
import numpy as np

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["SeededRNG", "GENERATOR_NAME"]

GENERATOR_NAME = "numpy.random.PCG64"

# ==============================================================================
# Main Classes
# ==============================================================================

class SeededRNG:
    """A seeded PCG64 stream; identical seeds replay identical draws on every platform."""

    def __init__(self, seed: Optional[int] = None, stream: int = 0) -> None:
        self._seed = seed
        self._stream = stream
        self._rng = self._make_generator()

    def _make_generator(self) -> np.random.Generator:
        if self._seed is None:
            return np.random.Generator(np.random.PCG64())
        return np.random.Generator(np.random.PCG64([self._stream, self._seed]))

    @property
    def seed(self) -> Optional[int]:
        """Get the seed."""
        return self._seed

    def reset(self, seed: Optional[int] = None) -> None:
        """Reset the stream, optionally with a new seed."""
        self._seed = seed if seed is not None else self._seed
        self._rng = self._make_generator()

    def uniform(self, low: np.ndarray, high: np.ndarray) -> np.ndarray:
        """Componentwise uniform draw in [low, high]."""
        low = np.asarray(low, dtype=float)
        high = np.asarray(high, dtype=float)
        return low + (high - low) * self._rng.random(low.shape)

    def bernoulli(self, prob: np.ndarray) -> np.ndarray:
        """One independent Bernoulli(prob_i) draw per component."""
        prob = np.asarray(prob, dtype=float)
        return self._rng.random(prob.shape) < prob

    def normal(self, std: float, size: int) -> np.ndarray:
        """Zero-mean Gaussian vector."""
        if std <= 0.0:
            return np.zeros(size)
        return self._rng.normal(0.0, std, size)

    def fork(self, suffix: int = 0) -> "SeededRNG":
        """Independent stream derived from this seed; draws here do not disturb it."""
        return SeededRNG(self._seed, stream=self._stream + suffix + 1)
