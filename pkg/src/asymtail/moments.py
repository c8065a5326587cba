"""Generalized moment test functions.

These are the f's fed to dist.expect: one-sided powers (x-t)_+^alpha,
exponentials e^{lambda x}, and nonnegative affine combinations of those.
The convention 0^0 = 0 makes (x-t)_+^0 the indicator of x > t.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class PowerPlus:
    """f(x) = (x - t)_+^alpha with 0^0 := 0."""
    alpha: float
    t: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x - self.t
        if self.alpha == 0:
            return (d > 0).astype(float)
        return np.where(d > 0, np.maximum(d, 0.0) ** self.alpha, 0.0)


@dataclass(frozen=True)
class Exponential:
    """f(x) = exp(lam * x)."""
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(self.lam * x)


@dataclass(frozen=True)
class AbsPower:
    """f(x) = |x - t|^alpha, the two-sided companion of PowerPlus."""
    alpha: float
    t: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.abs(x - self.t) ** self.alpha


@dataclass(frozen=True)
class CoshMoment:
    """f(x) = cosh(lam * x)."""
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.cosh(self.lam * x)


@dataclass(frozen=True)
class AffineCombo:
    """f(x) = a + b*x + sum_i w_i * f_i(x), all w_i >= 0.

    Affine parts are harmless for the comparison theorems (both sides
    share mean and the weights of the convex generators are nonnegative).
    """
    terms: tuple[tuple[float, "MomentFunction"], ...]
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        for w, _ in self.terms:
            if w < 0:
                raise ValueError("combination weights must be >= 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.a + self.b * x
        for w, f in self.terms:
            out = out + w * f(x)
        return out


MomentFunction = Union[PowerPlus, Exponential, AbsPower, CoshMoment, AffineCombo]
