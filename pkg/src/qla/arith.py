"""Working-precision arithmetic.

Every numeric routine takes an :class:`Arith` describing the number type it
computes in: hardware doubles (``dps=None``) or mpmath floats carrying
``dps`` significant decimal digits.  Special functions are always evaluated
through an mpmath context (at no fewer than 30 digits) because the
float-based ``mpmath.fp`` implementations are not accurate enough.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

import mpmath
import numpy as np

HIGH_PRECISION_DIGITS = 50


class Arith:
    """Number factory and special-function front end for one precision."""

    def __init__(self, dps: int | None = None):
        if dps is not None and dps < 15:
            raise ValueError("dps must be >= 15 (use None for doubles)")
        self.dps = dps
        self.mp = mpmath.MPContext()
        self.mp.dps = max(dps or 0, 30)
        self.mp.owner = self

    def __repr__(self):
        return f"Arith(dps={self.dps})"

    def __reduce__(self):
        return (arith, (self.dps,))

    @property
    def high(self) -> bool:
        return self.dps is not None

    @property
    def dtype(self):
        return object if self.high else float

    def num(self, x):
        """Convert ``x`` to the working number type.

        Python floats are converted through their shortest repr so that a
        configured ``0.6`` becomes the decimal 0.6 at high precision rather
        than its binary neighbour.
        """
        if not self.high:
            return float(x)
        if isinstance(x, (float, np.floating)):
            return self.mp.mpf(repr(float(x)))
        return self.mp.mpf(x)

    def array(self, values) -> np.ndarray:
        if self.high:
            return np.array([self.num(v) for v in values], dtype=object)
        return np.array([float(v) for v in values], dtype=float)

    def zeros(self, n: int) -> np.ndarray:
        if self.high:
            z = self.mp.zero
            return np.array([z] * n, dtype=object)
        return np.zeros(n)

    # -- elementary -----------------------------------------------------
    def exp(self, x):
        return self.mp.exp(x) if self.high else math.exp(x)

    def log(self, x):
        return self.mp.log(x) if self.high else math.log(x)

    def power(self, x, y):
        return self.mp.power(x, y) if self.high else float(x) ** float(y)

    def binomial(self, n, k):
        if self.high:
            return self.mp.binomial(n, k)
        return float(math.comb(int(n), int(k)))

    # -- special functions (always through mpmath) ----------------------
    def _sf(self, name, *args, **kwargs):
        if self.high:
            args = tuple(self.num(a) if isinstance(a, float) else a for a in args)
        value = getattr(self.mp, name)(*args, **kwargs)
        return self.num(value)

    def gamma(self, x):
        return self._sf("gamma", x)

    def gammainc(self, s, a=0, b=None, regularized=False):
        """Incomplete gamma, mpmath conventions (upper tail when ``b`` is None)."""
        if b is None:
            b = self.mp.inf
        return self._sf("gammainc", s, a, b, regularized=regularized)

    def loggamma(self, x):
        if not self.high:
            return math.lgamma(x)
        return self._sf("loggamma", x)


@lru_cache(maxsize=None)
def arith(dps: int | None = None) -> Arith:
    """Cached :class:`Arith` for a precision (``None`` = doubles)."""
    return Arith(dps)


def arith_of(value) -> Arith:
    """Recover the :class:`Arith` a number (or array of numbers) was made in."""
    if isinstance(value, np.ndarray):
        if value.dtype != object:
            return arith(None)
        value = value.flat[0]
    owner = getattr(getattr(value, "context", None), "owner", None)
    return owner if owner is not None else arith(None)


def precision_from_env(default: int | None) -> int | None:
    """``QLA_PRECISION`` overrides a requested digit count; ``0`` means doubles."""
    raw = os.environ.get("QLA_PRECISION")
    if raw is None or raw.strip() == "":
        return default
    digits = int(raw)
    return None if digits <= 0 else digits
