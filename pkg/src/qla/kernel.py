"""Arrival-count sequences a_j, nu_j and b_j.

``a_j`` (``nu_j``) is the probability that ``j`` Poisson arrivals occur during
one service (vacation) time; ``b_j`` is the number of arrivals left behind by
the first departure of a busy period, which starts with the arrivals of the
last vacation.  Tail sums are carried alongside each sequence so that the
stochastic complements of the embedded matrix never have to be formed as
``1 - sum``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import Arith, arith, arith_of
from .distributions import DistributionSpec, is_degenerate
from .errors import DegenerateVacation, InvalidConfig, TruncationError


@dataclass(frozen=True)
class CountKernel:
    """The three count sequences, indexed ``0..n_max``, plus their tails.

    ``*_tail[j]`` is the mass strictly beyond index ``j``, so
    ``a_tail[n_max]`` is the truncation mass of ``a``.
    """

    lam: float
    a: np.ndarray
    nu: np.ndarray
    b: np.ndarray
    a_tail: np.ndarray
    nu_tail: np.ndarray
    b_tail: np.ndarray
    n_max: int
    standard: bool = False

    @property
    def ar(self) -> Arith:
        return arith_of(self.a)

    @property
    def truncation_mass(self) -> tuple:
        """``(1 - sum a_j, 1 - sum nu_j)`` over the stored indices."""
        return self.a_tail[-1], self.nu_tail[-1]


def arrival_counts(dist: DistributionSpec, lam: float, n_max: int,
                   ar: Arith | None = None, max_deficit: float | None = 1e-12):
    """Counts ``x_0..x_{n_max}`` of Poisson(lam) arrivals during one draw of ``dist``.

    Returns the pmf and its tails ``T_j = P(count > j)`` as arrays.  Raises
    :class:`TruncationError` when ``T_{n_max}`` exceeds ``max_deficit``
    (pass ``None`` to skip the check, as finite-capacity work does).
    """
    if not lam > 0:
        raise InvalidConfig("arrival rate must be positive")
    if n_max < 1:
        raise InvalidConfig("n_max must be >= 1")
    ar = ar or arith()
    pmf = ar.array(dist.count_pmf(lam, n_max, ar))
    tail = ar.array(dist.count_tail(lam, n_max, ar))
    if max_deficit is not None and tail[-1] > max_deficit:
        raise TruncationError(
            f"{dist.family}: mass {float(tail[-1]):.3g} beyond n_max={n_max} "
            f"exceeds {max_deficit:g}")
    return pmf, tail


def _convolve(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` terms of the convolution of ``x`` and ``y``."""
    if x.dtype != object:
        return np.convolve(x[:n], y[:n])[:n]
    out = np.empty(n, dtype=object)
    for j in range(n):
        out[j] = np.dot(x[: j + 1], y[j::-1])
    return out


def boundary_counts(a: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """``b_j = sum_{i=1}^{j+1} nu_i a_{j+1-i} / (1 - nu_0)`` for j = 0..len(nu)-2."""
    a, nu = np.asarray(a), np.asarray(nu)
    one_minus_nu0 = 1 - nu[0]
    if one_minus_nu0 <= 0:
        raise DegenerateVacation("nu_0 = 1: use b_j = a_j for a zero vacation")
    n = len(nu) - 1
    if len(a) < n:
        raise ValueError("a must be at least len(nu) - 1 long")
    return _convolve(nu[1:], a, n) / one_minus_nu0


def _boundary_tails(a, a_tail, nu_tail, one_minus_nu0, n):
    # sum_{k>j} b_k = sum_{l<=j} a_l T_nu(j-l+1)/(1-nu_0) + T_a(j): positive terms only
    return _convolve(a, nu_tail[1:], n) / one_minus_nu0 + a_tail[:n]


def build_kernel(lam: float, service: DistributionSpec, vacation: DistributionSpec,
                 n_max: int, ar: Arith | None = None,
                 max_deficit: float | None = 1e-12) -> CountKernel:
    """Compute a, nu, b (and their tails) up to index ``n_max``.

    A vacation law concentrated at 0 yields the standard M/G/1 kernel with
    ``b = a``.
    """
    ar = ar or arith()
    a, a_tail = arrival_counts(service, lam, n_max, ar, max_deficit)
    if is_degenerate(vacation):
        nu, nu_tail = arrival_counts(vacation, lam, n_max, ar, None)
        return CountKernel(lam, a, nu, a.copy(), a_tail, nu_tail, a_tail.copy(),
                           n_max, standard=True)
    nu, nu_tail = arrival_counts(vacation, lam, n_max + 1, ar, max_deficit)
    one_minus_nu0 = 1 - nu[0]
    n = n_max + 1
    b = boundary_counts(a, nu)
    b_tail = _boundary_tails(a, a_tail, nu_tail, one_minus_nu0, n)
    return CountKernel(lam, a, nu[:n], b, a_tail, nu_tail[:n], b_tail, n_max)
