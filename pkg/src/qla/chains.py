"""Embedded Markov chains and exact loss probabilities.

The queue length seen by departing customers of the M/G/1/N queue with
exhaustive service and multiple vacations is a Markov chain on
``{0, ..., N-1}``; its infinite-capacity counterpart has a unique invariant
measure ``pi`` (a probability vector only when ``rho < 1``).  Finite and
infinite solutions are linked by ``pi_i(N) = pi_i / S_pi(N)``.

All routines accept numbers of either precision; the precision of a result
is that of the kernel it was computed from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import HIGH_PRECISION_DIGITS, Arith, arith, arith_of
from .distributions import DistributionSpec, Zero, is_degenerate
from .errors import InvalidConfig, KernelTooShort, PrecisionLoss
from .kernel import CountKernel, arrival_counts, build_kernel

CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class QueueModel:
    """M/G/1/N queue with exhaustive service and multiple vacations.

    ``vacation = Zero()`` gives the standard M/G/1/N queue.
    """

    lam: float
    service: DistributionSpec
    vacation: DistributionSpec = field(default_factory=Zero)

    def __post_init__(self):
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam)
                and self.lam > 0):
            raise InvalidConfig(f"arrival rate must be positive, got {self.lam!r}")
        if is_degenerate(self.service):
            raise InvalidConfig("service time must have a positive mean")
        if not math.isfinite(self.service.mean()) or not math.isfinite(self.vacation.mean()):
            raise InvalidConfig("E[S] and E[V] must be finite")

    @property
    def rho(self) -> float:
        return self.lam * self.service.mean()

    @property
    def standard(self) -> bool:
        return is_degenerate(self.vacation)

    @property
    def regime(self) -> str:
        """``'sub'``, ``'critical'`` or ``'super'`` by traffic intensity."""
        if abs(self.rho - 1.0) <= CRITICAL_TOL:
            return "critical"
        return "sub" if self.rho < 1 else "super"

    def rho_in(self, ar: Arith):
        return ar.num(self.lam) * self.service.mean(ar)

    def nu0(self, ar: Arith | None = None):
        ar = ar or arith()
        return self.vacation.laplace(self.lam, ar)

    def vacation_weight(self, ar: Arith | None = None):
        """``E[V] / (1 - nu_0)``, the mean total vacation per busy period.

        Tends to ``1/lam`` as ``V -> 0``, the value used for the standard queue.
        """
        ar = ar or arith()
        if self.standard:
            return 1 / ar.num(self.lam)
        return self.vacation.mean(ar) / (1 - self.nu0(ar))

    def kernel(self, n_max: int, dps: int | None = None,
               max_deficit: float | None = None) -> CountKernel:
        return build_kernel(self.lam, self.service, self.vacation, n_max,
                            arith(dps), max_deficit)


@dataclass(frozen=True)
class InvariantSolution:
    """An invariant vector (finite chain) or measure prefix (infinite chain).

    ``normalization`` is ``'probability'`` or ``'pi0-anchored'``
    (``pi_0 = 1``).  ``partial_sums[n]`` holds ``S_pi(n) = sum_{j<n} pi_j``.
    """

    kind: str
    values: np.ndarray
    normalization: str
    partial_sums: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, kind, values, normalization):
        sums = np.empty(len(values) + 1, dtype=values.dtype)
        sums[0] = values[0] * 0
        sums[1:] = np.cumsum(values)
        return cls(kind, values, normalization, sums)

    @property
    def size(self) -> int:
        return len(self.values)

    def partial_sum(self, n: int):
        """``S_pi(n) = sum_{j=0}^{n-1} pi_j``."""
        if n > self.size:
            raise IndexError(f"prefix holds {self.size} terms, S({n}) requested")
        return self.partial_sums[n]

    def tail_sum(self, n: int):
        """``sum_{j>=n} pi_j`` for a probability-normalized measure."""
        if self.normalization != "probability":
            raise ValueError("tail sums need a probability-normalized measure")
        return 1 - self.partial_sum(n)


# -- finite chain -----------------------------------------------------------

def build_embedded_matrix(model: QueueModel, N: int, kernel: CountKernel) -> np.ndarray:
    """N x N transition matrix of the departure-epoch chain.

    Row 0 is ``(b_0, ..., b_{N-2}, 1 - sum b)``, row ``i >= 1`` is
    ``(0, .., 0, a_0, ..., a_{N-1-i}, 1 - sum a)`` starting at column ``i-1``.
    """
    if N < 2:
        raise InvalidConfig("capacity N must be >= 2")
    if kernel.n_max < N - 2:
        raise KernelTooShort(f"kernel reaches {kernel.n_max}, matrix needs {N - 2}")
    ar = kernel.ar
    P = np.empty((N, N), dtype=ar.dtype)
    P[...] = ar.num(0)
    P[0, : N - 1] = kernel.b[: N - 1]
    P[0, N - 1] = kernel.b_tail[N - 2]
    for i in range(1, N):
        width = N - i  # a_0..a_{N-1-i}
        P[i, i - 1 : N - 1] = kernel.a[:width]
        P[i, N - 1] = kernel.a_tail[width - 1]
    return P


def gth_solve(P: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible stochastic matrix by GTH elimination.

    States are censored out from the last one down; only the entries left of
    the diagonal enter the pivots, so no subtraction ever occurs.  Zero
    entries in the pivot row are skipped, which makes the cost O(N^2) for
    the Hessenberg matrices of M/G/1 type.  Works for float and mpmath
    object arrays alike.
    """
    A = np.array(P, dtype=P.dtype, copy=True)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("matrix must be square")
    pivots = [None] * n
    for k in range(n - 1, 0, -1):
        row = A[k, :k]
        s = row.sum()
        if not s > 0:
            raise ValueError("matrix is reducible")
        pivots[k] = s
        nz = np.flatnonzero(row != 0)
        col = A[:k, k] / s
        if len(nz) == 1:
            j = nz[0]
            A[:k, j] += col * row[j]
        else:
            A[:k, nz] += np.outer(col, row[nz])
    x = np.empty(n, dtype=A.dtype)
    x[0] = A[0, 0] * 0 + 1
    for k in range(1, n):
        x[k] = np.dot(x[:k], A[:k, k]) / pivots[k]
    return x / x.sum()


def invariant_vector_finite(P: np.ndarray) -> InvariantSolution:
    """Probability vector ``pi(N)`` with ``pi(N) P = pi(N)``."""
    return InvariantSolution.from_values("finite", gth_solve(P), "probability")


def finite_solution(model: QueueModel, N: int, dps: int | None = None,
                    kernel: CountKernel | None = None) -> InvariantSolution:
    """Build ``P(N)`` and solve it (``N = 1`` is the one-state chain)."""
    if N == 1:
        ar = arith(dps) if kernel is None else kernel.ar
        return InvariantSolution.from_values("finite", ar.array([1]), "probability")
    if kernel is None:
        kernel = model.kernel(N + 50, dps)
    return invariant_vector_finite(build_embedded_matrix(model, N, kernel))


# -- infinite chain ---------------------------------------------------------

def invariant_measure_infinite(model: QueueModel, kernel: CountKernel, n: int,
                               eps_neg: float | None = None) -> InvariantSolution:
    """``pi_0, ..., pi_n`` of the infinite chain by forward recursion.

    ``pi_{j+1} = (pi_j - pi_0 b_j - sum_{k=1}^{j} pi_k a_{j+1-k}) / a_0``.
    Probability-normalized (``pi_0 = (1-rho)/(lam w)``) when ``rho < 1``,
    otherwise anchored at ``pi_0 = 1``.  The recursion subtracts quantities
    of similar size, so run it in high precision for long prefixes; a value
    below ``-eps_neg`` raises :class:`PrecisionLoss`.
    """
    if n > kernel.n_max:
        raise KernelTooShort(f"kernel reaches {kernel.n_max}, prefix needs {n}")
    ar = kernel.ar
    if eps_neg is None:
        eps_neg = 1e-30 if ar.high else 0.0
    a, b = kernel.a, kernel.b
    if not a[0] > 0:
        raise ValueError("a_0 must be positive")
    pi = ar.zeros(n + 1)
    if model.regime == "sub":
        pi[0] = (1 - model.rho_in(ar)) / (ar.num(model.lam) * model.vacation_weight(ar))
        normalization = "probability"
    else:
        pi[0] = ar.num(1)
        normalization = "pi0-anchored"
    for j in range(n):
        conv = np.dot(pi[1 : j + 1], a[j:0:-1]) if j else 0
        nxt = (pi[j] - pi[0] * b[j] - conv) / a[0]
        if nxt < -eps_neg:
            raise PrecisionLoss(
                f"pi_{j + 1} = {float(nxt):.3g} < 0 after cancellation; raise precision")
        pi[j + 1] = nxt
    return InvariantSolution.from_values("infinite-prefix", pi, normalization)


def infinite_solution(model: QueueModel, n: int, dps: int | None = None,
                      max_deficit: float | None = None) -> InvariantSolution:
    """Convenience wrapper; prefixes longer than 30 default to 50 digits."""
    if dps is None and n > 30:
        dps = HIGH_PRECISION_DIGITS
    return invariant_measure_infinite(model, model.kernel(n, dps, max_deficit), n)


# -- loss probabilities -----------------------------------------------------

def _full_scale(model: QueueModel, pi0N, ar: Arith):
    # lam (w pi_0(N) + E[S]); 1/this is the time-stationary weight of pi(N)
    lam = ar.num(model.lam)
    return lam * (model.vacation_weight(ar) * pi0N + model.service.mean(ar))


def loss_probability_exact(model: QueueModel, N: int, solution: InvariantSolution):
    """``P_loss(N) = 1 - (1-nu_0)/lam / (E[V] pi_0(N) + E[S](1-nu_0))``.

    For ``V = 0`` this reduces to ``1 - 1/(pi_0(N) + rho)``.
    """
    pi0N = solution.values[0]
    ar = arith_of(solution.values)
    return 1 - 1 / _full_scale(model, pi0N, ar)


def loss_from_infinite(model: QueueModel, N: int, measure: InvariantSolution):
    """``P_loss(N)`` from the infinite measure (any normalization)::

        (w pi_0 + (E[S] - 1/lam) S_pi(N)) / (w pi_0 + E[S] S_pi(N))

    with ``w = E[V]/(1-nu_0)``.
    """
    ar = arith_of(measure.values)
    w = model.vacation_weight(ar)
    es = model.service.mean(ar)
    S = measure.partial_sum(N)
    head = w * measure.values[0]
    return (head + (es - 1 / ar.num(model.lam)) * S) / (head + es * S)


def time_stationary_distribution(model: QueueModel, N: int,
                                 solution: InvariantSolution) -> np.ndarray:
    """Time-average queue-length law on ``0..N`` (PASTA: also seen by arrivals)."""
    ar = arith_of(solution.values)
    scale = _full_scale(model, solution.values[0], ar)
    out = np.empty(N + 1, dtype=ar.dtype)
    out[:N] = solution.values / scale
    out[N] = 1 - 1 / scale
    return out


@dataclass(frozen=True)
class TVDistance:
    """``||pi*(N) - pi||`` and the measure mass beyond the computed prefix."""

    value: float
    tail_remainder: float


def tv_distance(model: QueueModel, N: int, n_tail: int = 50,
                dps: int | None = HIGH_PRECISION_DIGITS) -> TVDistance:
    """``sum_{j<=N} |pi*_j(N) - pi_j| + sum_{j>N} pi_j`` for ``rho < 1``.

    The infinite measure is computed to index ``N + n_tail``; since it is
    probability-normalized the tail ``sum_{j>N} pi_j`` is ``1 - S_pi(N+1)``
    exactly, and the mass beyond the prefix is reported as the remainder.
    """
    if model.regime != "sub":
        raise InvalidConfig("the total-variation distance needs rho < 1")
    measure = infinite_solution(model, N + n_tail, dps)
    ar = arith_of(measure.values)
    finite = finite_solution(model, N, dps=ar.dps)
    star = time_stationary_distribution(model, N, finite)
    head = sum(abs(star[j] - measure.values[j]) for j in range(N + 1))
    value = head + measure.tail_sum(N + 1)
    remainder = measure.tail_sum(N + n_tail + 1)
    return TVDistance(float(value), float(remainder))


# -- GI/M/1/N ---------------------------------------------------------------

def gim1_embedded_matrix(arrival: DistributionSpec, mu: float, N: int,
                         ar: Arith | None = None) -> np.ndarray:
    """(N+1) x (N+1) chain of the number in system seen by arrivals of GI/M/1/N.

    After an arrival the system holds ``m = min(i+1, N)``; ``k < m``
    exponential services complete before the next arrival with probability
    ``beta_k``, and the system empties otherwise.
    """
    ar = ar or arith()
    beta, beta_tail = arrival_counts(arrival, mu, N, ar, None)
    P = np.empty((N + 1, N + 1), dtype=ar.dtype)
    P[...] = ar.num(0)
    for i in range(N + 1):
        m = min(i + 1, N)
        for k in range(m):
            P[i, m - k] = beta[k]
        P[i, 0] = beta_tail[m - 1]
    return P


def gim1_loss_exact(arrival: DistributionSpec, mu: float, N: int,
                    dps: int | None = None):
    """GI/M/1/N loss probability: the mass at state N of the arrival-epoch chain."""
    return gth_solve(gim1_embedded_matrix(arrival, mu, N, arith(dps)))[N]


def dual_model(arrival: DistributionSpec, mu: float) -> QueueModel:
    """M/G/1 queue with Poisson(mu) arrivals and service law ``arrival``."""
    return QueueModel(mu, arrival, Zero())


def gim1_loss_dual(arrival: DistributionSpec, mu: float, N: int,
                   dps: int | None = None):
    """GI/M/1/N loss as ``pi_0(N+1)`` of the dual standard M/G/1/(N+1) queue."""
    return finite_solution(dual_model(arrival, mu), N + 1, dps).values[0]
