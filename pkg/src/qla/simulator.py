"""Discrete-event simulation of the M/G/1/N queue with multiple vacations.

The event loop is compiled with numba and consumes variates from
pre-generated chunks, which are refilled from a seeded
``numpy.random.Generator`` in a fixed order so that a seed fully determines
the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from .chains import QueueModel
from .distributions import is_degenerate
from .errors import InvalidConfig

CHUNK = 1 << 16

# indices into the float state vector
T_NOW, T_ARRIVAL, T_SERVER = range(3)
# indices into the integer state vector
(I_CONTENT, I_BUSY, I_ARRIVALS, I_ACCEPTED, I_DEPARTURES,
 I_IA, I_S, I_V) = range(8)

NEED_INTERARRIVAL, NEED_SERVICE, NEED_VACATION, DONE = range(4)


@dataclass(frozen=True)
class SimConfig:
    model: QueueModel
    capacity: int
    warmup_arrivals: int = 100_000
    measured_arrivals: int = 1_000_000
    batches: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidConfig("capacity must be >= 1")
        if self.batches < 10:
            raise InvalidConfig("at least 10 batches are required")
        if self.measured_arrivals < 10 * self.batches:
            raise InvalidConfig("measured_arrivals must be >= 10 * batches")
        if self.warmup_arrivals < 0:
            raise InvalidConfig("warmup_arrivals must be >= 0")
        if is_degenerate(self.model.vacation):
            raise InvalidConfig("zero-length vacations cannot be simulated")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class LossEstimate:
    """Blocking fraction over the measured arrivals with a batch-means CI.

    ``time_full`` is the fraction of measured time spent with N customers
    in the system; under Poisson arrivals it estimates the same quantity as
    ``point``.  ``accepted == departures + final_content`` holds for the
    whole run, warm-up included.
    """

    point: float
    half_width_95: float
    batch_means: tuple
    arrivals_seen: int
    blocked: int
    time_full: float
    time_full_half_width_95: float
    accepted: int
    departures: int
    final_content: int
    seed: int

    @property
    def interval(self) -> tuple:
        return self.point - self.half_width_95, self.point + self.half_width_95

    def covers(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


@numba.njit(cache=True)
def _advance(fs, ist, N, ia, sv, vac, warmup, batch_size, n_batches,
             batch_blocked, batch_full_time, batch_time):
    """Run events until a variate chunk runs dry or all arrivals are done."""
    total = warmup + batch_size * n_batches
    while True:
        # refill before touching state so every event runs to completion
        if ist[I_IA] == ia.shape[0]:
            return NEED_INTERARRIVAL
        if ist[I_S] == sv.shape[0]:
            return NEED_SERVICE
        if ist[I_V] == vac.shape[0]:
            return NEED_VACATION
        t_arr = fs[T_ARRIVAL]
        t_srv = fs[T_SERVER]
        if t_srv <= t_arr:
            # server event first: ties go to completions / vacation ends
            # measured time runs from the first to the last measured arrival
            k = ist[I_ARRIVALS] - warmup
            if 0 < k < batch_size * n_batches:
                dt = t_srv - fs[T_NOW]
                b = (k - 1) // batch_size
                batch_time[b] += dt
                if ist[I_CONTENT] == N:
                    batch_full_time[b] += dt
            fs[T_NOW] = t_srv
            if ist[I_BUSY] == 1:
                ist[I_CONTENT] -= 1
                ist[I_DEPARTURES] += 1
                if ist[I_CONTENT] > 0:
                    fs[T_SERVER] = t_srv + sv[ist[I_S]]
                    ist[I_S] += 1
                else:
                    ist[I_BUSY] = 0
                    fs[T_SERVER] = t_srv + vac[ist[I_V]]
                    ist[I_V] += 1
            else:
                if ist[I_CONTENT] > 0:
                    ist[I_BUSY] = 1
                    fs[T_SERVER] = t_srv + sv[ist[I_S]]
                    ist[I_S] += 1
                else:
                    fs[T_SERVER] = t_srv + vac[ist[I_V]]
                    ist[I_V] += 1
        else:
            k = ist[I_ARRIVALS] - warmup
            if 0 < k < batch_size * n_batches:
                dt = t_arr - fs[T_NOW]
                b = (k - 1) // batch_size
                batch_time[b] += dt
                if ist[I_CONTENT] == N:
                    batch_full_time[b] += dt
            fs[T_NOW] = t_arr
            if 0 <= k < batch_size * n_batches:
                if ist[I_CONTENT] == N:
                    batch_blocked[k // batch_size] += 1
            if ist[I_CONTENT] < N:
                ist[I_CONTENT] += 1
                ist[I_ACCEPTED] += 1
            ist[I_ARRIVALS] += 1
            if ist[I_ARRIVALS] >= total:
                return DONE
            fs[T_ARRIVAL] = t_arr + ia[ist[I_IA]]
            ist[I_IA] += 1


def _student_half_width(values: np.ndarray) -> float:
    n = len(values)
    return float(stats.t.ppf(0.975, n - 1) * values.std(ddof=1) / math.sqrt(n))


def simulate(config: SimConfig) -> LossEstimate:
    """Simulate one replication and estimate the loss probability."""
    model, N = config.model, config.capacity
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    lam = model.lam

    def interarrivals():
        return rng.exponential(1.0 / lam, CHUNK)

    def services():
        return np.asarray(model.service.sample(rng, CHUNK), dtype=float)

    def vacations():
        return np.asarray(model.vacation.sample(rng, CHUNK), dtype=float)

    ia, sv, vac = interarrivals(), services(), vacations()
    fs = np.zeros(3)
    ist = np.zeros(8, dtype=np.int64)
    # start empty, on vacation, first arrival pending
    fs[T_ARRIVAL] = ia[0]
    fs[T_SERVER] = vac[0]
    ist[I_IA] = 1
    ist[I_V] = 1

    n_batches = config.batches
    batch_size = config.measured_arrivals // n_batches
    blocked = np.zeros(n_batches, dtype=np.int64)
    full_time = np.zeros(n_batches)
    batch_time = np.zeros(n_batches)

    while True:
        status = _advance(fs, ist, N, ia, sv, vac, config.warmup_arrivals,
                          batch_size, n_batches, blocked, full_time, batch_time)
        if status == DONE:
            break
        if status == NEED_INTERARRIVAL:
            ia, ist[I_IA] = interarrivals(), 0
        elif status == NEED_SERVICE:
            sv, ist[I_S] = services(), 0
        else:
            vac, ist[I_V] = vacations(), 0

    means = blocked / batch_size
    full_frac = full_time / batch_time
    seen = batch_size * n_batches
    return LossEstimate(
        point=float(blocked.sum() / seen),
        half_width_95=_student_half_width(means),
        batch_means=tuple(float(m) for m in means),
        arrivals_seen=seen,
        blocked=int(blocked.sum()),
        time_full=float(full_time.sum() / batch_time.sum()),
        time_full_half_width_95=_student_half_width(full_frac),
        accepted=int(ist[I_ACCEPTED]),
        departures=int(ist[I_DEPARTURES]),
        final_content=int(ist[I_CONTENT]),
        seed=config.seed,
    )


def simulate_replications(config: SimConfig, seeds, jobs: int = 1) -> list:
    """Independent replications of ``config``, one per seed, in seed order."""
    configs = [SimConfig(config.model, config.capacity, config.warmup_arrivals,
                         config.measured_arrivals, config.batches, int(s)) for s in seeds]
    if jobs <= 1:
        return [simulate(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(simulate, configs))


def pooled_estimate(estimates) -> tuple:
    """Mean of replication point estimates with a Student-t 95% half-width."""
    points = np.array([e.point for e in estimates])
    if len(points) < 2:
        raise InvalidConfig("pooling needs at least two replications")
    return float(points.mean()), _student_half_width(points)
