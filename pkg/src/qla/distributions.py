"""Service, vacation and interarrival time laws.

Each family exposes what the analytic pipeline needs:

* moments, tail and density,
* the Laplace-Stieltjes transform ``F*(t)`` and its derivatives expressed in
  the ``z`` variable, ``F*(lam - lam*z)``,
* the Poisson arrival-count probabilities
  ``x_j = int (lam t)^j e^{-lam t} / j! dF(t)`` and their tails,
* the singularity descriptor of ``z -> F*(lam - lam*z)``,
* inverse-CDF sampling.

Numbers are produced in the precision of the :class:`~qla.arith.Arith`
passed as ``ar`` (doubles by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from .arith import Arith, arith
from .errors import DomainError, InvalidConfig

_DOMAIN_MARGIN = 1e-12


@dataclass(frozen=True)
class SingularityDescriptor:
    """Leftmost singular point of ``z -> F*(lam - lam*z)`` and its shape.

    Near ``z = location`` the transform behaves like
    ``coefficient / (location - z)**order``.  ``location`` is ``inf`` for
    entire transforms and 1 for heavy-tailed laws, for which
    ``regular_variation = (alpha, L0)`` describes ``F(x) ~ L0 x**-alpha``
    and ``density_power = (theta, c)`` describes ``f(x) ~ c x**-theta``.
    """

    location: float
    order: float | None = None
    coefficient: float | None = None
    regular_variation: tuple[float, float] | None = None
    density_power: tuple[float, float] | None = None

    @property
    def entire(self) -> bool:
        return math.isinf(self.location)

    @property
    def heavy(self) -> bool:
        return self.regular_variation is not None


class DistributionSpec:
    """Base class of the built-in families."""

    family: str = ""
    #: transform converges for t > -abscissa
    abscissa: float = math.inf
    #: transform also converges at t = -abscissa
    closed_at_abscissa: bool = False
    has_density: bool = True

    # -- moments / shape ---------------------------------------------------
    def mean(self, ar: Arith | None = None):
        return self.moment(1, ar)

    def second_moment(self, ar: Arith | None = None):
        return self.moment(2, ar)

    def moment(self, k: int, ar: Arith | None = None):
        return self._mtransform(k, 0, ar or arith())

    def tail(self, x: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        return 1.0 - self.tail(x)

    def pdf(self, x: float) -> float:
        raise NotImplementedError

    # -- transforms --------------------------------------------------------
    def _check_domain(self, t) -> None:
        edge = -self.abscissa
        if self.closed_at_abscissa:
            if t < edge:
                raise DomainError(f"{self.family} transform diverges at t={t}")
        elif t <= edge + _DOMAIN_MARGIN * max(1.0, abs(edge)):
            raise DomainError(f"{self.family} transform diverges at t={t}")

    def laplace(self, t, ar: Arith | None = None):
        """``F*(t) = E[exp(-t X)]``; :class:`DomainError` if divergent."""
        ar = ar or arith()
        self._check_domain(t)
        return self._mtransform(0, ar.num(t), ar)

    def transform_z(self, z, lam, ar: Arith | None = None):
        """``F*(lam - lam*z)``."""
        ar = ar or arith()
        lam = ar.num(lam)
        return self.laplace(lam - lam * ar.num(z), ar)

    def laplace_d1(self, z, lam, ar: Arith | None = None):
        """``d/dz F*(lam - lam*z) = int lam t e^{-(lam - lam z) t} dF(t)``."""
        return self._zderiv(1, z, lam, ar)

    def laplace_d2(self, z, lam, ar: Arith | None = None):
        """``d^2/dz^2 F*(lam - lam*z) = int (lam t)^2 e^{-(lam - lam z) t} dF(t)``."""
        return self._zderiv(2, z, lam, ar)

    def _zderiv(self, k, z, lam, ar):
        ar = ar or arith()
        lam = ar.num(lam)
        s = lam - lam * ar.num(z)
        self._check_domain(s)
        return lam**k * self._mtransform(k, s, ar)

    def _mtransform(self, k: int, s, ar: Arith):
        """``int t^k e^{-s t} dF(t)`` for ``s`` inside the domain."""
        raise NotImplementedError

    # -- arrival counts ----------------------------------------------------
    def count_pmf(self, lam, n: int, ar: Arith | None = None) -> list:
        """Probabilities that 0..n Poisson(lam) arrivals occur during X."""
        raise NotImplementedError

    def count_tail(self, lam, n: int, ar: Arith | None = None) -> list:
        """``T_j = P(count > j)`` for j = 0..n, computed without cancellation."""
        raise NotImplementedError

    # -- sampling ----------------------------------------------------------
    def tail_quantile(self, u):
        """Inverse of the tail: the ``x`` with ``P(X > x) = u``."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        u = 1.0 - rng.random(size)  # (0, 1]
        return self.tail_quantile(u)

    def singularity(self, lam: float) -> SingularityDescriptor:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InvalidConfig(f"{name} must be a positive finite number, got {value!r}")


def _geometric_counts(p, lam, n, ar):
    p, lam = ar.num(p), ar.num(lam)
    success = p / (lam + p)
    q = lam / (lam + p)
    out, x = [], success
    for _ in range(n + 1):
        out.append(x)
        x = x * q
    return out


def _geometric_tails(p, lam, n, ar):
    p, lam = ar.num(p), ar.num(lam)
    q = lam / (lam + p)
    out, x = [], q
    for _ in range(n + 1):
        out.append(x)
        x = x * q
    return out


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float
    family = "exponential"

    def __post_init__(self):
        _positive("rate", self.rate)

    @property
    def abscissa(self):
        return self.rate

    def tail(self, x):
        return 1.0 if x < 0 else math.exp(-self.rate * x)

    def pdf(self, x):
        return 0.0 if x < 0 else self.rate * math.exp(-self.rate * x)

    def _mtransform(self, k, s, ar):
        p = ar.num(self.rate)
        return math.factorial(k) * p / (p + s) ** (k + 1)

    def count_pmf(self, lam, n, ar=None):
        return _geometric_counts(self.rate, lam, n, ar or arith())

    def count_tail(self, lam, n, ar=None):
        return _geometric_tails(self.rate, lam, n, ar or arith())

    def tail_quantile(self, u):
        return -np.log(u) / self.rate

    def singularity(self, lam):
        return SingularityDescriptor(1.0 + self.rate / lam, 1.0, self.rate / lam)

    def to_dict(self):
        return {"family": self.family, "rate": self.rate}


@dataclass(frozen=True)
class Erlang(DistributionSpec):
    """Sum of ``shape`` exponential phases of rate ``rate``."""

    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        if not (isinstance(self.shape, int) and self.shape >= 1):
            raise InvalidConfig(f"shape must be an integer >= 1, got {self.shape!r}")
        _positive("rate", self.rate)

    @property
    def abscissa(self):
        return self.rate

    def tail(self, x):
        if x <= 0:
            return 1.0
        return float(special.gammaincc(self.shape, self.rate * x))

    def pdf(self, x):
        if x < 0:
            return 0.0
        m, a = self.shape, self.rate
        return a**m * x ** (m - 1) * math.exp(-a * x) / math.factorial(m - 1)

    def _mtransform(self, k, s, ar):
        m, a = self.shape, ar.num(self.rate)
        rising = math.prod(range(m, m + k))
        return rising * (a / (a + s)) ** m / (a + s) ** k

    def count_pmf(self, lam, n, ar=None):
        ar = ar or arith()
        m, a, lam = self.shape, ar.num(self.rate), ar.num(lam)
        success, q = a / (lam + a), lam / (lam + a)
        out, x = [], success**m
        for j in range(n + 1):
            out.append(x)
            # C(j+m, j+1) / C(j+m-1, j) = (j+m)/(j+1)
            x = x * q * (j + m) / (j + 1)
        return out

    def count_tail(self, lam, n, ar=None):
        # P(count > j) = P(fewer than m successes in j+m trials)
        ar = ar or arith()
        m, a, lam = self.shape, ar.num(self.rate), ar.num(lam)
        success, q = a / (lam + a), lam / (lam + a)
        out = []
        for j in range(n + 1):
            trials = j + m
            out.append(sum(ar.binomial(trials, k) * success**k * q ** (trials - k)
                           for k in range(m)))
        return out

    def tail_quantile(self, u):
        return special.gammainccinv(self.shape, u) / self.rate

    def singularity(self, lam):
        return SingularityDescriptor(1.0 + self.rate / lam, float(self.shape),
                                     (self.rate / lam) ** self.shape)

    def to_dict(self):
        return {"family": self.family, "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class Deterministic(DistributionSpec):
    value: float
    family = "deterministic"
    has_density = False

    def __post_init__(self):
        if not (isinstance(self.value, (int, float)) and math.isfinite(self.value)
                and self.value >= 0):
            raise InvalidConfig(f"value must be finite and >= 0, got {self.value!r}")

    def tail(self, x):
        return 1.0 if x < self.value else 0.0

    def _mtransform(self, k, s, ar):
        d = ar.num(self.value)
        return d**k * ar.exp(-s * d)

    def count_pmf(self, lam, n, ar=None):
        ar = ar or arith()
        mu = ar.num(lam) * ar.num(self.value)
        out, x = [], ar.exp(-mu)
        for j in range(n + 1):
            out.append(x)
            x = x * mu / (j + 1)
        return out

    def count_tail(self, lam, n, ar=None):
        ar = ar or arith()
        mu = ar.num(lam) * ar.num(self.value)
        if mu == 0:
            return [ar.num(0)] * (n + 1)
        return [ar.gammainc(j + 1, 0, mu, regularized=True) for j in range(n + 1)]

    def tail_quantile(self, u):
        return np.zeros_like(u) + self.value if np.ndim(u) else float(self.value)

    def singularity(self, lam):
        return SingularityDescriptor(math.inf)

    def to_dict(self):
        return {"family": self.family, "value": self.value}


@dataclass(frozen=True)
class HyperExponential(DistributionSpec):
    """Mixture of exponentials: rate ``rates[i]`` with probability ``weights[i]``."""

    weights: tuple
    rates: tuple
    family = "hyperexponential"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "rates", tuple(float(p) for p in self.rates))
        if len(self.weights) != len(self.rates) or not self.weights:
            raise InvalidConfig("weights and rates must be non-empty and equally long")
        for w in self.weights:
            _positive("weight", w)
        for p in self.rates:
            _positive("rate", p)
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise InvalidConfig("weights must sum to 1")

    @property
    def abscissa(self):
        return min(self.rates)

    def tail(self, x):
        if x < 0:
            return 1.0
        return sum(w * math.exp(-p * x) for w, p in zip(self.weights, self.rates))

    def pdf(self, x):
        if x < 0:
            return 0.0
        return sum(w * p * math.exp(-p * x) for w, p in zip(self.weights, self.rates))

    def _mtransform(self, k, s, ar):
        return sum(ar.num(w) * Exponential(p)._mtransform(k, s, ar)
                   for w, p in zip(self.weights, self.rates))

    def _mix(self, per_rate, lam, n, ar):
        ar = ar or arith()
        total = [ar.num(0)] * (n + 1)
        for w, p in zip(self.weights, self.rates):
            w = ar.num(w)
            total = [t + w * x for t, x in zip(total, per_rate(p, lam, n, ar))]
        return total

    def count_pmf(self, lam, n, ar=None):
        return self._mix(_geometric_counts, lam, n, ar)

    def count_tail(self, lam, n, ar=None):
        return self._mix(_geometric_tails, lam, n, ar)

    def sample(self, rng, size=None):
        # composition: choose the phase, then invert its exponential tail
        phase = rng.choice(len(self.rates), size=size, p=self.weights)
        u = 1.0 - rng.random(size)
        return -np.log(u) / np.asarray(self.rates)[phase]

    def singularity(self, lam):
        p = min(self.rates)
        c = sum(w * r for w, r in zip(self.weights, self.rates) if r == p) / lam
        return SingularityDescriptor(1.0 + p / lam, 1.0, c)

    def to_dict(self):
        return {"family": self.family, "weights": list(self.weights),
                "rates": list(self.rates)}


@dataclass(frozen=True)
class Pareto(DistributionSpec):
    """Pareto law with tail ``(scale/x)**alpha`` for ``x >= scale``."""

    alpha: float
    scale: float
    family = "pareto"
    abscissa = 0.0
    closed_at_abscissa = True

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("scale", self.scale)
        if self.alpha <= 1:
            raise InvalidConfig("pareto alpha must exceed 1 (finite mean)")

    def tail(self, x):
        return 1.0 if x < self.scale else (self.scale / x) ** self.alpha

    def pdf(self, x):
        if x < self.scale:
            return 0.0
        return self.alpha * self.scale**self.alpha * x ** (-self.alpha - 1)

    def _mtransform(self, k, s, ar):
        a, xm = ar.num(self.alpha), ar.num(self.scale)
        if s == 0:
            if self.alpha <= k:
                return math.inf
            return a * xm**k / (a - k)
        # (s xm)^(alpha-k) Gamma(k-alpha, s xm) stays finite as s -> 0 but its
        # two factors do not, so form the product inside mpmath
        mp = ar.mp
        u = mp.mpf(s) * mp.mpf(xm)
        scaled = mp.power(u, mp.mpf(a) - k) * mp.gammainc(k - mp.mpf(a), u)
        return a * xm**k * ar.num(scaled)

    def _scaled_upper_gamma(self, x, n, ar):
        """``g_j = Gamma(j - alpha, x) / j!`` for j = 0..n.

        Direct evaluation while ``j - alpha <= 1``; above that the upward
        recurrence ``Gamma(s+1, x) = s Gamma(s, x) + x^s e^{-x}`` only adds
        positive terms.
        """
        a = ar.num(self.alpha)
        out = []
        g = None
        ex = ar.exp(-x)
        log_x = ar.log(x)
        for j in range(n + 1):
            s = j - a
            if s <= 1 or g is None:
                g = ar.gammainc(s, x) / ar.gamma(j + 1)
            else:
                sp = s - 1  # g currently holds Gamma(sp, x)/(j-1)!
                term = ar.exp(sp * log_x - ar.loggamma(j)) * ex
                g = (sp * g + term) / j
            out.append(g)
        return out

    def count_pmf(self, lam, n, ar=None):
        ar = ar or arith()
        a = ar.num(self.alpha)
        x = ar.num(lam) * ar.num(self.scale)
        pref = a * ar.power(x, a)
        return [pref * g for g in self._scaled_upper_gamma(x, n, ar)]

    def count_tail(self, lam, n, ar=None):
        # P(count > j) = P(Poisson(x) > j) + x^alpha Gamma(j+1-alpha, x)/j!
        ar = ar or arith()
        a = ar.num(self.alpha)
        x = ar.num(lam) * ar.num(self.scale)
        xa = ar.power(x, a)
        g = self._scaled_upper_gamma(x, n + 1, ar)
        return [ar.gammainc(j + 1, 0, x, regularized=True) + xa * (j + 1) * g[j + 1]
                for j in range(n + 1)]

    def tail_quantile(self, u):
        return self.scale * u ** (-1.0 / self.alpha)

    def singularity(self, lam):
        return SingularityDescriptor(
            1.0,
            regular_variation=(self.alpha, self.scale**self.alpha),
            density_power=(self.alpha + 1.0, self.alpha * self.scale**self.alpha),
        )

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "scale": self.scale}


@dataclass(frozen=True)
class Zero(DistributionSpec):
    """Point mass at 0 (``V = 0`` turns the vacation queue into M/G/1/N)."""

    family = "zero"
    has_density = False

    def tail(self, x):
        return 1.0 if x < 0 else 0.0

    def _mtransform(self, k, s, ar):
        return ar.num(1 if k == 0 else 0)

    def count_pmf(self, lam, n, ar=None):
        ar = ar or arith()
        return [ar.num(1)] + [ar.num(0)] * n

    def count_tail(self, lam, n, ar=None):
        ar = ar or arith()
        return [ar.num(0)] * (n + 1)

    def tail_quantile(self, u):
        return np.zeros_like(u) if np.ndim(u) else 0.0

    def singularity(self, lam):
        return SingularityDescriptor(math.inf)

    def to_dict(self):
        return {"family": self.family}


def is_degenerate(dist: DistributionSpec) -> bool:
    """True for laws concentrated at 0 (``Zero`` or ``Deterministic(0)``)."""
    return isinstance(dist, Zero) or (isinstance(dist, Deterministic) and dist.value == 0)


_FIELDS: dict[str, tuple[type, tuple[str, ...]]] = {
    "exponential": (Exponential, ("rate",)),
    "erlang": (Erlang, ("shape", "rate")),
    "deterministic": (Deterministic, ("value",)),
    "hyperexponential": (HyperExponential, ("weights", "rates")),
    "pareto": (Pareto, ("alpha", "scale")),
    "zero": (Zero, ()),
}


def from_dict(obj: dict[str, Any]) -> DistributionSpec:
    """Build a distribution from its tagged config object.

    >>> from_dict({"family": "erlang", "shape": 2, "rate": 0.5})
    Erlang(shape=2, rate=0.5)
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise InvalidConfig(f"distribution must be an object with a 'family': {obj!r}")
    family = str(obj["family"]).lower()
    if family not in _FIELDS:
        raise InvalidConfig(f"unknown distribution family {family!r}")
    cls, names = _FIELDS[family]
    extra = set(obj) - set(names) - {"family"}
    missing = set(names) - set(obj)
    if extra or missing:
        raise InvalidConfig(f"{family}: unexpected {sorted(extra)} / missing {sorted(missing)}")
    kwargs = {k: obj[k] for k in names}
    if family == "erlang" and isinstance(kwargs["shape"], float) and kwargs["shape"].is_integer():
        kwargs["shape"] = int(kwargs["shape"])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from exc
