"""Asymptotic loss probabilities as the capacity N grows.

:func:`classify` sorts a model into one of the decay regimes below and
:func:`asymptotic_loss` returns the limit law for it as an
:class:`AsymptoticEstimate`.  The standard M/G/1/N queue (``V = 0``) and the
GI/M/1/N queue (through its dual M/G/1 queue) have their own entry points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from scipy.optimize import brentq
from scipy.special import gamma

from .chains import QueueModel, dual_model
from .distributions import DistributionSpec
from .errors import DomainError, NoRootError, UnclassifiableError

ROOT_TOL = 1e-13


class Regime(str, enum.Enum):
    SUBCRIT_NONGEOM = "SUBCRIT_NONGEOM"
    SUBCRIT_GEOM = "SUBCRIT_GEOM"
    SUBCRIT_HEAVY_BOTH = "SUBCRIT_HEAVY_BOTH"
    SUBCRIT_HEAVY_S = "SUBCRIT_HEAVY_S"
    SUBCRIT_HEAVY_V = "SUBCRIT_HEAVY_V"
    CRIT_FINITE_VAR = "CRIT_FINITE_VAR"
    CRIT_POWER = "CRIT_POWER"
    CRIT_LOG = "CRIT_LOG"
    SUPERCRIT = "SUPERCRIT"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class AsymptoticEstimate:
    """Leading-order law ``P_loss(N) ~ offset + constant * L0 * N^p * [ln N] * decay(N)``.

    ``decay(N)`` is ``rate**-N`` for ``rate > 1``, ``rate**N`` for
    ``rate < 1`` and 1 for ``rate == 1``.  ``slowly_varying`` is the
    constant value ``L0`` of the slowly varying factor in heavy-tailed
    regimes (1 elsewhere).
    """

    regime: Regime
    constant: float
    rate: float = 1.0
    poly_order: float = 0.0
    log_factor: bool = False
    offset: float = 0.0
    slowly_varying: float = 1.0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("constant", "rate", "poly_order", "offset", "slowly_varying"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def log_deviation(self, N: float) -> float:
        """Natural log of ``evaluate(N) - offset`` (safe for huge N)."""
        out = math.log(self.constant * self.slowly_varying) + self.poly_order * math.log(N)
        if self.log_factor:
            out += math.log(math.log(N))
        if self.rate > 1:
            out -= N * math.log(self.rate)
        elif self.rate < 1:
            out += N * math.log(self.rate)
        return out

    def deviation(self, N: float) -> float:
        return math.exp(self.log_deviation(N))

    def evaluate(self, N: float) -> float:
        return self.offset + self.deviation(N)


# -- fixed points -----------------------------------------------------------

def _fixed_point_gap(dist: DistributionSpec, lam: float):
    def g(z):
        return z - dist.transform_z(z, lam)
    return g


def _value_at_singularity(dist: DistributionSpec, lam: float, R: float) -> float:
    """``F*(lam - lam R)``, ``inf`` when the transform diverges there."""
    if math.isinf(R):
        return math.inf
    try:
        return float(dist.transform_z(R, lam))
    except DomainError:
        return math.inf


def _bracketed_root(g, lo, hi):
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise NoRootError(f"no sign change on [{lo}, {hi}]")
    z = brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    if abs(g(z)) > ROOT_TOL:
        raise NoRootError(f"root residual {abs(g(z)):.2e} above {ROOT_TOL}")
    return z


def solve_fixed_point_sub(model: QueueModel) -> float:
    """Root ``z1 in (1, R_S)`` of ``z = S*(lam - lam z)`` for ``rho < 1``.

    Exists iff ``R_S < S*(lam - lam R_S)`` (divergence at ``R_S`` counts);
    an entire transform (``R_S = inf``) always has one.
    """
    lam, S = model.lam, model.service
    if model.regime != "sub":
        raise NoRootError("the subcritical root needs rho < 1")
    R = S.singularity(lam).location
    if not R > 1:
        raise NoRootError(f"R_S = {R}: no root in (1, R_S)")
    g = _fixed_point_gap(S, lam)
    if math.isinf(R):
        # entire transform: it outgrows z, so expand the bracket
        hi = 2.0
        while g(hi) > 0:
            hi *= 2
            if hi > 1e8:
                raise NoRootError("no sign change below 1e8")
        return _bracketed_root(g, 1 + 1e-9, hi)
    if not R < _value_at_singularity(S, lam, R):
        raise NoRootError("S*(lam - lam R_S) <= R_S: no root below the singularity")
    hi = R - 1e-9
    while g(hi) > 0:
        # transform finite at R but large: step toward R
        hi = R - (R - hi) / 16
        if R - hi < 1e-15 * R:
            raise NoRootError("root too close to the singularity")
    return _bracketed_root(g, 1 + 1e-9, hi)


def solve_fixed_point_super(model: QueueModel) -> float:
    """Root ``z2 in (0, 1)`` of ``z = S*(lam - lam z)`` for ``rho > 1``."""
    if model.regime != "super":
        raise NoRootError("the supercritical root needs rho > 1")
    return _bracketed_root(_fixed_point_gap(model.service, model.lam), 1e-12, 1 - 1e-9)


# -- classification ---------------------------------------------------------

def _heavy_regime(ds, dv) -> Regime:
    if ds.heavy and dv.heavy:
        a_s, a_v = ds.regular_variation[0], dv.regular_variation[0]
        if a_s == a_v:
            return Regime.SUBCRIT_HEAVY_BOTH
        # the lighter (larger-index) tail is o() of the heavier one
        return Regime.SUBCRIT_HEAVY_S if a_v > a_s else Regime.SUBCRIT_HEAVY_V
    return Regime.SUBCRIT_HEAVY_S if ds.heavy else Regime.SUBCRIT_HEAVY_V


def classify(model: QueueModel) -> Regime:
    """Asymptotic regime of the model's loss probability."""
    lam, S, V = model.lam, model.service, model.vacation
    ds = S.singularity(lam)
    if model.regime == "super":
        return Regime.SUPERCRIT
    if model.regime == "critical":
        if math.isfinite(S.second_moment()):
            return Regime.CRIT_FINITE_VAR
        theta = ds.density_power[0] if ds.density_power else None
        if theta is not None and 2 < theta < 3:
            return Regime.CRIT_POWER
        if theta == 3:
            return Regime.CRIT_LOG
        raise UnclassifiableError("rho = 1, E[S^2] infinite, no density power in (2, 3]")
    dv = V.singularity(lam)
    r = min(ds.location, dv.location)
    if r == 1:
        return _heavy_regime(ds, dv)
    s_at_r = _value_at_singularity(S, lam, r)
    if r == ds.location and (math.isinf(r) or r < s_at_r):
        return Regime.SUBCRIT_GEOM
    if r == dv.location and s_at_r < r:
        if dv.order is None or dv.coefficient is None:
            raise UnclassifiableError("vacation singularity has no pole/branch descriptor")
        return Regime.SUBCRIT_NONGEOM
    raise UnclassifiableError(
        f"rho < 1 with r = {r}, S*(lam - lam r) = {s_at_r}: neither light-tail case holds")


# -- limit constants --------------------------------------------------------

def _critical(model: QueueModel, regime: Regime) -> AsymptoticEstimate:
    lam, S = model.lam, model.service
    if regime is Regime.CRIT_FINITE_VAR:
        return AsymptoticEstimate(regime, lam**2 * S.second_moment() / 2, poly_order=-1.0)
    theta, c = S.singularity(lam).density_power
    if regime is Regime.CRIT_POWER:
        const = (c * lam ** (theta - 1) * gamma(theta - 1) * gamma(4 - theta)
                 / ((1 - theta) * (2 - theta) * (3 - theta)))
        return AsymptoticEstimate(regime, const, poly_order=2 - theta)
    return AsymptoticEstimate(regime, c * lam**2 / 2, poly_order=-1.0, log_factor=True)


def asymptotic_loss(model: QueueModel) -> AsymptoticEstimate:
    """Leading asymptotics of ``P_loss(N)`` for the vacation queue."""
    if model.standard:
        return standard_mg1_loss(model)
    regime = classify(model)
    lam, S, V, rho = model.lam, model.service, model.vacation, model.rho
    ES, EV = S.mean(), V.mean()

    if regime is Regime.SUBCRIT_NONGEOM:
        dv = V.singularity(lam)
        r, theta, c = dv.location, dv.order, dv.coefficient
        s_r = float(S.transform_z(r, lam))
        const = (c * (1 - rho) ** 2 * s_r
                 / (r ** (theta - 1) * gamma(theta) * lam * EV * (r - 1) * (r - s_r)))
        return AsymptoticEstimate(regime, const, rate=r, poly_order=theta - 1)

    if regime is Regime.SUBCRIT_GEOM:
        z1 = solve_fixed_point_sub(model)
        v1 = float(V.transform_z(z1, lam))
        d1 = float(S.laplace_d1(z1, lam))
        const = z1 * (1 - rho) ** 2 * (1 - v1) / (lam * EV * (z1 - 1) * (1 - d1))
        return AsymptoticEstimate(regime, const, rate=z1)

    if regime in (Regime.SUBCRIT_HEAVY_BOTH, Regime.SUBCRIT_HEAVY_S, Regime.SUBCRIT_HEAVY_V):
        ds, dv = S.singularity(lam), V.singularity(lam)
        if regime is Regime.SUBCRIT_HEAVY_BOTH:
            alpha, L_v = dv.regular_variation
            c = L_v / ds.regular_variation[1]
            const = ((1 - rho) / EV + rho / (c * ES)) * lam ** (alpha - 1) / (alpha - 1)
            return AsymptoticEstimate(regime, const, poly_order=-(alpha - 1),
                                      slowly_varying=L_v, metadata={"tail_ratio": c})
        if regime is Regime.SUBCRIT_HEAVY_S:
            alpha, L = ds.regular_variation
            const = lam**alpha / (alpha - 1)
        else:
            alpha, L = dv.regular_variation
            const = (1 - rho) * lam ** (alpha - 1) / ((alpha - 1) * EV)
        return AsymptoticEstimate(regime, const, poly_order=-(alpha - 1), slowly_varying=L)

    if regime is Regime.SUPERCRIT:
        z2 = solve_fixed_point_super(model)
        d1 = float(S.laplace_d1(z2, lam))
        v2 = float(V.transform_z(z2, lam))
        const = (1 - z2) * (1 - d1) * EV / (z2 * rho * ES * (1 - v2))
        return AsymptoticEstimate(regime, const, rate=z2, offset=1 - 1 / rho)

    return _critical(model, regime)


def standard_mg1_loss(model: QueueModel) -> AsymptoticEstimate:
    """Leading asymptotics of ``P_loss(N)`` for the M/G/1/N queue (``V = 0``)."""
    lam, S, rho = model.lam, model.service, model.rho
    regime = classify(model)
    if regime is Regime.SUBCRIT_GEOM:
        s1 = solve_fixed_point_sub(model)
        const = s1 * (1 - rho) ** 2 / (float(S.laplace_d1(s1, lam)) - 1)
        return AsymptoticEstimate(regime, const, rate=s1)
    if regime is Regime.SUBCRIT_HEAVY_S:
        alpha, L = S.singularity(lam).regular_variation
        return AsymptoticEstimate(regime, lam**alpha / (alpha - 1),
                                  poly_order=-(alpha - 1), slowly_varying=L)
    if regime is Regime.SUPERCRIT:
        s2 = solve_fixed_point_super(model)
        const = (1 - float(S.laplace_d1(s2, lam))) / (s2 * rho**2)
        return AsymptoticEstimate(regime, const, rate=s2, offset=1 - 1 / rho)
    if regime in (Regime.CRIT_FINITE_VAR, Regime.CRIT_POWER, Regime.CRIT_LOG):
        return _critical(model, regime)
    raise UnclassifiableError(f"{regime} has no standard M/G/1/N formula")


def gim1_loss(arrival: DistributionSpec, mu: float) -> AsymptoticEstimate:
    """Leading asymptotics of the GI/M/1/N loss probability.

    Works on the dual M/G/1 queue (Poisson rate ``mu``, service law
    ``arrival``, traffic ``rho = 1/rho_tilde``) whose ``pi_0(N+1)`` equals the
    GI/M/1/N loss probability.
    """
    dual = dual_model(arrival, mu)
    rho_tilde = 1.0 / dual.rho
    rho = dual.rho
    meta = {"rho_tilde": rho_tilde}
    if dual.regime == "super":  # rho_tilde < 1
        eta1 = solve_fixed_point_super(dual)
        const = 1 - float(arrival.laplace_d1(eta1, mu))
        return AsymptoticEstimate(Regime.SUPERCRIT, const, rate=eta1, metadata=meta)
    if dual.regime == "critical":
        est = _critical(dual, classify(dual))
        return AsymptoticEstimate(est.regime, est.constant, est.rate, est.poly_order,
                                  est.log_factor, metadata=meta)
    # rho_tilde > 1: loss tends to 1 - 1/rho_tilde
    offset = 1 - 1 / rho_tilde
    regime = classify(dual)
    if regime is Regime.SUBCRIT_HEAVY_S:
        alpha, L = arrival.singularity(mu).regular_variation
        meta["symbol_note"] = ("limit constant evaluated with the dual arrival "
                               "rate mu, not lambda")
        return AsymptoticEstimate(regime, mu**alpha / (alpha - 1), poly_order=-(alpha - 1),
                                  offset=offset, slowly_varying=L, metadata=meta)
    if regime is Regime.SUBCRIT_GEOM:
        eta2 = solve_fixed_point_sub(dual)
        d1 = float(arrival.laplace_d1(eta2, mu))
        # transform-ratio form kept for comparison; the derivative form matches exact sweeps
        meta["transform_constant"] = (1 - rho) ** 2 / (float(arrival.transform_z(eta2, mu)) - 1)
        meta["derivative_constant"] = (1 - rho) ** 2 / (d1 - 1)
        return AsymptoticEstimate(regime, meta["derivative_constant"], rate=eta2,
                                  offset=offset, metadata=meta)
    raise UnclassifiableError(f"GI/M/1/N with rho_tilde > 1 in regime {regime}")
