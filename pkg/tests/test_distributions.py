import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from qla.arith import arith
from qla.distributions import (Deterministic, Erlang, Exponential, HyperExponential, Pareto,
                               Zero, from_dict)
from qla.errors import DomainError, InvalidConfig

CONTINUOUS = [
    Exponential(2.0),
    Erlang(2, 0.5),
    Erlang(3, 4.0),
    HyperExponential((0.3, 0.7), (1.0, 5.0)),
    Pareto(2.5, 0.6),
    Pareto(2.0, 0.5),
]
ALL = CONTINUOUS + [Deterministic(1.0), Zero()]


def quad_expect(dist, g):
    """E[g(X)] by adaptive quadrature against the density."""
    if isinstance(dist, Pareto):
        lo, hi = dist.scale, np.inf
    else:
        # light tails: mass past 400 is below 1e-80 for every instance used
        lo, hi = 0.0, 400.0
    value, _ = integrate.quad(lambda x: g(x) * dist.pdf(x), lo, hi,
                              epsabs=0, epsrel=1e-13, limit=500)
    return value


def expect(dist, g):
    if isinstance(dist, Deterministic):
        return g(dist.value)
    if isinstance(dist, Zero):
        return g(0.0)
    return quad_expect(dist, g)


# -- examples ---------------------------------------------------------------

def test_mean_examples():
    assert Exponential(2).mean() == pytest.approx(0.5, rel=1e-15)
    assert Erlang(2, 0.5).mean() == pytest.approx(4.0, rel=1e-15)
    # tail-integral oracle: int_0^inf P(X > x) dx
    p = Pareto(2.5, 0.6)
    head = p.scale
    rest, _ = integrate.quad(p.tail, p.scale, np.inf, epsrel=1e-13)
    assert head + rest == pytest.approx(1.0, rel=1e-10)
    assert p.mean() == pytest.approx(1.0, rel=1e-14)


def test_laplace_examples():
    assert Exponential(2).laplace(1.0) == pytest.approx(2 / 3, rel=1e-15)
    assert Zero().laplace(5.0) == 1.0
    assert Exponential(4).laplace(-1.0) == pytest.approx(4 / 3, rel=1e-15)
    # quadrature cross-check of the left-of-zero value
    oracle, _ = integrate.quad(lambda x: 4 * math.exp(-3 * x), 0, np.inf, epsrel=1e-13)
    assert oracle == pytest.approx(4 / 3, rel=1e-10)


def test_laplace_domain_error():
    with pytest.raises(DomainError):
        Exponential(2).laplace(-2.0)
    with pytest.raises(DomainError):
        Pareto(2.5, 0.6).laplace(-0.1)
    with pytest.raises(DomainError):
        Exponential(1).transform_z(2.0, 1.0)


def test_sample_examples():
    rng = np.random.default_rng(0)
    assert Deterministic(1.0).sample(rng) == 1.0
    assert Zero().sample(rng) == 0.0
    u = np.array([0.1, 0.5, 0.9])
    assert np.allclose(Exponential(2).tail_quantile(u), -np.log(u) / 2, rtol=1e-15)


def test_singularity_examples():
    d = Erlang(2, 0.5).singularity(1.0)
    assert (d.location, d.order, d.coefficient) == pytest.approx((1.5, 2, 0.25))
    d = Exponential(2).singularity(1.0)
    assert (d.location, d.order, d.coefficient) == pytest.approx((3, 1, 2))
    d = Pareto(2.5, 0.6).singularity(0.5)
    assert d.location == 1 and d.heavy
    assert d.regular_variation == pytest.approx((2.5, 0.6**2.5))
    assert Deterministic(1).singularity(1.0).entire


def test_erlang_singularity_is_the_pole_of_the_transform():
    # (location - z)^order F*(lam - lam z) -> coefficient as z -> location
    for dist, lam in [(Erlang(3, 2.0), 0.7), (Exponential(1.5), 2.0)]:
        d = dist.singularity(lam)
        z = d.location - 1e-7
        val = (d.location - z) ** d.order * dist.transform_z(z, lam)
        assert val == pytest.approx(d.coefficient, rel=1e-6)


def test_hyperexponential_singularity():
    d = HyperExponential((0.3, 0.7), (1.0, 5.0)).singularity(2.0)
    assert d.location == pytest.approx(1.5)
    assert d.order == 1
    assert d.coefficient == pytest.approx(0.3 * 1.0 / 2.0)


# -- closed forms against quadrature -----------------------------------------

@pytest.mark.parametrize("dist", ALL, ids=repr)
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 4.0])
def test_laplace_matches_quadrature(dist, t):
    assert float(dist.laplace(t)) == pytest.approx(expect(dist, lambda x: math.exp(-t * x)),
                                                   rel=1e-10, abs=1e-300)


@pytest.mark.parametrize("dist", ALL, ids=repr)
@pytest.mark.parametrize("lam", [0.5, 1.3])
def test_transform_derivatives_at_one(dist, lam):
    assert float(dist.laplace_d1(1.0, lam)) == pytest.approx(lam * float(dist.mean()),
                                                            rel=1e-10, abs=1e-300)
    second = float(dist.second_moment())
    if math.isfinite(second):
        assert float(dist.laplace_d2(1.0, lam)) == pytest.approx(lam**2 * second, rel=1e-9,
                                                                abs=1e-300)


@pytest.mark.parametrize("dist", CONTINUOUS[:4], ids=repr)
@pytest.mark.parametrize("z", [0.2, 0.9, 1.2])
def test_derivatives_match_quadrature(dist, z):
    lam = 0.8
    s = lam - lam * z
    d1 = quad_expect(dist, lambda x: lam * x * math.exp(-s * x))
    d2 = quad_expect(dist, lambda x: (lam * x) ** 2 * math.exp(-s * x))
    assert float(dist.laplace_d1(z, lam)) == pytest.approx(d1, rel=1e-10)
    assert float(dist.laplace_d2(z, lam)) == pytest.approx(d2, rel=1e-9)


def test_second_moment_finiteness():
    assert math.isinf(Pareto(2.0, 0.5).second_moment())
    assert Pareto(2.5, 0.6).second_moment() == pytest.approx(2.5 * 0.36 / 0.5)
    assert Deterministic(1).second_moment() == 1.0


@pytest.mark.parametrize("dist", ALL, ids=repr)
def test_count_pmf_matches_quadrature(dist):
    lam, n = 0.9, 12
    pmf = dist.count_pmf(lam, n)
    tail = dist.count_tail(lam, n)
    for j in range(n + 1):
        oracle = expect(dist, lambda t: stats.poisson.pmf(j, lam * t))
        assert float(pmf[j]) == pytest.approx(oracle, rel=1e-9, abs=1e-300)
        # the tail is computed without cancellation; compare to 1 - cumulative sum
        assert float(tail[j]) == pytest.approx(1 - sum(float(p) for p in pmf[: j + 1]),
                                               rel=1e-8, abs=1e-14)


def test_count_examples():
    assert float(Exponential(2).count_pmf(1.0, 3)[0]) == pytest.approx(2 / 3, rel=1e-15)
    assert float(Deterministic(1).count_pmf(1.0, 3)[1]) == pytest.approx(math.exp(-1), rel=1e-15)
    assert float(Erlang(2, 4.0).count_pmf(1.0, 3)[0]) == pytest.approx(0.64, rel=1e-15)


def test_pareto_counts_in_high_precision_agree_with_doubles():
    p = Pareto(2.5, 0.6)
    hi = p.count_pmf(0.5, 60, arith(50))
    lo = p.count_pmf(0.5, 60)
    for h, d in zip(hi, lo):
        assert float(h) == pytest.approx(d, rel=1e-12)


# -- properties -------------------------------------------------------------

rates = st.floats(0.05, 20.0)


@st.composite
def distributions(draw):
    kind = draw(st.sampled_from(["exp", "erlang", "det", "hyper", "pareto"]))
    if kind == "exp":
        return Exponential(draw(rates))
    if kind == "erlang":
        return Erlang(draw(st.integers(1, 6)), draw(rates))
    if kind == "det":
        return Deterministic(draw(st.floats(0.01, 10.0)))
    if kind == "hyper":
        w = draw(st.floats(0.05, 0.95))
        return HyperExponential((w, 1 - w), (draw(rates), draw(rates)))
    return Pareto(draw(st.floats(1.1, 5.0)), draw(st.floats(0.05, 3.0)))


@settings(max_examples=60, deadline=None)
@given(distributions(), st.lists(st.floats(0, 50), min_size=2, max_size=8))
def test_tail_nonincreasing(dist, xs):
    xs = sorted(xs)
    tails = [dist.tail(x) for x in xs]
    assert dist.tail(0.0) <= 1.0
    assert all(b <= a + 1e-15 for a, b in zip(tails, tails[1:]))
    assert dist.tail(1e9) < 1e-3


@settings(max_examples=60, deadline=None)
@given(distributions(), st.floats(0, 30), st.floats(0, 30))
def test_laplace_range_and_monotone(dist, t1, t2):
    lo, hi = sorted((t1, t2))
    assert dist.laplace(0.0) == pytest.approx(1.0, abs=1e-15)
    a, b = float(dist.laplace(lo)), float(dist.laplace(hi))
    assert 0 < b <= a <= 1 + 1e-15


@settings(max_examples=40, deadline=None)
@given(distributions(), st.floats(0.1, 5.0))
def test_transform_increasing_and_convex_in_z(dist, lam):
    R = dist.singularity(lam).location
    top = min(R, 3.0)
    zs = np.linspace(0, top, 41)[:-1]
    vals = np.array([float(dist.transform_z(z, lam)) for z in zs])
    assert np.all(np.diff(vals) > 0)
    assert np.all(np.diff(vals, 2) > -1e-12 * vals[2:])


@settings(max_examples=40, deadline=None)
@given(distributions(), st.floats(0.1, 3.0))
def test_counts_are_a_probability_law(dist, lam):
    pmf = [float(p) for p in dist.count_pmf(lam, 30)]
    tail = [float(t) for t in dist.count_tail(lam, 30)]
    assert min(pmf) >= 0
    assert sum(pmf) + tail[-1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("dist", [Exponential(2.0), Erlang(2, 0.5), Deterministic(1.0),
                                  HyperExponential((0.3, 0.7), (1.0, 5.0)),
                                  Pareto(2.5, 0.6)], ids=repr)
def test_empirical_mean_within_four_standard_errors(dist):
    rng = np.random.default_rng(20240101)
    x = dist.sample(rng, 1_000_000)
    if isinstance(dist, Deterministic):
        assert np.all(x == dist.value)
        return
    se = math.sqrt(float(dist.second_moment()) - float(dist.mean()) ** 2) / 1000
    assert abs(x.mean() - float(dist.mean())) < 4 * se


def test_sampler_matches_distribution_function():
    rng = np.random.default_rng(7)
    for dist in CONTINUOUS:
        x = dist.sample(rng, 200_000)
        assert stats.kstest(x, np.vectorize(dist.cdf)).pvalue > 1e-4


# -- config round trip -------------------------------------------------------

@pytest.mark.parametrize("dist", ALL, ids=repr)
def test_from_dict_round_trip(dist):
    assert from_dict(dist.to_dict()) == dist


@pytest.mark.parametrize("bad", [
    {"family": "exponential", "rate": -1},
    {"family": "erlang", "shape": 1.5, "rate": 1},
    {"family": "pareto", "alpha": 1.0, "scale": 1},
    {"family": "hyperexponential", "weights": [0.5, 0.6], "rates": [1, 2]},
    {"family": "exponential", "rate": 1, "mean": 1},
    {"family": "weibull", "shape": 2},
    {"rate": 1},
])
def test_from_dict_rejects(bad):
    with pytest.raises(InvalidConfig):
        from_dict(bad)
