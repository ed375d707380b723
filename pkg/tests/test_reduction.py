import itertools
import math
from collections import defaultdict

import numpy as np
import pytest
from scipy.stats import binom, chisquare, ks_2samp

from semipriv.datagen import (
    DataDistribution,
    DiscreteAtoms,
    MixtureDistribution,
    PiecewiseUniform,
    Realizable,
    Uniform,
    dummy_distribution,
    make_rng,
    sample_labeled,
    sample_mixture,
)
from semipriv.dpaudit import enumerate_neighbors, exact_audit
from semipriv.hypothesis import LabeledSample, Threshold, Thresholds
from semipriv.learner import sspp_output_distribution
from semipriv.reduction import (
    WRAPPED_BETA,
    ReductionConfig,
    completion_probability,
    cover_learner,
    exact_output_distribution,
    priv_samp,
    priv_samp_completes,
    pub_samp,
    public_mixture_gap,
    reduce_to_private,
    reduce_to_private_detailed,
)

ATOMS = (0.25, 0.75)
DUMMY = DataDistribution(DiscreteAtoms(ATOMS, (0.5, 0.5)), dummy_distribution().labeling)


def real_sample(n, rng, t=0.5):
    return sample_labeled(DataDistribution(Uniform(), Realizable(Threshold(t))), n, rng)


def exact_cover_learner(eps):
    def learn(priv, pub):
        cover, probs = sspp_output_distribution(Thresholds(), priv, pub.xs, eps)
        out = defaultdict(float)
        for (_, h), q in zip(cover.entries(), probs):
            out[h] += q
        return out
    return learn


def b_vector_oracle(learner, real, config, dummy):
    """Output law by enumerating every coin vector and every ordered dummy fill."""
    support = [((x, y), q * 0.5) for x, q in zip(dummy.marginal.points, dummy.marginal.probs) for y in (0, 1)]
    reals = real.to_list()
    n, p = config.n_priv, config.p
    out = defaultdict(float)
    for bits in itertools.product((0, 1), repeat=n):
        pr_b = math.prod(p if b else 1 - p for b in bits)
        slots, used = [], 0
        for b in bits:
            if b and used < len(reals):
                slots.append(reals[used])
                used += 1
            else:
                slots.append(None)
        n_dummy = slots.count(None)
        for fill in itertools.product(support, repeat=n_dummy):
            it = iter(fill)
            priv, pr_fill = [], 1.0
            for z in slots:
                if z is None:
                    z, q = next(it)
                    pr_fill *= q
                priv.append(z)
            for pub in itertools.product(support, repeat=config.n_pub):
                pr_pub = math.prod(q for _, q in pub)
                ps = LabeledSample(np.array([x for x, _ in priv]), np.array([y for _, y in priv]))
                us = LabeledSample(np.array([z[0] for z, _ in pub]), np.array([z[1] for z, _ in pub]))
                for h, q in learner(ps, us).items():
                    out[h] += pr_b * pr_fill * pr_pub * q
    return dict(out)


def test_config_derived_fields():
    c = ReductionConfig(1000, 2)
    assert c.p == 1 / 200 and c.tilde_n == 50
    assert ReductionConfig(1, 1).tilde_n == 1
    assert ReductionConfig(21, 1).tilde_n == 3
    with pytest.raises(ValueError):
        ReductionConfig(0, 1)


def test_acceptance_instance_sizes():
    alpha, n_pub, eps = 0.0005, 2, 1.0
    c = ReductionConfig.for_cover_learner(Thresholds(), alpha, n_pub, eps)
    # three threshold patterns on two points, confidence 1/18
    L = 4.0 * (math.log(3) + math.log(18))
    assert c.n_priv == math.ceil(L / alpha**2) == 63823745
    assert c.tilde_n == 3191188 and c.p == 0.005
    assert WRAPPED_BETA == pytest.approx(1 / 18)
    assert completion_probability(c) >= 0.99


def test_tiny_p_gives_all_dummy(rng):
    real = real_sample(1, rng)
    out = priv_samp(real, dummy_distribution(), 1e-9, 100, rng)
    assert out.real_positions.size == 0 and len(out.sample) == 100


def test_p_one_places_first_real_first(rng):
    real = real_sample(1, rng)
    out = priv_samp(real, dummy_distribution(), 1.0, 10, rng)
    assert out.real_positions.tolist() == [0]
    assert out.sample.xs[0] == real.xs[0] and out.sample.ys[0] == real.ys[0]
    assert not out.completed and len(out.sample) == 10
    assert priv_samp(real, dummy_distribution(), 1.0, 1, rng).completed


def test_single_use_order_preserving(rng):
    for _ in range(200):
        real = real_sample(int(rng.integers(1, 8)), rng)
        out = priv_samp(real, dummy_distribution(), float(rng.uniform(0.05, 0.9)), int(rng.integers(1, 20)), rng)
        pos = out.real_positions
        assert np.all(np.diff(pos) > 0)
        assert pos.size <= len(real)
        assert np.array_equal(out.sample.xs[pos], real.xs[: pos.size])
        assert np.array_equal(out.sample.ys[pos], real.ys[: pos.size])


def test_validation(rng):
    real = real_sample(2, rng)
    with pytest.raises(ValueError):
        priv_samp(real, dummy_distribution(), 0.0, 5, rng)
    with pytest.raises(ValueError):
        priv_samp(real, dummy_distribution(), 0.5, 0, rng)
    cfg = ReductionConfig(20, 1)
    with pytest.raises(ValueError):
        reduce_to_private(lambda a, b: Threshold(0.5), real_sample(3, rng), cfg, rng)
    with pytest.raises(ValueError):
        reduce_to_private(lambda a, b: Threshold(0.5), real, cfg, rng,
                          DataDistribution(Uniform(), Realizable(Threshold(0.5))))


def test_coins_follow_bernoulli_law():
    # with more real examples than slots every coin is visible
    p, n, runs = 0.1, 50, 20000
    counts = np.zeros(n + 1)
    hits = np.zeros(n)
    rng = make_rng(5)
    real = LabeledSample(np.zeros(n), np.zeros(n, dtype=int))
    for _ in range(runs):
        pos = priv_samp(real, dummy_distribution(), p, n, rng).real_positions
        counts[pos.size] += 1
        hits[pos] += 1
    expected = binom.pmf(np.arange(n + 1), n, p) * runs
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-4
    assert np.all(np.abs(hits / runs - p) <= 4.5 * math.sqrt(p * (1 - p) / runs))


@pytest.mark.parametrize("p,n_priv,n_real", [(0.05, 100, 6), (0.2, 40, 9), (0.01, 2000, 20)])
def test_completion_probability_matches_simulation(p, n_priv, n_real):
    rng = make_rng(11)
    runs = 20000
    hits = sum(priv_samp_completes(p, n_priv, n_real, rng) for _ in range(runs))
    exact = float(binom.cdf(n_real - 1, n_priv - 1, p))
    assert abs(hits / runs - exact) <= 4 * math.sqrt(exact * (1 - exact) / runs) + 1e-9


def test_completes_flag_agrees_with_priv_samp():
    real = LabeledSample(np.zeros(5), np.zeros(5, dtype=int))
    for seed in range(300):
        a = priv_samp(real, dummy_distribution(), 0.1, 40, make_rng(seed), make_rng(seed, 1)).completed
        assert a == priv_samp_completes(0.1, 40, 5, make_rng(seed))


def test_completion_probability_of_config():
    c = ReductionConfig(2000, 1)
    assert completion_probability(c) == pytest.approx(float(binom.cdf(c.tilde_n - 1, 1999, 0.01)))
    assert completion_probability(c) > 0.99


def test_public_mixture_gap():
    for n_pub in (1, 2, 5, 50, 1000):
        gap = public_mixture_gap(ReductionConfig(1000, n_pub))
        assert gap == pytest.approx(1 - (1 - 1 / (100 * n_pub)) ** n_pub)
        assert gap <= 0.01 + 1e-15


def test_pub_samp(rng):
    s = pub_samp(dummy_distribution(), 10**6, rng)
    assert abs(s.ys.mean() - 0.5) <= 0.002
    assert len(pub_samp(dummy_distribution(), 0, rng)) == 0
    real = real_sample(1000, rng)
    assert not set(pub_samp(dummy_distribution(), 1000, rng).xs.tolist()) & set(real.xs.tolist())


def test_constant_learner(rng):
    h = Threshold(0.42)
    cfg = ReductionConfig(30, 1)
    assert reduce_to_private(lambda a, b: h, real_sample(cfg.tilde_n, rng), cfg, rng) is h


def test_public_sample_has_no_real_data(rng):
    cfg = ReductionConfig(30, 3)
    real = real_sample(cfg.tilde_n, rng)
    tr = reduce_to_private_detailed(lambda a, b: Threshold(0.5), real, cfg, rng)
    assert not set(tr.public.xs.tolist()) & set(real.xs.tolist())
    assert len(tr.public) == 3 and len(tr.private.sample) == 30


def test_deterministic():
    cfg = ReductionConfig(500, 2)
    real = real_sample(cfg.tilde_n, make_rng(1))
    a = reduce_to_private(cover_learner(Thresholds(), 1.0, make_rng(3)), real, cfg, make_rng(2))
    b = reduce_to_private(cover_learner(Thresholds(), 1.0, make_rng(3)), real, cfg, make_rng(2))
    assert a == b


@pytest.mark.parametrize("n_priv,n_pub", [(3, 1), (2, 2), (5, 1)])
def test_exact_output_distribution_matches_b_vector_oracle(n_priv, n_pub):
    cfg = ReductionConfig(n_priv, n_pub)
    real = LabeledSample(np.array([0.75] * cfg.tilde_n), np.ones(cfg.tilde_n, dtype=int))
    learner = exact_cover_learner(1.0)
    got = exact_output_distribution(learner, real, cfg, DUMMY)
    want = b_vector_oracle(learner, real, cfg, DUMMY)
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-12)
    assert set(got) == set(want)
    for h in want:
        assert got[h] == pytest.approx(want[h], abs=1e-12)


@pytest.mark.parametrize("eps", [0.5, 2.0])
def test_privacy_transfers_through_reduction(eps):
    # tilde_n = 2, dummies on two atoms, covers of at most 3 thresholds
    cfg = ReductionConfig(11, 1)
    assert cfg.tilde_n == 2
    learner = exact_cover_learner(eps)
    base = LabeledSample(np.array([0.25, 0.75]), np.array([0, 1]))
    pairs = enumerate_neighbors(base, ATOMS)
    assert len(pairs) == 2 * (2 * 2 - 1)
    report = exact_audit(lambda s: exact_output_distribution(learner, s, cfg, DUMMY), pairs, eps)
    assert report.passed, report.max_log_ratio


def test_conditional_private_sample_is_mixture():
    real = DataDistribution(PiecewiseUniform((0.0, 0.5, 1.0), (0.9, 0.1)), Realizable(Threshold(0.3)))
    p, n_priv, n_real = 0.3, 100, 60
    rng = make_rng(21)
    xs, ys = [], []
    while sum(map(len, xs)) < 10**6:
        out = priv_samp(sample_labeled(real, n_real, rng), dummy_distribution(), p, n_priv, rng)
        if out.completed:
            xs.append(out.sample.xs)
            ys.append(out.sample.ys)
    xs, ys = np.concatenate(xs), np.concatenate(ys)
    direct = sample_mixture(MixtureDistribution(p, real), xs.size, make_rng(22))
    assert ks_2samp(xs, direct.xs).pvalue > 1e-3
    se = math.sqrt(2 * 0.25 / xs.size)
    assert abs(ys.mean() - direct.ys.mean()) <= 4 * se
