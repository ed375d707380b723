import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semipriv.cover import build_cover, public_sample_size
from semipriv.datagen import DataDistribution, Noisy, Realizable, Uniform, population_error, sample_labeled
from semipriv.hypothesis import (
    Interval,
    IntervalUnions,
    Intervals,
    LabeledSample,
    Threshold,
    Thresholds,
    empirical_error,
    expected_disagreement,
)
from semipriv.learner import (
    SamplePlan,
    plan_sizes,
    public_erm,
    sspp_learn,
    sspp_learn_detailed,
    sspp_output_distribution,
)
from semipriv.mechanism import exact_distribution, utility_bound


def erm_sweep_oracle(cls, sample):
    """Fewest misses over boundaries placed at sample points and beyond, by brute force."""
    xs = sorted(set(x for x, _ in sample))
    cands = [min(xs) - 1.0] + xs + [max(xs) + 1.0]
    if isinstance(cls, Thresholds):
        hyps = [Threshold(t) for t in cands]
    else:
        hyps = [Interval(a, b) for a, b in itertools.combinations_with_replacement(cands, 2)]
    return min(empirical_error(h, sample).misses for h in hyps)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("beta", [0.05, 0.1])
def test_plan_sizes_well_posed(d, alpha, beta):
    plan = plan_sizes(d, alpha, beta, 1.0)
    assert plan.n_priv >= 1 and plan.n_pub >= 1
    assert plan.n_pub == public_sample_size(d, alpha / 2, beta / 2)
    # inverting the utility bound at alpha/2, beta/2 with the Sauer estimate of the cover size
    card = math.exp(d * math.log(math.e * plan.n_pub / d))
    assert utility_bound(card, plan.n_priv, 1.0, beta / 2) <= alpha / 2 * (1 + 1e-12)
    assert utility_bound(card, plan.n_priv - 1, 1.0, beta / 2) > alpha / 2


def test_plan_sizes_scaling_laws():
    for d in (1, 2):
        plans = [plan_sizes(d, a, 0.1, 1.0) for a in (0.2, 0.1, 0.05, 0.025)]
        pub = [p.n_pub * p.alpha for p in plans]
        priv = [p.n_priv * p.alpha**2 for p in plans]
        assert max(pub) / min(pub) <= 2.6
        # the log factor grows slowly: well under a doubling per halving
        assert all(1.0 <= b / a <= 1.5 for a, b in zip(priv, priv[1:]))


def test_plan_sizes_validation():
    with pytest.raises(ValueError):
        plan_sizes(1, 0.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        plan_sizes(1, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        plan_sizes(1, 0.1, 0.1, 0.0)
    with pytest.raises(ValueError):
        SamplePlan(0, 5, 0.1, 0.1, 1.0, 1)


def test_empty_public_list(rng):
    s = LabeledSample(np.array([0.2, 0.8]), np.array([0, 1]))
    for cls in (Thresholds(), Intervals()):
        cover = build_cover(cls, [])
        assert len(cover) <= 2
        h = sspp_learn(cls, s, [], 1.0, rng)
        assert h in [g for _, g in cover.entries()]


def test_large_epsilon_picks_consistent_entry(rng):
    pub = np.linspace(0.05, 0.95, 10)
    xs = rng.random(200)
    s = LabeledSample(xs, (xs >= 0.5).astype(int))
    for _ in range(50):
        res = sspp_learn_detailed(Thresholds(), s, pub, 50.0, rng)
        assert res.miss_counts[res.index] == res.miss_counts.min()


def test_output_is_cover_member(rng):
    pub = rng.random(15)
    xs = rng.random(100)
    s = LabeledSample(xs, rng.integers(0, 2, 100))
    for cls in (Thresholds(), Intervals(), IntervalUnions(2)):
        res = sspp_learn_detailed(cls, s, pub, 1.0, rng)
        assert res.hypothesis == res.cover.hypothesis(res.index)
        assert tuple(res.hypothesis.predict_array(res.cover.points).tolist()) == res.cover.dichotomy(res.index)


def test_output_law_is_exp_mech_on_miss_counts(rng):
    pub = [0.2, 0.5, 0.8]
    s = LabeledSample(np.array([0.1, 0.3, 0.6, 0.9, 0.4]), np.array([0, 1, 1, 1, 0]))
    cover, probs = sspp_output_distribution(Intervals(), s, pub, 1.0)
    counts = [empirical_error(h, s).misses for _, h in cover.entries()]
    assert probs == pytest.approx(exact_distribution(counts, len(s), 1.0), abs=1e-15)
    n = 40000
    idx = [sspp_learn_detailed(Intervals(), s, pub, 1.0, rng).index for _ in range(n)]
    freq = np.bincount(idx, minlength=len(cover)) / n
    assert 0.5 * np.abs(freq - probs).sum() <= 0.015


def test_nonempty_private_sample_required(rng):
    with pytest.raises(ValueError):
        sspp_learn(Thresholds(), LabeledSample(np.empty(0), np.empty(0, dtype=int)), [0.5], 1.0, rng)


def test_public_erm_examples():
    s = [(0.3, 1), (0.7, 0)]
    h = public_erm(Thresholds(), s)
    assert empirical_error(h, s).misses == 1 == erm_sweep_oracle(Thresholds(), s)
    assert empirical_error(public_erm(Thresholds(), [(0.4, 1)]), [(0.4, 1)]).misses == 0
    assert empirical_error(public_erm(Intervals(), [(0.4, 0)]), [(0.4, 0)]).misses == 0
    with pytest.raises(ValueError):
        public_erm(Thresholds(), [])


def test_public_erm_realizable(rng):
    xs = rng.random(300)
    s = LabeledSample(xs, ((xs >= 0.2) & (xs <= 0.6)).astype(int))
    assert empirical_error(public_erm(Intervals(), s), s).misses == 0


@pytest.mark.parametrize("cls", [Thresholds(), Intervals()], ids=lambda c: c.class_id)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=12))
def test_public_erm_matches_sweep(cls, sample):
    h = public_erm(cls, sample)
    assert empirical_error(h, sample).misses == erm_sweep_oracle(cls, sample)


def test_accuracy_decomposition(rng):
    """excess <= (nearest cover entry to the target) + (selected minus best in cover)."""
    target = Threshold(0.5)
    dist = DataDistribution(Uniform(), Noisy(target, 0.2))
    for _ in range(30):
        pub = rng.random(40)
        s = sample_labeled(dist, 2000, rng)
        res = sspp_learn_detailed(Thresholds(), s, pub, 1.0, rng)
        errs = np.array([population_error(h, dist) for _, h in res.cover.entries()])
        approx = min(expected_disagreement(h, target, Uniform()) for _, h in res.cover.entries())
        mech = population_error(res.hypothesis, dist) - errs.min()
        excess = population_error(res.hypothesis, dist) - population_error(target, dist)
        assert excess <= approx + mech + 1e-12


def test_planned_sizes_succeed_small_run(rng):
    plan = plan_sizes(1, 0.1, 0.1, 1.0)
    dist = DataDistribution(Uniform(), Realizable(Threshold(0.5)))
    wins = 0
    for _ in range(20):
        pub = Uniform().sample(plan.n_pub, rng)
        h = sspp_learn(Thresholds(), sample_labeled(dist, plan.n_priv, rng), pub, 1.0, rng)
        wins += population_error(h, dist) <= 0.1
    assert wins >= 18
