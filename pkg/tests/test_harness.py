import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from quenchlab import families, harness
from quenchlab.harness import EmpiricalCdf, ks_to_normal, ks_two_sample, normal_cdf
from quenchlab.innovations import force_event, make_lattice
from quenchlab.schedule import build_schedule

TOY = build_schedule((2, 4))
ONE = build_schedule((2,), m_rule=[32])


# --- empirical CDF and KS ------------------------------------------------


def test_ecdf_is_right_continuous_with_left_limits():
    cdf = EmpiricalCdf([0.0, 1.0, 1.0, 3.0])
    assert cdf(1.0) == 0.75 and cdf.left(1.0) == 0.25
    assert cdf(-1) == 0 and cdf(3.0) == 1
    assert list(cdf(np.array([0.5, 2.0]))) == [0.25, 0.75]


def test_ks_of_constant_sample():
    zero = EmpiricalCdf(np.zeros(500))
    assert ks_to_normal(zero, 0.0) == 0
    assert ks_to_normal(zero, 1.0) == pytest.approx(0.5)


def test_ks_to_normal_matches_scipy():
    x = np.random.default_rng(0).normal(size=10_000)
    ks = ks_to_normal(EmpiricalCdf(x), 1.0)
    assert ks == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)
    assert ks <= 1.63 / math.sqrt(x.size)


def test_ks_with_scaled_variance_matches_scipy():
    x = np.random.default_rng(1).normal(scale=2.0, size=2000)
    ks = ks_to_normal(EmpiricalCdf(x), 4.0)
    assert ks == pytest.approx(stats.kstest(x, "norm", args=(0, 2.0)).statistic, abs=1e-12)


def test_ks_on_an_atomic_law_uses_both_gaps():
    # two-point law at +-1: the largest gap to Phi sits just left of +1
    x = np.array([-1.0, 1.0] * 500)
    want = max(abs(0.5 - stats.norm.cdf(-1)), abs(0.5 - stats.norm.cdf(1)), stats.norm.cdf(-1))
    assert ks_to_normal(EmpiricalCdf(x), 1.0) == pytest.approx(want)


def test_two_sample_ks_matches_scipy():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=700), rng.normal(0.2, size=900)
    assert ks_two_sample(EmpiricalCdf(a), EmpiricalCdf(b)) == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-12)
    ties_a, ties_b = rng.integers(0, 5, 300).astype(float), rng.integers(0, 6, 400).astype(float)
    assert ks_two_sample(EmpiricalCdf(ties_a), EmpiricalCdf(ties_b)) == pytest.approx(
        stats.ks_2samp(ties_a, ties_b).statistic, abs=1e-12)


@settings(max_examples=60)
@given(st.lists(st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=1, max_size=60), st.randoms())
def test_ks_is_invariant_under_reordering(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert ks_to_normal(EmpiricalCdf(values), 1.0) == ks_to_normal(EmpiricalCdf(shuffled), 1.0)
    assert ks_two_sample(EmpiricalCdf(values), EmpiricalCdf(shuffled)) == 0


def test_normal_cdf_accuracy():
    mpmath.mp.dps = 40
    for x in np.linspace(-8, 8, 161):
        want = float(mpmath.ncdf(mpmath.mpf(x)))
        assert abs(float(normal_cdf(x, 1.0)) - want) <= 1e-10
    assert float(normal_cdf(1.0, 4.0)) == pytest.approx(float(mpmath.ncdf(0.5)), abs=1e-12)


# --- simulation ----------------------------------------------------------


def test_single_step_rademacher_law():
    cdf = harness.simulate_sums(families.iid(), 1, 4000, seed=1)
    assert set(np.unique(cdf.values)) == {-1.0, 1.0}
    assert cdf(-1.0) == pytest.approx(0.5, abs=3 * 0.5 / math.sqrt(4000))


def test_simulation_needs_enough_replicates():
    with pytest.raises(ValueError):
        harness.simulate_sums(families.iid(), 10, 50)


@pytest.mark.parametrize("spec", [families.iid(), families.linear([1, 0.5]), families.perturbed(TOY, 1.0)])
def test_results_do_not_depend_on_worker_count(spec):
    one = harness.simulate(spec, 64, 1500, seed=3, workers=1)
    many = harness.simulate(spec, 64, 1500, seed=3, workers=4)
    assert one.sums.tobytes() == many.sums.tobytes()
    assert one.centered_sums.tobytes() == many.centered_sums.tobytes()


def test_thread_count_default_reads_environment(monkeypatch):
    monkeypatch.setenv("QUENCHLAB_THREADS", "3")
    assert harness.default_workers() == 3


def test_quenched_and_annealed_agree_for_iid():
    q = harness.simulate_sums(families.iid(), 400, 4000, "quenched", seed=1)
    a = harness.simulate_sums(families.iid(), 400, 4000, "annealed", seed=2)
    floor = 1.36 * math.sqrt(2 / 4000)
    assert ks_two_sample(q, a) <= 2 * floor


def test_annealed_law_is_the_mixture_of_quenched_laws():
    spec = families.linear([1.0] * 5)
    # replicates sharing a past are clustered, so the past count sets the noise floor
    n, pasts, per = 4, 2000, 5
    mix = np.concatenate([
        families.sample_sums(spec, n, np.arange(per), "quenched", seed=100 + p, past=100 + p)[0]
        for p in range(pasts)
    ])
    ann = families.sample_sums(spec, n, np.arange(pasts * per), "annealed", seed=7)[0]
    assert ks_two_sample(EmpiricalCdf(mix), EmpiricalCdf(ann)) <= 1.63 * math.sqrt(1 / pasts + 1 / ann.size)


def test_centred_counterexample_sums_approach_normal():
    spec = families.perturbed(TOY, 1.0)
    ks = [ks_to_normal(harness.simulate_sums(spec, n, 4000, seed=5, centered=True), 1.0) for n in (4, 400)]
    assert ks[1] < ks[0]


# --- martingale diagnostics ----------------------------------------------


def test_rademacher_conditions_are_exact():
    rep = harness.mcleish_report(families.iid(), [100], 300, eps=0.5)
    row = rep.row(100)
    assert row.sum_sq.value == pytest.approx(1.0, abs=1e-12)
    assert row.max_tail.value == 0
    assert row.max_abs.value == pytest.approx(0.1, abs=1e-15)
    assert row.max_sq.value == pytest.approx(0.01, abs=1e-15)


def test_counterexample_increments_sum_to_the_centred_sums():
    spec = families.counterexample(TOY)
    lat = make_lattice(0, TOY)
    n = 40
    x = harness.martingale_increments(spec, n, np.arange(50), past=lat)
    _, _, centered = families.sample_sums(spec, n, np.arange(50), past=lat)
    assert x.sum(axis=1) * math.sqrt(n) == pytest.approx(centered, abs=1e-9)


def test_increments_need_a_martingale_kind():
    with pytest.raises(families.FamilyError):
        harness.martingale_increments(families.linear([1, 1]), 5, [0])


def test_ergodic_averages():
    assert harness.ergodic_average(families.iid(), 1000) == 1.0
    three = families.iid("three_point", ONE)
    n = 10 ** 6
    avg = harness.ergodic_average(three, n, seed=4)
    se = math.sqrt(64 / 32 - 0.25 ** 2) / math.sqrt(n)
    assert abs(avg - 0.25) <= 3 * se
    zero = make_lattice(0, TOY, background="zero")
    assert harness.ergodic_average(families.counterexample(TOY), 500, lattice=zero) == 0


def test_maximal_tail_trivial_cases():
    rad = harness.maximal_tail_check(families.iid(), 2.0, 100, 200)
    assert rad.empirical_tail == 0 and rad.bound == 0.25 and rad.holds
    huge = harness.maximal_tail_check(families.iid("gaussian"), 1e3, 100, 200)
    assert huge.empirical_tail == 0
    with pytest.raises(ValueError):
        harness.maximal_tail_check(families.iid(), 0.0, 10, 10)


def test_running_rms():
    assert harness.running_rms_sup(np.array([3.0, 0.0, 0.0, 0.0])) == 3.0
    assert harness.running_rms_sup(np.array([0.0, 2.0])) == pytest.approx(math.sqrt(2))


# --- quenched comparison -------------------------------------------------


def test_iid_pasts_have_no_drift():
    cmp = harness.quenched_compare(families.iid(), [1, 2, 3], 200, 2000)
    assert cmp.nu_dispersion == 0
    assert all(p.nu == 0 for p in cmp.pasts)
    kss = [p.ks_raw for p in cmp.pasts]
    assert max(kss) <= 1.63 / math.sqrt(2000) + 0.03


def test_raw_law_is_centred_law_shifted_by_the_drift():
    n0 = TOY.N_k(1) + 5
    forced = force_event(make_lattice(2, TOY, background="zero"), 2, n0, sign=-1)
    cmp = harness.quenched_compare(families.perturbed(TOY, 1.0), [forced], n0 - 1, 1000)
    assert cmp.pasts[0].nu == pytest.approx(256 / math.sqrt(n0 - 1))
    assert cmp.pasts[0].shift_defect <= 1e-12
