import math

import numpy as np
import pytest

from quenchlab import families, harness
from quenchlab.counterexample import conditional_mean, partial_sum
from quenchlab.families import (
    FamilyError,
    ProcessSpec,
    coboundary_sum,
    decompose_sum,
    direct_sum,
    exact_variance_sum,
    f_l2_sq,
    hannan_partial_sums,
    limit_variance,
    linear_weights,
    sample_path,
    sample_sums,
)
from quenchlab.innovations import force_event, make_lattice, make_scenario
from quenchlab.schedule import build_schedule

TOY = build_schedule((2, 4))
ONE = build_schedule((2,), m_rule=[32])


# --- specs ---------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="garch"),
        dict(innovation="cauchy"),
        dict(kind="linear", coefficients=()),
        dict(kind="linear", coefficients=(1.0,) * (families.MAX_SUPPORT + 2)),
        dict(kind="counterexample"),
        dict(kind="iid", innovation="three_point"),
        dict(kind="perturbed", schedule=TOY, martingale_scale=-1.0),
    ],
)
def test_invalid_specs_are_rejected(kwargs):
    with pytest.raises(FamilyError):
        ProcessSpec(**kwargs)


def test_three_point_law_too_fine_for_integer_draws_is_rejected():
    with pytest.raises(FamilyError):
        families.iid("three_point", build_schedule((2, 4, 8, 16, 32)), law_block=5)


@pytest.mark.parametrize(
    "spec",
    [families.iid(), families.linear([1.0, 0.5, 0.25]), families.perturbed(TOY, 0.5),
     families.iid("three_point", ONE)],
)
def test_spec_json_round_trip(spec):
    assert ProcessSpec.from_json(spec.to_json()) == spec


# --- closed forms --------------------------------------------------------


def test_norms_and_limit_variances():
    assert f_l2_sq(families.iid()) == 1
    assert f_l2_sq(families.iid("three_point", ONE)) == 0.25
    assert f_l2_sq(families.linear([1, 0.5])) == 1.25
    assert limit_variance(families.linear([1, 0.5])) == 2.25
    assert f_l2_sq(families.counterexample(TOY)) == pytest.approx(1 + 0.25)
    assert limit_variance(families.counterexample(TOY)) == 0
    assert limit_variance(families.perturbed(TOY, 0.5)) == 0.25


def test_linear_weights_match_brute_force():
    a = [0.3, -1.0, 2.0, 0.5]
    d, n = len(a) - 1, 7
    w = linear_weights(a, n)
    brute = {}
    for t in range(1, n + 1):
        for j, aj in enumerate(a):
            brute[t - j] = brute.get(t - j, 0.0) + aj
    assert w.size == n + d
    assert list(w) == pytest.approx([brute[s] for s in range(1 - d, n + 1)])


def test_linear_variance_matches_brute_force_and_its_limit():
    a = [2.0 ** -i for i in range(6)]
    spec = families.linear(a)
    for n in (1, 6, 50):
        brute = {}
        for t in range(1, n + 1):
            for j, aj in enumerate(a):
                brute[t - j] = brute.get(t - j, 0.0) + aj
        assert exact_variance_sum(spec, n) == pytest.approx(sum(w * w for w in brute.values()), rel=1e-12)
    ratio = exact_variance_sum(spec, 100_000) / 100_000
    assert ratio == pytest.approx(limit_variance(spec), rel=1e-4)


def test_sample_path_follows_the_moving_average():
    spec = families.linear([1.0, -0.5, 0.25])
    path = sample_path(spec, 50, seed=3)
    eps = families._innovations(spec, families._rng(3, families._PATH, 0), 52)
    for t in range(50):
        # eps[t + 2] is eps_{t+1}
        want = sum(a * eps[t + 2 - j] for j, a in enumerate(spec.coefficients))
        assert path[t] == pytest.approx(want)


# --- Hannan projection sums ----------------------------------------------


def test_geometric_coefficients_satisfy_the_projection_condition():
    rep = hannan_partial_sums(families.linear([2.0 ** -i for i in range(21)]), 20)
    assert rep.total == pytest.approx(2.0, abs=1e-5)
    assert rep.verdict == "holds"


def test_single_coefficient_is_the_iid_case():
    rep = hannan_partial_sums(families.linear([1.0]), 10)
    assert list(rep.partial_sums) == [1.0] * 11
    assert rep.verdict == "holds"


def test_harmonic_coefficients_are_flagged():
    a = [1.0 / (i + 1) for i in range(families.MAX_SUPPORT + 1)]
    rep = hannan_partial_sums(families.linear(a), 10_000)
    assert rep.total == pytest.approx(math.log(10_001) + 0.5772156649, abs=1e-3)
    assert rep.verdict == "diverging"
    assert rep.decay_exponent == pytest.approx(1.0, abs=0.01)


def test_hannan_needs_a_linear_process():
    with pytest.raises(FamilyError):
        hannan_partial_sums(families.iid(), 10)


# --- sampling ------------------------------------------------------------


def test_sampling_is_deterministic_per_replicate():
    spec = families.linear([1.0, 0.5])
    a = sample_sums(spec, 20, [0, 1, 2], seed=4)
    b = sample_sums(spec, 20, [2, 1, 0], seed=4)
    assert np.array_equal(a[0], b[0][::-1])


def test_iid_conditional_mean_is_zero():
    _, cond, _ = sample_sums(families.iid(), 30, range(10), seed=1)
    assert not cond.any()


def test_linear_quenched_past_is_shared():
    _, cond, _ = sample_sums(families.linear([1.0, 0.5, 0.25]), 30, range(10), seed=1)
    assert np.all(cond == cond[0])


@pytest.mark.parametrize(
    "spec, n",
    [
        (families.iid(), 64),
        (families.iid("three_point", ONE), 64),
        (families.linear([1.0, 0.5, 0.25, -0.125]), 64),
        (families.perturbed(TOY, 1.0), 64),
        (families.counterexample(build_schedule((1, 2), m_rule=[2, 8])), 9),
    ],
)
def test_monte_carlo_variance_matches_closed_form(spec, n):
    R = 20_000
    sums, _, _ = sample_sums(spec, n, np.arange(R), mode="annealed", seed=2)
    exact = exact_variance_sum(spec, n)
    x2 = sums * sums
    se = x2.std(ddof=1) / math.sqrt(R)
    assert abs(x2.mean() - exact) <= 3 * se


def test_unknown_sampling_mode_is_rejected():
    with pytest.raises(ValueError):
        sample_sums(families.iid(), 5, [0], mode="frozen")


# --- decomposition -------------------------------------------------------


def test_zero_past_without_martingale_has_no_drift():
    spec = families.perturbed(TOY, 0.0)
    scn = make_scenario(make_lattice(0, TOY, background="zero"), 3)
    d = decompose_sum(spec, scn, 50)
    assert d.nu == 0 and d.Y1 == 0


def test_forced_past_drift():
    spec = families.perturbed(TOY, 0.0)
    n0 = TOY.N_k(1) + 5
    lat = force_event(make_lattice(0, TOY, background="zero"), 2, n0)
    d = decompose_sum(spec, make_scenario(lat, 0), n0 - 1)
    assert d.nu == pytest.approx(-256 / math.sqrt(n0 - 1))
    mirror = force_event(make_lattice(0, TOY, background="zero"), 2, n0, sign=-1)
    assert decompose_sum(spec, make_scenario(mirror, 0), n0 - 1).nu == pytest.approx(256 / math.sqrt(n0 - 1))


def test_decomposition_adds_up():
    spec = families.perturbed(TOY, 0.7)
    scn = make_scenario(make_lattice(6, TOY), 2)
    d = decompose_sum(spec, scn, 40)
    assert d.total * math.sqrt(40) == pytest.approx(direct_sum(spec, scn, 40))
    assert d.nu * math.sqrt(40) == pytest.approx(conditional_mean(scn, 40))


def test_martingale_part_has_the_right_variance():
    spec = families.perturbed(TOY, 0.5)
    lat = make_lattice(6, TOY)
    y1 = np.array([decompose_sum(spec, make_scenario(lat, r), 25).Y1 for r in range(3000)])
    se = (y1 * y1).std(ddof=1) / math.sqrt(y1.size)
    assert abs((y1 * y1).mean() - 0.25) <= 3 * se


def test_coboundary_form_equals_direct_sum():
    spec = families.perturbed(TOY, 1.3)
    lat = make_lattice(8, TOY)
    for r in range(5):
        scn = make_scenario(lat, r)
        for n in (1, 17, 300):
            assert coboundary_sum(spec, scn, n) == pytest.approx(direct_sum(spec, scn, n), abs=1e-9)


def test_coboundary_without_martingale_is_the_telescoped_sum():
    spec = families.perturbed(TOY, 0.0)
    scn = make_scenario(make_lattice(8, TOY), 1)
    assert coboundary_sum(spec, scn, 33) == partial_sum(scn, 33, "telescoped")


def test_pure_martingale_sum_moments():
    spec = families.perturbed(TOY, 1.0)
    lat = make_lattice(0, TOY, background="zero")
    vals = np.array([coboundary_sum(spec, make_scenario(lat, r), 100) for r in range(2000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean()) <= 3 * se
    assert (vals * vals).mean() == pytest.approx(100, rel=0.1)


def test_decomposition_needs_a_lattice_kind():
    with pytest.raises(FamilyError):
        decompose_sum(families.iid(), make_scenario(make_lattice(0, TOY)), 3)


@pytest.mark.slow
def test_perturbed_annealed_law_is_normal():
    spec = families.perturbed(TOY, 1.0)
    cdf = harness.simulate_sums(spec, 10_000, 10_000, "annealed", seed=3)
    assert harness.ks_to_normal(cdf, 1.0) <= 0.05
