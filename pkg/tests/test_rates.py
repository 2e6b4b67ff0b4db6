import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nskd import attack, rates
from nskd.attack import alice_bob_stats, table_joint
from nskd.exceptions import DomainError, NotNormalized
from nskd.info import (
    binary_entropy,
    conditional_mutual_information,
    mutual_information,
)

SQRT2 = math.sqrt(2.0)


class TestEntropy:
    def test_binary_entropy_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-12)

    def test_binary_entropy_domain(self):
        with pytest.raises(DomainError):
            binary_entropy(-0.1)
        with pytest.raises(DomainError):
            binary_entropy(1.1)

    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_binary_entropy_symmetry(self, p):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1.0 - p), abs=1e-12)

    def test_mutual_information_trivia(self):
        independent = np.full((2, 2), 0.25)
        assert mutual_information(independent) == pytest.approx(0.0, abs=1e-12)
        correlated = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert mutual_information(correlated) == pytest.approx(1.0, abs=1e-12)

    def test_mutual_information_symmetry(self, rng):
        joint = rng.dirichlet(np.ones(6)).reshape(2, 3)
        assert mutual_information(joint) == pytest.approx(
            mutual_information(joint.T), abs=1e-12
        )

    def test_mutual_information_rejects_unnormalized(self):
        with pytest.raises(NotNormalized):
            mutual_information(np.full((2, 2), 0.3))

    def test_eve_alice_information_from_joint(self):
        for p_nl in (0.1, 0.5, 0.9):
            joint = table_joint(p_nl)
            ae = joint.p.sum(axis=1)
            assert mutual_information(ae) == pytest.approx(
                (1 - p_nl) / 2, abs=1e-12
            )

    def test_cmi_of_table_joint_is_p_nl(self):
        for p_nl in (0.0, 0.4, 1.0):
            joint = table_joint(p_nl)
            assert conditional_mutual_information(joint.p) == pytest.approx(
                p_nl, abs=1e-12
            )


class TestOneWayRate:
    def test_perfect_key_at_one(self):
        assert rates.ck_rate(1.0) == 1.0

    def test_closed_form_matches_joint_route(self):
        for p_nl in np.linspace(0.0, 1.0, 101):
            direct = rates.ck_rate(float(p_nl))
            stats = alice_bob_stats(table_joint(float(p_nl)))
            assert direct == pytest.approx(stats.i_ab - stats.i_ae, abs=1e-12)

    def test_root_location(self):
        root = rates.oneway_threshold()
        assert root == pytest.approx(0.318, abs=1e-3)
        assert rates.ck_rate(root + 1e-6) > 0.0
        assert rates.ck_rate(root - 1e-6) < 0.0

    def test_positive_inside_quantum_region(self):
        assert rates.ck_rate(SQRT2 - 1.0) > 0.0


class TestPreprocessing:
    def test_zero_noise_reduces_to_plain_rate(self):
        for p_nl in (0.2, 0.5, 0.9):
            assert rates.preprocessed_rate(p_nl, 0.0) == pytest.approx(
                rates.ck_rate(p_nl), abs=1e-12
            )

    def test_half_noise_kills_everything(self):
        for p_nl in (0.1, 0.6):
            assert rates.preprocessed_rate(p_nl, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_rate_is_continuous_in_q(self):
        qs = np.linspace(0.0, 0.5, 201)
        vals = [rates.preprocessed_rate(0.3, float(q)) for q in qs]
        jumps = np.abs(np.diff(vals))
        assert jumps.max() < 0.01

    def test_noise_helps_at_quarter(self):
        assert rates.ck_rate(0.25) < 0.0
        best = max(
            rates.preprocessed_rate(0.25, float(q)) for q in np.arange(0.0, 0.5, 1e-3)
        )
        assert best > 0.0

    def test_optimizer_beats_grid_start(self):
        for p_nl in (0.25, 0.4, 0.8):
            opt = rates.optimize_preprocessing(p_nl)
            assert opt.rate >= rates.ck_rate(p_nl) - 1e-12

    def test_no_noise_needed_at_perfect_correlation(self):
        opt = rates.optimize_preprocessing(1.0)
        assert opt.q_opt == 0.0
        assert opt.rate == pytest.approx(1.0, abs=1e-12)

    def test_optimized_rate_monotone_in_p_nl(self):
        values = [rates.optimize_preprocessing(float(p)).rate for p in np.linspace(0.1, 1.0, 19)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_threshold_value(self):
        threshold = rates.preprocessing_threshold()
        assert threshold == pytest.approx(0.236, abs=3e-3)
        assert rates.pnl_to_disturbance(threshold) == pytest.approx(0.063, abs=2e-3)


class TestDisturbance:
    def test_reference_points(self):
        assert rates.disturbance_to_pnl(0.0) == pytest.approx(SQRT2 - 1.0, abs=1e-12)
        assert rates.disturbance_to_pnl(0.063) == pytest.approx(0.236, abs=1e-3)
        assert rates.disturbance_to_pnl(0.1136) == pytest.approx(0.093, abs=1e-3)

    def test_clamped_to_unit_interval(self):
        assert rates.disturbance_to_pnl(0.5) == 0.0
        assert rates.disturbance_to_pnl(0.3) == 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            rates.disturbance_to_pnl(-0.01)
        with pytest.raises(DomainError):
            rates.pnl_to_disturbance(0.6)

    @given(st.floats(min_value=0.0, max_value=0.1464, allow_nan=False))
    @settings(max_examples=200)
    def test_round_trip(self, d):
        p = rates.disturbance_to_pnl(d)
        if p > 0.0:
            assert rates.pnl_to_disturbance(p) == pytest.approx(d, abs=1e-12)


class TestIntrinsicClosed:
    def test_endpoints(self):
        assert rates.intrinsic_closed(0.0) == pytest.approx(0.0, abs=1e-12)
        assert rates.intrinsic_closed(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_positive_on_fine_grid(self):
        for p in np.arange(1e-3, 1.0, 1e-3):
            assert rates.intrinsic_closed(float(p)) > 0.0

    def test_known_value(self):
        # h(3/4) - (3/8) h(1/3), spot-checked by hand
        expected = binary_entropy(0.75) - 0.375 * binary_entropy(1.0 / 3.0)
        assert rates.intrinsic_closed(0.5) == pytest.approx(expected, abs=1e-12)


class TestIntrinsicNumeric:
    def test_identity_channel_is_an_upper_bound(self):
        joint = table_joint(0.5)
        value = rates.intrinsic_numeric(joint, restarts=2, seed=1)
        assert value <= conditional_mutual_information(joint.p) + 1e-9

    def test_never_exceeds_min_of_bounds(self):
        for p_nl in (0.2, 0.5, 0.8):
            joint = table_joint(p_nl)
            value = rates.intrinsic_numeric(joint, restarts=4, seed=0)
            assert value <= rates.intrinsic_upper_bound(joint) + rates.OPT_TOL

    def test_monotone_in_restarts(self):
        joint = table_joint(0.6)
        v4 = rates.intrinsic_numeric(joint, restarts=4, seed=3)
        v12 = rates.intrinsic_numeric(joint, restarts=12, seed=3)
        assert v12 <= v4 + 1e-12

    def test_channel_validation(self):
        with pytest.raises(ValueError):
            rates.Channel(np.array([[0.5, 0.4], [0.5, 0.5]]))
        good = rates.Channel(np.array([[0.5, 0.5], [0.0, 1.0]]))
        joint = table_joint(0.3)
        # mapping through a valid channel never goes below the found min
        value = rates.cmi_given_channel(
            joint, rates.Channel(np.eye(len(joint.symbols)))
        )
        assert value == pytest.approx(0.3, abs=1e-12)

    def test_vanishes_at_zero_nonlocality(self):
        value = rates.intrinsic_numeric(table_joint(0.0), restarts=8, seed=0)
        assert value <= 1e-6

    def test_announce_variant_threshold_behavior(self):
        below = rates.intrinsic_numeric(
            attack.sift_alice_announces(attack.attack_from_pnl(0.15)),
            restarts=16,
            seed=0,
        )
        above = rates.intrinsic_numeric(
            attack.sift_alice_announces(attack.attack_from_pnl(0.25)),
            restarts=16,
            seed=0,
        )
        assert below <= 1e-3
        assert above >= 5e-3

    def test_matches_reference_curve_at_unit_nonlocality(self):
        value = rates.intrinsic_numeric(table_joint(1.0), restarts=4, seed=0)
        assert value == pytest.approx(1.0, abs=1e-6)


def brute_force_block(p_nl: float, n: int):
    """Exhaustive oracle for the distillation block statistics.

    Enumerates every outcome/symbol string, Alice's mask bit and the
    public messages, then reconstructs Eve's posterior from scratch.
    """
    joint = table_joint(p_nl)
    cells = [
        ((a, b, joint.symbols[k]), float(pr))
        for (a, b, k), pr in np.ndenumerate(joint.p)
        if pr > 0
    ]
    p_accept = 0.0
    bob_error = 0.0
    views = {}
    for r in (0, 1):
        for combo in itertools.product(cells, repeat=n):
            prob = 0.5
            for _, w in combo:
                prob *= w
            outcomes = [c[0] for c in combo]
            errors = {a ^ b for a, b, _ in outcomes}
            if len(errors) != 1:
                continue
            sigma = errors.pop()
            p_accept += prob
            if sigma == 1:
                bob_error += prob
            key = (
                tuple(sym for _, _, sym in outcomes),
                tuple(a ^ r for a, _, _ in outcomes),
            )
            slot = views.setdefault(key, [0.0, 0.0])
            slot[r] += prob
    bob_error /= p_accept
    equivocation = 0.0
    for w0, w1 in views.values():
        total = w0 + w1
        equivocation += total * binary_entropy(w0 / total)
    equivocation /= p_accept
    eve_info = 1.0 - equivocation
    rate = (1.0 - binary_entropy(bob_error)) - eve_info
    return p_accept, bob_error, eve_info, rate


class TestAdvantageDistillation:
    @pytest.mark.parametrize("p_nl", [0.15, 0.3, 0.6])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_type_count_engine_matches_brute_force(self, p_nl, n):
        ens = rates.ad_block_ensemble(p_nl, n)
        p_acc, bob_err, eve_info, rate = brute_force_block(p_nl, n)
        assert ens.p_accept == pytest.approx(p_acc, abs=1e-12)
        assert ens.bob_error == pytest.approx(bob_err, abs=1e-12)
        assert ens.eve_information() == pytest.approx(eve_info, abs=1e-12)
        assert ens.rate() == pytest.approx(rate, abs=1e-12)

    def test_single_round_reduces_to_oneway(self):
        for p_nl in (0.2, 0.318, 0.5):
            assert rates.ad_rate(p_nl, 1) == pytest.approx(
                rates.ck_rate(p_nl), abs=1e-12
            )
        zeros = dict(rates.ad_threshold(2).per_n_curve)
        assert zeros[1] == pytest.approx(0.318, abs=1e-3)

    def test_positive_block_exists_above_one_fifth(self):
        assert any(rates.ad_rate(0.3, n) > 0.0 for n in range(1, 31))

    def test_threshold_extrapolation(self):
        result = rates.ad_threshold(30)
        assert result.threshold_estimate == pytest.approx(0.2, abs=0.02)
        tail = [z for n, z in result.per_n_curve if n >= 15]
        assert all(b <= a for a, b in zip(tail, tail[1:]))

    def test_acceptance_probability_formula(self):
        # the accepted mass is (1-eps)^n + eps^n with eps the error rate
        for p_nl, n in ((0.4, 5), (0.7, 9)):
            eps = (1 - p_nl) / 4
            ens = rates.ad_block_ensemble(p_nl, n)
            assert ens.p_accept == pytest.approx(
                (1 - eps) ** n + eps**n, abs=1e-12
            )

    def test_preprocessing_composition_helps(self):
        # at p_nl = 0.21 plain distillation fails for every n <= 30 but
        # the noisy composition recovers a positive rate
        assert all(rates.ad_rate(0.21, n) <= 0.0 for n in range(1, 31))
        combined = rates.ad_with_preprocessing(0.21, 30)
        assert combined["best_rate_sign"] == 1
        assert 0.0 < combined["q_used"] < 0.5

    def test_preprocessing_threshold_below_plain(self):
        plain = rates.ad_threshold(20).threshold_estimate
        combined = rates.ad_preprocessing_threshold(20).threshold_estimate
        assert combined < plain

    def test_zero_noise_slice_is_plain_distillation(self):
        # the q = 0 slice of the noisy machinery is exactly the plain rate
        for p_nl in (0.25, 0.35, 0.6):
            for n in (1, 4, 9):
                ens = rates.ad_block_ensemble(p_nl, n)
                assert ens.rate(0.0) == pytest.approx(
                    rates.ad_rate(p_nl, n), abs=1e-15
                )
        # and searching over q can only improve on the plain optimum
        result = rates.ad_with_preprocessing(0.35, 8)
        plain_best = max(rates.ad_rate(0.35, n) for n in range(1, 9))
        assert result["best_rate"] >= plain_best - 1e-12

    def test_block_length_one_with_noise_matches_preprocessing(self):
        # composing noise with a length-1 block is exactly the one-way
        # preprocessed rate, so the zeros must coincide
        combined = rates.ad_preprocessing_threshold(2)
        zeros = dict(combined.per_n_curve)
        assert zeros[1] == pytest.approx(rates.preprocessing_threshold(), abs=1e-3)


class TestRateReport:
    def test_report_fields_and_invariants(self):
        report = rates.rate_report(0.35, restarts=4, seed=0)
        assert report.rate_oneway <= report.rate_oneway_preprocessed + 1e-9
        assert report.intrinsic_numeric <= report.intrinsic_closed + rates.OPT_TOL
        assert 0.0 <= report.q_opt <= 0.5
        assert report.disturbance == pytest.approx(
            rates.pnl_to_disturbance(0.35), abs=1e-12
        )

    def test_report_outside_quantum_region_has_nan_disturbance(self):
        report = rates.rate_report(0.8, restarts=2, seed=0)
        assert math.isnan(report.disturbance)

    def test_curve_rows_columns(self):
        rows = rates.curve_rows([0.0, 0.05], restarts=2, seed=0)
        assert list(rows[0]) == list(rates.CURVE_COLUMNS)
        assert rows[0]["p_nl"] == pytest.approx(SQRT2 - 1.0, abs=1e-12)
        assert rows[0]["rate_q0"] == pytest.approx(
            rates.ck_rate(SQRT2 - 1.0), abs=1e-12
        )
