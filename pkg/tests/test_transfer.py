"""Two-stage transfer: matching, blending, designs, and distances."""

import math

import numpy as np
import pytest

from conftest import HAND_SPECS, hand_estimator, hand_experience
from iwek import serialize
from iwek.core import (
    DataError,
    Fingerprint,
    KnobConfig,
    KnobRanking,
    KnobSpec,
    KPDataset,
    QueryLog,
)
from iwek.rules import Interval, Rule
from iwek.sim import gen_log, oracle_perf
from iwek.transfer import (
    MatchResult,
    TransferredEstimator,
    blend_experiences,
    dis_estimator,
    dis_ranking,
    fingerprint_from_log,
    lhs_sample,
    match_experiences,
    predict_transferred,
    reshape_config,
    similarity_weights,
    spline_features,
    transfer_estimator,
    transfer_ranking,
)

ZERO_OPS = (0.0,) * 8


def test_fingerprint_from_log_hand_cases():
    half = fingerprint_from_log(QueryLog((50, 50, 0, 0), (0,) * 8))
    assert half.suid == (0.5, 0.5, 0.0, 0.0)
    assert half.ops == ZERO_OPS
    empty = fingerprint_from_log(QueryLog((0, 0, 0, 0), (0,) * 8))
    assert empty.as_vector() == (0.0,) * 12
    heavy = fingerprint_from_log(QueryLog((90, 10, 0, 0), (60, 20, 0, 0, 0, 0, 0, 20)))
    assert heavy.suid[0] == pytest.approx(0.9)
    assert heavy.ops[0] == pytest.approx(0.6)
    assert max(heavy.ops) == heavy.ops[0]


def test_dis_ranking_hand_cases():
    f = Fingerprint((1.0, 0, 0, 0), ZERO_OPS)
    assert dis_ranking(f, f) == 0.0
    g = Fingerprint((0.0, 1.0, 0, 0), ZERO_OPS)
    assert dis_ranking(f, g) == pytest.approx(math.sqrt(2))
    h = Fingerprint(
        (0.5, 0.5, 0.0, 0.0), (0.25, 0.25, 0.25, 0.25, 0, 0, 0, 0)
    )
    k = Fingerprint((1.0, 0.0, 0.0, 0.0), (0.0, 0.5, 0.5, 0, 0, 0, 0, 0))
    assert dis_ranking(h, k) == pytest.approx(math.sqrt(0.75))


def test_match_experiences_orders_by_distance():
    target = Fingerprint((1.0, 0.0, 0.0, 0.0), ZERO_OPS)
    pool = [
        hand_experience("far", read_share=0.36),
        hand_experience("near", read_share=0.93),
        hand_experience("mid", read_share=0.86),
    ]
    match = match_experiences(pool, target, K=2)
    assert [e.scenario_id for e in match.members] == ["near", "mid"]
    assert match.distances == tuple(sorted(match.distances))
    assert not match.truncated
    assert match.distances[0] == pytest.approx((1 - 0.93) * math.sqrt(2))


def test_match_experiences_handles_exact_and_overlong_requests():
    pool = [hand_experience("a", 0.9), hand_experience("b", 0.5)]
    exact = match_experiences(
        pool, Fingerprint((0.9, 1.0 - 0.9, 0.0, 0.0), ZERO_OPS), K=1
    )
    assert exact.members[0].scenario_id == "a"
    assert exact.distances[0] == 0.0
    everything = match_experiences(pool, Fingerprint((1.0, 0, 0, 0), ZERO_OPS), K=2)
    assert len(everything.members) == 2
    assert not everything.truncated
    over = match_experiences(pool, Fingerprint((1.0, 0, 0, 0), ZERO_OPS), K=5)
    assert over.truncated
    assert len(over.members) == 2
    with pytest.raises(DataError):
        match_experiences(pool, Fingerprint((1.0, 0, 0, 0), ZERO_OPS), K=0)
    with pytest.raises(DataError):
        match_experiences([], Fingerprint((1.0, 0, 0, 0), ZERO_OPS), K=1)


def test_similarity_weights_hand_cases():
    assert similarity_weights((0.4,)) == (1.0,)
    assert similarity_weights((0.3, 0.3, 0.3)) == pytest.approx((1 / 3,) * 3)
    w = similarity_weights((0.1, 0.3))
    assert w == pytest.approx((0.75, 0.25), abs=1e-4)
    assert sum(w) == pytest.approx(1.0)
    with pytest.raises(DataError):
        similarity_weights(())


def test_transfer_ranking_single_member_preserves_order():
    member = hand_experience(
        "solo", ranking=KnobRanking((("a", 5.0), ("b", 3.0), ("c", 1.0)))
    )
    out = transfer_ranking([member], [1.0])
    assert out.names == ("a", "b", "c")
    assert out.score("a") == pytest.approx(1.0)
    assert out.score("b") == pytest.approx(0.5)
    assert out.score("c") == pytest.approx(0.0)


def test_transfer_ranking_hand_weighted_average():
    e1 = hand_experience(
        "e1", ranking=KnobRanking((("a", 2.0), ("b", 1.0), ("c", 0.0)))
    )
    e2 = hand_experience(
        "e2", ranking=KnobRanking((("a", 0.0), ("b", 10.0), ("c", 5.0)))
    )
    out = transfer_ranking([e1, e2], (0.75, 0.25))
    assert out.score("a") == pytest.approx(0.75)
    assert out.score("b") == pytest.approx(0.625)
    assert out.score("c") == pytest.approx(0.125)
    assert out.names == ("a", "b", "c")


def test_transfer_ranking_identical_members_reproduce_the_ranking():
    ranking = KnobRanking((("a", 9.0), ("b", 4.0), ("c", 2.0)))
    e1 = hand_experience("e1", ranking=ranking)
    e2 = hand_experience("e2", ranking=ranking)
    out = transfer_ranking([e1, e2], (0.31, 0.69))
    assert out.names == ranking.names


def test_transfer_ranking_order_ignores_member_score_scale():
    base = ((("a", 7.0), ("b", 3.5), ("c", 1.0)), (("a", 1.0), ("b", 8.0), ("c", 2.0)))
    plain = transfer_ranking(
        [
            hand_experience("e1", ranking=KnobRanking(base[0])),
            hand_experience("e2", ranking=KnobRanking(base[1])),
        ],
        (0.6, 0.4),
    )
    for alpha in (1e-6, 0.5, 37.0, 1e6):
        scaled = transfer_ranking(
            [
                hand_experience(
                    "e1",
                    ranking=KnobRanking(
                        tuple((k, alpha * s) for k, s in base[0])
                    ),
                ),
                hand_experience(
                    "e2",
                    ranking=KnobRanking(
                        tuple((k, alpha * s) for k, s in base[1])
                    ),
                ),
            ],
            (0.6, 0.4),
        )
        assert scaled.names == plain.names


def test_transfer_ranking_input_guards():
    member = hand_experience("solo")
    with pytest.raises(DataError):
        transfer_ranking([member], [0.5, 0.5])
    with pytest.raises(DataError):
        transfer_ranking([], [])
    with pytest.raises(DataError):
        transfer_ranking([member], [-1.0])


def test_lhs_single_knob_hits_every_quartile():
    spec = KnobSpec("u", "continuous", (0.0, 1.0), 0.5)
    design = lhs_sample(4, [spec], seed=0)
    assert sorted(int(row[0] * 4) for row in design.unit) == [0, 1, 2, 3]
    values = sorted(x.get("u") for x in design.configs)
    assert [int(v * 4) for v in values] == [0, 1, 2, 3]


def test_lhs_marginals_occupy_every_stratum():
    specs = (
        KnobSpec("a", "continuous", (0.0, 1.0), 0.5),
        KnobSpec("b", "continuous", (0.0, 10.0), 5.0),
    )
    design = lhs_sample(10, specs, seed=4)
    for j in range(2):
        occupancy = sorted(int(design.unit[i][j] * 10) for i in range(10))
        assert occupancy == list(range(10))


def test_lhs_is_deterministic_and_guarded():
    spec = KnobSpec("u", "continuous", (0.0, 1.0), 0.5)
    assert lhs_sample(6, [spec], seed=9) == lhs_sample(6, [spec], seed=9)
    with pytest.raises(DataError):
        lhs_sample(3, [spec])
    with pytest.raises(DataError):
        lhs_sample(5, [])


def test_lhs_integer_knobs_round_and_stay_in_range():
    spec = KnobSpec("k", "integer", (0, 5), 2)
    design = lhs_sample(12, [spec], seed=1)
    for x in design.configs:
        v = x.get("k")
        assert v == round(v)
        assert 0 <= v <= 5


def test_reshape_projects_shared_knobs_and_fills_defaults():
    member = (
        KnobSpec("k1", "continuous", (0.0, 10.0), 1.0),
        KnobSpec("k2", "continuous", (0.0, 10.0), 2.0),
        KnobSpec("k4", "continuous", (0.0, 10.0), 7.0),
    )
    x = KnobConfig.from_mapping({"k1": 1.0, "k2": 2.5, "k3": 3.0})
    out = reshape_config(x, member)
    assert out.as_dict() == {"k1": 1.0, "k2": 2.5, "k4": 7.0}


def test_reshape_is_identity_on_matching_universes():
    x = KnobConfig.from_mapping({"a": 1.0, "b": 2.0})
    assert reshape_config(x, HAND_SPECS) == x


def test_reshape_returns_none_for_disjoint_universes():
    other = (KnobSpec("zz", "continuous", (0.0, 1.0), 0.5),)
    assert reshape_config(KnobConfig.from_mapping({"a": 1.0}), other) is None


def single_knob_dataset(values, labels):
    configs = tuple(KnobConfig.from_mapping({"a": float(v)}) for v in values)
    return KPDataset(configs, tuple(float(v) for v in labels), "curve")


def test_spline_features_constant_labels():
    f = spline_features(single_knob_dataset(range(6), [4.0] * 6))
    assert f.coefficients == (0.5, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert f.y_range == 0.0


def test_spline_features_identical_datasets_agree():
    a = spline_features(single_knob_dataset(range(8), np.sin(np.arange(8))))
    b = spline_features(single_knob_dataset(range(8), np.sin(np.arange(8))))
    assert a == b


def test_spline_features_recover_a_linear_curve():
    values = range(10)
    labels = [5.0 + 2.0 * v for v in values]
    f = spline_features(single_knob_dataset(values, labels))
    assert f.y_min == 5.0
    assert f.y_range == 18.0
    assert np.allclose(f.coefficients, (0.0, 1.0, 0.0, 0.0, 0.0, 0.0), atol=1e-8)


def test_spline_features_ignore_row_order():
    values = [3.0, 0.0, 4.0, 1.0, 2.0, 5.0]
    labels = [9.0, 0.0, 16.0, 1.0, 4.0, 25.0]
    shuffled = spline_features(single_knob_dataset(values, labels))
    ordered = spline_features(
        single_knob_dataset(sorted(values), sorted(labels))
    )
    assert shuffled == ordered


def test_spline_features_need_four_points():
    with pytest.raises(DataError):
        spline_features(single_knob_dataset(range(3), range(3)))


def test_dis_estimator_hand_cases():
    assert dis_estimator((1.0, 1.0), (2.0, 2.0)) == pytest.approx(1.0)
    assert dis_estimator((1.0, 0.0), (0.0, 1.0)) == pytest.approx(0.0)
    assert dis_estimator((1.0, 1.0), (1.0, 0.0)) == pytest.approx(1 / math.sqrt(2))
    assert dis_estimator((0.0, 0.0), (1.0, 2.0)) == 0.0
    with pytest.raises(DataError):
        dis_estimator((1.0,), (1.0, 2.0))


def mismatch_specs():
    return (
        KnobSpec("zz1", "continuous", (0.0, 1.0), 0.5),
        KnobSpec("zz2", "continuous", (0.0, 1.0), 0.5),
    )


def target_curve_dataset():
    values = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
    labels = [1.0, 1.5, 2.5, 2.8, 3.6, 4.0]
    configs = tuple(
        KnobConfig.from_mapping({"a": v, "b": 5.0}) for v in values
    )
    return KPDataset(configs, tuple(labels), "target-design", HAND_SPECS)


def test_blend_zeroes_members_that_share_no_knob():
    rule = Rule((Interval("zz1", -math.inf, 0.5),), (0, 0))
    bad = hand_experience(
        "bad",
        read_share=0.5,
        ranking=KnobRanking((("zz1", 1.0),)),
        estimator=hand_estimator((rule,), (1.0,), specs=mismatch_specs()),
        specs=mismatch_specs(),
    )
    good = hand_experience("good", read_share=0.9)
    match = MatchResult((bad, good), (0.1, 0.2), False)
    blended = blend_experiences(match, target_curve_dataset(), HAND_SPECS)
    assert blended.weights[0] == 0.0
    assert blended.weights[1] == 1.0
    assert blended.plans[0] == ()


def test_blend_fails_when_every_member_mismatches():
    rule = Rule((Interval("zz1", -math.inf, 0.5),), (0, 0))
    bad = hand_experience(
        "bad",
        ranking=KnobRanking((("zz1", 1.0),)),
        estimator=hand_estimator((rule,), (1.0,), specs=mismatch_specs()),
        specs=mismatch_specs(),
    )
    with pytest.raises(DataError, match="no transferable experience"):
        blend_experiences(
            MatchResult((bad,), (0.1,), False), target_curve_dataset(), HAND_SPECS
        )


def two_hand_members():
    m1 = hand_estimator(
        (Rule((Interval("a", -math.inf, 5.0),), (0, 0)),), (2.0,), intercept=1.0
    )
    m2 = hand_estimator(
        (Rule((Interval("a", 5.0, math.inf),), (0, 0)),), (1.0,), intercept=2.0
    )
    e1 = hand_experience("m1", read_share=0.9, estimator=m1)
    e2 = hand_experience("m2", read_share=0.8, estimator=m2)
    return e1, e2


HAND_PLAN = tuple((s.name, "target") for s in HAND_SPECS)


def test_predict_transferred_hand_blend():
    e1, e2 = two_hand_members()
    model = TransferredEstimator((e1, e2), (0.75, 0.25), (HAND_PLAN,) * 2, HAND_SPECS)
    x = KnobConfig.from_mapping({"a": 3.0, "b": 5.0})
    # member predictions: 1 + 2 = 3 (rule active) and 2 (rule inactive)
    assert predict_transferred(model, x) == pytest.approx(0.75 * 3.0 + 0.25 * 2.0)


def test_predict_transferred_single_member_and_equal_members():
    e1, e2 = two_hand_members()
    solo = TransferredEstimator((e1,), (1.0,), (HAND_PLAN,), HAND_SPECS)
    x = KnobConfig.from_mapping({"a": 7.0, "b": 5.0})
    assert predict_transferred(solo, x) == pytest.approx(e1.estimator.predict(x))
    twin_a = TransferredEstimator((e1, e1), (0.2, 0.8), (HAND_PLAN,) * 2, HAND_SPECS)
    twin_b = TransferredEstimator((e1, e1), (0.6, 0.4), (HAND_PLAN,) * 2, HAND_SPECS)
    assert predict_transferred(twin_a, x) == pytest.approx(
        predict_transferred(twin_b, x)
    )


def test_transferred_estimator_validates_weights_and_plans():
    e1, e2 = two_hand_members()
    plans = (HAND_PLAN,) * 2
    with pytest.raises(DataError):
        TransferredEstimator((e1, e2), (0.5, 0.6), plans, HAND_SPECS)
    with pytest.raises(DataError):
        TransferredEstimator((e1, e2), (1.5, -0.5), plans, HAND_SPECS)
    with pytest.raises(DataError):
        TransferredEstimator((e1, e2), (1.0,), plans, HAND_SPECS)


def test_transfer_estimator_with_one_member_reduces_to_that_member(
    small_experiences, suite
):
    target = suite.get("tpcc-2")
    fingerprint = fingerprint_from_log(gen_log(target, 10_000, seed=5))

    def label_source(configs):
        return tuple(oracle_perf(target, x, noisy=False) for x in configs)

    model = transfer_estimator(
        small_experiences,
        fingerprint,
        label_source,
        target.knobs,
        K=1,
        N=8,
        seed=2,
    )
    assert len(model.members) == 1
    assert model.weights == (1.0,)
    member = model.members[0]
    probe = lhs_sample(5, target.knobs, seed=11).configs
    for x in probe:
        reshaped = reshape_config(x, member.knob_universe)
        assert predict_transferred(model, x) == pytest.approx(
            member.estimator.predict(reshaped)
        )


def test_transfer_estimator_is_deterministic(small_experiences, suite):
    target = suite.get("tpcc-4")
    fingerprint = fingerprint_from_log(gen_log(target, 10_000, seed=6))

    def label_source(configs):
        return tuple(oracle_perf(target, x, noisy=False) for x in configs)

    one = transfer_estimator(
        small_experiences, fingerprint, label_source, target.knobs, K=2, N=6, seed=4
    )
    two = transfer_estimator(
        small_experiences, fingerprint, label_source, target.knobs, K=2, N=6, seed=4
    )
    assert serialize.dumps(one) == serialize.dumps(two)
    assert sum(one.weights) == pytest.approx(1.0)


def test_transfer_estimator_guards():
    fingerprint = Fingerprint((1.0, 0, 0, 0), ZERO_OPS)

    def label_source(configs):
        return tuple(1.0 for _ in configs)

    with pytest.raises(DataError):
        transfer_estimator((), fingerprint, label_source, HAND_SPECS, K=1, N=6)
    member = hand_experience("m", ranking=KnobRanking((("zz", 1.0),)))
    with pytest.raises(DataError, match="no ranked knob"):
        transfer_estimator(
            (member,),
            fingerprint,
            label_source,
            (KnobSpec("other", "continuous", (0.0, 1.0), 0.5),),
            K=1,
            N=6,
        )
