"""Core type behavior: specs, configurations, datasets, rankings."""

import pytest

from iwek.core import (
    DataError,
    Fingerprint,
    KnobConfig,
    KnobRanking,
    KnobSpec,
    KPDataset,
    QueryLog,
    Scenario,
    complete_config,
    default_config,
    validate_config,
)

SPECS = (
    KnobSpec("cache_pages", "integer", (0, 100), 10),
    KnobSpec("io_cost", "continuous", (1.0, 8.0), 4.0),
)


def test_validate_config_accepts_the_defaults():
    assert validate_config(default_config(SPECS), SPECS) == []


def test_validate_config_flags_out_of_range_values():
    x = KnobConfig.from_mapping({"cache_pages": 500})
    violations = validate_config(x, SPECS)
    assert [v.knob for v in violations] == ["cache_pages"]
    assert "outside range" in violations[0].reason


def test_validate_config_allows_partial_configs():
    assert validate_config(KnobConfig(()), SPECS) == []


def test_validate_config_can_require_every_knob():
    violations = validate_config(KnobConfig(()), SPECS, require_complete=True)
    assert {v.knob for v in violations} == {"cache_pages", "io_cost"}
    assert all(v.reason == "missing knob" for v in violations)


def test_validate_config_flags_unknown_and_fractional_knobs():
    x = KnobConfig.from_mapping({"mystery": 1.0, "cache_pages": 2.5})
    reasons = {v.knob: v.reason for v in validate_config(x, SPECS)}
    assert reasons["mystery"] == "unknown knob"
    assert "integer" in reasons["cache_pages"]


def test_knob_config_orders_names_lexicographically():
    a = KnobConfig.from_mapping({"b": 2.0, "a": 1.0})
    b = KnobConfig((("a", 1.0), ("b", 2.0)))
    assert a == b
    assert a.names == ("a", "b")
    assert a.values == (1.0, 2.0)
    assert "a" in a and "z" not in a


def test_knob_config_rejects_duplicates_and_non_finite_values():
    with pytest.raises(DataError):
        KnobConfig((("a", 1.0), ("a", 2.0)))
    with pytest.raises(DataError):
        KnobConfig.from_mapping({"a": float("nan")})


def test_knob_config_with_value_leaves_the_original_untouched():
    x = KnobConfig.from_mapping({"a": 1.0})
    y = x.with_value("a", 3.0)
    z = x.with_value("b", 9.0)
    assert x.get("a") == 1.0
    assert y.get("a") == 3.0
    assert z.names == ("a", "b")


def test_complete_config_fills_defaults():
    x = KnobConfig.from_mapping({"io_cost": 2.0})
    assert complete_config(x, SPECS).as_dict() == {
        "cache_pages": 10.0,
        "io_cost": 2.0,
    }


def test_knob_spec_rejects_bad_definitions():
    with pytest.raises(DataError):
        KnobSpec("x", "fuzzy", (0, 1), 0)
    with pytest.raises(DataError):
        KnobSpec("x", "continuous", (0, 1), 2)
    with pytest.raises(DataError):
        KnobSpec("x", "continuous", (1, 1), 1)


def test_ordinal_levels_must_span_the_index_range():
    spec = KnobSpec("mode", "ordinal", (0, 2), 1, levels=("off", "on", "auto"))
    assert spec.levels == ("off", "on", "auto")
    with pytest.raises(DataError):
        KnobSpec("mode", "ordinal", (0, 5), 1, levels=("off", "on"))


def test_dataset_requires_matching_lengths_and_one_universe():
    x1 = KnobConfig.from_mapping({"a": 1.0})
    x2 = KnobConfig.from_mapping({"b": 1.0})
    with pytest.raises(DataError):
        KPDataset((x1,), (1.0, 2.0), "s")
    with pytest.raises(DataError):
        KPDataset((x1, x2), (1.0, 2.0), "s")
    with pytest.raises(DataError):
        KPDataset((), (), "s")
    data = KPDataset((x1,), (1.0,), "s")
    assert len(data) == 1
    assert data.knob_names == ("a",)


def test_ranking_sorts_descending_with_lexicographic_ties():
    r = KnobRanking((("b", 1.0), ("a", 1.0), ("c", 2.0)))
    assert r.names == ("c", "a", "b")
    assert r.score("c") == 2.0
    with pytest.raises(DataError):
        r.score("missing")
    with pytest.raises(DataError):
        KnobRanking((("a", 1.0), ("a", 2.0)))


def test_fingerprint_blocks_are_normalized_or_zero():
    f = Fingerprint((1.0, 0, 0, 0), (0,) * 8)
    assert f.as_vector() == (1.0,) + (0.0,) * 11
    with pytest.raises(DataError):
        Fingerprint((0.5, 0, 0, 0), (0,) * 8)


def test_scenario_mix_must_sum_to_one():
    Scenario("s", 1.0, (("read", 0.5), ("write", 0.5)))
    with pytest.raises(DataError):
        Scenario("s", 1.0, (("read", 0.5), ("write", 0.6)))


def test_query_log_rejects_negative_counts():
    with pytest.raises(DataError):
        QueryLog((-1, 0, 0, 0), (0,) * 8)
