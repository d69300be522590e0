"""Evaluation harness: report shapes, seed streams, CSV rendering."""

import numpy as np
import pytest

from iwek import evaluation as ev


def test_scenario_seed_streams_are_stable_and_distinct():
    seeds = {
        ev._scenario_seed(0, index, stream)
        for index in range(16)
        for stream in range(5)
    }
    assert len(seeds) == 80
    assert ev._scenario_seed(1, 2, 3) == ev._scenario_seed(1, 2, 3)
    assert ev._scenario_seed(1, 2, 3) != ev._scenario_seed(2, 2, 3)


def test_scenario_context_carries_a_consistent_split(suite_context):
    for ctx in suite_context:
        assert len(ctx.train) == ev.DEFAULT_TRAIN
        assert len(ctx.test) == ev.DEFAULT_POINTS - ev.DEFAULT_TRAIN
        assert ctx.train.scenario_id == ctx.scenario.id
        assert ctx.experience.scenario_id == ctx.scenario.id
        assert len(ctx.experience.ranking.names) == len(ctx.scenario.knobs)


def test_origin_report_averages_its_scores(suite, origin_report):
    assert len(origin_report.scores) == 16
    assert [s.scenario_id for s in origin_report.scores] == [s.id for s in suite]
    assert origin_report.avg_pearson == pytest.approx(
        float(np.mean([s.pearson for s in origin_report.scores]))
    )
    assert origin_report.avg_pair_accuracy == pytest.approx(
        float(np.mean([s.pair_accuracy for s in origin_report.scores]))
    )
    for score in origin_report.scores:
        assert -1.0 <= score.pearson <= 1.0
        assert 0.0 <= score.pair_accuracy <= 1.0
        assert score.error >= 0.0


def test_transfer_report_covers_every_target(suite, transfer_report):
    assert transfer_report.K == 3
    assert len(transfer_report.scores) == 16
    assert [s.scenario_id for s in transfer_report.scores] == [s.id for s in suite]


def test_robustness_report_shape_and_lookup(robustness_report):
    ks = [row[0] for row in robustness_report.rows]
    assert ks == [1, 2, 3, 4, 5, 6]
    accs = [row[2] for row in robustness_report.rows]
    assert robustness_report.accuracy_spread == pytest.approx(max(accs) - min(accs))
    assert robustness_report.pearson_at(3) == robustness_report.rows[2][1]
    assert robustness_report.best_pearson == max(
        row[1] for row in robustness_report.rows
    )
    with pytest.raises(KeyError):
        robustness_report.pearson_at(99)


def test_recall_report_scores_every_scenario(suite, recall_report):
    assert len(recall_report.rows) == 16
    assert [row[0] for row in recall_report.rows] == [s.id for s in suite]
    for _, recall in recall_report.rows:
        assert 0.0 <= recall <= 1.0
    assert recall_report.avg_recall == pytest.approx(
        float(np.mean([row[1] for row in recall_report.rows]))
    )


def test_origin_csv_round_trips_exact_floats(origin_report):
    text = ev.origin_csv(origin_report)
    lines = text.strip().splitlines()
    assert lines[0] == "scenario,pearson,pair_accuracy,error,baseline_pearson"
    assert len(lines) == 17
    first = lines[1].split(",")
    assert first[0] == origin_report.scores[0].scenario_id
    assert float(first[1]) == origin_report.scores[0].pearson
    assert ev.origin_csv(origin_report) == text


def test_other_csv_renderings_are_well_formed(
    transfer_report, robustness_report, recall_report
):
    transfer_lines = ev.transfer_csv(transfer_report).strip().splitlines()
    assert len(transfer_lines) == 17
    assert transfer_lines[0].startswith("scenario,")
    robustness_lines = ev.robustness_csv(robustness_report).strip().splitlines()
    assert len(robustness_lines) == 7
    assert robustness_lines[0].startswith("K,")
    recall_lines = ev.recall_csv(recall_report).strip().splitlines()
    assert len(recall_lines) == 17
    assert recall_lines[0].startswith("scenario,")
