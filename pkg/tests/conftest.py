"""Shared fixtures and small builders.

The expensive pieces (the fitted 16-scenario context and the evaluation
reports derived from it) are session scoped so they are built exactly
once per run and shared between the unit tests and the acceptance gate.
"""

from __future__ import annotations

import math

import pytest

from iwek import evaluation as ev
from iwek.core import Experience, Fingerprint, KnobConfig, KnobRanking, KnobSpec
from iwek.estimator import InterpretableEstimator, fit_ike
from iwek.ranking import default_ensemble, rank_knobs
from iwek.repo import open_repository, put
from iwek.rules import Interval, Rule
from iwek.sim import collect_kp, gen_log, make_scenario_suite
from iwek.transfer import fingerprint_from_log, lhs_sample

HAND_SPECS = (
    KnobSpec("a", "continuous", (0.0, 10.0), 5.0),
    KnobSpec("b", "continuous", (0.0, 10.0), 5.0),
)


def hand_estimator(rules, weights, intercept=0.0, lam=0.1, specs=HAND_SPECS):
    return InterpretableEstimator(
        rules=tuple(rules),
        weights=tuple(weights),
        intercept=intercept,
        lam=lam,
        knobs=specs,
    )


def hand_experience(scenario_id, read_share=1.0, ranking=None, estimator=None,
                    specs=HAND_SPECS):
    """An experience with a prescribed fingerprint and tiny estimator."""
    if estimator is None:
        rule = Rule((Interval("a", -math.inf, 5.0),), (0, 0))
        estimator = hand_estimator((rule,), (1.0,), specs=specs)
    if ranking is None:
        ranking = KnobRanking(tuple((s.name, 1.0 + i) for i, s in enumerate(specs)))
    return Experience(
        fingerprint=Fingerprint((read_share, 1.0 - read_share, 0.0, 0.0), (0.0,) * 8),
        ranking=ranking,
        estimator=estimator,
        knob_universe=specs,
        scenario_id=scenario_id,
    )


def small_dataset(scenario, n=40, seed=0, noisy=True):
    design = lhs_sample(n, scenario.knobs, seed=seed)
    return collect_kp(scenario, design.configs, noisy=noisy)


def small_experience(scenario, seed=0):
    data = small_dataset(scenario, seed=seed)
    return Experience(
        fingerprint=fingerprint_from_log(gen_log(scenario, 10_000, seed=seed)),
        ranking=rank_knobs(default_ensemble(seed), data, seed=seed),
        estimator=fit_ike(data, budget=4, seed=seed),
        knob_universe=scenario.knobs,
        scenario_id=scenario.id,
    )


@pytest.fixture(scope="session")
def suite():
    return make_scenario_suite(seed=0)


@pytest.fixture(scope="session")
def suite_context(suite):
    return ev.build_suite_context(suite, seed=0)


@pytest.fixture(scope="session")
def origin_report(suite, suite_context):
    return ev.run_origin_eval(suite, seed=0, context=suite_context)


@pytest.fixture(scope="session")
def transfer_report(suite, suite_context):
    return ev.run_transfer_eval(suite, seed=0, context=suite_context)


@pytest.fixture(scope="session")
def robustness_report(suite, suite_context):
    return ev.run_robustness_sweep(suite, seed=0, context=suite_context)


@pytest.fixture(scope="session")
def recall_report(suite):
    return ev.ranking_recall(suite, seed=0)


@pytest.fixture(scope="session")
def unit_dataset(suite):
    return small_dataset(suite.get("tpcc-1"))


@pytest.fixture(scope="session")
def unit_model(unit_dataset):
    return fit_ike(unit_dataset, budget=5, seed=0)


@pytest.fixture(scope="session")
def small_experiences(suite):
    return tuple(
        small_experience(suite.get(sid)) for sid in ("tpcc-2", "tpcc-4", "ycsb-1")
    )


@pytest.fixture(scope="session")
def small_repo(small_experiences, tmp_path_factory):
    """A read-only stocked repository; copy it before mutating."""
    repo = open_repository(tmp_path_factory.mktemp("repo") / "store")
    for entry in small_experiences:
        put(repo, entry)
    return repo
