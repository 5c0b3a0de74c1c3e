import csv

import numpy as np
import pytest

from verhulstpc import harness
from verhulstpc.scenario import loads_scenario
from verhulstpc.verhulst import AlphaStrategy


def _exp(kind, **kw):
    kw.setdefault("trials", 4)
    kw.setdefault("iterations", 60)
    return harness.Experiment(kind, kw.pop("scenario", harness.load_fixture("fig2_k7")), **kw)


def test_fixtures_listed_and_loadable():
    assert harness.list_fixtures() == ["fig2_k7", "table1_defaults", "k25_fig1", "infeasible_demo"]
    for name in harness.list_fixtures():
        harness.load_fixture(name)
    with pytest.raises(KeyError):
        harness.fixture_path("nope")


@pytest.mark.parametrize("kw", [{"kind": "x"}, {"trials": 0}, {"deltas": (1.2,)},
                                {"alphas": (0.0,)}, {"outage_policy": "drop"}, {"k_values": ()}])
def test_experiment_validation(kw):
    kind = kw.pop("kind", "convergence")
    with pytest.raises(ValueError):
        harness.Experiment(kind, harness.load_fixture("fig2_k7"), **kw)


def test_default_iterations_and_seed():
    exp = harness.Experiment("nser_vs_error", harness.load_fixture("fig2_k7"))
    assert exp.n_iter == 1000 and exp.master_seed == 1
    assert harness.DELTA_GRID == (0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2)


def test_draws_feasible_and_within_bounds():
    s = harness.load_fixture("fig2_k7")
    log = harness.DrawLog()
    draws = harness.draw_trials(_exp("convergence", trials=10), s, 0, log)
    assert log.accepted + log.skipped == 10
    for d in draws:
        assert d.system.spectral_radius < 1.0
        assert d.optimum.within_bounds.all()
        # explicit assignment survives every redraw
        assert d.scenario.class_of_user == s.class_of_user


def test_draw_is_reproducible_and_trials_differ():
    s = harness.load_fixture("table1_defaults")
    a, _, _ = harness.draw_trial(s, 3, "convergence", 0, 0)
    b, _, _ = harness.draw_trial(s, 3, "convergence", 0, 0)
    c, _, _ = harness.draw_trial(s, 3, "convergence", 0, 1)
    np.testing.assert_array_equal(a.gains.entries, b.gains.entries)
    assert not np.array_equal(a.gains.entries, c.gains.entries)
    np.testing.assert_array_equal(a.error_rng().random(3), a.error_rng().random(3))


def test_infeasible_scenario_is_skipped():
    s = harness.load_fixture("infeasible_demo")
    d, inf, out = harness.draw_trial(s, 0, "convergence", 0, 0, max_redraws=3)
    assert d is None and inf == 4 and out == 0


def test_keep_policy_accepts_outage():
    # a single user so far from every BS that p* exceeds P_max
    s = loads_scenario("rates_bps = [240e3]\nclass_of_user = [1]\nbs_positions = [(0.001, 0.001)]\n"
                       "mt_positions = [(5, 5)]\nshadowing = false\nfading = false\nnoise_dbm = 0\n")
    d, _, out = harness.draw_trial(s, 0, "convergence", 0, 0, "redraw", max_redraws=2)
    assert d is None and out == 3
    d, _, out = harness.draw_trial(s, 0, "convergence", 0, 0, "keep")
    assert d is not None and d.optimum.outage_count == 1


def test_run_batch_matches_single_runs():
    s = harness.load_fixture("fig2_k7")
    draws = harness.draw_trials(_exp("convergence"), s, 0, harness.DrawLog())
    res = harness.run_batch(draws, AlphaStrategy("fixed", 0.9), 0.1, 80, record=True)
    assert res.nse.shape == (81, len(draws))
    single = harness.run_batch(draws[1:2], AlphaStrategy("fixed", 0.9), 0.1, 80)
    np.testing.assert_array_equal(single.nse[:, 0], res.nse[:, 1])


def test_run_batch_needs_draws():
    with pytest.raises(harness.HarnessError):
        harness.run_batch([], AlphaStrategy(), 0.0, 10)


def test_studies_share_draws():
    exp = _exp("nser_vs_error", deltas=(0.0, 0.1))
    _, out = harness.nser_study(exp)
    assert set(out) == {0.0, 0.1}
    fast0, slow0, ratio, undefined = out[0.0]
    assert fast0.trials == slow0.trials == out[0.1][0].trials
    # same draws, no error: both start from the same NSE
    assert fast0.nse[0, 0] == slow0.nse[0, 0]


def test_loading_study_keys():
    exp = _exp("nse_vs_loading", scenario=harness.load_fixture("table1_defaults"),
               k_values=(3, 5), deltas=(0.0, 0.2), trials=2, iterations=20)
    out = harness.loading_study(exp)
    assert set(out) == {(3, 0.0), (3, 0.2), (5, 0.0), (5, 0.2)}
    assert out[(5, 0.0)].nse.shape[0] == 21


def test_single_k_studies_honour_k_values():
    exp = _exp("adaptive_compare", scenario=harness.load_fixture("table1_defaults"),
               k_values=(6,), trials=2, iterations=5)
    draws, _ = harness.adaptive_study(exp)
    assert all(d.scenario.n_users == 6 for d in draws)


def test_with_users_rejects_explicit():
    with pytest.raises(harness.HarnessError):
        harness._with_users(harness.load_fixture("fig2_k7"), 9)


@pytest.mark.parametrize("k", [1, 5, 30])
def test_complexity_rows(k):
    (row,) = harness.complexity_report([k], iterations=3)
    assert (row.adds_per_user_iter, row.mults_per_user_iter, row.lookups_per_user_iter) == row.predicted
    assert row.aggregate_k_plus_10 == k + 10


@pytest.mark.parametrize("kind, expected", [
    ("convergence", {"convergence_oracle.csv", "convergence_trace_alpha=0.1_delta=0.0.csv",
                     "convergence_trace_alpha=0.9_delta=0.0.csv", "convergence_summary.csv",
                     "convergence_draws.csv"}),
    ("nser_vs_error", {"nser_vs_error_series.csv", "nser_vs_error_summary.csv",
                       "nser_vs_error_draws.csv"}),
    ("adaptive_compare", {"adaptive_compare_series.csv", "adaptive_compare_summary.csv",
                          "adaptive_compare_draws.csv"}),
    ("complexity", {"complexity.csv"}),
])
def test_run_experiment_files(tmp_path, kind, expected):
    extra = {"k_values": (2, 4), "scenario": harness.load_fixture("table1_defaults")}
    exp = _exp(kind, deltas=(0.0,) if kind == "nser_vs_error" else None,
               **(extra if kind == "complexity" else {}))
    paths = harness.run_experiment(exp, tmp_path)
    assert {p.name for p in paths} == expected
    for p in paths:
        with open(p) as fh:
            rows = list(csv.reader(fh))
        assert len(rows) > 1
        assert len({len(r) for r in rows}) == 1


def test_summary_columns(tmp_path):
    harness.run_experiment(_exp("convergence", trials=2), tmp_path)
    with open(tmp_path / "convergence_summary.csv") as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == harness.SUMMARY_COLUMNS


def test_trace_csv_layout(tmp_path):
    harness.run_experiment(_exp("convergence", trials=1, iterations=5), tmp_path)
    with open(tmp_path / "convergence_trace_alpha=0.9_delta=0.0.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["n", "alpha_1"]
    assert len(rows) == 7
    assert rows[-1][1] == ""


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(harness.HarnessError):
        harness.run_experiment(_exp("convergence", trials=1), blocker / "sub")


def test_identical_seeds_identical_bytes(tmp_path):
    for name in ("a", "b"):
        harness.run_experiment(_exp("adaptive_compare", trials=3, deltas=(0.1,)), tmp_path / name)
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()
