import json
import math

import numpy as np
import pytest

from pvcompare import paired, sim
from pvcompare.exceptions import InfeasibleScenario, InputError, NotConverged
from pvcompare.model import Lambdas, Theta

NULL = Theta(0.85, 0.95, 0.85, 0.95, 0.25, 1.09, 10.50)
HIGH = Lambdas(0.95, 0.75, 0.75, 0.30)
FULL = Lambdas(1.0, 1.0, 1.0, 1.0)


def scenario(**kw):
    base = dict(theta=NULL, lambdas=HIGH, n=400, n_reps=20, seed=5)
    base.update(kw)
    return sim.Scenario(**base)


class TestScenario:
    def test_probabilities_sum_to_one(self):
        pr = scenario().probabilities()
        assert pr.sum() == pytest.approx(1.0, abs=1e-12) and np.all(pr >= 0)

    @pytest.mark.parametrize("kw", [dict(n=0), dict(n_reps=0), dict(alpha=1.0),
                                    dict(methods=("nope",))])
    def test_invalid(self, kw):
        with pytest.raises(InfeasibleScenario):
            scenario(**kw)

    def test_infeasible_dependence(self):
        scn = scenario(theta=Theta(0.85, 0.95, 0.85, 0.95, 0.25, 1.5, 10.5))
        with pytest.raises(InfeasibleScenario):
            scn.probabilities()


class TestDraw:
    def test_closure(self):
        scn = scenario(n=12, require_mi_feasible=False)
        rng = np.random.default_rng(0)
        for _ in range(200):
            t = sim.draw_table(scn, rng, probs=np.full(12, 1 / 12))
            assert sum(t.counts()) == 12

    def test_full_verification(self):
        scn = scenario(lambdas=FULL, n=100)
        rng = np.random.default_rng(1)
        assert all(sum(sim.draw_table(scn, rng).c) == 0 for _ in range(100))

    def test_cell_frequencies(self):
        scn = scenario(n=10, require_mi_feasible=False)
        pr = scn.probabilities()
        rng = np.random.default_rng(2)
        draws = 100_000
        total = np.zeros(12)
        for _ in range(draws):
            total += sim.draw_table(scn, rng).counts()
        n_total = draws * scn.n
        sd = np.sqrt(n_total * pr * (1 - pr))
        assert np.all(np.abs(total - n_total * pr) < 4 * sd)

    def test_discards(self):
        scn = scenario(lambdas=Lambdas(0.5, 0.3, 0.3, 0.05), n=60)
        rng = np.random.default_rng(3)
        total = 0
        for _ in range(50):
            t, d = sim.draw_table(scn, rng, with_discards=True)
            assert min(t.a + t.b) > 0
            total += d
        assert total > 0

    def test_discard_limit(self, monkeypatch):
        monkeypatch.setattr(sim, "MAX_DISCARDS", 5)
        scn = scenario(lambdas=Lambdas(0.5, 0.3, 0.3, 0.05), n=5)
        with pytest.raises(InfeasibleScenario):
            sim.draw_table(scn, np.random.default_rng(0))


class TestStudy:
    def test_reproducible(self):
        scn = scenario(methods=("em_global", "em_individual_holm"))
        a, b = sim.run_study(scn), sim.run_study(scn)
        assert a.rates == b.rates and a.biases == b.biases and a.discards == b.discards

    def test_workers_do_not_change_results(self):
        scn = scenario(n_reps=12, methods=("em_global", "mi_combined_p"), m=5)
        a, b = sim.run_study(scn, workers=1), sim.run_study(scn, workers=2)
        assert a.rates == b.rates and a.biases == b.biases and a.excluded == b.excluded

    def test_methods_override(self):
        res = sim.run_study(scenario(n_reps=5), methods=sim.EM_METHODS)
        assert set(res.rates) == set(sim.EM_METHODS)
        assert all(0.0 <= r <= 1.0 for r in res.rates.values())

    def test_holm_rejects_at_least_bonferroni(self):
        res = sim.run_study(scenario(theta=Theta(0.90, 0.80, 0.85, 0.75, 0.75, 1.03, 1.5),
                                     n=300, n_reps=40), methods=sim.EM_METHODS)
        assert (res.rejections["em_individual_holm"]
                >= res.rejections["em_individual_bonferroni"])
        assert res.rejections["em_individual_raw"] >= res.rejections["em_individual_holm"]

    def test_failures_are_excluded(self, monkeypatch):
        real = sim._em_pipeline
        calls = {"n": 0}

        def flaky(table, scn):
            calls["n"] += 1
            if calls["n"] % 4 == 0:
                raise NotConverged("forced")
            return real(table, scn)

        monkeypatch.setattr(sim, "_em_pipeline", flaky)
        res = sim.run_study(scenario(n_reps=20))
        assert res.excluded["em_global"] == 5
        assert res.exclusion_rate("em_global") == pytest.approx(0.25)
        assert 0 <= res.rejections["em_global"] <= 15

    def test_full_verification_matches_complete_data(self):
        scn = scenario(lambdas=FULL, n=300, n_reps=100)
        res = sim.run_study(scn)
        probs = scn.probabilities()
        rejections = 0
        for rep in range(scn.n_reps):
            t = sim.draw_table(scn, sim._rng(scn.seed, rep), probs)
            _, p = paired.complete_global(t.verified())
            rejections += p < scn.alpha
        assert res.rejections["em_global"] == rejections


class TestScenarioFiles:
    RECORD = {"name": "t2", "theta": {"ppv1": 0.85, "npv1": 0.95, "ppv2": 0.85,
                                      "npv2": 0.95, "p": 0.25, "alpha1": 1.09,
                                      "alpha0": 10.5},
              "lambdas": [0.95, 0.75, 0.75, 0.30], "n": 2000, "n_reps": 10,
              "seed": 3, "methods": ["em_global", "mi_lrt"]}

    def test_json_array(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps([self.RECORD, {**self.RECORD, "name": "b"}]))
        scns = sim.read_scenarios(p)
        assert [s.name for s in scns] == ["t2", "b"]
        assert scns[0].theta == NULL and scns[0].lambdas == HIGH
        assert scns[0].methods == ("em_global", "mi_lrt")

    def test_single_object(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps(self.RECORD))
        assert len(sim.read_scenarios(p)) == 1

    def test_json_lines(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text("# grid\n" + json.dumps(self.RECORD) + "\n\n" + json.dumps(self.RECORD) + "\n")
        assert len(sim.read_scenarios(p)) == 2

    def test_defaults(self):
        rec = {k: v for k, v in self.RECORD.items() if k in ("theta", "lambdas", "n")}
        s = sim.scenario_from_record(rec, 4)
        assert (s.n_reps, s.alpha, s.seed, s.methods, s.name) == (
            1000, 0.05, 0, ("em_global",), "scenario4")

    @pytest.mark.parametrize("bad", [
        {"lambdas": [1, 1, 1, 1], "n": 10},
        {"theta": {"ppv1": 0.8}, "lambdas": [1, 1, 1, 1], "n": 10},
        [1, 2, 3],
    ])
    def test_malformed_record(self, bad):
        with pytest.raises(InputError):
            sim.scenario_from_record(bad)

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "s.jsonl"
        p.write_text(json.dumps(self.RECORD) + "\n{not json\n")
        with pytest.raises(InputError, match=":2:"):
            sim.read_scenarios(p)


class TestCsv:
    def test_rows(self, tmp_path):
        res = sim.run_study(scenario(n_reps=4, methods=("em_global", "em_individual_raw")))
        rows = list(sim.result_rows(res))
        assert [r["method"] for r in rows] == ["em_global", "em_individual_raw"]
        assert set(rows[0]) <= set(sim.CSV_FIELDS)
        assert float(rows[0]["rate"]) == res.rates["em_global"]

    def test_error_row(self):
        row = sim.error_row(scenario(), InfeasibleScenario("bad"))
        assert row["error"] == "InfeasibleScenario: bad"
        assert math.isclose(row["alpha"], 0.05)
