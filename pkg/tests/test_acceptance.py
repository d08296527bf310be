"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and then
asserts the criterion at its stated tolerance.
"""

import json
import time
import warnings

import numpy as np
import pytest

from _helpers import EXAMPLE_COUNTS, draw, random_lambdas, random_theta
from _oracles import central_difference_jacobian, multinomial_delta_cov, pv_functions
from pvcompare import cli, em, inference, mi, paired, sem, sim
from pvcompare.exceptions import NegativeRsWarning, PVCompareError
from pvcompare.model import (Lambdas, Theta, VerificationTable, cell_probabilities,
                             joint_probabilities)

EX = VerificationTable.from_counts(EXAMPLE_COUNTS)
HIGH = Lambdas(0.95, 0.75, 0.75, 0.30)
LOW = Lambdas(0.50, 0.30, 0.30, 0.05)
NULL = Theta(0.85, 0.95, 0.85, 0.95, 0.25, 1.09, 10.50)
ALT = Theta(0.90, 0.80, 0.85, 0.75, 0.75, 1.03, 1.50)
BIAS = Theta(0.80, 0.90, 0.80, 0.90, 0.50, 1.05, 2.68)
SIM_REPS = 2000


def _fmt(v):
    return "(" + ", ".join(f"{x:.4f}" for x in v) + ")"


@pytest.fixture(scope="module")
def em_cli():
    t0 = time.perf_counter()
    args = cli.build_parser().parse_args(["emsempv", *map(str, EXAMPLE_COUNTS), "--json"])
    rep = json.loads(cli.report.to_json(cli.cmd_emsempv(args)))
    return rep, time.perf_counter() - t0


class TestDeterministic:
    def test_example_estimates_and_standard_errors(self, em_cli, acceptance):
        rep, elapsed = em_cli
        names = ("ppv1", "npv1", "ppv2", "npv2")
        est = [rep["estimates"][k]["estimate"] for k in names]
        se = [rep["estimates"][k]["se"] for k in names]
        ok = (np.allclose(est, [0.507, 0.961, 0.334, 0.966], rtol=0, atol=0.0015)
              and np.allclose(se, [0.059, 0.020, 0.052, 0.018], rtol=0, atol=0.0015)
              and elapsed < 5.0)
        assert acceptance(ok, f"estimates {_fmt(est)} SEs {_fmt(se)} runtime {elapsed:.3f}s")

    def test_example_global_and_individual_tests(self, em_cli, acceptance):
        rep = em_cli[0]
        g, ind = rep["global"], rep["individual"]
        lo, hi = rep["ci"]["ppv_diff"]
        ok = (abs(g["q2"] - 30.097) <= 0.05
              and abs(g["pvalue"] / 2.914e-7 - 1) <= 0.02
              and abs(ind["z_ppv"] - 3.251) <= 0.01 and round(ind["p_ppv"], 3) == 0.001
              and abs(abs(ind["z_npv"]) - 0.362) <= 0.01 and round(ind["p_npv"], 3) == 0.718
              and abs(lo - 0.069) <= 0.002 and abs(hi - 0.278) <= 0.002)
        assert acceptance(ok, f"Q2 {g['q2']:.4f} p {g['pvalue']:.4e} z_ppv {ind['z_ppv']:.4f} "
                              f"(p {ind['p_ppv']:.4f}) z_npv {ind['z_npv']:.4f} "
                              f"(p {ind['p_npv']:.4f}) CI ({lo:.4f}, {hi:.4f})")

    def test_example_em_iterations(self, em_cli, acceptance):
        n_iter = em_cli[0]["em"]["iterations"]
        assert acceptance(abs(n_iter - 186) <= 5, f"{n_iter} iterations at delta 1e-12 "
                                                  f"(target 186 +/- 5)")

    def test_example_sem_diagnostics(self, acceptance):
        res = em.run_em(EX)
        cov = sem.sem_covariance(EX, res)
        eig = np.linalg.eigvalsh(cov.sigma_eta)
        ok = cov.asymmetry < 1e-4 and eig.min() > 0
        assert acceptance(ok, f"asymmetry {cov.asymmetry:.2e}, min eigenvalue {eig.min():.3e}")


class TestMultipleImputation:
    SEEDS = range(40)

    def test_example_pooled_over_seeds(self, acceptance):
        hits = {k: 0 for k in ("estimates", "ses", "f2", "z_ppv", "z_npv")}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NegativeRsWarning)
            for s in self.SEEDS:
                p = mi.pool(mi.impute_m(EX, 20, 100, s))
                z_ppv, z_npv = p.individual["kosinski"][:2]
                hits["estimates"] += np.allclose(p.eta_bar, [0.504, 0.948, 0.327, 0.949],
                                                 rtol=0, atol=0.02)
                hits["ses"] += np.allclose(p.se, [0.062, 0.021, 0.052, 0.020], rtol=0, atol=0.01)
                hits["f2"] += p.f2[2] < 1e-4
                hits["z_ppv"] += 4.2 <= z_ppv <= 5.4
                hits["z_npv"] += 0.1 <= z_npv <= 1.4
        rates = {k: v / len(self.SEEDS) for k, v in hits.items()}
        ok = all(r >= 0.9 for r in rates.values())
        assert acceptance(ok, "in-band seed fractions " + ", ".join(
            f"{k} {r:.2f}" for k, r in rates.items()) + " (need >= 0.90 each)")


class TestSimulation:
    def test_em_global_size_null(self, acceptance):
        res = sim.run_study(sim.Scenario(NULL, HIGH, 2000, SIM_REPS, seed=2))
        rate = res.rates["em_global"]
        assert acceptance(abs(rate - 0.052) <= 0.02,
                          f"Type I {rate:.4f} over {SIM_REPS} reps (target 0.052 +/- 0.02), "
                          f"{res.excluded['em_global']} excluded")

    def test_em_global_power_alternative(self, acceptance):
        res = sim.run_study(sim.Scenario(ALT, HIGH, 500, SIM_REPS, seed=3))
        rate = res.rates["em_global"]
        assert acceptance(abs(rate - 0.841) <= 0.04,
                          f"power {rate:.4f} over {SIM_REPS} reps (target 0.841 +/- 0.04)")

    def test_mi_combined_size_null(self, acceptance):
        studies = [sim.run_study(sim.Scenario(NULL, HIGH, 2000, SIM_REPS // 10, seed=400 + k,
                                              methods=("mi_wald", "mi_combined_p")))
                   for k in range(10)]
        rej = sum(r.rejections["mi_combined_p"] for r in studies)
        used = sum(SIM_REPS // 10 - r.excluded["mi_combined_p"] for r in studies)
        rate = rej / used
        ordered = np.mean([r.rates["mi_wald"] <= r.rates["mi_combined_p"] for r in studies])
        ok = abs(rate - 0.042) <= 0.02 and ordered >= 0.9
        assert acceptance(ok, f"combined-p Type I {rate:.4f} (target 0.042 +/- 0.02); "
                              f"Wald <= combined-p in {ordered:.0%} of 10 studies")

    def test_relative_bias_low_verification(self, acceptance):
        printed = {"em_global": (-0.008, -0.031), "mi_combined_p": (-0.010, -0.045)}
        negative, close, parts = True, True, []
        for n in (200, 1000):
            res = sim.run_study(sim.Scenario(BIAS, LOW, n, SIM_REPS, seed=6,
                                             methods=tuple(printed)))
            for m, ref in printed.items():
                b = res.biases[m]
                negative &= all(v < 0 for v in b)
                if n == 1000:
                    close &= abs(b[0] - ref[0]) <= 0.03 and abs(b[1] - ref[1]) <= 0.03
                parts.append(f"{m[:2]} n={n} {_fmt(b)}")
        assert acceptance(negative and close,
                          f"all negative {negative}, n=1000 within 0.03 {close}; "
                          + "; ".join(parts))


class TestProperties:
    def test_em_loglik_monotone(self, acceptance):
        rng = np.random.default_rng(500)
        done = worst = 0
        while done < 500:
            t = draw(rng, random_theta(rng), random_lambdas(rng), int(rng.integers(100, 2000)))
            try:
                res = em.run_em(t, delta=1e-10, raise_on_failure=False)
            except PVCompareError:
                continue
            done += 1
            tr = np.array(res.loglik_trajectory)
            worst = min(worst, float(np.min(np.diff(tr), initial=0.0)) / np.abs(tr).max())
        assert acceptance(worst >= -1e-9, f"500 scenarios, largest relative decrease {-worst:.1e}")

    def test_probability_normalization(self, acceptance):
        rng = np.random.default_rng(10_000)
        worst, negative = 0.0, 0
        for _ in range(10_000):
            th = random_theta(rng)
            phi, varphi = joint_probabilities(th)
            xi, psi, zeta = cell_probabilities(th, random_lambdas(rng))
            worst = max(worst, abs(sum(phi) + sum(varphi) - 1), abs(sum(xi + psi + zeta) - 1))
            negative += min(phi + varphi + xi + psi + zeta) < 0
        ok = worst <= 1e-12 and negative == 0
        assert acceptance(ok, f"1e4 Thetas, max |sum - 1| {worst:.1e}, negative cells {negative}")

    def test_complete_data_equivalence(self, acceptance):
        rng = np.random.default_rng(200)
        worst, done = 0.0, 0
        while done < 200:
            t = draw(rng, random_theta(rng), Lambdas(1.0, 1.0, 1.0, 1.0),
                     int(rng.integers(200, 3000)))
            if min(t.a + t.b) == 0:
                continue
            done += 1
            res = em.run_em(t)
            cov = sem.sem_covariance(t, res)
            q2, _ = inference.global_test(
                inference.PvInference(res.theta_hat.eta, cov.sigma_eta, t.n))
            ref, _ = paired.complete_global(t.verified())
            worst = max(worst, abs(q2 / ref - 1))
        assert acceptance(worst <= 1e-3, f"200 tables, max relative Q2 difference {worst:.1e}")

    def test_delta_covariance_vs_finite_differences(self, acceptance):
        rng = np.random.default_rng(201)
        worst = 0.0
        for _ in range(200):
            c = rng.integers(1, 400, 8)
            oracle = multinomial_delta_cov(pv_functions, c, central_difference_jacobian)
            est = paired.estimates(VerificationTable.from_counts(tuple(c) + (0,) * 4).verified())
            worst = max(worst, float(np.abs(est.sigma - oracle).max()))
        assert acceptance(worst <= 1e-8, f"200 tables, max absolute difference {worst:.1e}")

    def test_mi_margins_and_determinism(self, acceptance):
        rng = np.random.default_rng(100)
        failures = 0
        for _ in range(100):
            t = VerificationTable.from_counts(rng.integers(1, 80, 12))
            seed = int(rng.integers(2 ** 31))
            a = mi.impute_m(t, 5, 100, seed, analyze=False)
            b = mi.impute_m(t, 5, 100, seed, analyze=False)
            same = a.tables == b.tables
            margins = all(
                np.allclose(ct.n_cells, t.n_cells)
                and all(x >= v for x, v in zip(ct.x, t.a))
                and all(y >= v for y, v in zip(ct.y, t.b)) for ct in a.tables)
            failures += not (same and margins)
        assert acceptance(failures == 0, f"100 (table, seed) pairs, {failures} failures")

    def test_holm_contains_bonferroni(self, acceptance):
        rng = np.random.default_rng(10_001)
        violations = 0
        for p1, p2, alpha in zip(rng.uniform(0, 0.2, 10_000), rng.uniform(0, 0.2, 10_000),
                                 rng.uniform(0.01, 0.1, 10_000)):
            bonf = inference.adjust((p1, p2), "bonferroni", alpha)
            holm = inference.adjust((p1, p2), "holm", alpha)
            violations += any(b and not h for b, h in zip(bonf, holm))
        assert acceptance(violations == 0, f"1e4 p-value pairs, {violations} violations")
