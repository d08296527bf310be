"""Monte Carlo size, power and bias studies.

Samples are drawn from the 12-cell multinomial of the MAR verification
model. Every replicate gets its own random stream derived from
``(seed, replicate)`` so that results do not depend on how replicates are
scheduled across worker processes.
"""

import csv
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import em, inference, mi, sem
from .exceptions import InfeasibleScenario, InputError, PVCompareError
from .model import Lambdas, Theta, VerificationTable, cell_probabilities

EM_METHODS = ("em_global", "em_individual_raw", "em_individual_bonferroni",
              "em_individual_holm")
MI_METHODS = ("mi_wald", "mi_combined_p", "mi_lrt") + tuple(
    f"mi_{test}_{adj}" for test in mi.INDIVIDUAL_METHODS
    for adj in inference.ADJUST_METHODS)
METHODS = EM_METHODS + MI_METHODS
MAX_DISCARDS = 100000
PV_NAMES = ("ppv1", "npv1", "ppv2", "npv2")


@dataclass(frozen=True)
class Scenario:
    """One cell of a simulation grid."""

    theta: Theta
    lambdas: Lambdas
    n: int
    n_reps: int = 1000
    alpha: float = 0.05
    require_mi_feasible: bool = True
    seed: int = 0
    methods: tuple = ("em_global",)
    name: str = ""
    m: int = mi.DEFAULT_M
    delta: float = em.DEFAULT_DELTA

    def __post_init__(self):
        if self.n < 1:
            raise InfeasibleScenario(f"sample size must be positive, got {self.n}")
        if self.n_reps < 1:
            raise InfeasibleScenario(f"n_reps must be positive, got {self.n_reps}")
        if not 0.0 < self.alpha < 1.0:
            raise InfeasibleScenario(f"alpha must be in (0, 1), got {self.alpha}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InfeasibleScenario(f"unknown methods {unknown}")

    def probabilities(self):
        """The 12 cell probabilities in (a, b, c) order."""
        try:
            xi, psi, zeta = cell_probabilities(self.theta, self.lambdas)
        except PVCompareError as exc:
            raise InfeasibleScenario(f"scenario {self.name!r}: {exc}") from exc
        probs = np.array(xi + psi + zeta)
        if np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
            raise InfeasibleScenario(f"scenario {self.name!r} has invalid cell probabilities")
        return probs / probs.sum()


@dataclass
class StudyResult:
    scenario: Scenario
    rates: dict
    rejections: dict
    excluded: dict
    biases: dict
    discards: int
    wall_time: float
    pipeline_times: dict = field(default_factory=dict)

    def exclusion_rate(self, method):
        return self.excluded[method] / self.scenario.n_reps


def _mi_feasible(counts):
    return all(v > 0 for v in counts[:8])


def draw_table(scn, rng, probs=None, with_discards=False):
    """Draw one verification table, regenerating MI-infeasible samples if requested.

    Returns the table, or ``(table, discards)`` when ``with_discards``.
    """
    if probs is None:
        probs = scn.probabilities()
    discards = 0
    while True:
        counts = rng.multinomial(scn.n, probs)
        if not scn.require_mi_feasible or _mi_feasible(counts):
            break
        discards += 1
        if discards >= MAX_DISCARDS:
            raise InfeasibleScenario(
                f"no sample with all verified cells positive after {MAX_DISCARDS} draws")
    table = VerificationTable.from_counts([int(v) for v in counts])
    return (table, discards) if with_discards else table


def _rng(seed, rep):
    return np.random.default_rng(np.random.SeedSequence([seed, rep]))


def _em_pipeline(table, scn):
    res = em.run_em(table, delta=scn.delta)
    cov = sem.sem_covariance(table, res, tol=sem.tol_for_delta(scn.delta))
    inf = inference.PvInference(res.theta_hat.eta, cov.sigma_eta, table.n)
    q2, pq = inference.global_test(inf)
    _, _, p_ppv, p_npv = inference.individual_tests(inf)
    out = {"em_global": pq < scn.alpha}
    for adj in inference.ADJUST_METHODS:
        out[f"em_individual_{adj}"] = any(inference.adjust((p_ppv, p_npv), adj, scn.alpha))
    return out, res.theta_hat.eta


def _mi_pipeline(table, scn, seed):
    imp = mi.impute_m(table, scn.m, mi.DEFAULT_CYCLES, seed)
    pooled = mi.pool(imp, alpha=scn.alpha)
    out = {"mi_wald": pooled.f1[2] < scn.alpha,
           "mi_combined_p": pooled.f2[2] < scn.alpha,
           "mi_lrt": pooled.f3[2] < scn.alpha}
    for test, by_adj in pooled.decisions.items():
        for adj, dec in by_adj.items():
            out[f"mi_{test}_{adj}"] = any(dec)
    return out, pooled.eta_bar


def run_replicate(scn, rep, probs=None):
    """One replicate: draw a table and run the requested pipelines.

    Returns a dict with the discard count, per-method rejection flags (None
    when the pipeline failed), per-pipeline PV estimates and timings.
    """
    rng = _rng(scn.seed, rep)
    table, discards = draw_table(scn, rng, probs, with_discards=True)
    out = {"discards": discards, "reject": {}, "eta": {}, "time": {}}
    wanted = set(scn.methods)
    pipelines = []
    if wanted & set(EM_METHODS):
        pipelines.append(("em", EM_METHODS, lambda: _em_pipeline(table, scn)))
    if wanted & set(MI_METHODS):
        mi_seed = int(rng.integers(2 ** 63))
        pipelines.append(("mi", MI_METHODS, lambda: _mi_pipeline(table, scn, mi_seed)))
    for name, methods, run in pipelines:
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                flags, eta = run()
        except (PVCompareError, InputError):
            flags, eta = {m: None for m in methods}, None
        out["time"][name] = time.perf_counter() - t0
        out["eta"][name] = eta
        for m in methods:
            if m in wanted:
                out["reject"][m] = flags[m]
    return out


def _run_chunk(args):
    scn, reps, probs = args
    return [run_replicate(scn, r, probs) for r in reps]


def _pipeline_of(method):
    return "em" if method in EM_METHODS else "mi"


def run_study(scn, methods=None, workers=1):
    """Estimate rejection rates and relative biases over ``scn.n_reps`` replicates.

    Replicates whose pipeline fails are excluded from that method's
    denominator and counted in ``excluded``. ``workers`` > 1 spreads the
    replicates over processes; the result is identical for any value.
    """
    if methods is not None:
        scn = Scenario(**{**scn.__dict__, "methods": tuple(methods)})
    probs = scn.probabilities()
    t0 = time.perf_counter()
    reps = list(range(scn.n_reps))
    if workers <= 1:
        results = _run_chunk((scn, reps, probs))
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(scn, c, probs) for c in chunks]))
        by_rep = {}
        for chunk, part in zip(chunks, parts):
            by_rep.update(zip(chunk, part))
        results = [by_rep[r] for r in reps]
    wall = time.perf_counter() - t0

    truth = scn.theta.eta
    rates, rejections, excluded, biases = {}, {}, {}, {}
    for m in scn.methods:
        flags = [r["reject"][m] for r in results]
        ok = [f for f in flags if f is not None]
        excluded[m] = len(flags) - len(ok)
        rejections[m] = int(sum(ok))
        rates[m] = rejections[m] / len(ok) if ok else math.nan
        etas = [r["eta"][_pipeline_of(m)] for r in results]
        etas = np.array([e for e in etas if e is not None])
        if etas.size:
            biases[m] = tuple(float(v) for v in np.mean((etas - truth) / truth, axis=0))
        else:
            biases[m] = (math.nan,) * 4
    times = {}
    for name in ("em", "mi"):
        vals = [r["time"][name] for r in results if name in r["time"]]
        if vals:
            times[name] = float(sum(vals))
    return StudyResult(scn, rates, rejections, excluded, biases,
                       int(sum(r["discards"] for r in results)), wall, times)


# ---------------------------------------------------------------------------
# scenario files and CSV output
# ---------------------------------------------------------------------------

def scenario_from_record(rec, index=0):
    """Build a :class:`Scenario` from a parsed JSON record."""
    if not isinstance(rec, dict):
        raise InputError(f"scenario {index}: expected an object")
    try:
        th = rec["theta"]
        theta = Theta(th["ppv1"], th["npv1"], th["ppv2"], th["npv2"], th["p"],
                      th.get("alpha1", 1.0), th.get("alpha0", 1.0))
        lam = Lambdas(*rec["lambdas"])
        return Scenario(
            theta=theta, lambdas=lam, n=int(rec["n"]),
            n_reps=int(rec.get("n_reps", 1000)), alpha=float(rec.get("alpha", 0.05)),
            require_mi_feasible=bool(rec.get("require_mi_feasible", True)),
            seed=int(rec.get("seed", 0)),
            methods=tuple(rec.get("methods", ("em_global",))),
            name=str(rec.get("name", f"scenario{index}")),
            m=int(rec.get("m", mi.DEFAULT_M)),
            delta=float(rec.get("delta", em.DEFAULT_DELTA)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"scenario {index}: malformed record ({exc!r})") from exc


def read_scenarios(path):
    """Read scenarios from a JSON array or from JSON Lines (one object per line)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
        records = data if isinstance(data, list) else [data]
    except json.JSONDecodeError:
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    return [scenario_from_record(r, i) for i, r in enumerate(records)]


CSV_FIELDS = ("scenario", "method", "n", "n_reps", "alpha", "seed", "rate", "rejections",
              "excluded", "exclusion_rate", "bias_ppv1", "bias_npv1", "bias_ppv2",
              "bias_npv2", "discards", "runtime_s", "error")


def result_rows(res):
    scn = res.scenario
    for m in scn.methods:
        yield {
            "scenario": scn.name, "method": m, "n": scn.n, "n_reps": scn.n_reps,
            "alpha": scn.alpha, "seed": scn.seed, "rate": repr(res.rates[m]),
            "rejections": res.rejections[m], "excluded": res.excluded[m],
            "exclusion_rate": repr(res.exclusion_rate(m)),
            **{f"bias_{k}": repr(v) for k, v in zip(PV_NAMES, res.biases[m])},
            "discards": res.discards, "runtime_s": f"{res.wall_time:.3f}", "error": "",
        }


def error_row(scn, exc):
    return {"scenario": scn.name, "n": scn.n, "n_reps": scn.n_reps, "alpha": scn.alpha,
            "seed": scn.seed, "error": f"{type(exc).__name__}: {exc}"}


def csv_writer(stream):
    w = csv.DictWriter(stream, fieldnames=CSV_FIELDS, restval="", lineterminator="\n")
    w.writeheader()
    return w
