"""Reports of fitted comparisons as plain dictionaries, JSON and text.

Both renderings are produced from the same dictionary and print floats with
``repr``, so they agree to full precision.
"""

import json
import math
import platform

import numpy as np

__version__ = "0.1.0"

PV_NAMES = ("ppv1", "npv1", "ppv2", "npv2")


def _clean(obj):
    """Convert numpy types and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def provenance(method, **settings):
    return {
        "method": method,
        **settings,
        "versions": {"pvcompare": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }


def _decisions(decisions):
    return {m: {"ppv": bool(r[0]), "npv": bool(r[1])} for m, r in decisions.items()}


def em_report(table, em_result, sem_result, test_report, settings):
    theta = em_result.theta_hat
    se = sem_result.standard_errors
    names = theta.NAMES
    r = test_report
    return _clean({
        "input": {"counts": list(table.counts())},
        "estimates": {name: {"estimate": getattr(theta, name), "se": se[k]}
                      for k, name in enumerate(names)},
        "em": {"iterations": em_result.iterations, "loglik": em_result.loglik,
               "converged": em_result.converged},
        "sem": {"asymmetry": sem_result.asymmetry,
                "dm_sweeps": list(sem_result.dm_iterations)},
        "matrices": {"parameters": list(names), "i_oc_inv": sem_result.i_oc_inv,
                     "dm": sem_result.dm, "sigma": sem_result.sigma},
        "global": {"q2": r.q2, "df": 2, "pvalue": r.q2_pvalue},
        "individual": {"z_ppv": r.z_ppv, "p_ppv": r.p_ppv,
                       "z_npv": r.z_npv, "p_npv": r.p_npv},
        "decisions": _decisions(r.decisions),
        "ci": {"level": r.level, "ppv_diff": r.ci_ppv_diff, "npv_diff": r.ci_npv_diff},
        "provenance": provenance("em-sem", **settings),
    })


def _f(stat):
    f, l, p, r = stat
    return {"statistic": f, "df1": 2, "df2": l, "pvalue": p, "r": r}


def mi_report(table, imputations, pooled, settings):
    individual = {}
    for method, (s_p, s_n, p_p, p_n, d_p, d_n) in pooled.individual.items():
        individual[method] = {"stat_ppv": s_p, "p_ppv": p_p, "df_ppv": d_p,
                              "stat_npv": s_n, "p_npv": p_n, "df_npv": d_n,
                              "decisions": _decisions(pooled.decisions[method])}
        if method in pooled.cis:
            ci_p, ci_n = pooled.cis[method]
            individual[method]["ci"] = {"level": pooled.level, "ppv_diff": ci_p,
                                        "npv_diff": ci_n}
    notes = []
    if "leisenring" in individual:
        notes.append("leisenring statistics are averaged over imputations and referred "
                     "to the standard normal; correlation between imputations is ignored")
    return _clean({
        "input": {"counts": list(table.counts())},
        "estimates": {name: {"estimate": pooled.eta_bar[k], "se": pooled.se[k]}
                      for k, name in enumerate(PV_NAMES)},
        "covariance": {"within": pooled.sigma_bar, "between": pooled.b_between},
        "imputation_model": {"beta_hat": imputations.beta_hat,
                             "beta_cov": imputations.beta_cov},
        "global": {"wald": _f(pooled.f1), "combined_p": _f(pooled.f2), "lrt": _f(pooled.f3)},
        "individual": individual,
        "notes": notes,
        "provenance": provenance("multiple-imputation", **settings),
    })


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _is_matrix(v):
    return isinstance(v, list) and v and all(isinstance(r, list) for r in v)


def _scalar(v):
    return repr(v) if isinstance(v, float) else str(v)


def _render(obj, indent, lines):
    pad = "  " * indent
    for key, v in obj.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{key}:")
            _render(v, indent + 1, lines)
        elif _is_matrix(v):
            lines.append(f"{pad}{key}:")
            for row in v:
                lines.append(f"{pad}  " + "  ".join(_scalar(x) for x in row))
        elif isinstance(v, list):
            lines.append(f"{pad}{key}: " + "  ".join(_scalar(x) for x in v))
        else:
            lines.append(f"{pad}{key}: {_scalar(v)}")


def to_text(report, title):
    lines = [title, "=" * len(title)]
    _render(report, 0, lines)
    return "\n".join(lines) + "\n"


def parse_text(text):
    """Collect every numeric token of a text report, in order (used to cross-check JSON)."""
    out = []
    for line in text.splitlines()[2:]:
        body = line.split(":", 1)[1] if ":" in line else line
        for tok in body.split():
            try:
                out.append(float(tok))
            except ValueError:
                continue
    return out
