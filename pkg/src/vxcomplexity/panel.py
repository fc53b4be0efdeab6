"""Country-period growth panel and fixed-effects growth regressions.

Windows are 2000-2004, 2005-2009 and 2010-2014. For a window (s, t):

    dy    = log gdp_pc_t - log gdp_pc_s       y_lag = log gdp_pc_s
    n     = log pop_t - log pop_s             dK    = log K_t - log K_s
    dH    = h(H_t) - h(H_s)                   H_lag = h(H_s)
    dC    = g(C_t) - g(C_s)                   C_lag = g(C_s)

with g = log for VXF/EF and the identity for ECI (h is log by default).
Both fitted models absorb country and period effects with dummies.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .errors import CollinearityError, ValidationError
from .iot import AuxiliarySeries

logger = logging.getLogger(__name__)

PERIODS = ((2000, 2004), (2005, 2009), (2010, 2014))
EXCLUDED_COUNTRIES = ("LUX", "MLT", "TWN")
METRICS = ("vxf", "ef", "eci")
DEFAULT_TRANSFORM = {"vxf": "log", "ef": "log", "eci": "level"}
COV_TYPES = ("HC0", "HC1", "HC2", "HC3")

FD_DYNAMIC_TERMS = ("y_lag", "n", "dK", "dC", "C_lag", "dH", "H_lag")
WITHIN_FE_TERMS = ("n", "dK", "dC", "dH")
PANEL_COLUMNS = ("dy", "y_lag", "n", "dK", "dH", "H_lag", "dC", "C_lag")

ScoresByYear = Mapping[int, Mapping[str, float]]


@dataclass(frozen=True)
class RejectedRow:
    country: str
    period: str
    missing: tuple[tuple[int, str], ...]  # (year, variable)


@dataclass(frozen=True, eq=False)
class PanelDataset:
    frame: pd.DataFrame
    metric: str
    transform: str
    rejected: tuple[RejectedRow, ...] = ()

    @property
    def n_obs(self) -> int:
        return len(self.frame)

    @property
    def complete(self) -> bool:
        return not self.rejected

    def missing_pairs(self) -> list[tuple[str, int]]:
        return sorted({(r.country, y) for r in self.rejected for y, _ in r.missing})


def _transform(value, how):
    if value is None:
        return None
    if how == "log":
        return float(np.log(value)) if value > 0 else None
    return float(value)


def _period_label(period):
    return f"{period[0]}-{period[1]}"


def scores_from_aux(aux: AuxiliarySeries, metric: str) -> dict[int, dict[str, float]]:
    """Externally published EF/ECI series stored in the auxiliary file."""
    if metric not in ("ef", "eci"):
        raise ValidationError(f"auxiliary files only carry ef/eci series, not {metric!r}")
    out: dict[int, dict[str, float]] = {}
    for (country, year), cell in aux.values.items():
        if metric in cell:
            out.setdefault(year, {})[country] = cell[metric]
    return out


def build_panel(
    aux: AuxiliarySeries,
    scores: ScoresByYear | None,
    metric: str,
    transform: str | None = None,
    *,
    countries: Sequence[str] | None = None,
    periods: Sequence[tuple[int, int]] = PERIODS,
    exclude: Sequence[str] = EXCLUDED_COUNTRIES,
    human_capital_transform: str = "log",
) -> PanelDataset:
    """Assemble one row per (country, window).

    ``scores`` maps year -> country -> metric value; ``None`` takes the ef/eci
    series from ``aux``. Rows missing any endpoint value (or with a value whose
    log is undefined) are rejected and listed, never imputed.
    """
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {METRICS}")
    transform = transform or DEFAULT_TRANSFORM[metric]
    if transform not in ("log", "level") or human_capital_transform not in ("log", "level"):
        raise ValidationError("transforms must be 'log' or 'level'")
    if scores is None:
        scores = scores_from_aux(aux, metric)
    if countries is None:
        pool = set(aux.countries()) | {c for by_c in scores.values() for c in by_c}
    else:
        pool = set(countries)
    pool = sorted(pool - set(exclude))

    rows, rejected = [], []
    for country in pool:
        for period in periods:
            start, end = period
            got, missing = {}, []
            for year in (start, end):
                for var, how in (("gdp_pc", "log"), ("population", "log"), ("capital", "log"),
                                 ("human_capital", human_capital_transform)):
                    val = _transform(aux.get(country, year, var), how)
                    if val is None:
                        missing.append((year, var))
                    got[var, year] = val
                val = _transform(scores.get(year, {}).get(country), transform)
                if val is None:
                    missing.append((year, metric))
                got[metric, year] = val
            if missing:
                rejected.append(RejectedRow(country, _period_label(period), tuple(missing)))
                continue
            rows.append({
                "country": country,
                "period": _period_label(period),
                "dy": got["gdp_pc", end] - got["gdp_pc", start],
                "y_lag": got["gdp_pc", start],
                "n": got["population", end] - got["population", start],
                "dK": got["capital", end] - got["capital", start],
                "dH": got["human_capital", end] - got["human_capital", start],
                "H_lag": got["human_capital", start],
                "dC": got[metric, end] - got[metric, start],
                "C_lag": got[metric, start],
            })
    if rejected:
        logger.warning("panel: rejected %d incomplete rows", len(rejected))
    frame = pd.DataFrame(rows, columns=["country", "period", *PANEL_COLUMNS])
    return PanelDataset(frame, metric, transform, tuple(rejected))


@dataclass(frozen=True, eq=False)
class RegressionResult:
    coefficients: dict[str, float]
    robust_se: dict[str, float]
    tvalues: dict[str, float]
    pvalues: dict[str, float]
    r2: float  # within (demeaned) R^2
    adj_r2: float
    r2_overall: float  # R^2 of the dummy-variable regression
    n_obs: int
    df_resid: int
    spec: Literal["first-differenced-dynamic", "within-FE"]
    metric: str
    cov_type: str
    fixed_effects: tuple[str, ...] = ("individual", "time")
    residuals: np.ndarray = field(default=None, repr=False)


def _dummies(labels: pd.Series, base=None) -> tuple[np.ndarray, list[str]]:
    levels = sorted(pd.unique(labels))
    base = levels[0] if base is None else base
    if base not in levels:
        raise ValidationError(f"base level {base!r} not in data")
    kept = [lv for lv in levels if lv != base]
    D = (labels.to_numpy()[:, None] == np.array(kept, dtype=object)[None, :]).astype(float)
    return D, kept


def _fe_matrix(frame: pd.DataFrame, base_country=None) -> np.ndarray:
    Dc, _ = _dummies(frame["country"], base_country)
    Dt, _ = _dummies(frame["period"])
    return np.column_stack([np.ones(len(frame)), Dc, Dt])


def _residualize(M: np.ndarray, D: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(D, M, rcond=None)
    return M - D @ coef


def within_transform(frame: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """Remove country and period means (exact for unbalanced panels)."""
    D = _fe_matrix(frame)
    out = _residualize(frame[list(columns)].to_numpy(float), D)
    return pd.DataFrame(out, columns=list(columns), index=frame.index)


def _check_collinearity(X_terms: np.ndarray, names: Sequence[str], D: np.ndarray) -> None:
    Xw = _residualize(X_terms, D)
    scale = np.maximum(np.abs(X_terms).max(axis=0), 1.0)
    dependent = []
    kept = []
    for j, name in enumerate(names):
        cand = kept + [j]
        sub = Xw[:, cand] / scale[cand]
        if np.linalg.matrix_rank(sub, tol=1e-10 * max(1, sub.shape[0])) < len(cand):
            dependent.append(name)
        else:
            kept.append(j)
    if dependent:
        raise CollinearityError(
            f"regressors collinear with earlier regressors or fixed effects: {dependent}", columns=dependent
        )


def _sandwich(X: np.ndarray, bread: np.ndarray, e: np.ndarray, cov_type: str, k_total: int,
              leverage: np.ndarray | None) -> np.ndarray:
    n = X.shape[0]
    u2 = e ** 2
    if cov_type == "HC1":
        u2 = u2 * n / (n - k_total)
    elif cov_type in ("HC2", "HC3"):
        power = 1 if cov_type == "HC2" else 2
        u2 = u2 / (1.0 - leverage) ** power
    meat = X.T @ (u2[:, None] * X)
    return bread @ meat @ bread


def fit_fe(
    panel: PanelDataset,
    terms: Sequence[str],
    spec: str,
    cov_type: str = "HC1",
    method: Literal["lsdv", "within"] = "lsdv",
    base_country: str | None = None,
) -> RegressionResult:
    """OLS of dy on ``terms`` plus country and period dummies."""
    if cov_type not in COV_TYPES:
        raise ValidationError(f"cov_type must be one of {COV_TYPES}")
    frame = panel.frame
    n = len(frame)
    if n == 0:
        raise ValidationError("panel has no observations")
    y = frame["dy"].to_numpy(float)
    X_terms = frame[list(terms)].to_numpy(float)
    D = _fe_matrix(frame, base_country)
    _check_collinearity(X_terms, terms, D)
    X = np.column_stack([X_terms, D])
    k_total = int(np.linalg.matrix_rank(X))
    if k_total < X.shape[1]:
        raise CollinearityError("fixed-effect dummies are collinear", columns=["fixed effects"])
    if n <= k_total:
        raise ValidationError(f"{n} observations cannot identify {k_total} parameters")
    p = len(terms)

    XtX_inv_full = np.linalg.inv(X.T @ X)
    leverage = np.einsum("ij,jk,ik->i", X, XtX_inv_full, X)
    if method == "lsdv":
        beta = XtX_inv_full @ (X.T @ y)
        e = y - X @ beta
        cov = _sandwich(X, XtX_inv_full, e, cov_type, k_total, leverage)[:p, :p]
        beta = beta[:p]
    elif method == "within":
        Xw = _residualize(X_terms, D)
        yw = _residualize(y[:, None], D)[:, 0]
        bread = np.linalg.inv(Xw.T @ Xw)
        beta = bread @ (Xw.T @ yw)
        e = yw - Xw @ beta
        cov = _sandwich(Xw, bread, e, cov_type, k_total, leverage)
    else:
        raise ValidationError(f"unknown method {method!r}")

    yw = _residualize(y[:, None], D)[:, 0]
    ssr = float(e @ e)
    tss_within = float(yw @ yw)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ssr / tss_within if tss_within > 0 else float("nan")
    r2_overall = 1.0 - ssr / tss if tss > 0 else float("nan")
    df_resid = n - k_total
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df_resid
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    pv = 2 * stats.t.sf(np.abs(t), df_resid)
    names = list(terms)
    return RegressionResult(
        coefficients=dict(zip(names, beta.tolist())),
        robust_se=dict(zip(names, se.tolist())),
        tvalues=dict(zip(names, t.tolist())),
        pvalues=dict(zip(names, pv.tolist())),
        r2=r2, adj_r2=adj_r2, r2_overall=r2_overall,
        n_obs=n, df_resid=df_resid,
        spec=spec, metric=panel.metric, cov_type=cov_type,
        residuals=e,
    )


def fit_fd_dynamic(panel: PanelDataset, cov_type: str = "HC1", **kw) -> RegressionResult:
    """Growth on initial income, complexity change and level, and growth covariates."""
    return fit_fe(panel, FD_DYNAMIC_TERMS, "first-differenced-dynamic", cov_type, **kw)


def fit_within_fe(panel: PanelDataset, cov_type: str = "HC1", **kw) -> RegressionResult:
    """Non-dynamic variant: drops initial income, complexity and human-capital levels."""
    return fit_fe(panel, WITHIN_FE_TERMS, "within-FE", cov_type, **kw)


def unconditional_correlation(growth, metric_growth) -> tuple[float, float]:
    """Slope and R^2 of ``growth`` regressed on ``metric_growth`` (with intercept).

    Mappings are aligned on shared keys; sequences are taken as paired.
    """
    if isinstance(growth, Mapping) and isinstance(metric_growth, Mapping):
        keys = sorted(set(growth) & set(metric_growth))
        y = np.array([growth[k] for k in keys], dtype=float)
        x = np.array([metric_growth[k] for k in keys], dtype=float)
    else:
        y = np.asarray(growth, dtype=float)
        x = np.asarray(metric_growth, dtype=float)
        if x.shape != y.shape:
            raise ValidationError("growth and metric growth differ in length")
    if len(x) < 3:
        raise ValidationError(f"need at least 3 paired observations, got {len(x)}")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValidationError("metric growth has zero variance")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    syy = float(yc @ yc)
    r2 = (float(xc @ yc) ** 2 / (sxx * syy)) if syy > 0 else 1.0
    return slope, r2


def growth_pairs(
    aux: AuxiliarySeries,
    scores: ScoresByYear | None,
    metric: str,
    start: int = 2000,
    end: int = 2014,
    exclude: Sequence[str] = EXCLUDED_COUNTRIES,
    transform: str | None = None,
) -> pd.DataFrame:
    """Long-run log GDP-per-capita growth against metric growth, one row per country."""
    transform = transform or DEFAULT_TRANSFORM[metric]
    if scores is None:
        scores = scores_from_aux(aux, metric)
    rows = []
    for country in sorted(set(aux.countries()) - set(exclude)):
        g0, g1 = aux.get(country, start, "gdp_pc"), aux.get(country, end, "gdp_pc")
        c0 = _transform(scores.get(start, {}).get(country), transform)
        c1 = _transform(scores.get(end, {}).get(country), transform)
        if None in (g0, g1, c0, c1):
            continue
        rows.append({"country": country, "gdp_growth": float(np.log(g1) - np.log(g0)),
                     "metric_growth": c1 - c0})
    return pd.DataFrame(rows, columns=["country", "gdp_growth", "metric_growth"])


def write_scatter(pairs: pd.DataFrame, metric: str, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "metric", "metric_growth", "gdp_growth"])
        for r in pairs.itertuples(index=False):
            w.writerow([r.country, metric, repr(float(r.metric_growth)), repr(float(r.gdp_growth))])


def _term_label(term: str, metric: str) -> str:
    m = metric.upper()
    complexity = {"dC": f"Δlog({m})" if metric != "eci" else "ΔECI",
                  "C_lag": f"log({m})_t-4" if metric != "eci" else "ECI_t-4"}
    return {
        "y_lag": "y_t-4", "n": "n", "dK": "Δlog(K)", "dH": "Δlog(H)", "H_lag": "log(H)_t-4",
    }.get(term) or complexity[term]


def stars(p: float) -> str:
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def _row_order(results):
    order = [("y_lag", None), ("n", None), ("dK", None)]
    for r in results:
        for term in ("dC", "C_lag"):
            if (term, r.metric) not in order:
                order.append((term, r.metric))
    order += [("dH", None), ("H_lag", None)]
    return order


def render_table(results: Sequence[RegressionResult]) -> str:
    """Plain-text table: estimate with stars, robust SE in parentheses."""
    width = 12
    head = f"{'':<18}" + "".join(f"{f'({i + 1})':>{width}}" for i in range(len(results)))
    lines = [head, "-" * len(head)]
    for term, metric in _row_order(results):
        label = _term_label(term, metric or "vxf")
        est, se = [], []
        for r in results:
            if term in r.coefficients and (metric is None or r.metric == metric):
                est.append(f"{r.coefficients[term]:.3f}{stars(r.pvalues[term])}")
                se.append(f"({r.robust_se[term]:.3f})")
            else:
                est.append("")
                se.append("")
        lines.append(f"{label:<18}" + "".join(f"{s:>{width}}" for s in est))
        lines.append(f"{'':<18}" + "".join(f"{s:>{width}}" for s in se))
    lines.append("-" * len(head))
    for name, fmt in (("Observations", lambda r: f"{r.n_obs}"), ("R2", lambda r: f"{r.r2:.3f}"),
                      ("Adjusted R2", lambda r: f"{r.adj_r2:.3f}")):
        lines.append(f"{name:<18}" + "".join(f"{fmt(r):>{width}}" for r in results))
    lines.append(f"Robust SE: {', '.join(sorted({r.cov_type for r in results}))}; "
                 "* p<0.1; ** p<0.05; *** p<0.01")
    return "\n".join(lines) + "\n"


def write_results_csv(results: Sequence[RegressionResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "spec", "metric", "term", "label", "estimate", "robust_se", "t", "p", "stars"])
        for i, r in enumerate(results, start=1):
            for term, b in r.coefficients.items():
                w.writerow([i, r.spec, r.metric, term, _term_label(term, r.metric), repr(b),
                            repr(r.robust_se[term]), repr(r.tvalues[term]), repr(r.pvalues[term]),
                            stars(r.pvalues[term])])
            for stat, value in (("n_obs", r.n_obs), ("r2", r.r2), ("adj_r2", r.adj_r2),
                                ("r2_overall", r.r2_overall)):
                w.writerow([i, r.spec, r.metric, stat, stat, repr(value), "", "", "", ""])
