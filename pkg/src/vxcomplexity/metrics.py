"""Fitness-complexity iteration, ECI and rankings.

The fitness map, applied to any non-negative country x activity matrix ``adj``::

    F~_c = sum_s adj_cs Q_s            F_c = F~_c / mean(F~)
    Q~_s = 1 / sum_c adj_cs / F_c      Q_s = Q~_s / mean(Q~)

starting from F = Q = 1. On a binary RCA matrix this gives Economic Fitness,
on the weighted value-added share matrix it gives VXF.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateError, NonFiniteError, ReducibleMatrixError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1000
DEFAULT_ECI_ORDER = 18
# F values below this fraction of the mean (which is 1) are floored
ZERO_FITNESS_FLOOR = 1e-13
# relative spread below which country scores are treated as all equal
DEGENERATE_RTOL = 1e-13

SCORES_HEADER = ["country", "metric", "year", "value", "rank", "converged", "iterations"]


@dataclass(frozen=True, eq=False)
class FitnessResult:
    fitness: np.ndarray
    industry_complexity: np.ndarray
    iterations: int
    converged: bool
    final_delta: float
    floored: np.ndarray  # countries reported as "fitness ~ 0"
    countries: tuple[str, ...] = ()
    activities: tuple[str, ...] = ()

    def scores(self) -> dict[str, float]:
        return dict(zip(self.countries, self.fitness.tolist()))


@dataclass(frozen=True, eq=False)
class EciResult:
    eci: np.ndarray
    method: Literal["reflections", "eigenvector"]
    countries: tuple[str, ...] = ()
    order: int | None = None

    def scores(self) -> dict[str, float]:
        return dict(zip(self.countries, self.eci.tolist()))


@dataclass(frozen=True, eq=False)
class ReflectionsResult:
    kc: np.ndarray  # (N + 1) x C
    kp: np.ndarray  # (N + 1) x P
    eci: EciResult


@dataclass(frozen=True)
class RankEntry:
    rank: int
    country: str
    score: float


def _as_matrix(adj) -> np.ndarray:
    for attr in ("W", "M", "values"):
        if hasattr(adj, attr):
            adj = getattr(adj, attr)
            break
    a = np.asarray(adj, dtype=float)
    if a.ndim != 2 or 0 in a.shape:
        raise ValidationError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValidationError("adjacency entries must be finite and non-negative")
    return a


def _labels(adj, name, n, given):
    if given:
        return tuple(given)
    found = getattr(adj, name, ())
    return tuple(found) if len(found) == n else ()


def _name(labels, i, kind):
    return labels[i] if labels else f"{kind} {i}"


def fitness_step(adj: np.ndarray, F: np.ndarray, Q: np.ndarray):
    """One normalized update; returns (F, Q, floored mask)."""
    F_tilde = (adj * Q[None, :]).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        Q_tilde = 1.0 / (adj / F[:, None]).sum(axis=0)
    F_new = F_tilde / F_tilde.mean()
    Q_new = Q_tilde / Q_tilde.mean()
    floored = F_new < ZERO_FITNESS_FLOOR
    if floored.any():
        F_new = np.where(floored, ZERO_FITNESS_FLOOR, F_new)
    return F_new, Q_new, floored


def fitness(
    adj,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    countries: Sequence[str] = (),
    activities: Sequence[str] = (),
) -> FitnessResult:
    """Iterate the fitness map until both F and Q move less than ``tol``.

    A stop at step N is accepted only if step N+1 would also move less than
    ``tol``. Stops at ``max_iter`` with ``converged=False`` otherwise.
    """
    a = _as_matrix(adj)
    C, S = a.shape
    countries = _labels(adj, "countries", C, countries)
    activities = _labels(adj, "activities", S, activities)
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter}")
    zero_rows = np.flatnonzero(a.sum(axis=1) == 0)
    if zero_rows.size:
        names = [_name(countries, i, "country") for i in zero_rows]
        raise NonFiniteError(f"countries with an all-zero row drive fitness to 0: {names}", countries=names)
    zero_cols = np.flatnonzero(a.sum(axis=0) == 0)
    if zero_cols.size:
        names = [_name(activities, i, "activity") for i in zero_cols]
        raise NonFiniteError(f"activities with an all-zero column make complexity infinite: {names}",
                             activities=names)

    F = np.ones(C)
    Q = np.ones(S)
    floored = np.zeros(C, dtype=bool)
    delta = np.inf
    converged = False
    n = 0
    # The step after a candidate stop is computed before accepting it, so an
    # iteration oscillating around its fixed point cannot stop on a short
    # half-cycle. It becomes the next iterate if the check fails.
    upcoming = fitness_step(a, F, Q)
    for n in range(1, max_iter + 1):
        F_new, Q_new, step_floored = upcoming
        if not np.all(np.isfinite(F_new)):
            i = int(np.flatnonzero(~np.isfinite(F_new))[0])
            raise NonFiniteError(f"non-finite fitness for {_name(countries, i, 'country')} at step {n}",
                                 country=_name(countries, i, "country"), step=n)
        if not np.all(np.isfinite(Q_new)):
            i = int(np.flatnonzero(~np.isfinite(Q_new))[0])
            raise NonFiniteError(f"non-finite complexity for {_name(activities, i, 'activity')} at step {n}",
                                 activity=_name(activities, i, "activity"), step=n)
        floored |= step_floored
        delta = max(float(np.max(np.abs(F_new - F))), float(np.max(np.abs(Q_new - Q))))
        F, Q = F_new, Q_new
        upcoming = fitness_step(a, F, Q)
        if delta < tol:
            check = max(float(np.max(np.abs(upcoming[0] - F))), float(np.max(np.abs(upcoming[1] - Q))))
            if check < tol:
                converged = True
                break
    floored = floored & (F <= ZERO_FITNESS_FLOOR)
    if floored.any():
        logger.warning("fitness ~ 0 for %s", [_name(countries, i, "country") for i in np.flatnonzero(floored)])
    if not converged:
        logger.warning("fitness did not converge in %d iterations (delta %.3g)", max_iter, delta)
    for arr in (F, Q, floored):
        arr.setflags(write=False)
    return FitnessResult(F, Q, n, converged, delta, floored, countries, activities)


def _standardize(k: np.ndarray, diversity: np.ndarray) -> np.ndarray:
    mean = k.mean()
    sd = k.std(ddof=1)
    if not sd > DEGENERATE_RTOL * max(abs(mean), np.abs(k).max()):
        raise DegenerateError("country scores have no variance: all countries are equivalent")
    z = (k - mean) / sd
    if np.std(diversity) > 0 and np.corrcoef(z, diversity)[0, 1] < 0:
        z = -z
    return z


def reflection_sequence(M, n_iterations: int = DEFAULT_ECI_ORDER):
    """Method of reflections up to order ``n_iterations``.

    k_c,0 and k_p,0 are diversity and ubiquity; each order first averages
    product scores into countries, then the new country scores back into
    products. Returns (kc, kp), both with one row per order 0..N.
    """
    a = _as_matrix(M)
    if n_iterations < 0:
        raise ValidationError("n_iterations must be non-negative")
    kc0 = a.sum(axis=1)
    kp0 = a.sum(axis=0)
    if np.any(kc0 == 0) or np.any(kp0 == 0):
        raise ValidationError("method of reflections needs no all-zero rows or columns",
                              zero_rows=np.flatnonzero(kc0 == 0).tolist(),
                              zero_columns=np.flatnonzero(kp0 == 0).tolist())
    kc = np.empty((n_iterations + 1, a.shape[0]))
    kp = np.empty((n_iterations + 1, a.shape[1]))
    kc[0], kp[0] = kc0, kp0
    for n in range(1, n_iterations + 1):
        kc[n] = (a * kp[n - 1][None, :]).sum(axis=1) / kc0
        kp[n] = (a * kc[n][:, None]).sum(axis=0) / kp0
    return kc, kp


def eci_reflections(M, n_iterations: int = DEFAULT_ECI_ORDER, countries: Sequence[str] = ()) -> ReflectionsResult:
    """ECI as the standardized k_c,N.

    Raises DegenerateError when all k_c,N coincide; the error carries the
    sequences as ``kc`` / ``kp`` details.
    """
    a = _as_matrix(M)
    countries = _labels(M, "countries", a.shape[0], countries)
    kc, kp = reflection_sequence(a, n_iterations)
    try:
        z = _standardize(kc[n_iterations], kc[0])
    except DegenerateError as exc:
        raise DegenerateError(f"{exc.message} (reflections order {n_iterations})",
                              order=n_iterations, kc=kc.tolist(), kp=kp.tolist()) from None
    return ReflectionsResult(kc, kp, EciResult(z, "reflections", countries, n_iterations))


def eci_eigenvector(M, countries: Sequence[str] = ()) -> EciResult:
    """ECI from the second eigenvector of D_c^-1 M D_p^-1 M^T.

    Activities nobody holds are dropped; countries with empty rows are
    rejected, as is a matrix whose bipartite graph is disconnected.
    """
    a = _as_matrix(M)
    countries = _labels(M, "countries", a.shape[0], countries)
    a = a[:, a.sum(axis=0) > 0]
    kc0 = a.sum(axis=1)
    if np.any(kc0 == 0):
        names = [_name(countries, i, "country") for i in np.flatnonzero(kc0 == 0)]
        raise ValidationError(f"countries without any activity: {names}", countries=names)
    C, P = a.shape
    if C < 2:
        raise DegenerateError("ECI needs at least two countries")
    graph = np.zeros((C + P, C + P))
    graph[:C, C:] = a > 0
    n_comp, comp = connected_components(csr_matrix(graph), directed=False)
    if n_comp > 1:
        groups = [[_name(countries, i, "country") for i in range(C) if comp[i] == g] for g in range(n_comp)]
        raise ReducibleMatrixError(f"country-activity graph has {n_comp} components: {groups}", components=groups)

    kp0 = a.sum(axis=0)
    d = 1.0 / np.sqrt(kc0)
    # symmetric similar matrix: D_c^-1/2 M D_p^-1 M^T D_c^-1/2
    sym = (d[:, None] * (a / kp0)) @ (a.T * d[None, :])
    sym = (sym + sym.T) / 2
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    if C > 2 and abs(vals[order[1]] - vals[order[2]]) < 1e-12:
        logger.warning("second eigenvalue is repeated; ECI direction is not unique")
    vec = d * vecs[:, order[1]]
    z = _standardize(vec, kc0)
    return EciResult(z, "eigenvector", countries)


def rank(scores: Mapping[str, float]) -> list[RankEntry]:
    """Descending order; equal scores fall back to ISO code order."""
    for country, value in scores.items():
        if not np.isfinite(value):
            raise ValidationError(f"non-finite score for {country}", country=country)
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [RankEntry(i + 1, c, float(v)) for i, (c, v) in enumerate(ordered)]


def write_scores(rows: Sequence[dict], path) -> None:
    """Write ComplexityScores rows (keys as in SCORES_HEADER)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORES_HEADER)
        for r in rows:
            w.writerow([
                r["country"], r["metric"], "" if r.get("year") is None else int(r["year"]),
                repr(float(r["value"])), int(r["rank"]),
                str(bool(r["converged"])).lower(), int(r["iterations"]),
            ])


def score_rows(metric: str, year: int | None, scores: Mapping[str, float],
               converged: bool = True, iterations: int = 0) -> list[dict]:
    return [
        {"country": e.country, "metric": metric, "year": year, "value": e.score, "rank": e.rank,
         "converged": converged, "iterations": iterations}
        for e in rank(scores)
    ]
