from __future__ import annotations

import numpy as np
import pytest

from vxcomplexity.iot import WIOD_COUNTRIES, IOTable, write_iot

ACCEPTANCE_LOG: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, note in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{status}  {name}" + (f"  [{note}]" if note else ""))


@pytest.fixture
def record():
    """record(name, ok, note) logs one PASS/FAIL line; ok=None logs SKIP."""
    def _record(name, ok, note=""):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        ACCEPTANCE_LOG.append((name, status, note))
        print(f"{status}  {name}" + (f"  [{note}]" if note else ""))
        return ok
    return _record


def random_iot(rng, C, S, rho_max=0.9, year=2014, countries=None):
    """Valid table whose technical-coefficient matrix has spectral radius < rho_max.

    Columns of A are scaled to sum to at most rho_max, which bounds the
    spectral radius by the max column sum.
    """
    n = C * S
    A = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
    colsum = A.sum(axis=0)
    target = rng.uniform(0.1, rho_max, n)
    A = A * np.where(colsum > 0, target / np.where(colsum > 0, colsum, 1), 0)
    F = rng.uniform(1, 100, (n, C))
    x = np.linalg.solve(np.eye(n) - A, F.sum(axis=1))
    Z = A * x[None, :]
    va = x - Z.sum(axis=0)
    countries = countries or list(WIOD_COUNTRIES[:C])
    sectors = [f"s{k}" for k in range(S)]
    return IOTable.from_arrays(year, countries, sectors, Z, F, va, x)


def desk_fixture():
    """3 countries x 2 sectors; x and va by construction."""
    Z = np.array([
        [5, 2, 1, 0, 3, 1],
        [1, 6, 0, 2, 1, 0],
        [2, 0, 7, 3, 0, 1],
        [0, 1, 2, 4, 1, 2],
        [1, 1, 0, 0, 8, 2],
        [0, 2, 1, 1, 2, 5],
    ], dtype=float)
    F = np.array([
        [20, 5, 4],
        [15, 6, 2],
        [3, 25, 7],
        [2, 18, 5],
        [4, 3, 30],
        [6, 2, 22],
    ], dtype=float)
    x = Z.sum(axis=1) + F.sum(axis=1)
    va = x - Z.sum(axis=0)
    return Z, F, va, x


@pytest.fixture
def desk_table():
    Z, F, va, x = desk_fixture()
    return IOTable.from_arrays(2014, ["AAA", "BBB", "CCC"], ["s1", "s2"], Z, F, va, x)


@pytest.fixture
def desk_csv(tmp_path, desk_table):
    path = tmp_path / "desk.csv"
    write_iot(desk_table, path)
    return path


PANEL_BETAS = {"y_lag": -0.08, "n": 0.25, "dK": 0.35, "dC": 0.300, "C_lag": 0.05, "dH": 0.12, "H_lag": 0.03}
PANEL_YEARS = (2000, 2004, 2005, 2009, 2010, 2014)


def synthetic_panel(rng, betas=PANEL_BETAS, sigma=1e-6, countries=None, metric="vxf"):
    """Auxiliary series and scores whose panel obeys dy = b.x + a_c + g_t + eps exactly.

    Returns (AuxiliarySeries, scores by year, country effects).
    """
    from vxcomplexity.iot import AuxiliarySeries
    from vxcomplexity.panel import EXCLUDED_COUNTRIES, PERIODS

    countries = countries or [c for c in WIOD_COUNTRIES if c not in EXCLUDED_COUNTRIES]
    alpha = dict(zip(countries, rng.normal(0, 0.05, len(countries))))
    gamma = dict(zip(PERIODS, (0.0, -0.04, 0.02)))
    values, scores = {}, {}
    for c in countries:
        for start, end in PERIODS:
            cell = {}
            for y in (start, end):
                cell[y] = {
                    "population": float(np.exp(rng.normal(16, 1))),
                    "capital": float(np.exp(rng.normal(27, 1))),
                    "human_capital": float(rng.uniform(1.8, 3.8)),
                }
                level = float(np.exp(rng.normal(0, 0.7)))
                scores.setdefault(y, {})[c] = level if metric != "eci" else float(np.log(level))
            lg = lambda y, v: np.log(cell[y][v])
            C = (lambda y: np.log(scores[y][c])) if metric != "eci" else (lambda y: scores[y][c])
            y0 = rng.normal(9.5, 1.0)
            x = {
                "y_lag": y0,
                "n": lg(end, "population") - lg(start, "population"),
                "dK": lg(end, "capital") - lg(start, "capital"),
                "dC": C(end) - C(start),
                "C_lag": C(start),
                "dH": lg(end, "human_capital") - lg(start, "human_capital"),
                "H_lag": lg(start, "human_capital"),
            }
            dy = sum(b * x[k] for k, b in betas.items()) + alpha[c] + gamma[start, end] + rng.normal(0, sigma)
            cell[start]["gdp_pc"] = float(np.exp(y0))
            cell[end]["gdp_pc"] = float(np.exp(y0 + dy))
            for y in (start, end):
                values[c, y] = cell[y]
    return AuxiliarySeries(values), scores, alpha


def write_aux_csv(aux, path, drop=()):
    with open(path, "w") as fh:
        fh.write("country,year,variable,value\n")
        for (c, y), cell in sorted(aux.values.items()):
            for var, val in sorted(cell.items()):
                if (c, y, var) not in drop:
                    fh.write(f"{c},{y},{var},{val!r}\n")


def write_scores_csv(scores, metric, path):
    with open(path, "w") as fh:
        fh.write("country,metric,year,value,rank,converged,iterations\n")
        for y in sorted(scores):
            for c in sorted(scores[y]):
                fh.write(f"{c},{metric},{y},{scores[y][c]!r},0,true,1\n")
