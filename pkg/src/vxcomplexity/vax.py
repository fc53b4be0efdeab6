"""Value-added exports from the global Leontief inverse.

VX of activity (c, s) is the value added it generates that ends up in final
demand of countries other than c:

    VX_(c,s) = v_(c,s) * sum_{d != c} [B f_d]_(c,s),   B = (I - A)^-1
"""

from __future__ import annotations

import csv
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import pandas as pd
from scipy import linalg

from .errors import DimensionMismatchError, InputNotFoundError, ParseError, SingularSystemError
from .iot import CountryRegistry, IOTable, SectorRegistry

logger = logging.getLogger(__name__)

VAX_HEADER = ["year", "country", "sector", "vax"]


@dataclass(frozen=True, eq=False)
class LeontiefSystem:
    A: np.ndarray
    B: np.ndarray
    v: np.ndarray
    lu: tuple[np.ndarray, np.ndarray]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """B @ rhs using the stored factorization of I - A."""
        return linalg.lu_solve(self.lu, rhs, check_finite=False)


def spectral_radius(A: np.ndarray, n_iter: int = 500) -> float:
    """Perron root of a non-negative matrix (dense eigvals when small)."""
    n = A.shape[0]
    if n <= 600:
        return float(np.max(np.abs(np.linalg.eigvals(A)))) if n else 0.0
    z = np.ones(n)
    rho = 0.0
    for _ in range(n_iter):
        w = A @ z
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        rho = norm / np.linalg.norm(z)
        z = w / norm
    return float(rho)


def build_leontief(iot: IOTable) -> LeontiefSystem:
    n = iot.n_activities
    x = iot.x
    active = x > 0
    A = np.zeros((n, n))
    A[:, active] = iot.Z[:, active] / x[active]
    v = np.zeros(n)
    v[active] = iot.va[active] / x[active]

    I_A = np.eye(n) - A
    singular = False
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(I_A, check_finite=False)
        diag = np.abs(np.diag(lu))
        singular = bool(diag.min(initial=np.inf) <= n * np.finfo(float).eps * max(diag.max(initial=0), 1.0))
    except (linalg.LinAlgError, ValueError):
        singular = True
    if not singular:
        B = linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)
        # for non-negative A with spectral radius < 1 the inverse is non-negative
        singular = not np.all(np.isfinite(B)) or B.min(initial=0) < -1e-9 * max(np.abs(B).max(initial=1), 1)
    if singular:
        rho = spectral_radius(A)
        raise SingularSystemError(
            f"I - A is singular or not productive for {iot.year} (spectral radius of A ~ {rho:.6g})",
            year=iot.year, spectral_radius=rho,
        )
    for arr in (A, B, v, lu, piv):
        arr.setflags(write=False)
    return LeontiefSystem(A=A, B=B, v=v, lu=(lu, piv))


@dataclass(frozen=True, eq=False)
class VaxMatrix:
    year: int
    values: np.ndarray  # C x S
    countries: CountryRegistry
    sectors: SectorRegistry
    clamped_mass: float = 0.0
    clamped_count: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.countries), len(self.sectors)):
            raise DimensionMismatchError(
                f"VX shape {values.shape} does not match registries "
                f"({len(self.countries)}, {len(self.sectors)})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def to_frame(self) -> pd.DataFrame:
        C, S = self.values.shape
        return pd.DataFrame({
            "year": self.year,
            "country": np.repeat(self.countries.codes, S),
            "sector": np.tile(self.sectors.ids, C),
            "vax": self.values.ravel(),
        })


def final_demand_absorption(sys: LeontiefSystem, iot: IOTable) -> np.ndarray:
    """Value added of every activity absorbed by each destination: v * (B F)."""
    return sys.v[:, None] * sys.solve(np.asarray(iot.F))


def compute_vax(sys: LeontiefSystem, iot: IOTable, clamp: bool = True) -> VaxMatrix:
    n = iot.n_activities
    if sys.A.shape != (n, n) or iot.F.shape[0] != n:
        raise DimensionMismatchError(f"Leontief system {sys.A.shape} does not match table with {n} activities")
    Y = sys.solve(np.asarray(iot.F))
    Y[np.arange(n), iot.activity_country()] = 0.0
    foreign = Y.sum(axis=1)
    vx = (sys.v * foreign).reshape(len(iot.countries), len(iot.sectors))
    clamped_mass, clamped_count = 0.0, 0
    if clamp:
        neg = vx < 0
        clamped_count = int(neg.sum())
        if clamped_count:
            clamped_mass = float(-vx[neg].sum())
            vx[neg] = 0.0
            logger.info("%d: clamped %d negative VX cells (mass %.6g)", iot.year, clamped_count, clamped_mass)
    return VaxMatrix(iot.year, vx, iot.countries, iot.sectors, clamped_mass, clamped_count)


def compute_vax_years(tables: Mapping[int, IOTable] | Iterable[IOTable], workers: int = 1) -> list[VaxMatrix]:
    """Per-year VX in ascending year order; years are independent."""
    items = sorted(tables.values() if isinstance(tables, Mapping) else tables, key=lambda t: t.year)

    def one(t):
        return compute_vax(build_leontief(t), t)

    if workers <= 1:
        return [one(t) for t in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, items))


def gross_exports(iot: IOTable) -> np.ndarray:
    """Per-country gross exports: intermediate and final sales to other countries."""
    C, S = len(iot.countries), len(iot.sectors)
    owner = iot.activity_country()
    Z = np.array(iot.Z)
    Z[owner[:, None] == owner[None, :]] = 0.0
    F = np.array(iot.F)
    F[np.arange(iot.n_activities), owner] = 0.0
    per_activity = Z.sum(axis=1) + F.sum(axis=1)
    return per_activity.reshape(C, S).sum(axis=1)


@dataclass(frozen=True)
class VaxReport:
    year: int
    countries: tuple[str, ...]
    vax_total: np.ndarray
    world_va_share: np.ndarray
    gross_exports: np.ndarray
    exceeds_gross_exports: np.ndarray
    world_va: float
    clamped_mass: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "year": self.year,
            "country": list(self.countries),
            "vax_total": self.vax_total,
            "world_va_share": self.world_va_share,
            "gross_exports": self.gross_exports,
            "exceeds_gross_exports": self.exceeds_gross_exports,
        })


def vax_accounting_report(vax: VaxMatrix, iot: IOTable) -> VaxReport:
    if (vax.year, vax.countries.codes, vax.sectors.ids) != (iot.year, iot.countries.codes, iot.sectors.ids):
        raise DimensionMismatchError("VX matrix and table differ in year or registries")
    totals = vax.values.sum(axis=1)
    world_va = float(np.sum(iot.va))
    share = totals / world_va if world_va > 0 else np.zeros_like(totals)
    gx = gross_exports(iot)
    exceeds = totals > gx * (1 + 1e-9)
    for c in np.flatnonzero(exceeds):
        logger.warning("%d: VX of %s exceeds its gross exports", iot.year, iot.countries.codes[c])
    return VaxReport(iot.year, iot.countries.codes, totals, share, gx, exceeds, world_va, vax.clamped_mass)


def write_vax(vaxes: Iterable[VaxMatrix], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(VAX_HEADER)
        for vx in sorted(vaxes, key=lambda m: m.year):
            for c, country in enumerate(vx.countries):
                for s, sector in enumerate(vx.sectors):
                    w.writerow([vx.year, country, sector, repr(float(vx.values[c, s]))])


def read_vax(path) -> dict[int, VaxMatrix]:
    try:
        df = pd.read_csv(path, dtype={"country": str, "sector": str}, keep_default_na=False, float_precision="round_trip")
    except FileNotFoundError:
        raise InputNotFoundError(f"input file not found: {path}", path=str(path)) from None
    except pd.errors.ParserError as exc:
        raise ParseError(f"malformed VX file {path}: {exc}", path=str(path)) from exc
    if list(df.columns) != VAX_HEADER:
        raise ParseError(f"unexpected VX header {list(df.columns)}", expected=VAX_HEADER)
    df["vax"] = pd.to_numeric(df["vax"], errors="coerce")
    if df["vax"].isna().any():
        raise ParseError("non-numeric vax value", path=str(path))
    out = {}
    for year, block in df.groupby("year", sort=True):
        countries = CountryRegistry.canonical(block["country"])
        sectors = SectorRegistry(tuple(pd.unique(block["sector"])))
        table = block.pivot(index="country", columns="sector", values="vax")
        table = table.reindex(index=list(countries.codes), columns=list(sectors.ids))
        if table.isna().any().any():
            raise DimensionMismatchError(f"VX file incomplete for {year}", year=int(year))
        out[int(year)] = VaxMatrix(int(year), table.to_numpy(float), countries, sectors)
    return out
