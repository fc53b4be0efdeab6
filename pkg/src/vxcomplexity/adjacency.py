"""Country x activity adjacency matrices.

Binary matrices come from Balassa's revealed comparative advantage on gross
exports; weighted matrices hold each country's share of world value-added
exports in an industry.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import EmptyMatrixError, InputNotFoundError, NegativeEntryError, ParseError, ValidationError
from .iot import CountryRegistry
from .vax import VaxMatrix

logger = logging.getLogger(__name__)

ADJ_HEADER = ["country", "activity", "value"]


@dataclass(frozen=True, eq=False)
class ExportMatrix:
    values: np.ndarray
    countries: CountryRegistry
    activities: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.countries), len(self.activities)):
            raise ValidationError(f"export matrix shape {values.shape} does not match registries")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise NegativeEntryError("gross exports must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "activities", tuple(self.activities))


@dataclass(frozen=True, eq=False)
class BinaryAdjacency:
    M: np.ndarray
    countries: tuple[str, ...] = ()
    activities: tuple[str, ...] = ()

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if not np.all((M == 0) | (M == 1)):
            raise ValidationError("binary adjacency entries must be exactly 0 or 1")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)


@dataclass(frozen=True, eq=False)
class WeightedAdjacency:
    W: np.ndarray
    countries: tuple[str, ...] = ()
    activities: tuple[str, ...] = ()
    dropped: tuple[str, ...] = field(default=())


def rca(exports: ExportMatrix | np.ndarray) -> np.ndarray:
    """Balassa index (EXP_cp / sum_p EXP_cp) / (sum_c EXP_cp / sum_cp EXP_cp).

    Zero-export rows (and products nobody exports) get 0.
    """
    E = np.asarray(exports.values if isinstance(exports, ExportMatrix) else exports, dtype=float)
    total = E.sum()
    if not total > 0:
        raise EmptyMatrixError("export matrix is all zero")
    row = E.sum(axis=1, keepdims=True)
    col = E.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (E / row) / (col / total)
    out[~np.isfinite(out)] = 0.0
    return out


def binarize(rca_matrix, threshold: float = 1.0, countries=(), activities=()) -> BinaryAdjacency:
    if not threshold > 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    M = (np.asarray(rca_matrix, dtype=float) >= threshold).astype(float)
    return BinaryAdjacency(M, tuple(countries), tuple(activities))


def column_shares(values, activities=None):
    """W_cs = VX_cs / sum_c VX_cs, dropping zero-total columns.

    Returns (W, kept column indices, dropped column indices).
    """
    V = np.asarray(values, dtype=float)
    totals = V.sum(axis=0)
    if np.any(totals < 0):
        bad = int(np.flatnonzero(totals < 0)[0])
        raise NegativeEntryError(f"industry column {bad} has a negative total", column=bad)
    keep = np.flatnonzero(totals > 0)
    drop = np.flatnonzero(totals == 0)
    if keep.size == 0:
        raise EmptyMatrixError("every industry column sums to zero")
    if drop.size:
        names = [activities[i] for i in drop] if activities is not None else drop.tolist()
        logger.info("dropping zero-total industries: %s", names)
    return V[:, keep] / totals[keep], keep, drop


def weighted_adjacency(vax: VaxMatrix) -> WeightedAdjacency:
    ids = vax.sectors.ids
    W, keep, drop = column_shares(vax.values, ids)
    W.setflags(write=False)
    return WeightedAdjacency(
        W, vax.countries.codes, tuple(ids[i] for i in keep), tuple(ids[i] for i in drop)
    )


def write_adjacency(matrix, countries, activities, path) -> None:
    """Write ``country,activity,value`` rows in registry order."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ADJ_HEADER)
        for c, country in enumerate(countries):
            for p, act in enumerate(activities):
                w.writerow([country, act, repr(float(matrix[c, p]))])


def read_matrix(path, value_column: str = "value", year: int | None = None):
    """Read ``country,activity,value`` (optionally with a ``year`` column).

    Returns (matrix, countries, activities); countries sorted, activities in
    first-appearance order, missing cells filled with 0.
    """
    try:
        df = pd.read_csv(path, dtype={"country": str, "activity": str}, keep_default_na=False, float_precision="round_trip")
    except FileNotFoundError:
        raise InputNotFoundError(f"input file not found: {path}", path=str(path)) from None
    except pd.errors.ParserError as exc:
        raise ParseError(f"malformed CSV {path}: {exc}", path=str(path)) from exc
    missing = {"country", "activity", value_column} - set(df.columns)
    if missing:
        raise ParseError(f"{path} lacks columns {sorted(missing)}", path=str(path))
    if "year" in df.columns:
        years = sorted(pd.unique(df["year"]))
        if year is None and len(years) > 1:
            raise ValidationError(f"{path} holds several years {years}; pick one", years=[int(y) for y in years])
        if year is not None:
            df = df[df["year"] == year]
            if df.empty:
                raise ValidationError(f"year {year} not present in {path}", year=year)
    values = pd.to_numeric(df[value_column], errors="coerce")
    if values.isna().any():
        raise ParseError(f"non-numeric {value_column} in {path}", path=str(path))
    df = df.assign(**{value_column: values})
    countries = CountryRegistry.canonical(df["country"])
    activities = tuple(pd.unique(df["activity"]))
    if df.duplicated(["country", "activity"]).any():
        raise ParseError(f"duplicate country/activity cells in {path}", path=str(path))
    table = df.pivot(index="country", columns="activity", values=value_column)
    table = table.reindex(index=list(countries.codes), columns=list(activities)).fillna(0.0)
    return table.to_numpy(float), countries, activities
