"""Input-output table and auxiliary series ingestion.

Two IOT layouts are understood:

``long-csv``
    ``year,origin_country,origin_sector,dest_country,dest_sector_or_FD,value``.
    ``dest_sector_or_FD`` is a sector id for intermediate flows, ``FD`` (or
    ``FD:<category>``) for final demand of the destination country. Rows whose
    ``origin_country`` is ``VA`` or ``GO`` carry value added and gross output of
    the activity named by the destination columns.

``wide-csv``
    ``year,country,sector,<C>|<S>,...,<C>|FD[:<category>],...``, one row per
    producing activity, plus optional rows with ``country`` equal to ``VA`` and
    ``GO``.

If gross output is absent it is taken as the row total; if value added is
absent it is taken as the column residual ``x - sum_i Z_ij``.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    AccountingIdentityError,
    DimensionMismatchError,
    InputNotFoundError,
    NegativeEntryError,
    NonPositiveValueError,
    ParseError,
    UnknownCountryError,
    ValidationError,
)

logger = logging.getLogger(__name__)

FORMATS = ("long-csv", "wide-csv")
LONG_HEADER = ["year", "origin_country", "origin_sector", "dest_country", "dest_sector_or_FD", "value"]
FD_TAG = "FD"
VA_TAG = "VA"
GO_TAG = "GO"
WIDE_SEP = "|"

# 2016 WIOD release, ROW excluded.
WIOD_COUNTRIES = (
    "AUS", "AUT", "BEL", "BGR", "BRA", "CAN", "CHE", "CHN", "CYP", "CZE", "DEU",
    "DNK", "ESP", "EST", "FIN", "FRA", "GBR", "GRC", "HRV", "HUN", "IDN", "IND",
    "IRL", "ITA", "JPN", "KOR", "LTU", "LUX", "LVA", "MEX", "MLT", "NLD", "NOR",
    "POL", "PRT", "ROU", "RUS", "SVK", "SVN", "SWE", "TUR", "TWN", "USA",
)

AUX_VARIABLES = ("gdp_pc", "capital", "population", "human_capital", "eci", "ef")
STRICTLY_POSITIVE = ("gdp_pc", "capital", "population")

NEG_RTOL = 1e-6
IDENTITY_RTOL = 1e-6
IDENTITY_ATOL = 1e-3

_ISO3 = re.compile(r"^[A-Z]{3}$")


@dataclass(frozen=True)
class CountryRegistry:
    """Ordered, unique ISO 3166-1 alpha-3 codes; the order fixes matrix rows."""

    codes: tuple[str, ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        codes = tuple(self.codes)
        object.__setattr__(self, "codes", codes)
        bad = [c for c in codes if not isinstance(c, str) or not _ISO3.match(c)]
        if bad:
            raise ValidationError(f"country codes must be three uppercase letters: {bad}", codes=bad)
        if len(set(codes)) != len(codes):
            dupes = sorted({c for c in codes if codes.count(c) > 1})
            raise ValidationError(f"duplicate country codes: {dupes}", codes=dupes)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(codes)})

    @classmethod
    def canonical(cls, codes: Iterable[str]) -> "CountryRegistry":
        return cls(tuple(sorted(set(codes))))

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise UnknownCountryError(f"unknown country code {code!r}", country=code) from None

    def __contains__(self, code: object) -> bool:
        return code in self._index

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self):
        return iter(self.codes)


@dataclass(frozen=True)
class SectorRegistry:
    ids: tuple[str, ...]
    labels: tuple[str, ...] | None = None
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(str(s) for s in self.ids)
        object.__setattr__(self, "ids", ids)
        if not ids:
            raise ValidationError("sector registry is empty")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate sector ids", ids=sorted({s for s in ids if ids.count(s) > 1}))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(ids):
                raise ValidationError("sector labels do not match ids")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(ids)})

    def index(self, sector: str) -> int:
        try:
            return self._index[sector]
        except KeyError:
            raise DimensionMismatchError(f"unknown sector id {sector!r}", sector=sector) from None

    def __contains__(self, sector: object) -> bool:
        return sector in self._index

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)


@dataclass(frozen=True)
class LoadDiagnostics:
    clamped: int = 0
    # (row, destination country index, value) of inventory-like negatives kept in F
    negative_final_demand: tuple[tuple[int, int, float], ...] = ()
    fd_categories: tuple[str, ...] = ()
    excluded_fd_categories: tuple[str, ...] = ()


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IOTable:
    """World input-output table for one year.

    Activities are ordered country-major: index ``c * S + s``.
    """

    year: int
    countries: CountryRegistry
    sectors: SectorRegistry
    Z: np.ndarray
    F: np.ndarray
    va: np.ndarray
    x: np.ndarray
    diagnostics: LoadDiagnostics = LoadDiagnostics()

    def __post_init__(self):
        n = len(self.countries) * len(self.sectors)
        for name, shape in (("Z", (n, n)), ("F", (n, len(self.countries))), ("va", (n,)), ("x", (n,))):
            arr = _frozen(getattr(self, name))
            if arr.shape != shape:
                raise DimensionMismatchError(
                    f"{name} has shape {arr.shape}, expected {shape}", field=name,
                    shape=list(arr.shape), expected=list(shape),
                )
            object.__setattr__(self, name, arr)

    @property
    def n_activities(self) -> int:
        return len(self.countries) * len(self.sectors)

    def activity_labels(self) -> list[tuple[str, str]]:
        return [(c, s) for c in self.countries for s in self.sectors]

    def activity_country(self) -> np.ndarray:
        """Country index of every activity row."""
        return np.repeat(np.arange(len(self.countries)), len(self.sectors))

    def equals(self, other: "IOTable", rtol: float = 0.0) -> bool:
        if (self.year, self.countries.codes, self.sectors.ids) != (other.year, other.countries.codes, other.sectors.ids):
            return False
        return all(
            np.allclose(getattr(self, k), getattr(other, k), rtol=rtol, atol=0.0)
            for k in ("Z", "F", "va", "x")
        )

    @classmethod
    def from_arrays(
        cls,
        year: int,
        countries: CountryRegistry | Sequence[str],
        sectors: SectorRegistry | Sequence[str],
        Z,
        F,
        va=None,
        x=None,
        *,
        neg_rtol: float = NEG_RTOL,
        rtol: float = IDENTITY_RTOL,
        atol: float = IDENTITY_ATOL,
        diagnostics: LoadDiagnostics | None = None,
    ) -> "IOTable":
        """Build a validated table; derives missing ``x``/``va`` and treats negatives."""
        if not isinstance(countries, CountryRegistry):
            countries = CountryRegistry(tuple(countries))
        if not isinstance(sectors, SectorRegistry):
            sectors = SectorRegistry(tuple(sectors))
        Z = np.array(Z, dtype=float)
        F = np.array(F, dtype=float)
        n = len(countries) * len(sectors)
        if Z.shape != (n, n) or F.shape != (n, len(countries)):
            raise DimensionMismatchError(
                f"Z {Z.shape} / F {F.shape} inconsistent with {len(countries)} countries x {len(sectors)} sectors"
            )
        clamped = 0
        Z, k = _clamp_small_negatives(Z, "Z", neg_rtol, strict=True)
        clamped += k
        F, k = _clamp_small_negatives(F, "F", neg_rtol, strict=False)
        clamped += k
        rows, cols = np.nonzero(F < 0)
        negative_fd = tuple((int(r), int(c), float(F[r, c])) for r, c in zip(rows, cols))
        if negative_fd:
            logger.info("%d negative final-demand entries kept (inventory changes)", len(negative_fd))

        x = Z.sum(axis=1) + F.sum(axis=1) if x is None else np.array(x, dtype=float)
        va = x - Z.sum(axis=0) if va is None else np.array(va, dtype=float)
        x, k = _clamp_small_negatives(x, "x", neg_rtol, strict=True)
        clamped += k
        va, k = _clamp_small_negatives(va, "va", neg_rtol, strict=True)
        clamped += k
        if clamped:
            logger.info("clamped %d small negative entries to zero", clamped)

        base = diagnostics or LoadDiagnostics()
        diag = LoadDiagnostics(
            clamped=clamped,
            negative_final_demand=negative_fd,
            fd_categories=base.fd_categories,
            excluded_fd_categories=base.excluded_fd_categories,
        )
        table = cls(int(year), countries, sectors, Z, F, va, x, diag)
        check_identities(table, rtol=rtol, atol=atol)
        return table


def _clamp_small_negatives(a: np.ndarray, name: str, neg_rtol: float, strict: bool):
    """Zero entries in [-eps, 0) with eps = neg_rtol * max|a|.

    Larger negatives raise when ``strict``; otherwise they are kept.
    """
    a = np.array(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{name} contains non-finite values", field=name)
    if a.size == 0:
        return a, 0
    eps = neg_rtol * float(np.max(np.abs(a)))
    small = (a < 0) & (a >= -eps)
    count = int(small.sum())
    a[small] = 0.0
    if strict and np.any(a < 0):
        idx = np.unravel_index(int(np.argmin(a)), a.shape)
        raise NegativeEntryError(
            f"{name} has a negative entry {a[idx]:.6g} at {tuple(int(i) for i in idx)}",
            field=name, index=[int(i) for i in idx], value=float(a[idx]),
        )
    return a, count


def check_identities(table: IOTable, rtol: float = IDENTITY_RTOL, atol: float = IDENTITY_ATOL) -> None:
    """Raise AccountingIdentityError naming the worst row and column residuals."""
    x = table.x
    allowed = np.maximum(rtol * np.abs(x), atol)
    row_res = x - (table.Z.sum(axis=1) + table.F.sum(axis=1))
    col_res = x - (table.Z.sum(axis=0) + table.va)
    row_ratio = np.abs(row_res) / allowed
    col_ratio = np.abs(col_res) / allowed
    if row_ratio.max(initial=0) <= 1 and col_ratio.max(initial=0) <= 1:
        return
    labels = table.activity_labels()

    def worst(res, ratio, kind):
        i = int(np.argmax(ratio))
        if ratio[i] <= 1:
            return None
        c, s = labels[i]
        return {"kind": kind, "index": i, "position": i + 1, "country": c, "sector": s,
                "residual": float(res[i])}

    offenders = [w for w in (worst(row_res, row_ratio, "row"), worst(col_res, col_ratio, "column")) if w]
    text = "; ".join(
        f"{w['kind']} {w['position']} ({w['country']}/{w['sector']}) residual {w['residual']:.6g}"
        for w in offenders
    )
    raise AccountingIdentityError(
        f"accounting identity violated in {table.year}: {text}", year=table.year, offenders=offenders
    )


def _require_file(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"input file not found: {path}", path=str(path))
    return path


def _split_fd(tag: str) -> str | None:
    """Return the final-demand category for an FD tag, None for sector ids."""
    if tag == FD_TAG:
        return ""
    if tag.startswith(FD_TAG + ":"):
        return tag[len(FD_TAG) + 1:]
    return None


def _read_long(path: Path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, float_precision="round_trip")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed CSV {path}: {exc}", path=str(path)) from exc
    if list(df.columns) != LONG_HEADER:
        raise ParseError(f"unexpected long-csv header {list(df.columns)}", path=str(path), expected=LONG_HEADER)
    for col in ("year", "value"):
        num = pd.to_numeric(df[col], errors="coerce")
        bad = np.flatnonzero(num.isna().to_numpy())
        if bad.size:
            line = int(bad[0]) + 2
            raise ParseError(f"malformed row at line {line}: non-numeric {col} {df[col].iloc[bad[0]]!r}",
                             path=str(path), line=line)
        df[col] = num
    return df


def _long_to_tables(df: pd.DataFrame, sectors, fd_exclude, **kw) -> dict[int, IOTable]:
    tables = {}
    for year, block in df.groupby("year", sort=True):
        if float(year) != int(year):
            raise ParseError(f"non-integer year {year}")
        tables[int(year)] = _long_block(int(year), block, sectors, fd_exclude, **kw)
    if not tables:
        raise ParseError("no data rows")
    return tables


def _long_block(year, df, sectors, fd_exclude, **kw) -> IOTable:
    special = df["origin_country"].isin([VA_TAG, GO_TAG])
    flows = df[~special]
    if flows.empty:
        raise ParseError(f"no flow rows for {year}")
    countries = CountryRegistry.canonical(flows["origin_country"])
    if sectors is None:
        sectors = SectorRegistry(tuple(pd.unique(flows["origin_sector"])))
    elif not isinstance(sectors, SectorRegistry):
        sectors = SectorRegistry(tuple(sectors))
    C, S = len(countries), len(sectors)
    n = C * S

    def act(country_col, sector_col):
        ci = country_col.map(countries._index)
        si = sector_col.map(sectors._index)
        if ci.isna().any():
            bad = country_col[ci.isna()].iloc[0]
            raise DimensionMismatchError(f"country {bad!r} has no production rows", country=bad)
        if si.isna().any():
            bad = sector_col[si.isna()].iloc[0]
            raise DimensionMismatchError(f"unknown sector id {bad!r}", sector=bad)
        return (ci * S + si).to_numpy(dtype=int)

    fd_cat = flows["dest_sector_or_FD"].map(_split_fd)
    is_fd = fd_cat.notna()
    z_rows = flows[~is_fd]
    f_rows = flows[is_fd]
    categories = tuple(sorted(set(fd_cat[is_fd])))
    excluded = tuple(sorted(set(fd_exclude) & set(categories)))
    if excluded:
        f_rows = f_rows[~fd_cat[is_fd].isin(excluded)]

    dup_keys = ["origin_country", "origin_sector", "dest_country", "dest_sector_or_FD"]
    dups = df.duplicated(dup_keys, keep=False)
    if dups.any():
        first = df[dups].iloc[0]
        raise ParseError(f"duplicate cell {tuple(first[dup_keys])} in {year}", year=year)

    Z = np.zeros((n, n))
    Z[act(z_rows["origin_country"], z_rows["origin_sector"]),
      act(z_rows["dest_country"], z_rows["dest_sector_or_FD"])] = z_rows["value"].to_numpy(float)
    F = np.zeros((n, C))
    dest = f_rows["dest_country"].map(countries._index)
    if dest.isna().any():
        bad = f_rows["dest_country"][dest.isna()].iloc[0]
        raise DimensionMismatchError(f"final-demand destination {bad!r} is not a producing country", country=bad)
    # categories of the same destination are summed
    np.add.at(F, (act(f_rows["origin_country"], f_rows["origin_sector"]), dest.to_numpy(int)),
              f_rows["value"].to_numpy(float))

    def vector(tag):
        rows = df[df["origin_country"] == tag]
        if rows.empty:
            return None
        v = np.full(n, np.nan)
        v[act(rows["dest_country"], rows["dest_sector_or_FD"])] = rows["value"].to_numpy(float)
        if np.isnan(v).any():
            raise DimensionMismatchError(f"{tag} row incomplete in {year}: {int(np.isnan(v).sum())} activities missing")
        return v

    diag = LoadDiagnostics(fd_categories=categories, excluded_fd_categories=excluded)
    return IOTable.from_arrays(year, countries, sectors, Z, F, vector(VA_TAG), vector(GO_TAG),
                               diagnostics=diag, **kw)


def _read_wide(path: Path, sectors, fd_exclude, **kw) -> dict[int, IOTable]:
    try:
        df = pd.read_csv(path, dtype={"year": str, "country": str, "sector": str}, keep_default_na=False, float_precision="round_trip")
    except (pd.errors.ParserError, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"malformed CSV {path}: {exc}", path=str(path)) from exc
    if list(df.columns[:3]) != ["year", "country", "sector"]:
        raise ParseError("wide-csv must start with year,country,sector", path=str(path))
    value_cols = list(df.columns[3:])
    for col in value_cols:
        num = pd.to_numeric(df[col], errors="coerce")
        if num.isna().any():
            line = int(np.flatnonzero(num.isna().to_numpy())[0]) + 2
            raise ParseError(f"malformed row at line {line}: non-numeric value in column {col!r}",
                             path=str(path), line=line)
        df[col] = num.astype(float)
    parsed = []
    for col in value_cols:
        if WIDE_SEP not in col:
            raise ParseError(f"wide-csv column {col!r} lacks '{WIDE_SEP}'", path=str(path))
        country, tag = col.split(WIDE_SEP, 1)
        parsed.append((country, tag))
    long_parts = []
    for year, block in df.groupby("year", sort=True):
        melted = block.melt(id_vars=["year", "country", "sector"], value_vars=value_cols,
                            var_name="col", value_name="value")
        mapping = dict(zip(value_cols, parsed))
        melted["dest_country"] = melted["col"].map(lambda c: mapping[c][0])
        melted["dest_sector_or_FD"] = melted["col"].map(lambda c: mapping[c][1])
        melted = melted.rename(columns={"country": "origin_country", "sector": "origin_sector"})
        special = melted["origin_country"].isin([VA_TAG, GO_TAG])
        # VA/GO rows only map onto sector columns
        melted = melted[~(special & melted["dest_sector_or_FD"].map(_split_fd).notna())]
        long_parts.append(melted[LONG_HEADER])
    long_df = pd.concat(long_parts, ignore_index=True)
    year_num = pd.to_numeric(long_df["year"], errors="coerce")
    if year_num.isna().any():
        raise ParseError("non-numeric year in wide-csv", path=str(path))
    long_df["year"] = year_num
    # wide rows define sector order
    if sectors is None:
        prod = df[~df["country"].isin([VA_TAG, GO_TAG])]
        sectors = SectorRegistry(tuple(pd.unique(prod["sector"])))
    return _long_to_tables(long_df, sectors, fd_exclude, **kw)


def load_iot_years(
    path,
    format: str = "long-csv",
    *,
    sectors: SectorRegistry | Sequence[str] | None = None,
    fd_exclude: Iterable[str] = (),
    neg_rtol: float = NEG_RTOL,
    rtol: float = IDENTITY_RTOL,
    atol: float = IDENTITY_ATOL,
) -> dict[int, IOTable]:
    """Load every year contained in an IOT file."""
    path = _require_file(path)
    kw = dict(neg_rtol=neg_rtol, rtol=rtol, atol=atol)
    fd_exclude = tuple(fd_exclude)
    if format == "long-csv":
        return _long_to_tables(_read_long(path), sectors, fd_exclude, **kw)
    if format == "wide-csv":
        return _read_wide(path, sectors, fd_exclude, **kw)
    raise ParseError(f"unknown IOT format {format!r}; expected one of {FORMATS}", format=format)


def load_iot(path, format: str = "long-csv", *, year: int | None = None, **kwargs) -> IOTable:
    """Load a single-year IOT.

    ``sectors`` pins the sector order; otherwise it follows first appearance in
    the file. Countries are always sorted by ISO code. Final-demand categories
    listed in ``fd_exclude`` (e.g. ``INVEN``) are dropped before aggregation.
    """
    tables = load_iot_years(path, format, **kwargs)
    if year is not None:
        if year not in tables:
            raise ValidationError(f"year {year} not in {path}; available {sorted(tables)}", year=year)
        return tables[year]
    if len(tables) > 1:
        raise ValidationError(f"{path} holds several years {sorted(tables)}; pass year=", years=sorted(tables))
    return next(iter(tables.values()))


def write_iot(table: IOTable, path, format: str = "long-csv") -> None:
    """Write a table; final demand is written aggregated per destination."""
    labels = table.activity_labels()
    countries = table.countries.codes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if format == "long-csv":
            w.writerow(LONG_HEADER)
            for i, (oc, os_) in enumerate(labels):
                for j, (dc, ds) in enumerate(labels):
                    w.writerow([table.year, oc, os_, dc, ds, repr(float(table.Z[i, j]))])
                for d, dc in enumerate(countries):
                    w.writerow([table.year, oc, os_, dc, FD_TAG, repr(float(table.F[i, d]))])
            for tag, vec in ((VA_TAG, table.va), (GO_TAG, table.x)):
                for j, (dc, ds) in enumerate(labels):
                    w.writerow([table.year, tag, tag, dc, ds, repr(float(vec[j]))])
        elif format == "wide-csv":
            header = ["year", "country", "sector"]
            header += [f"{c}{WIDE_SEP}{s}" for c, s in labels]
            header += [f"{c}{WIDE_SEP}{FD_TAG}" for c in countries]
            w.writerow(header)
            for i, (oc, os_) in enumerate(labels):
                w.writerow([table.year, oc, os_]
                           + [repr(float(v)) for v in table.Z[i]]
                           + [repr(float(v)) for v in table.F[i]])
            pad = ["0.0"] * len(countries)
            for tag, vec in ((VA_TAG, table.va), (GO_TAG, table.x)):
                w.writerow([table.year, tag, ""] + [repr(float(v)) for v in vec] + pad)
        else:
            raise ParseError(f"unknown IOT format {format!r}", format=format)


@dataclass(frozen=True)
class AuxiliarySeries:
    """Per (country, year) macro series; ``warnings`` records duplicate rows."""

    values: Mapping[tuple[str, int], Mapping[str, float]]
    warnings: tuple[str, ...] = ()

    def get(self, country: str, year: int, variable: str, default=None):
        return self.values.get((country, year), {}).get(variable, default)

    def countries(self) -> list[str]:
        return sorted({c for c, _ in self.values})

    def years(self) -> list[int]:
        return sorted({y for _, y in self.values})

    def to_frame(self) -> pd.DataFrame:
        rows = [{"country": c, "year": y, **v} for (c, y), v in sorted(self.values.items())]
        return pd.DataFrame(rows, columns=["country", "year", *AUX_VARIABLES])


def load_auxiliary(path, countries: CountryRegistry | Iterable[str] | None = None) -> AuxiliarySeries:
    """Load ``country,year,variable,value`` rows.

    Countries are checked against ``countries`` (default: the 2016 WIOD
    country list). Duplicate (country, year, variable) rows: last one wins.
    """
    path = _require_file(path)
    if countries is None:
        registry = CountryRegistry(WIOD_COUNTRIES)
    elif isinstance(countries, CountryRegistry):
        registry = countries
    else:
        registry = CountryRegistry.canonical(countries)
    values: dict[tuple[str, int], dict[str, float]] = {}
    warnings = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["country", "year", "variable", "value"]:
            raise ParseError(f"unexpected auxiliary header {header}", path=str(path))
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"malformed row at line {line}", path=str(path), line=line)
            country, year_s, variable, value_s = (s.strip() for s in row)
            try:
                year = int(year_s)
                value = float(value_s)
            except ValueError:
                raise ParseError(f"malformed row at line {line}: {row}", path=str(path), line=line) from None
            if country not in registry:
                raise UnknownCountryError(f"unknown country {country!r} at line {line}", country=country, line=line)
            if variable not in AUX_VARIABLES:
                raise ParseError(f"unknown variable {variable!r} at line {line}", variable=variable, line=line)
            if not np.isfinite(value):
                raise ParseError(f"non-finite value at line {line}", line=line)
            if variable in STRICTLY_POSITIVE and value <= 0:
                raise NonPositiveValueError(
                    f"{variable} must be positive, got {value} for {country} {year} (line {line})",
                    country=country, year=year, variable=variable, line=line,
                )
            cell = values.setdefault((country, year), {})
            if variable in cell:
                msg = f"duplicate {variable} for {country} {year} at line {line}; keeping last value"
                logger.warning(msg)
                warnings.append(msg)
            cell[variable] = value
    return AuxiliarySeries(values, tuple(warnings))
