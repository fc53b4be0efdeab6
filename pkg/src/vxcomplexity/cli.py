"""Command-line pipeline: ingest -> vax -> adjacency -> metrics -> rank -> regress.

Errors go to stderr as one JSON object with a stable ``error`` code; exit
statuses are 0 ok, 2 input, 3 validation, 4 non-convergence, 5 degenerate,
6 incomplete panel.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .adjacency import binarize, column_shares, rca, read_matrix, weighted_adjacency, write_adjacency
from .errors import (
    ConvergenceError,
    IncompletePanelError,
    InputMismatchError,
    InputNotFoundError,
    ParseError,
    ValidationError,
    VxcError,
    WeightedEciError,
)
from .iot import FORMATS, load_auxiliary, load_iot_years, write_iot
from .metrics import (
    DEFAULT_ECI_ORDER,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    eci_eigenvector,
    eci_reflections,
    fitness,
    rank,
    score_rows,
    write_scores,
)
from .panel import (
    build_panel,
    fit_fd_dynamic,
    fit_within_fe,
    growth_pairs,
    render_table,
    unconditional_correlation,
    write_results_csv,
    write_scatter,
)
from .vax import compute_vax_years, read_vax, vax_accounting_report, write_vax

logger = logging.getLogger("vxcomplexity")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    parameters: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    tool: str = "vxcomplexity"
    version: str = __version__

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        try:
            return cls(**json.loads(Path(path).read_text()))
        except FileNotFoundError:
            raise InputNotFoundError(f"manifest not found: {path}", path=str(path)) from None
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParseError(f"malformed manifest {path}: {exc}", path=str(path)) from exc


class Run:
    """Collects input and output files of one command."""

    def __init__(self):
        self.inputs: list[str] = []
        self.outputs: list[str] = []

    def input(self, path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise InputNotFoundError(f"input file not found: {path}", path=str(path))
        self.inputs.append(str(path))
        return path

    def output(self, path) -> Path:
        self.outputs.append(str(path))
        return Path(path)


def _sibling(path, suffix: str) -> Path:
    path = Path(path)
    return path.with_name(path.stem + suffix)


# ---------------------------------------------------------------- commands


def cmd_ingest(args, run: Run) -> int:
    tables = load_iot_years(run.input(args.iot), args.format, fd_exclude=args.fd_exclude)
    for year, t in tables.items():
        print(f"{year}: {len(t.countries)} countries x {len(t.sectors)} sectors "
              f"({t.n_activities} activities), clamped {t.diagnostics.clamped} small negatives, "
              f"{len(t.diagnostics.negative_final_demand)} negative final-demand entries kept")
    if args.out:
        if len(tables) > 1:
            for year, t in tables.items():
                write_iot(t, run.output(_sibling(args.out, f"_{year}").with_suffix(Path(args.out).suffix)),
                          args.out_format)
        else:
            write_iot(next(iter(tables.values())), run.output(args.out), args.out_format)
    return 0


def cmd_vax(args, run: Run) -> int:
    tables = {}
    for p in args.iot:
        for year, t in load_iot_years(run.input(p), args.format, fd_exclude=args.fd_exclude).items():
            if args.year and year not in args.year:
                continue
            if year in tables:
                raise ValidationError(f"year {year} appears in more than one input", year=year)
            tables[year] = t
    if not tables:
        raise ValidationError("no table matches the year filter", years=args.year)
    vaxes = compute_vax_years(tables, workers=args.jobs)
    write_vax(vaxes, run.output(args.out))
    reports = [vax_accounting_report(vx, tables[vx.year]).to_frame() for vx in vaxes]
    report_path = run.output(args.report or _sibling(args.out, ".report.csv"))
    pd.concat(reports, ignore_index=True).to_csv(report_path, index=False, lineterminator="\n",
                                                 float_format="%.17g")
    for vx in vaxes:
        print(f"{vx.year}: world VX {vx.values.sum():.6g}, clamped mass {vx.clamped_mass:.3g}")
    print(f"wrote {args.out} and {report_path}")
    return 0


def cmd_adjacency(args, run: Run) -> int:
    if args.vax:
        vaxes = read_vax(run.input(args.vax))
        year = _pick_year(vaxes, args.year)
        w = weighted_adjacency(vaxes[year])
        if w.dropped:
            print(f"dropped zero-total industries: {', '.join(w.dropped)}")
        write_adjacency(w.W, w.countries, w.activities, run.output(args.out))
        print(f"wrote weighted adjacency {w.W.shape} for {year} to {args.out}")
        return 0
    E, countries, acts = read_matrix(run.input(args.exports), year=args.year)
    R = rca(E)
    if args.kind == "rca":
        out = R
    else:
        out = binarize(R, args.rca_threshold).M
    write_adjacency(out, countries.codes, acts, run.output(args.out))
    print(f"wrote {args.kind} matrix {out.shape} to {args.out}")
    return 0


def _pick_year(by_year: dict, year):
    if year is None:
        if len(by_year) > 1:
            raise ValidationError(f"several years present {sorted(by_year)}; pass --year", years=sorted(by_year))
        return next(iter(by_year))
    if year not in by_year:
        raise ValidationError(f"year {year} not present; available {sorted(by_year)}", year=year)
    return year


def _is_binary(a) -> bool:
    return bool(np.all((a == 0) | (a == 1)))


def _is_column_stochastic(a) -> bool:
    sums = a.sum(axis=0)
    return bool(np.all(np.abs(sums[sums > 0] - 1) <= 1e-9))


def _binary_input(args, run: Run):
    """Binary matrix for ef/eci from --exports (via RCA) or --adjacency."""
    if args.exports:
        E, countries, acts = read_matrix(run.input(args.exports), year=args.year)
        return binarize(rca(E), args.rca_threshold).M, countries.codes, acts
    if args.adjacency:
        A, countries, acts = read_matrix(run.input(args.adjacency), year=args.year)
        return A, countries.codes, acts
    raise InputMismatchError(f"--metric {args.metric} needs --exports or --adjacency")


def cmd_metrics(args, run: Run) -> int:
    rows, not_converged = [], []
    if args.metric == "vxf":
        if args.vax:
            vaxes = read_vax(run.input(args.vax))
            years = [args.year] if args.year is not None else sorted(vaxes)
            inputs = []
            for y in years:
                w = weighted_adjacency(vaxes[_pick_year(vaxes, y)])
                inputs.append((y, w.W, w.countries, w.activities))
        elif args.adjacency:
            A, countries, acts = read_matrix(run.input(args.adjacency), year=args.year)
            W, keep, _ = column_shares(A, acts)
            inputs = [(args.year, W, countries.codes, tuple(acts[i] for i in keep))]
        else:
            raise InputMismatchError("--metric vxf needs --vax or --adjacency")
        for year, W, countries, acts in inputs:
            res = fitness(W, args.tol, args.max_iter, countries, acts)
            rows += score_rows("vxf", year, res.scores(), res.converged, res.iterations)
            _report_fitness("vxf", year, res, not_converged)
    elif args.metric == "ef":
        M, countries, acts = _binary_input(args, run)
        if not _is_binary(M):
            raise InputMismatchError("ef needs a binary adjacency matrix")
        res = fitness(M, args.tol, args.max_iter, countries, acts)
        rows += score_rows("ef", args.year, res.scores(), res.converged, res.iterations)
        _report_fitness("ef", args.year, res, not_converged)
    else:
        if args.vax:
            raise WeightedEciError("ECI is undefined on value-added export shares: every industry "
                                   "column sums to one, so product ubiquity never varies")
        M, countries, acts = _binary_input(args, run)
        if not _is_binary(M):
            if _is_column_stochastic(M):
                raise WeightedEciError("ECI is undefined on a column-stochastic weighted matrix: "
                                       "k_p,N = 1 for every order N")
            raise InputMismatchError("eci needs a binary adjacency matrix")
        if args.eci_method == "eigenvector":
            eci = eci_eigenvector(M, countries)
            order = 0
        else:
            eci = eci_reflections(M, args.eci_order, countries).eci
            order = args.eci_order
        rows += score_rows("eci", args.year, eci.scores(), True, order)
        top = rank(eci.scores())[:3]
        print(f"eci ({args.eci_method}): top {', '.join(e.country for e in top)}")
    write_scores(rows, run.output(args.out))
    print(f"wrote {len(rows)} scores to {args.out}")
    if not_converged:
        raise ConvergenceError(f"{args.metric} did not converge within {args.max_iter} iterations "
                               f"for {not_converged}; output flagged converged=false",
                               years=not_converged, max_iter=args.max_iter, out=str(args.out))
    return 0


def _report_fitness(metric, year, res, not_converged):
    top = rank(res.scores())[:3]
    state = "converged" if res.converged else "NOT converged"
    print(f"{metric} {year if year is not None else ''}: {state} after {res.iterations} iterations "
          f"(delta {res.final_delta:.3g}); top {', '.join(e.country for e in top)}")
    if res.floored.any():
        print(f"  fitness ~ 0: {', '.join(np.array(res.countries)[res.floored])}")
    if not res.converged:
        not_converged.append(year)


def read_scores(path, metric: str) -> dict[int, dict[str, float]]:
    """Metric values by year from a scores CSV written by ``metrics``."""
    try:
        df = pd.read_csv(path, dtype={"country": str, "metric": str}, keep_default_na=False, float_precision="round_trip")
    except pd.errors.ParserError as exc:
        raise ParseError(f"malformed scores file {path}: {exc}", path=str(path)) from exc
    if not {"country", "metric", "year", "value"} <= set(df.columns):
        raise ParseError(f"{path} is not a scores file", path=str(path))
    df = df[df["metric"] == metric]
    if df.empty:
        raise ValidationError(f"no {metric} scores in {path}", metric=metric)
    out: dict[int, dict[str, float]] = {}
    for r in df.itertuples(index=False):
        if r.year == "":
            raise ValidationError(f"{metric} scores in {path} have no year", metric=metric)
        out.setdefault(int(r.year), {})[r.country] = float(r.value)
    return out


def cmd_rank(args, run: Run) -> int:
    scores = read_scores(run.input(args.scores), args.metric)
    year = _pick_year(scores, args.year)
    ranking = rank(scores[year])
    shown = ranking[: args.top] if args.top else ranking
    for e in shown:
        print(f"{e.rank:>3}  {e.country}  {e.score:.6g}")
    if args.out:
        pd.DataFrame([vars(e) for e in ranking]).to_csv(run.output(args.out), index=False,
                                                       lineterminator="\n", float_format="%.17g")
    return 0


def cmd_regress(args, run: Run) -> int:
    aux = load_auxiliary(run.input(args.aux))
    scores = read_scores(run.input(args.scores), args.metric) if args.scores else None
    if scores is None and args.metric == "vxf":
        raise InputMismatchError("--metric vxf needs --scores from the metrics command")
    panel = build_panel(aux, scores, args.metric, human_capital_transform=args.hc_transform)
    if panel.rejected and not args.allow_incomplete:
        pairs = panel.missing_pairs()
        raise IncompletePanelError(
            f"panel incomplete: {len(panel.rejected)} rows rejected; missing "
            + ", ".join(f"({c}, {y})" for c, y in pairs),
            missing=[[c, y] for c, y in pairs],
            rows=[[r.country, r.period] for r in panel.rejected],
        )
    fit = fit_fd_dynamic if args.spec == "fd-dynamic" else fit_within_fe
    result = fit(panel, cov_type=args.cov_type)
    write_results_csv([result], run.output(args.out))
    table = render_table([result])
    run.output(args.table or _sibling(args.out, ".txt")).write_text(table)
    print(table, end="")
    pairs = growth_pairs(aux, scores, args.metric)
    scatter = run.output(args.scatter or _sibling(args.out, ".scatter.csv"))
    write_scatter(pairs, args.metric, scatter)
    if len(pairs) >= 3:
        slope, r2 = unconditional_correlation(pairs["gdp_growth"].to_numpy(), pairs["metric_growth"].to_numpy())
        print(f"unconditional: slope {slope:.4f}, R2 {r2:.3f} ({len(pairs)} countries)")
    return 0


def cmd_manifest(args, run: Run) -> int:
    manifest = RunManifest.read(args.manifest)
    changed = [p for p, digest in manifest.inputs.items() if not Path(p).is_file() or sha256(p) != digest]
    if changed:
        raise ValidationError(f"inputs changed since the manifest was written: {changed}", files=changed)
    if not args.verify:
        print(json.dumps(asdict(manifest), indent=2, sort_keys=True))
        return 0
    status = main(manifest.argv)
    mismatched = [p for p, digest in manifest.outputs.items() if not Path(p).is_file() or sha256(p) != digest]
    if mismatched:
        err = ValidationError(f"re-run outputs differ: {mismatched}", files=mismatched)
        err.code = "manifest_mismatch"
        raise err
    print(f"reproduced {len(manifest.outputs)} outputs byte-identically (exit {status})")
    return 0


# ------------------------------------------------------------------ parser


def _common() -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--tol", type=float, default=s, help=f"fitness convergence tolerance (default {DEFAULT_TOL})")
    p.add_argument("--max-iter", type=int, default=s, help=f"fitness iteration cap (default {DEFAULT_MAX_ITER})")
    p.add_argument("--rca-threshold", type=float, default=s, help="RCA cut-off for binary matrices (default 1)")
    p.add_argument("--format", choices=FORMATS, default=s, help="IOT input layout (default long-csv)")
    p.add_argument("--manifest", default=s, help="write a run manifest JSON here")
    p.add_argument("-v", "--verbose", action="store_true", default=s)
    return p


GLOBAL_DEFAULTS = dict(tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rca_threshold=1.0, format="long-csv",
                       manifest=None, verbose=False)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="vxcomplexity", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate an IOT file and optionally rewrite it")
    p.add_argument("iot")
    p.add_argument("--out")
    p.add_argument("--out-format", choices=FORMATS, default="long-csv")
    p.add_argument("--fd-exclude", nargs="*", default=[], metavar="CATEGORY")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("vax", parents=[common], help="value-added exports per country and industry")
    p.add_argument("iot", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--year", type=int, nargs="*", default=None)
    p.add_argument("--fd-exclude", nargs="*", default=[], metavar="CATEGORY",
                   help="final-demand categories to leave out, e.g. INVEN")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_vax)

    p = sub.add_parser("adjacency", parents=[common], help="weighted VX shares or RCA / binary matrices")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--vax")
    src.add_argument("--exports")
    p.add_argument("--kind", choices=("weighted", "rca", "binary"), default=None)
    p.add_argument("--year", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_adjacency)

    p = sub.add_parser("metrics", parents=[common], help="VXF, EF or ECI scores with rankings")
    p.add_argument("--metric", choices=("vxf", "ef", "eci"), required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--vax")
    src.add_argument("--adjacency")
    src.add_argument("--exports")
    p.add_argument("--year", type=int)
    p.add_argument("--eci-method", choices=("reflections", "eigenvector"), default="reflections")
    p.add_argument("--eci-order", type=int, default=DEFAULT_ECI_ORDER)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rank", parents=[common], help="rank countries from a scores file")
    p.add_argument("--scores", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--year", type=int)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("regress", parents=[common], help="fixed-effects growth regressions")
    p.add_argument("--aux", required=True)
    p.add_argument("--scores", help="scores CSV; ef/eci fall back to series in --aux")
    p.add_argument("--metric", choices=("vxf", "ef", "eci"), required=True)
    p.add_argument("--spec", choices=("fd-dynamic", "within-fe"), default="fd-dynamic")
    p.add_argument("--cov-type", choices=("HC0", "HC1", "HC2", "HC3"), default="HC1")
    p.add_argument("--hc-transform", choices=("log", "level"), default="log")
    p.add_argument("--allow-incomplete", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--table")
    p.add_argument("--scatter")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("manifest", parents=[common], help="show or verify a run manifest")
    p.add_argument("manifest_path", metavar="MANIFEST")
    p.add_argument("--verify", action="store_true", help="re-run and compare output digests")
    p.set_defaults(func=cmd_manifest)
    return parser


def _finish_args(args):
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.command == "adjacency" and args.kind is None:
        args.kind = "weighted" if args.vax else "binary"
    if args.command == "adjacency" and args.vax and args.kind != "weighted":
        raise InputMismatchError("--vax only yields the weighted matrix")
    if args.command == "manifest":
        args.manifest = args.manifest_path
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _finish_args(args)
    except VxcError as exc:
        return _fail(exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    run = Run()
    try:
        status = args.func(args, run)
    except VxcError as exc:
        status = _fail(exc)
    if args.command != "manifest" and args.manifest:
        params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")}
        manifest = RunManifest(
            command=args.command,
            argv=argv,
            parameters=params,
            inputs={p: sha256(p) for p in run.inputs},
            outputs={p: sha256(p) for p in run.outputs if Path(p).is_file()},
        )
        manifest.write(args.manifest)
    return status


def _fail(exc: VxcError) -> int:
    print(json.dumps(exc.to_dict(), sort_keys=True, default=str), file=sys.stderr)
    return exc.exit_status


if __name__ == "__main__":
    sys.exit(main())
