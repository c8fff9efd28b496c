"""CLI for process-evolution."""

import argparse
import dataclasses
import json
import logging
import os
import sys
from datetime import timedelta
from pathlib import Path

from .analytics import (
    XAxis,
    change_distribution,
    entity_change_matrix,
    entity_count_series,
    release_concentration,
    release_versions,
    version_density,
)
from .changes import DEFAULT_KINDS, ChangeKind, DetectionScope, detect_history, records_to_csv
from .comparison import compare, export_comparison
from .errors import ProcessEvolutionError
from .generator import GeneratorConfig, generate
from .ingest import entities_from_graph, ingest_corpus, render_process_xml
from .ntriples import format_term, serialize_graph
from .query import evaluate, explain, parse_query
from .repository import DEFAULT_SNAPSHOT_INTERVAL, VersionRepository, format_timestamp, open_or_fail
from .schema import ProcessSchema
from .visualize import (
    matrix_to_csv,
    release_concentration_to_csv,
    render_bubble_svg,
    render_line_svg,
    render_matrix_svg,
    series_to_csv,
)

REPO_ENV = "PROCESS_EVOLUTION_REPO"
METRICS = ("complexity", "changes", "density", "matrix", "releases")
PLOTS = ("complexity", "changes", "density", "matrix")


def _kind(value: str) -> ChangeKind:
    try:
        return ChangeKind(value)
    except ValueError as err:
        names = ", ".join(k.value for k in ChangeKind)
        raise argparse.ArgumentTypeError(f"unknown change kind {value!r} (one of {names})") from err


def _load_schema(path: Path | None) -> ProcessSchema | None:
    return ProcessSchema.load(path) if path else None


def _write_output(text: str, out: Path | None) -> None:
    """Write to ``out`` or standard output."""
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"Wrote {out}")


def _print_json(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def add_repo_arg(parser: argparse.ArgumentParser) -> None:
    """Add the repository option shared between subcommands."""
    parser.add_argument(
        "--repo",
        type=Path,
        default=os.environ.get(REPO_ENV),
        help=f"Version repository directory (default: ${REPO_ENV})",
    )


def add_metric_args(parser: argparse.ArgumentParser, metrics: tuple[str, ...]) -> None:
    """Add the options shared by ``metrics`` and ``plot``."""
    add_repo_arg(parser)
    parser.add_argument("--metric", choices=metrics, required=True, help="Metric to compute")
    parser.add_argument(
        "--x",
        dest="x_axis",
        choices=[a.value for a in XAxis],
        default=XAxis.VERSION.value,
        help="Place change counts by version number or by timestamp (default: version)",
    )
    parser.add_argument("--module", help="Module id (required for --metric matrix)")
    parser.add_argument(
        "--kinds",
        type=_kind,
        nargs="+",
        help="Change kinds to count (default: EntityAdded EntityDeleted TextPropertyChanged)",
    )
    parser.add_argument(
        "--include-entailed",
        action="store_true",
        help="Also count relation changes caused by entity additions or deletions",
    )
    parser.add_argument(
        "--count",
        choices=["records", "entities"],
        default="records",
        help="Count change records or distinct changed entities (default: records)",
    )
    parser.add_argument(
        "--bin-days",
        type=float,
        default=1.0,
        help="Bin width in days for --metric density (default: 1)",
    )
    parser.add_argument(
        "--radius",
        type=int,
        default=3,
        help="Release window radius in versions for --metric releases (default: 3)",
    )
    parser.add_argument("--out", type=Path, help="Output file (default: standard output)")


def cmd_ingest(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if args.repo is None:
        parser.error(f"--repo is required (or set {REPO_ENV})")
    _, report = ingest_corpus(
        args.corpus,
        schema=_load_schema(args.schema),
        repo_dir=args.repo,
        workers=args.workers,
        snapshot_interval=args.snapshot_interval,
    )
    if args.json:
        _print_json(report.to_dict())
        return
    print(f"attempted={report.attempted} loaded={report.loaded} failed={len(report.failed)}")
    for name, error in report.failed:
        print(f"  FAILED  {name}: {error}")
    for name, message in report.warnings if args.verbose else ():
        print(f"  WARNING {name}: {message}")
    if report.warnings and not args.verbose:
        print(f"{len(report.warnings)} warnings (run with -v to see them)")


def cmd_list(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    if args.json:
        _print_json([m.to_dict() for m in repo.metas])
        return
    print(f"{'version':>7}  {'timestamp':<20}  {'author':<12}  {'release':<10}  comment")
    for m in repo.metas:
        timestamp = format_timestamp(m.timestamp) if m.timestamp else "-"
        release = m.release or ""
        print(f"{m.version:>7}  {timestamp:<20}  {m.author:<12}  {release:<10}  {m.comment}")


def cmd_export(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    graph = repo.checkout(args.version)
    if args.format == "xml":
        text = render_process_xml(entities_from_graph(graph, repo.schema))
    else:
        text = serialize_graph(graph)
    _write_output(text, args.out)


def cmd_diff(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    cm = compare(repo.checkout(args.base), repo.checkout(args.target), args.base, args.target)
    if args.changes_only:
        cm = cm.without_common()
    _write_output(export_comparison(cm), args.out)


def cmd_detect(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    scope = None
    if args.types or args.modules:
        scope = DetectionScope(
            entity_types=frozenset(args.types) if args.types else None,
            modules=(
                frozenset(repo.schema.entity_iri(m) for m in args.modules)
                if args.modules
                else None
            ),
        )
    mismatches: list = []
    records = detect_history(repo, scope=scope, mismatches=mismatches)
    counts = {kind.value: 0 for kind in ChangeKind}
    for r in records:
        counts[r.kind.value] += 1
    entailed = sum(1 for r in records if r.entailed)
    if args.json:
        _print_json(
            {
                "records": len(records),
                "by_kind": counts,
                "entailed": entailed,
                "schema_mismatches": len(mismatches),
            }
        )
        return
    print(f"Detected {len(records)} changes over {max(len(repo) - 1, 0)} version pairs")
    for kind, n in counts.items():
        print(f"  {kind:<20} {n:>8}")
    print(f"  {'(entailed)':<20} {entailed:>8}")
    if mismatches:
        print(f"{len(mismatches)} schema mismatches (run with -v to see them)")


def cmd_changes(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    versions = None
    if args.first is not None or args.last is not None:
        first = args.first if args.first is not None else 1
        last = args.last if args.last is not None else (repo.head_version or 0)
        versions = (first, last)
    module = repo.schema.entity_iri(args.module) if args.module else None
    records = repo.load_change_records(versions=versions, kinds=args.kinds, module=module)
    _write_output(records_to_csv(records), args.out)


def cmd_query(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if args.version is None and (args.base is None or args.target is None):
        parser.error("give --version, or both --base and --target")
    if args.version is not None and (args.base is not None or args.target is not None):
        parser.error("--version cannot be combined with --base/--target")
    repo = open_or_fail(args.repo)
    query = parse_query(args.query.read_text(encoding="utf-8"))
    if args.version is not None:
        dataset = repo.checkout(args.version)
    else:
        base, target = repo.checkout(args.base), repo.checkout(args.target)
        dataset = compare(base, target, args.base, args.target)

    if args.explain:
        for line in explain(dataset, query):
            print(line)
        return
    solutions = evaluate(dataset, query)
    if args.json:
        _print_json(
            [{v.name: format_term(t) for v, t in s.binding} for s in solutions]
        )
        return
    print("\t".join(f"?{v.name}" for v in query.select))
    for s in solutions:
        print("\t".join(format_term(t) for _, t in s.binding))
    print(f"({len(solutions)} solutions)", file=sys.stderr)


def _releases_on_axis(repo: VersionRepository, x_axis: XAxis) -> list:
    releases = release_versions(repo)
    if x_axis is XAxis.VERSION:
        return releases
    return [(repo.meta(v).timestamp, label) for v, label in releases if repo.meta(v).timestamp]


def _module_series(series: list, module: str | None) -> list:
    if module is None:
        return series
    return [s for s in series if s.group == module]


def cmd_metrics(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    x_axis = XAxis(args.x_axis)
    if args.metric == "complexity":
        text = series_to_csv(_module_series(entity_count_series(repo), args.module), "entities")
    elif args.metric == "changes":
        series = change_distribution(
            repo, x_axis, args.kinds, args.include_entailed, count=args.count
        )
        text = series_to_csv(_module_series(series, args.module), "changes", x_axis)
    elif args.metric == "density":
        text = series_to_csv([version_density(repo, timedelta(days=args.bin_days))], "versions")
    elif args.metric == "matrix":
        if not args.module:
            parser.error("--metric matrix needs --module")
        text = matrix_to_csv(
            entity_change_matrix(repo, args.module, args.kinds, args.include_entailed)
        )
    else:
        result = release_concentration(repo, args.radius, args.kinds, args.include_entailed)
        if args.json:
            _print_json(result.to_dict())
            return
        text = release_concentration_to_csv(result)
    _write_output(text, args.out)


def cmd_plot(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    repo = open_or_fail(args.repo)
    x_axis = XAxis(args.x_axis)
    kinds = args.kinds or sorted(DEFAULT_KINDS, key=lambda k: k.value)
    kind_names = ", ".join(k.value for k in kinds)
    if args.metric == "complexity":
        series = _module_series(entity_count_series(repo), args.module)
        svg = render_line_svg(series, "Entities per module", release_versions(repo))
    elif args.metric == "changes":
        series = change_distribution(repo, x_axis, kinds, args.include_entailed, count=args.count)
        density = version_density(repo) if x_axis is XAxis.TIME else None
        svg = render_bubble_svg(
            _module_series(series, args.module),
            f"Changes per module ({kind_names})",
            _releases_on_axis(repo, x_axis),
            density,
        )
    elif args.metric == "density":
        density = version_density(repo, timedelta(days=args.bin_days))
        svg = render_line_svg(
            [density], "Versions per time bin", _releases_on_axis(repo, XAxis.TIME)
        )
    else:
        if not args.module:
            parser.error("--metric matrix needs --module")
        matrix = entity_change_matrix(repo, args.module, kinds, args.include_entailed)
        svg = render_matrix_svg(
            matrix, f"Changed entities of {matrix.module_id}", release_versions(repo)
        )
    _write_output(svg, args.out)


def cmd_generate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    config = GeneratorConfig.load(args.config) if args.config else GeneratorConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    corpus = generate(config, _load_schema(args.schema))
    corpus.write(args.out)
    malformed = sum(1 for v in corpus.versions if v.malformed)
    print(
        f"Wrote {len(corpus.versions)} versions ({malformed} malformed) and "
        f"{len(corpus.ground_truth)} ground-truth changes to {args.out}/"
    )


COMMANDS = {
    "ingest": cmd_ingest,
    "list": cmd_list,
    "export": cmd_export,
    "diff": cmd_diff,
    "detect": cmd_detect,
    "changes": cmd_changes,
    "query": cmd_query,
    "metrics": cmd_metrics,
    "plot": cmd_plot,
    "generate": cmd_generate,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    """Build the top-level parser and one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="process-evolution",
        description="Version, diff and analyze the evolution of process model descriptions",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Show warnings and progress (-v) or debug output (-vv)",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    sub: dict[str, argparse.ArgumentParser] = {}

    p = sub["ingest"] = subparsers.add_parser("ingest", help="Load a corpus of XML versions")
    p.add_argument("corpus", type=Path, help="Directory of NNNN.xml files and versions.tsv")
    add_repo_arg(p)
    p.add_argument("--schema", type=Path, help="Process schema YAML (default: built-in)")
    p.add_argument(
        "-j", "--workers", type=int, default=1, help="Parallel conversion processes (default: 1)"
    )
    p.add_argument(
        "--snapshot-interval",
        type=int,
        default=DEFAULT_SNAPSHOT_INTERVAL,
        help=f"Store a full snapshot every N versions (default: {DEFAULT_SNAPSHOT_INTERVAL})",
    )
    p.add_argument("--json", action="store_true", help="Print the report as JSON")

    p = sub["list"] = subparsers.add_parser("list", help="List stored versions")
    add_repo_arg(p)
    p.add_argument("--json", action="store_true", help="Print as JSON")

    p = sub["export"] = subparsers.add_parser("export", help="Export one version")
    add_repo_arg(p)
    p.add_argument("--version", type=int, required=True, help="Version number")
    p.add_argument(
        "--format", choices=["nt", "xml"], default="nt", help="N-Triples or process XML"
    )
    p.add_argument("--out", type=Path, help="Output file (default: standard output)")

    p = sub["diff"] = subparsers.add_parser("diff", help="Compare two versions")
    add_repo_arg(p)
    p.add_argument("--base", type=int, required=True, help="Base version")
    p.add_argument("--target", type=int, required=True, help="Target version")
    p.add_argument(
        "--changes-only", action="store_true", help="Leave out statements common to both"
    )
    p.add_argument("--out", type=Path, help="Output file (default: standard output)")

    p = sub["detect"] = subparsers.add_parser(
        "detect", help="Detect changes between consecutive versions and store them"
    )
    add_repo_arg(p)
    p.add_argument("--types", nargs="+", help="Only detect changes of entities of these types")
    p.add_argument("--modules", nargs="+", help="Only detect changes inside these module ids")
    p.add_argument("--json", action="store_true", help="Print counts as JSON")

    p = sub["changes"] = subparsers.add_parser("changes", help="Export stored changes as CSV")
    add_repo_arg(p)
    p.add_argument("--kinds", type=_kind, nargs="+", help="Only these change kinds")
    p.add_argument("--from", dest="first", type=int, help="First target version")
    p.add_argument("--to", dest="last", type=int, help="Last target version")
    p.add_argument("--module", help="Only changes inside this module id")
    p.add_argument("--out", type=Path, help="Output file (default: standard output)")

    p = sub["query"] = subparsers.add_parser(
        "query", help="Run a query on one version or on a comparison of two"
    )
    add_repo_arg(p)
    p.add_argument("--version", type=int, help="Query this version")
    p.add_argument("--base", type=int, help="Base version of a comparison")
    p.add_argument("--target", type=int, help="Target version of a comparison")
    p.add_argument("--query", type=Path, required=True, help="File holding the query")
    p.add_argument("--explain", action="store_true", help="Print the query plan instead")
    p.add_argument("--json", action="store_true", help="Print solutions as JSON")

    p = sub["metrics"] = subparsers.add_parser("metrics", help="Compute a metric as CSV")
    add_metric_args(p, METRICS)
    p.add_argument("--json", action="store_true", help="JSON output for --metric releases")

    p = sub["plot"] = subparsers.add_parser("plot", help="Render a metric as SVG")
    add_metric_args(p, PLOTS)

    p = sub["generate"] = subparsers.add_parser("generate", help="Generate a synthetic corpus")
    p.add_argument("--config", type=Path, help="Generator YAML config")
    p.add_argument("--schema", type=Path, help="Process schema YAML (default: built-in)")
    p.add_argument("--seed", type=int, help="Override the configured seed")
    p.add_argument("--out", type=Path, required=True, help="Output directory")

    return parser, sub


def configure_logging(verbosity: int) -> None:
    level = {0: logging.ERROR, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit status (0 ok, 1 domain error, 2 usage error)."""
    parser, sub = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    configure_logging(args.verbose)
    if args.command is None:
        parser.print_help()
        return 2

    try:
        COMMANDS[args.command](args, sub[args.command])
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (ProcessEvolutionError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
