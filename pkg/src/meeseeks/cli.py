"""Command-line entry points.

Five subcommands cover the workflow end to end:

* ``generate`` — expand a placeholder template into a dataset file.
* ``run`` — drive the multi-turn loop for every (target, instance) pair
  described by a YAML config, writing a self-contained run directory
  (dataset copy, transcripts, per-round reports).
* ``report`` — rebuild reports from a run directory.
* ``analyze`` — cross-model utility analytics over one or more run
  directories, or over the bundled reference results.
* ``fixtures`` — regenerate the bundled demo assets (dataset, config,
  recorded replay files).

Exit codes: 0 success, 2 usage or configuration problems, 3 runtime
failures (network, endpoint or session errors).
"""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from . import demo as demo_assets
from .dataset import (
    DataInstance,
    DatasetError,
    dump_dataset,
    expand_template,
    load_dataset,
    load_template,
)
from .gateway import (
    ChatGateway,
    Endpoint,
    GatewayError,
    HttpChatGateway,
    ReplayGateway,
    ReplayMode,
    ReplayStore,
)
from .orchestrator import (
    RunConfig,
    SessionStatus,
    Transcript,
    TranscriptStore,
    run_benchmark,
)
from .reporting import (
    build_round_report,
    cross_model_analysis,
    load_utility_reference,
    render_report_json,
    utility_rate_series,
)
from .sandbox import SandboxPolicy

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
RUNTIME_ERROR = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = USAGE_ERROR):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

_ENDPOINT_KEYS = {
    "name",
    "model",
    "base_url",
    "api_key_env",
    "timeout_seconds",
    "max_context_tokens",
    "sampling",
    "requests_per_minute",
    "token_estimator",
}


def _endpoint_from(obj: Any, ctx: str) -> Endpoint:
    if not isinstance(obj, Mapping):
        raise CliError(f"{ctx}: expected a mapping with at least name and model")
    unknown = set(obj) - _ENDPOINT_KEYS
    if unknown:
        raise CliError(f"{ctx}: unknown endpoint key(s) {sorted(unknown)}")
    if not obj.get("name") or not obj.get("model"):
        raise CliError(f"{ctx}: endpoint needs both 'name' and 'model'")
    try:
        return Endpoint(**obj)
    except (TypeError, ValueError) as exc:
        raise CliError(f"{ctx}: {exc}") from exc


def _load_config(path: Path) -> tuple[dict, Path]:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}")
    except yaml.YAMLError as exc:
        raise CliError(f"config {path} is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise CliError(f"config {path} must be a YAML mapping")
    return raw, path.parent


def _resolve(base: Path, value: str | Path) -> Path:
    value = Path(value)
    return value if value.is_absolute() else base / value


def _build_gateway(
    cfg: Mapping, base: Path, replay_override: Path | None, record_override: Path | None
) -> ChatGateway:
    """HTTP gateway, optionally wrapped by record/replay per config or flags."""
    if replay_override is not None and record_override is not None:
        raise CliError("--replay and --record are mutually exclusive")
    if replay_override is not None:
        return ReplayGateway(ReplayStore(replay_override), ReplayMode.REPLAY_STRICT)
    if record_override is not None:
        return ReplayGateway(
            ReplayStore(record_override), ReplayMode.RECORD, inner=HttpChatGateway()
        )

    replay = cfg.get("replay") or {}
    if not isinstance(replay, Mapping):
        raise CliError("'replay' must be a mapping with 'mode' and 'dir'")
    mode_name = replay.get("mode", "passthrough")
    try:
        mode = ReplayMode(mode_name)
    except ValueError:
        valid = ", ".join(m.value for m in ReplayMode)
        raise CliError(f"unknown replay mode {mode_name!r} (expected one of: {valid})")
    if mode is ReplayMode.PASSTHROUGH:
        return HttpChatGateway()
    directory = replay.get("dir")
    if not directory:
        raise CliError(f"replay mode {mode.value!r} needs a 'dir'")
    store = ReplayStore(_resolve(base, directory))
    inner = HttpChatGateway() if mode is ReplayMode.RECORD else None
    return ReplayGateway(store, mode, inner=inner)


def _build_run_config(cfg: Mapping, base: Path, args: argparse.Namespace) -> RunConfig:
    if "evaluator" not in cfg:
        raise CliError("config needs an 'evaluator' endpoint")
    evaluator = _endpoint_from(cfg["evaluator"], "evaluator")
    coder = _endpoint_from(cfg["coder"], "coder") if cfg.get("coder") else None
    regenerator = (
        _endpoint_from(cfg["regenerator"], "regenerator") if cfg.get("regenerator") else None
    )

    run = cfg.get("run") or {}
    if not isinstance(run, Mapping):
        raise CliError("'run' must be a mapping")
    sandbox_cfg = cfg.get("sandbox") or {}
    if not isinstance(sandbox_cfg, Mapping):
        raise CliError("'sandbox' must be a mapping")
    sandbox = SandboxPolicy(
        timeout_seconds=float(sandbox_cfg.get("timeout_seconds", 10.0)),
        memory_bytes=int(sandbox_cfg.get("memory_mb", 512)) * 1024 * 1024,
    )

    output_dir = args.out or run.get("output_dir")
    if output_dir is None:
        raise CliError("give --out or set run.output_dir in the config")
    output_dir = Path(output_dir) if args.out else _resolve(base, output_dir)

    try:
        return RunConfig(
            evaluator=evaluator,
            coder=coder,
            regenerator=regenerator,
            max_turns=int(run.get("max_turns", 20)),
            concurrency=int(run.get("concurrency", 4)),
            sandbox=sandbox,
            output_dir=output_dir,
            resume=bool(args.resume or run.get("resume", False)),
            response_filter=run.get("response_filter", RunConfig.response_filter),
            max_repair_rounds=int(run.get("max_repair_rounds", 2)),
        )
    except ValueError as exc:
        raise CliError(f"invalid run settings: {exc}") from exc


# ---------------------------------------------------------------------------
# Report helpers
# ---------------------------------------------------------------------------


def _safe_name(name: str) -> str:
    return name.replace("/", "_").replace("\\", "_")


def _max_round(transcripts: Mapping[str, Transcript], fallback: int = 1) -> int:
    rounds = [r.turn_index for t in transcripts.values() for r in t.turns]
    return max(rounds) if rounds else fallback


def _write_reports(
    run_dir: Path,
    instances: Sequence[DataInstance],
    by_endpoint: Mapping[str, Mapping[str, Transcript]],
    max_round: int,
    *,
    micro: bool = False,
) -> list[tuple[str, int, float, float]]:
    """Write reports/<endpoint>/round_NN.json; return final-round summary rows."""
    rows = []
    for endpoint_name in sorted(by_endpoint):
        transcripts = by_endpoint[endpoint_name]
        out = run_dir / "reports" / _safe_name(endpoint_name)
        out.mkdir(parents=True, exist_ok=True)
        for round_index in range(1, max_round + 1):
            report = build_round_report(instances, transcripts, round_index, micro=micro)
            (out / f"round_{round_index:02d}.json").write_text(
                render_report_json(report), encoding="utf-8"
            )
            if round_index == max_round:
                rows.append(
                    (endpoint_name, round_index, report.utility_score, report.meeseeks_score)
                )
    return rows


def _print_summary(rows: Sequence[tuple[str, int, float, float]]) -> None:
    for endpoint_name, round_index, utility, score in rows:
        print(
            f"{endpoint_name}: round {round_index} "
            f"utility={utility:.3f} score={score:.3f}"
        )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    spec = load_template(args.template)
    instances = expand_template(spec)
    dump_dataset(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg, base = _load_config(Path(args.config))
    config = _build_run_config(cfg, base, args)

    dataset_path = Path(args.dataset) if args.dataset else None
    if dataset_path is None:
        if not cfg.get("dataset"):
            raise CliError("give --dataset or set 'dataset' in the config")
        dataset_path = _resolve(base, cfg["dataset"])
    instances = load_dataset(dataset_path)
    if args.limit is not None:
        if args.limit < 1:
            raise CliError("--limit must be at least 1")
        instances = instances[: args.limit]

    targets_cfg = cfg.get("targets")
    if not isinstance(targets_cfg, list) or not targets_cfg:
        raise CliError("config needs a non-empty 'targets' list")
    targets = [_endpoint_from(t, f"targets[{i}]") for i, t in enumerate(targets_cfg)]

    gateway = _build_gateway(cfg, base, args.replay, args.record)

    run_dir = config.output_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    # Keep the run self-contained: the dataset copy is what report/analyze
    # read later, even if the original moves.
    dataset_copy = run_dir / "dataset.json"
    if dataset_copy.resolve() != dataset_path.resolve():
        dump_dataset(instances, dataset_copy)

    result = run_benchmark(instances, targets, gateway, config)

    by_endpoint = {name: result.for_endpoint(name) for name in result.endpoints()}
    rows = _write_reports(run_dir, instances, by_endpoint, config.max_turns, micro=args.micro)
    _print_summary(rows)

    failures = result.failures()
    if failures:
        for (endpoint_name, instance_id), message in failures:
            print(f"error: {endpoint_name}/{instance_id}: {message}", file=sys.stderr)
        print(f"{len(failures)} session(s) failed", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


def _load_run_dir(run_dir: Path) -> tuple[list[DataInstance], dict[str, dict[str, Transcript]]]:
    dataset_path = run_dir / "dataset.json"
    transcripts_path = run_dir / "transcripts.jsonl"
    if not dataset_path.exists() or not transcripts_path.exists():
        raise CliError(
            f"{run_dir} is not a run directory (needs dataset.json and transcripts.jsonl)"
        )
    instances = load_dataset(dataset_path)
    try:
        all_transcripts = TranscriptStore(transcripts_path).read_transcripts()
    except ValueError as exc:
        raise CliError(str(exc), RUNTIME_ERROR)
    by_endpoint: dict[str, dict[str, Transcript]] = {}
    for (endpoint_name, instance_id), transcript in all_transcripts.items():
        by_endpoint.setdefault(endpoint_name, {})[instance_id] = transcript
    if not by_endpoint:
        raise CliError(f"{transcripts_path} holds no transcripts", RUNTIME_ERROR)
    return instances, by_endpoint


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    instances, by_endpoint = _load_run_dir(run_dir)
    if args.turn is not None and args.turn < 1:
        raise CliError("--turn must be at least 1")
    max_round = args.turn or max(
        _max_round(transcripts) for transcripts in by_endpoint.values()
    )
    rows = _write_reports(run_dir, instances, by_endpoint, max_round, micro=args.micro)
    _print_summary(rows)
    return 0


def _analysis_lines(utilities: Mapping[str, Sequence[float]]) -> list[str]:
    analysis = cross_model_analysis(utilities)
    lines = [f"models: {len(analysis.models)}, rounds: {analysis.rounds}"]
    lines.append(
        "round  stdev   pearson-vs-r1  spearman-vs-r1"
    )
    for i in range(analysis.rounds):
        lines.append(
            f"{i + 1:>5}  {analysis.stdev_by_round[i]:.4f}  "
            f"{analysis.pearson_vs_first_round[i]:>13.4f}  "
            f"{analysis.spearman_vs_first_round[i]:>14.4f}"
        )
    if analysis.windows:
        header = "window averages: " + "  ".join(f"{lo}-{hi}" for lo, hi in analysis.windows)
        lines.append(header)
        width = max(len(m) for m in analysis.models)
        for model in analysis.models:
            cells = "  ".join(f"{v:.3f}" for v in analysis.window_averages[model])
            lines.append(f"  {model:<{width}}  {cells}")
    return lines


def cmd_analyze(args: argparse.Namespace) -> int:
    utilities: dict[str, list[float]] = {}
    if args.reference:
        doc = load_utility_reference()
        utilities = {name: entry["per_turn"] for name, entry in doc["models"].items()}
    else:
        if not args.run_dir:
            raise CliError("give at least one --run-dir, or --reference")
        horizon = 0
        per_endpoint: dict[str, dict[str, Transcript]] = {}
        for raw in args.run_dir:
            _, by_endpoint = _load_run_dir(Path(raw))
            for endpoint_name, transcripts in by_endpoint.items():
                if endpoint_name in per_endpoint:
                    raise CliError(
                        f"endpoint {endpoint_name!r} appears in more than one run directory"
                    )
                per_endpoint[endpoint_name] = transcripts
                horizon = max(horizon, _max_round(transcripts))
        utilities = {
            name: utility_rate_series(transcripts, horizon)
            for name, transcripts in per_endpoint.items()
        }
    if len(utilities) < 2:
        raise CliError("cross-model analysis needs at least two models")
    for line in _analysis_lines(utilities):
        print(line)
    return 0


def cmd_fixtures(args: argparse.Namespace) -> int:
    dest = Path(args.out) if args.out else demo_assets.bundled_demo_dir()
    try:
        demo_assets.write_demo_assets(dest)
    except OSError as exc:
        raise CliError(
            f"cannot write demo assets to {dest} ({exc}); pass --out somewhere writable",
            RUNTIME_ERROR,
        )
    print(f"wrote demo assets to {dest}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meeseeks",
        description="Multi-turn instruction-following evaluation harness.",
    )
    try:
        version = metadata.version("meeseeks")
    except metadata.PackageNotFoundError:  # running from a source tree
        version = "unknown"
    parser.add_argument("--version", action="version", version=f"%(prog)s {version}")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="enable debug logging"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="expand a placeholder template into a dataset")
    p.add_argument("--template", required=True, help="template JSON file")
    p.add_argument("--out", required=True, help="dataset file to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run the multi-turn loop for a dataset against targets")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--dataset", help="dataset file (overrides the config)")
    p.add_argument("--out", help="run directory (overrides run.output_dir)")
    p.add_argument("--limit", type=int, help="only run the first N instances")
    p.add_argument("--resume", action="store_true", help="skip already-finished sessions")
    p.add_argument("--replay", type=Path, help="replay strictly from this fixture directory")
    p.add_argument("--record", type=Path, help="record fixtures into this directory")
    p.add_argument("--micro", action="store_true", help="pool tag outcomes instead of macro-averaging")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="rebuild per-round reports from a run directory")
    p.add_argument("--run-dir", required=True, help="directory written by `meeseeks run`")
    p.add_argument("--turn", type=int, help="report up to this round (default: observed)")
    p.add_argument("--micro", action="store_true", help="pool tag outcomes instead of macro-averaging")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("analyze", help="cross-model utility analytics")
    p.add_argument(
        "--run-dir",
        action="append",
        default=[],
        help="run directory; repeat to combine runs (distinct endpoints)",
    )
    p.add_argument(
        "--reference",
        action="store_true",
        help="analyze the bundled reference results instead of run directories",
    )
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fixtures", help="regenerate the bundled demo assets")
    p.add_argument("--out", help="destination directory (default: the bundled copy)")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except GatewayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
