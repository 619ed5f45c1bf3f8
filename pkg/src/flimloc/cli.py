"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 bundle error, 3 recognizer
failure.  Logs go to stderr; machine-readable output goes to files under
``--out``; stdout carries only the human-readable table.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .confidence import Algorithm, ConfidenceConfig
from .errors import BundleError, ConfigError, RecognizerError
from .ingest import KILL_MODES, parse_bundle
from .mbfl import Formula, FormulaConfig
from .pipeline import (
    EvalReport,
    Variant,
    compare_report,
    decisions_json,
    dumps,
    evaluate,
    parse_variant,
    ranking_json,
    ranking_table,
    report_json,
    run_variant,
)
from .recognition import API_KEY_ENV, export_training_set, load_template, template_fields
from .recognition.recognizers import RECOGNIZER_KINDS

log = logging.getLogger("flimloc")

EXIT_OK, EXIT_CONFIG, EXIT_BUNDLE, EXIT_RECOGNIZER = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "bundle": [],
    "formula": "ochiai",
    "dstar_exponent": 2.0,
    "kill_mode": "weak",
    "recognizer": "null",
    "endpoint": None,
    "replay": None,
    "model": "default",
    "temperature": 0.7,
    "runs": 1,
    "mitigation": "binary",
    "confidence": "pca",
    "pca_iterations": 1000,
    "pca_tolerance": 1e-10,
    "out": "out",
    "jobs": 1,
    "retries": 3,
    "seed": 0,
    "template": None,
    "variants": [],
    "ties": "average",
}

# nested config sections -> flat option names
_NESTED = {
    "recognizer": {"kind": "recognizer", "endpoint": "endpoint", "replay": "replay",
                   "model": "model", "temperature": "temperature"},
    "confidence": {"algorithm": "confidence", "iterations": "pca_iterations",
                   "pca_iterations": "pca_iterations", "tolerance": "pca_tolerance",
                   "pca_tolerance": "pca_tolerance"},
    "formula": {"name": "formula", "dstar_exponent": "dstar_exponent", "exponent": "dstar_exponent"},
}


@dataclass
class RunConfig:
    bundle: list[str] = field(default_factory=list)
    formula: str = "ochiai"
    dstar_exponent: float = 2.0
    kill_mode: str = "weak"
    recognizer: str = "null"
    endpoint: str | None = None
    replay: str | None = None
    model: str = "default"
    temperature: float = 0.7
    runs: int = 1
    mitigation: str = "binary"
    confidence: str = "pca"
    pca_iterations: int = 1000
    pca_tolerance: float = 1e-10
    out: str = "out"
    jobs: int = 1
    retries: int = 3
    seed: int = 0
    template: str | None = None
    variants: list[str] = field(default_factory=list)
    ties: str = "average"

    def validate(self) -> None:
        try:
            Formula(self.formula)
            Algorithm(self.confidence)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.kill_mode not in KILL_MODES:
            raise ConfigError(f"kill mode must be one of {KILL_MODES}")
        if self.recognizer not in RECOGNIZER_KINDS:
            raise ConfigError(f"recognizer must be one of {RECOGNIZER_KINDS}")
        if self.recognizer == "remote" and not self.endpoint:
            raise ConfigError("recognizer 'remote' requires --endpoint")
        if self.recognizer == "replay" and not self.replay:
            raise ConfigError("recognizer 'replay' requires --replay")
        if self.mitigation not in ("binary", "confidence"):
            raise ConfigError("mitigation must be 'binary' or 'confidence'")
        if self.ties not in ("average", "best"):
            raise ConfigError("ties must be 'average' or 'best'")
        for name in ("runs", "jobs", "pca_iterations"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.retries < 0:
            raise ConfigError("retries must be >= 0")
        if not self.bundle:
            raise ConfigError("at least one --bundle is required")

    @property
    def formula_config(self) -> FormulaConfig:
        try:
            return FormulaConfig(Formula(self.formula), float(self.dstar_exponent))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def confidence_config(self) -> ConfidenceConfig:
        try:
            return ConfidenceConfig(Algorithm(self.confidence), int(self.pca_iterations), float(self.pca_tolerance))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def variant(self) -> Variant:
        name = f"flim-{self.recognizer}"
        if self.mitigation == "confidence":
            name += f":{self.confidence}"
        return Variant(
            name=name,
            method="flim",
            recognizer=self.recognizer,
            mitigation=self.mitigation,
            confidence=self.confidence_config,
            runs=int(self.runs),
            endpoint=self.endpoint,
            replay=self.replay,
            model=self.model,
            temperature=float(self.temperature),
            seed=int(self.seed),
        )


def load_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    flat: dict[str, Any] = {}
    for key, val in raw.items():
        key = str(key).replace("-", "_")
        if key in _NESTED and isinstance(val, dict):
            for sub, sval in val.items():
                target = _NESTED[key].get(str(sub).replace("-", "_"))
                if target is None:
                    raise ConfigError(f"{path}: unknown key {key}.{sub}")
                flat[target] = sval
        elif key in DEFAULTS:
            flat[key] = val
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")
    for listy in ("bundle", "variants"):
        if isinstance(flat.get(listy), str):
            flat[listy] = [flat[listy]]
    return flat


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS)
    if args.config:
        values.update(load_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None and flag != []:
            values[key] = flag
    if isinstance(values["variants"], str):
        values["variants"] = [values["variants"]]
    values["variants"] = [v.strip() for item in values["variants"] for v in str(item).split(",") if v.strip()]
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, recognition: bool) -> None:
    d = DEFAULTS
    p.add_argument("--config", help="YAML config file; command-line flags override it")
    p.add_argument("--bundle", action="append", help="bundle directory (repeatable)")
    p.add_argument("--formula", choices=[f.value for f in Formula],
                   help=f"suspiciousness formula (default: {d['formula']})")
    p.add_argument("--dstar-exponent", type=float, help=f"D* exponent (default: {d['dstar_exponent']})")
    p.add_argument("--kill-mode", choices=KILL_MODES, help=f"kill interpretation (default: {d['kill_mode']})")
    p.add_argument("--out", help=f"output directory (default: {d['out']})")
    p.add_argument("--seed", type=int, help=f"random seed for retry jitter (default: {d['seed']})")
    p.add_argument("--ties", choices=("average", "best"),
                   help=f"tie handling for Top-N (default: {d['ties']})")
    if recognition:
        p.add_argument("--recognizer", choices=RECOGNIZER_KINDS,
                       help=f"interference recognizer (default: {d['recognizer']})")
        p.add_argument("--endpoint", help="chat-completion URL for the remote recognizer")
        p.add_argument("--model", help=f"model name sent to the remote endpoint (default: {d['model']})")
        p.add_argument("--temperature", type=float, help=f"sampling temperature (default: {d['temperature']})")
        p.add_argument("--replay", help="JSON-lines replay file for the replay recognizer")
        p.add_argument("--runs", type=int, help=f"recognizer runs per mutant, K (default: {d['runs']})")
        p.add_argument("--mitigation", choices=("binary", "confidence"),
                       help=f"mitigation mode (default: {d['mitigation']})")
        p.add_argument("--confidence", choices=[a.value for a in Algorithm],
                       help=f"confidence algorithm in confidence mode (default: {d['confidence']})")
        p.add_argument("--pca-iterations", type=int, help=f"(default: {d['pca_iterations']})")
        p.add_argument("--pca-tolerance", type=float, help=f"(default: {d['pca_tolerance']})")
        p.add_argument("--jobs", type=int, help=f"concurrent recognizer calls (default: {d['jobs']})")
        p.add_argument("--retries", type=int,
                       help=f"retries for failed or unparseable recognizer calls (default: {d['retries']})")
        p.add_argument("--template", help="prompt template file (default: bundled template)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="flimloc",
        description="Mutation-based fault localization with interference-mutant mitigation.",
        epilog=f"The remote recognizer reads its API key from ${API_KEY_ENV}.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("localize", help="MBFL with interference-mutant recognition and mitigation",
                       epilog=f"API key for --recognizer remote: ${API_KEY_ENV}")
    _common(p, recognition=True)
    p = sub.add_parser("mbfl", help="plain MBFL ranking")
    _common(p, recognition=False)
    p = sub.add_parser("export-dataset", help="write labelled fine-tuning records (train.jsonl)")
    _common(p, recognition=False)
    p.add_argument("--template", help="prompt template file (default: bundled template)")
    p = sub.add_parser("evaluate", help="compare variants: sbfl, mbfl, flim-<recognizer>[:<ebw|cbw|pca>]",
                       epilog=f"API key for remote variants: ${API_KEY_ENV}")
    _common(p, recognition=True)
    p.add_argument("--variants", help="comma-separated variant list, e.g. mbfl,flim-oracle")
    return parser


def _template(cfg: RunConfig) -> tuple[str | None, str | None]:
    if not cfg.template:
        return None, None
    try:
        text, template_id = load_template(cfg.template)
    except OSError as exc:
        raise ConfigError(f"cannot read template: {exc}") from None
    template_fields(text)
    return text, template_id


def _load_bundles(cfg: RunConfig):
    return [parse_bundle(b, cfg.kill_mode) for b in cfg.bundle]


def _write(out: Path, name: str, doc: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(dumps(doc), encoding="utf-8")


def _single_report(name: str, results, cfg: RunConfig, out: Path) -> None:
    if all(r.bundle.ground_truth is not None for r in results):
        rep: EvalReport = evaluate(name, results, cfg.ties)
        _write(out, "report.json", report_json([rep], cfg.formula_config))
    else:
        log.info("no ground truth for every bundle; report.json not written")


def cmd_mbfl(cfg: RunConfig) -> int:
    bundles = _load_bundles(cfg)
    results = run_variant(bundles, Variant("mbfl", "mbfl"), cfg.formula_config)
    out = Path(cfg.out)
    _write(out, "ranking.json", ranking_json(results, cfg.formula_config))
    _single_report("mbfl", results, cfg, out)
    sys.stdout.write(ranking_table(results))
    return EXIT_OK


def cmd_localize(cfg: RunConfig) -> int:
    bundles = _load_bundles(cfg)
    template, template_id = _template(cfg)
    variant = cfg.variant()
    results = run_variant(bundles, variant, cfg.formula_config, cfg.jobs, cfg.retries, template, template_id)
    out = Path(cfg.out)
    _write(out, "ranking.json", ranking_json(results, cfg.formula_config))
    _write(out, "decisions.json", decisions_json(results))
    _single_report(variant.name, results, cfg, out)
    sys.stdout.write(ranking_table(results))
    return EXIT_OK


def cmd_export_dataset(cfg: RunConfig) -> int:
    bundles = _load_bundles(cfg)
    template, template_id = _template(cfg)
    path = Path(cfg.out) / "train.jsonl"
    n = export_training_set(bundles, template, path, template_id, cfg.formula_config)
    log.info("wrote %d records to %s", n, path)
    sys.stdout.write(f"{n} records\n")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    if not cfg.variants:
        raise ConfigError("evaluate needs at least one variant (--variants)")
    defaults = dict(
        runs=int(cfg.runs),
        confidence=cfg.confidence_config,
        endpoint=cfg.endpoint,
        replay=cfg.replay,
        model=cfg.model,
        temperature=float(cfg.temperature),
        mitigation=cfg.mitigation,
        seed=int(cfg.seed),
    )
    variants = [parse_variant(v, **defaults) for v in cfg.variants]
    bundles = _load_bundles(cfg)
    template, template_id = _template(cfg)
    _, doc, table = compare_report(
        bundles, variants, cfg.formula_config, cfg.jobs, cfg.retries, cfg.ties, template, template_id
    )
    _write(Path(cfg.out), "report.json", doc)
    sys.stdout.write(table)
    return EXIT_OK


COMMANDS = {
    "localize": cmd_localize,
    "mbfl": cmd_mbfl,
    "export-dataset": cmd_export_dataset,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"flimloc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BundleError as exc:
        print(f"flimloc: bundle error: {exc}", file=sys.stderr)
        return EXIT_BUNDLE
    except RecognizerError as exc:
        print(f"flimloc: recognizer error: {exc}", file=sys.stderr)
        return EXIT_RECOGNIZER
    except OSError as exc:
        print(f"flimloc: I/O error: {exc}", file=sys.stderr)
        return EXIT_BUNDLE


if __name__ == "__main__":
    sys.exit(main())
