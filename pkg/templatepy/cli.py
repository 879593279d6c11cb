"""
Command line: ``templatepy <command> --help`` documents every command.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from . import analysis, experiment
from .exceptions import TemplatepyError
from .icl.select import load_demonstrations
from .prompts import grammar as grammars
from .prompts.render import MODES, PromptMeta, render

log = logging.getLogger("templatepy")


def _grammar(source: str) -> grammars.ComponentSet:
    if source in grammars.PRESETS and not Path(source).exists():
        return grammars.load_preset(source)
    return grammars.load_grammar(source)


def _write_frame(frame: pd.DataFrame, output: str | None, index: bool = False):
    frame.to_csv(output if output is not None else sys.stdout, index=index, float_format="%.6f")
    if output is not None:
        log.info(f"Wrote {len(frame)} rows to {output}.")


def _records(paths: Sequence[str]) -> list[experiment.RunRecord]:
    records = []
    for path in paths:
        records.extend(experiment.read_records(path))
    return records


def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def cmd_templates(args) -> int:
    grammar = _grammar(args.grammar)
    if args.sample is not None:
        templates = grammars.sample_templates(grammar, args.sample, args.seed)
    else:
        templates = grammars.enumerate_templates(grammar)

    frame = pd.DataFrame([
        {"id": template.id, **dict(zip(grammars.COMPONENTS, (repr(c) for c in template.components)))}
        for template in templates
    ])
    _write_frame(frame, args.output)
    log.info(f"{len(templates)} of {grammar.template_count} templates.")
    return 0


def cmd_render(args) -> int:
    grammar = _grammar(args.grammar)
    template = grammar.template(args.template)
    demos = load_demonstrations(args.demos, grammar.num_classes).demos if args.demos else ()
    mode = args.mode
    text = args.text if mode != "content_free" else args.cf_token
    prompt = render(mode, template, demos, text, args.class_index, grammar, PromptMeta())
    print(f"template:     {grammars.describe_template(template)}")
    print(f"prefix:       {prompt.prefix!r}")
    print(f"continuation: {prompt.continuation!r}")
    return 0


def _load_config(args) -> experiment.RunConfig:
    config = experiment.RunConfig.from_json(args.config)
    if args.endpoint is not None:
        config = dataclasses.replace(config, backend=dataclasses.replace(config.backend, endpoint=args.endpoint))
    return config


def _run(config: experiment.RunConfig, args) -> int:
    recorders = [experiment.JsonlRecorder(args.output, resume=not args.no_resume)]
    recorders.append(experiment.ProgressRecorder(disable=args.no_progress))
    evaluation = experiment.Evaluation(config, workers=args.workers, recorders=recorders)

    for _ in evaluation.run():
        pass

    log.info(f"Wrote {len(evaluation.cells)} records to {args.output} ({evaluation.errors} errors).")
    if args.csv is not None:
        _write_frame(experiment.records_frame(experiment.read_records(args.output)), args.csv)
    return 0 if evaluation.errors == 0 else 2


def cmd_run(args) -> int:
    return _run(_load_config(args), args)


def cmd_ensemble(args) -> int:
    config = _load_config(args)
    sizes = tuple(int(size) for size in _csv_list(args.sizes)) if args.sizes else ()
    methods = tuple(_csv_list(args.method)) if args.method else None
    ensemble = experiment.EnsembleConfig(
        size=args.size, seeds=tuple(range(args.seeds)), sizes=sizes, methods=methods
    )
    return _run(dataclasses.replace(config, ensemble=ensemble), args)


def cmd_summarize(args) -> int:
    summary = experiment.summarize(_records(args.results), _csv_list(args.group_by), ddof=args.ddof)
    _write_frame(summary, args.output)
    return 0


def cmd_analyze_transfer(args) -> int:
    scores = analysis.template_scores(_records(args.results), by=_csv_list(args.by))
    matrix = analysis.transfer_matrix(scores, measure=args.measure, k=args.k)
    _write_frame(matrix, args.output, index=True)
    return 0


def cmd_analyze_components(args) -> int:
    grammar = _grammar(args.grammar)
    scores = analysis.template_scores(_records(args.results), by=_csv_list(args.by))
    frames = []
    for key, setting_scores in scores.items():
        frame = analysis.component_frame(setting_scores, grammar, ddof=args.ddof)
        frame.insert(0, "setting", analysis.transfer.setting_label(key))
        frames.append(frame)
    _write_frame(pd.concat(frames, ignore_index=True), args.output)
    return 0


def cmd_rank_curve(args) -> int:
    scores = analysis.template_scores(_records(args.results), by=_csv_list(args.by))
    _write_frame(analysis.rank_curve_frame(scores), args.output)
    return 0


def cmd_wins(args) -> int:
    report = analysis.wins_report(_records(args.zero_shot), _records(args.few_shot), min_wins=args.min_wins)
    _write_frame(report.frame, args.output)
    verdict = "admitted" if report.admitted else "not admitted"
    log.info(f"{report.wins}/{report.total} wins (need {args.min_wins}): {verdict}.")
    return 0


def cmd_export(args) -> int:
    _write_frame(experiment.records_frame(_records(args.results)), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="templatepy",
        description="Evaluate how in-context learning classification depends on the prompt template.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("templates", help="Enumerate or sample the templates of a grammar.")
    p.add_argument("--grammar", required=True, help="Grammar JSON file or preset name (sst2, dbpedia, agnews, trec).")
    p.add_argument("--sample", type=int, default=None, help="Draw this many templates instead of listing all.")
    p.add_argument("--seed", type=int, default=0, help="Seed of the template draw.")
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_templates)

    p = commands.add_parser("render", help="Show the exact prefix and continuation a template produces.")
    p.add_argument("--grammar", required=True, help="Grammar JSON file or preset name.")
    p.add_argument("--template", type=int, required=True, help="Template id.")
    p.add_argument("--mode", choices=MODES, default="direct")
    p.add_argument("--text", default="", help="Test input.")
    p.add_argument("--class-index", type=int, default=0, help="Class whose prompt to render.")
    p.add_argument("--demos", default=None, help="Demonstration file (JSON lines of text and label).")
    p.add_argument("--cf-token", default="N/A", help="Content-free input for --mode content_free.")
    p.set_defaults(func=cmd_render)

    for name, func, description in (
            ("run", cmd_run, "Run an evaluation config."),
            ("ensemble", cmd_ensemble, "Run an evaluation config with Template Ensembles."),
    ):
        p = commands.add_parser(name, help=description)
        p.add_argument("--config", required=True, help="Run config JSON file.")
        p.add_argument("--output", required=True, help="Results file (JSON lines); resumed if it exists.")
        p.add_argument("--workers", type=int, default=1, help="Cells evaluated concurrently.")
        p.add_argument("--endpoint", default=None, help="Override the remote backend's endpoint URL.")
        p.add_argument("--no-resume", action="store_true", help="Overwrite the results file instead of resuming.")
        p.add_argument("--no-progress", action="store_true", help="Hide the progress bar.")
        p.add_argument("--csv", default=None, help="Also export the records to this CSV file.")
        if name == "ensemble":
            p.add_argument("--size", type=int, default=5, help="Ensemble size N.")
            p.add_argument("--seeds", type=int, default=5, help="Number of ensemble seeds.")
            p.add_argument("--sizes", default=None, help="Extra comma-separated sizes for an ensemble-size curve.")
            p.add_argument("--method", default=None, help="Comma-separated base methods (default: the config's).")
        p.set_defaults(func=func)

    p = commands.add_parser("summarize", help="Mean and standard deviation of accuracy per group.")
    p.add_argument("results", nargs="+", help="Results files.")
    p.add_argument("--group-by", default="method", help="Comma-separated grouping columns.")
    p.add_argument("--ddof", type=int, default=1, help="Delta degrees of freedom of the standard deviation.")
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_summarize)

    setting_help = "Comma-separated record fields identifying a setting."
    p = commands.add_parser("analyze-transfer", help="Top-k IoU or Spearman correlation between settings.")
    p.add_argument("results", nargs="+", help="Results files.")
    p.add_argument("--measure", choices=analysis.transfer.MEASURES, default="iou")
    p.add_argument("--k", type=int, default=10, help="Top-set size for IoU.")
    p.add_argument("--by", default=",".join(analysis.transfer.SETTING_FIELDS), help=setting_help)
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_analyze_transfer)

    p = commands.add_parser("analyze-components", help="Accuracy grouped by template component variant.")
    p.add_argument("results", nargs="+", help="Results files.")
    p.add_argument("--grammar", required=True, help="Grammar the templates come from.")
    p.add_argument("--by", default=",".join(analysis.transfer.SETTING_FIELDS), help=setting_help)
    p.add_argument("--ddof", type=int, default=1, help="Delta degrees of freedom of the standard deviation.")
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_analyze_components)

    p = commands.add_parser("rank-curve", help="Template accuracy relative to the best template, by rank.")
    p.add_argument("results", nargs="+", help="Results files.")
    p.add_argument("--by", default=",".join(analysis.transfer.SETTING_FIELDS), help=setting_help)
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_rank_curve)

    p = commands.add_parser("wins", help="Count settings where few-shot beats zero-shot accuracy.")
    p.add_argument("--zero-shot", nargs="+", required=True, help="Zero-shot results files.")
    p.add_argument("--few-shot", nargs="+", required=True, help="Few-shot results files.")
    p.add_argument("--min-wins", type=int, default=8, help="Wins needed to admit the model.")
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_wins)

    p = commands.add_parser("export", help="Convert results files to CSV, one probability column per class.")
    p.add_argument("results", nargs="+", help="Results files.")
    p.add_argument("--output", default=None, help="CSV destination (default: stdout).")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

    try:
        return args.func(args)
    except TemplatepyError as e:
        log.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
