"""Command-line interface.

Subcommands: ``run`` (score an experiment grid), ``report`` (re-aggregate an
existing records file), ``export-violin``, and ``confusion``. A structured
config file (TOML or JSON) can be passed to ``run``; its values override the
flags. The remote backend reads its bearer token from ``RAGCAL_API_TOKEN``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import SyntheticConfig
from .contextgen import INSERTION_POSITIONS, Mixture, Position
from .dataset import DATASET_FORMATS
from .metrics import MetricConfig
from .prompt import PromptTemplate
from .runner import RunConfig, export_outputs, load_records, run_grid
from .report import confusion_by_group, export_violin, write_confusion_csv

EXIT_PARTIAL = 3  # some grid cells failed; rerun with --resume to finish

MIXTURE_VALUES = [m.value for m in Mixture]
POSITION_VALUES = [p.value for p in INSERTION_POSITIONS]


def _parse_listflag(raw: str, enum_cls, allowed: list[str], what: str):
    values = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        if token not in allowed:
            raise click.BadParameter(f"unknown {what} {token!r}; choose from {allowed}")
        values.append(enum_cls(token))
    if not values:
        raise click.BadParameter(f"need at least one {what}")
    return tuple(values)


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


@click.group()
def main() -> None:
    """Confidence-calibration harness for pseudo-RAG multiple-choice QA."""


@main.command()
@click.option("--dataset", type=click.Path(), required=True, help="Line-delimited JSON dataset.")
@click.option("--format", "dataset_format", type=click.Choice(DATASET_FORMATS), default="generic", show_default=True)
@click.option("--backend", type=click.Choice(["synthetic", "remote"]), default="synthetic", show_default=True)
@click.option("--endpoint", default=None, help="Base URL of a label-logprob adapter (remote backend).")
@click.option("--model", default=None, help="Model name used for cache keying and reports (remote).")
@click.option("--mixtures", default=",".join(MIXTURE_VALUES), show_default=True, help="Comma-separated document mixtures.")
@click.option("--positions", default=",".join(POSITION_VALUES), show_default=True, help="Comma-separated insertion positions.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ece-bins", type=int, default=10, show_default=True)
@click.option("--ace-bins", type=int, default=10, show_default=True)
@click.option("--cache-dir", type=click.Path(), default=".ragcal-cache", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="ragcal-run", show_default=True)
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.option("--resume", is_flag=True, help="Reuse records already present in the output directory.")
@click.option("--limit", type=int, default=None, help="Score only the first N items.")
@click.option("--synth-base", type=float, default=0.0, show_default=True, help="Synthetic: gold-label logit boost without documents.")
@click.option("--synth-relevance", type=float, default=0.0, show_default=True, help="Synthetic: extra gold boost when an answer doc is present.")
@click.option("--synth-noise", type=float, default=0.0, show_default=True, help="Synthetic: Gaussian logit noise stddev.")
@click.option("--system-prompt", default=None, help="Override the default system prompt text.")
@click.option("--template", "template_path", type=click.Path(exists=True), default=None, help="Prompt template override file (TOML/JSON).")
@click.option("--figures/--no-figures", default=True, show_default=True, help="Render matplotlib figures next to the CSV exports.")
@click.option("--all-items/--rationale-only", "all_items", default=False, show_default=True, help="Also score items without a rationale passage.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="Structured config file; overrides flags.")
def run(**kwargs) -> None:
    """Score the experiment grid and write records, reports, and exports.

    Exits 0 when every cell completed, 3 when some cells failed (the manifest
    lists them; rerun with --resume to finish).
    """
    config_path = kwargs.pop("config_path")
    overrides = _load_config_file(config_path) if config_path else {}

    def pick(flag_key: str, file_key: str, default=None):
        return overrides.get(file_key, kwargs.get(flag_key, default))

    mixtures = pick("mixtures", "mixtures")
    if not isinstance(mixtures, str):
        mixtures = ",".join(mixtures)
    mixtures = _parse_listflag(mixtures, Mixture, MIXTURE_VALUES, "mixture")
    positions = pick("positions", "positions")
    if not isinstance(positions, str):
        positions = ",".join(positions)
    positions = _parse_listflag(positions, Position, POSITION_VALUES, "position")

    seed = int(pick("seed", "seed"))
    synth = overrides.get("synthetic", {})
    synthetic = SyntheticConfig(
        base_knowledge=float(synth.get("base_knowledge", kwargs["synth_base"])),
        relevance_sensitivity=float(synth.get("relevance_sensitivity", kwargs["synth_relevance"])),
        distractor_noise=float(synth.get("distractor_noise", kwargs["synth_noise"])),
        seed=int(synth.get("seed", seed)),
    )
    template = PromptTemplate()
    template_path = pick("template_path", "template")
    if template_path:
        template = PromptTemplate.from_file(template_path)

    try:
        config = RunConfig(
            dataset=str(pick("dataset", "dataset")),
            dataset_format=str(pick("dataset_format", "format")),
            backend=str(pick("backend", "backend")),
            endpoint=pick("endpoint", "endpoint"),
            model=pick("model", "model"),
            synthetic=synthetic,
            mixtures=mixtures,
            positions=positions,
            seed=seed,
            metrics=MetricConfig(
                ece_bins=int(pick("ece_bins", "ece_bins")),
                ace_bins=int(pick("ace_bins", "ace_bins")),
            ),
            cache_dir=str(pick("cache_dir", "cache_dir")),
            out_dir=str(pick("out_dir", "out")),
            concurrency=int(pick("concurrency", "concurrency")),
            resume=bool(pick("resume", "resume")),
            rationale_only=not bool(pick("all_items", "all_items", False)),
            system_prompt=pick("system_prompt", "system_prompt"),
            template=template,
            figures=bool(pick("figures", "figures")),
            limit=pick("limit", "limit"),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))

    result = run_grid(config)
    click.echo(
        f"scored {len(result.records)}/{result.expected} grid cells "
        f"-> {result.out_dir}"
    )
    if result.failures:
        click.echo(f"{len(result.failures)} cells failed; see {result.out_dir}/manifest.json")
        click.echo("rerun with --resume to score only the missing cells")
        sys.exit(EXIT_PARTIAL)


@main.command()
@click.option("--records", "records_path", type=click.Path(exists=True), required=True, help="records.jsonl from a previous run.")
@click.option("--out", "out_dir", type=click.Path(), default="ragcal-report", show_default=True)
@click.option("--ece-bins", type=int, default=10, show_default=True)
@click.option("--ace-bins", type=int, default=10, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def report(records_path: str, out_dir: str, ece_bins: int, ace_bins: int, figures: bool) -> None:
    """Re-aggregate an existing records file into tables and figures."""
    records = load_records(records_path)
    written = export_outputs(
        records, out_dir, MetricConfig(ece_bins=ece_bins, ace_bins=ace_bins), figures=figures
    )
    for path in written:
        click.echo(str(path))


@main.command("export-violin")
@click.option("--records", "records_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default="violin.csv", show_default=True)
@click.option("--figure", "figure_path", type=click.Path(), default=None, help="Also render a violin figure to this file.")
def export_violin_cmd(records_path: str, out_path: str, figure_path: str | None) -> None:
    """Write the long-format per-record CSV used for violin plots."""
    records = load_records(records_path)
    export_violin(records, out_path)
    click.echo(out_path)
    if figure_path:
        from .figures import render_violin_figure

        render_violin_figure(records, figure_path)
        click.echo(figure_path)


@main.command()
@click.option("--records", "records_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default="confusion.csv", show_default=True)
@click.option("--figure", "figure_path", type=click.Path(), default=None, help="Also render stacked error bars to this file.")
def confusion(records_path: str, out_path: str, figure_path: str | None) -> None:
    """Tabulate how incorrect predictions distribute over predicted classes."""
    records = load_records(records_path)
    tables = confusion_by_group(records)
    write_confusion_csv(tables, out_path)
    click.echo(out_path)
    if figure_path:
        from .figures import render_confusion_figure

        render_confusion_figure(tables, figure_path)
        click.echo(figure_path)


if __name__ == "__main__":
    main()
