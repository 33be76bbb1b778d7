"""blendkg command line: detect, visual, run, eval, validate, report, cache.

Exit codes: 0 success (including a completed literal verdict), 1 usage
error, 2 operational failure (pipeline error record, failed validation,
missing inputs at runtime). Machine-readable output goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import csv
import dataclasses
import sys
from pathlib import Path
from typing import Optional

import click

from . import ontology
from .config import AppConfig, load_config
from .evaluation import (
    DistributionBlock,
    MethodRow,
    MethodTable,
    AnnotationMatrix,
    balanced_sample,
    exact_match_scorer,
    HttpScorer,
    load_dataset,
    majority_vote,
    render_report,
    render_report_csv,
    score_detection,
    score_understanding,
    tally_errors,
)
from .evaluation.datasets import DATASET_FORMATS, DatasetInstance, Modality
from .llm import GatewayMode, LlmGateway, ResponseStore
from .pipeline import Services, load_records, run_dataset, run_instance
from .prompts import PromptEngine, TaskKind, preset as load_preset
from .rdf import parse_turtle, serialize_turtle
from .skg import CachePolicy, SkgClient, TurtleCache


class OperationalError(click.ClickException):
    exit_code = 2


_MODES = {
    "live": (GatewayMode.LIVE, CachePolicy.LIVE),
    "record": (GatewayMode.RECORD, CachePolicy.CACHE_FIRST),
    "replay": (GatewayMode.REPLAY, CachePolicy.REPLAY_ONLY),
}

_TASKS = {
    "detection": TaskKind.DETECTION,
    "understanding": TaskKind.CONCEPTUAL_UNDERSTANDING,
    "visual": TaskKind.VISUAL_UNDERSTANDING,
}


def _build_services(cfg: AppConfig) -> tuple[Services, PromptEngine]:
    llm_mode, cache_policy = _MODES[cfg.mode]
    store = ResponseStore(cfg.recordings_path) if cfg.mode in ("record", "replay") else None
    gateway = LlmGateway(
        base_url=cfg.llm_base_url,
        provider=cfg.provider,
        store=store,
        requests_per_minute=cfg.requests_per_minute,
    )
    client = SkgClient(cache=TurtleCache(cfg.cache_dir))
    engine = PromptEngine(
        model_id=cfg.model_id, templates_dir=cfg.templates_dir, version=cfg.template_version
    )
    services = Services(
        skg=client,
        llm=gateway,
        skg_url=cfg.skg_url,
        model_id=cfg.model_id,
        llm_mode=llm_mode,
        cache_policy=cache_policy,
    )
    return services, engine


def _resolve_config(config_path: Optional[str], **overrides) -> AppConfig:
    try:
        return load_config(config_path, overrides)
    except (ValueError, FileNotFoundError) as exc:
        raise click.UsageError(str(exc)) from exc


_common_options = [
    click.option("--config", "config_path", type=str, default=None, help="JSON config file."),
    click.option("--skg-url", default=None, help="Text-to-KG service endpoint."),
    click.option("--llm-base-url", default=None, help="LLM endpoint base URL."),
    click.option("--model", "model_id", default=None, help="Model identifier."),
    click.option("--provider", default=None, type=click.Choice(["openai", "anthropic"])),
    click.option("--cache-dir", default=None, help="SKG cache directory."),
    click.option("--recordings", "recordings_path", default=None, help="LLM recordings file."),
    click.option("--templates-dir", default=None, help="Template root override."),
    click.option("--template-version", default=None, help="Template version (default v1)."),
    click.option(
        "--mode", default=None, type=click.Choice(sorted(_MODES)), help="live, record, or replay."
    ),
]


def common_options(fn):
    for option in reversed(_common_options):
        fn = option(fn)
    return fn


@click.group()
def cli() -> None:
    """Metaphor detection and understanding over extended knowledge graphs."""


@cli.command()
@click.argument("sentence")
@click.option("--preset", default="lag", help="Prompt preset (lag, no-blending, no-graph).")
@click.option("--target-word", default=None, help="Word to focus the judgment on.")
@click.option("--xkg-out", default=None, help="Where to write the extended graph Turtle.")
@common_options
def detect(sentence, preset, target_word, xkg_out, config_path, **overrides) -> None:
    """Classify one sentence and print its verdict."""
    cfg = _resolve_config(config_path, **overrides)
    if cfg.mode == "live" and not cfg.skg_url:
        raise click.UsageError("--skg-url (or config skg_url) is required in live mode")
    services, engine = _build_services(cfg)
    prompt_cfg = load_preset(preset)
    if target_word:
        prompt_cfg = dataclasses.replace(prompt_cfg, target_word=target_word)
    instance = DatasetInstance(id="cli-0", modality=Modality.TEXT, text=sentence)
    record = run_instance(
        instance, TaskKind.DETECTION, prompt_cfg, services, engine, preset_name=preset
    )
    if record.error is not None:
        click.echo(
            f"error at stage {record.error.stage}: {record.error.code} {record.error.message}",
            err=True,
        )
        raise OperationalError(f"pipeline failed at stage {record.error.stage}")
    click.echo(f"metaphorical: {str(record.verdict.metaphorical).lower()}")
    if record.verdict.metaphorical:
        if record.verdict.source_label:
            click.echo(f"source: {record.verdict.source_label}")
        if record.verdict.target_label:
            click.echo(f"target: {record.verdict.target_label}")
        if record.verdict.property_label:
            click.echo(f"property: {record.verdict.property_label}")
    if record.xkg is not None:
        out_path = Path(xkg_out) if xkg_out else Path(f"xkg-{record.prompt_hash[:12]}.ttl")
        out_path.write_text(serialize_turtle(record.xkg), encoding="utf-8")
        click.echo(f"xkg: {out_path}")


@cli.command()
@click.argument("image_path", type=click.Path(exists=True))
@click.option("--preset", default="sent-img", help="Visual preset (sent-img, no-sent, no-img).")
@common_options
def visual(image_path, preset, config_path, **overrides) -> None:
    """Analyze one image for a visual metaphor."""
    cfg = _resolve_config(config_path, **overrides)
    services, engine = _build_services(cfg)
    prompt_cfg = engine.visual_config(load_preset(preset))
    instance = DatasetInstance(id="cli-0", modality=Modality.IMAGE, image_ref=image_path)
    record = run_instance(
        instance, TaskKind.VISUAL_UNDERSTANDING, prompt_cfg, services, engine, preset_name=preset
    )
    if record.error is not None:
        click.echo(
            f"error at stage {record.error.stage}: {record.error.code} {record.error.message}",
            err=True,
        )
        raise OperationalError(f"pipeline failed at stage {record.error.stage}")
    click.echo(f"caption: {record.caption}")
    click.echo(f"metaphorical: {str(record.verdict.metaphorical).lower()}")
    if record.verdict.source_label:
        click.echo(f"source: {record.verdict.source_label}")
    if record.verdict.target_label:
        click.echo(f"target: {record.verdict.target_label}")
    if record.verdict.property_label:
        click.echo(f"property: {record.verdict.property_label}")


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "dataset_format", required=True, type=click.Choice(DATASET_FORMATS))
@click.option("--task", default="detection", type=click.Choice(sorted(_TASKS)))
@click.option("--preset", default="lag")
@click.option("--run-dir", required=True, type=click.Path())
@click.option("--parallelism", default=1, type=click.IntRange(min=1))
@click.option("--sample", default=None, type=int, help="Balanced sample size (even).")
@click.option("--seed", default=0, type=int)
@common_options
def run(
    dataset_path,
    dataset_format,
    task,
    preset,
    run_dir,
    parallelism,
    sample,
    seed,
    config_path,
    **overrides,
) -> None:
    """Process a dataset into a run directory of records."""
    cfg = _resolve_config(config_path, **overrides)
    services, engine = _build_services(cfg)
    task_kind = _TASKS[task]
    prompt_cfg = load_preset(preset)
    if task_kind is TaskKind.VISUAL_UNDERSTANDING:
        prompt_cfg = engine.visual_config(prompt_cfg)
    try:
        instances = load_dataset(dataset_path, dataset_format)
        if sample is not None:
            instances = balanced_sample(instances, sample, seed)
        manifest = run_dataset(
            instances,
            task_kind,
            prompt_cfg,
            services,
            engine,
            run_dir,
            preset_name=preset,
            parallelism=parallelism,
            dataset_id=f"{dataset_format}:{Path(dataset_path).name}",
            seed=seed,
            config_echo=cfg.echo(),
        )
    except Exception as exc:
        raise OperationalError(str(exc)) from exc
    click.echo(f"run complete: {manifest.record_count} records in {run_dir}")


@cli.command("eval")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--format", "dataset_format", required=True, type=click.Choice(DATASET_FORMATS))
@click.option("--task", default="detection", type=click.Choice(["detection", "understanding"]))
@click.option("--scorer", "scorer_spec", default="exact", help="exact or http:<url>.")
@click.option(
    "--out",
    "out_path",
    default=None,
    help="CSV output path (default: reports/eval-<task>.csv).",
)
def eval_run(run_dir, dataset_path, dataset_format, task, scorer_spec, out_path) -> None:
    """Score a run directory against its gold dataset."""
    try:
        records = load_records(run_dir)
        gold = load_dataset(dataset_path, dataset_format)
        if task == "detection":
            score = score_detection(records, gold)
            block = MethodTable(
                title=f"Detection on {Path(dataset_path).name}",
                columns=("F1 (%)", "Acc. (%)"),
                rows=(MethodRow(name="run", values=(score.f1 * 100, score.accuracy * 100)),),
            )
            click.echo(render_report(block), nl=False)
            c = score.confusion
            click.echo(
                f"confusion: tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn} "
                f"(error records: {score.error_records})",
                err=True,
            )
        else:
            result = score_understanding(records, gold, _resolve_scorer(scorer_spec))
            block = MethodTable(
                title=f"Understanding on {Path(dataset_path).name}",
                columns=("Both correct (%)",),
                rows=(MethodRow(name="run", values=(result.success_rate * 100,)),),
            )
            click.echo(render_report(block), nl=False)
        _write_csv_report(out_path, f"eval-{task}", block)
    except OperationalError:
        raise
    except Exception as exc:
        raise OperationalError(str(exc)) from exc


@cli.command()
@click.argument("turtle_file", type=click.Path(exists=True))
@click.option("--strict/--lenient", default=True, help="Validation level (default strict).")
@click.option("--ontology", "ontology_path", default=None, type=click.Path(exists=True))
def validate(turtle_file, strict, ontology_path) -> None:
    """Validate an XKG Turtle file; nonzero exit iff validation fails."""
    try:
        graph = parse_turtle(Path(turtle_file).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise OperationalError(f"parse failed: {exc}") from exc
    if ontology_path:
        vocabulary_graph = parse_turtle(Path(ontology_path).read_text(encoding="utf-8"))
        missing = ontology.cross_check_vocabulary(vocabulary_graph)
        if missing:
            click.echo("ontology file is missing terms: " + ", ".join(missing), err=True)
    level = ontology.ValidationLevel.STRICT if strict else ontology.ValidationLevel.LENIENT
    report = ontology.validate_xkg(graph, level)
    for finding in report.findings:
        click.echo(f"{finding.severity.value.upper()} {finding.code}: {finding.message}")
    click.echo(f"passed: {str(report.passed).lower()}")
    if not report.passed:
        raise OperationalError("validation failed")


@cli.command()
@click.option("--table", "table_number", required=True, type=click.Choice(["2", "3", "4", "7"]))
@click.option(
    "--run",
    "run_specs",
    multiple=True,
    help="label=<run_dir>:<gold_path>:<format> (tables 2 and 3).",
)
@click.option(
    "--annotations",
    "annotation_specs",
    multiple=True,
    help="label=<csv path> of item_id,annotator_id,label rows (tables 4 and 7).",
)
@click.option("--tags", "tags_path", default=None, help="CSV of instance_id,category rows.")
@click.option(
    "--out",
    "out_path",
    default=None,
    help="CSV output path (default: reports/table<N>.csv).",
)
def report(table_number, run_specs, annotation_specs, tags_path, out_path) -> None:
    """Render a comparison table from runs, annotation files, or error tags."""
    try:
        if table_number in ("2", "3"):
            if not run_specs:
                raise click.UsageError("tables 2 and 3 need at least one --run label=dir:gold:format")
            rows = []
            datasets: list[str] = []
            for spec in run_specs:
                label, _, rest = spec.partition("=")
                parts = rest.rsplit(":", 2)
                if len(parts) != 3:
                    raise click.UsageError(f"malformed --run spec: {spec!r}")
                run_dir, gold_path, dataset_format = parts
                score = score_detection(
                    load_records(run_dir), load_dataset(gold_path, dataset_format)
                )
                datasets.append(label)
                rows.append((score.f1 * 100, score.accuracy * 100))
            if table_number == "2":
                columns = tuple(f"{d} {m}" for d in datasets for m in ("F1 (%)", "Acc. (%)"))
                values = tuple(v for pair in rows for v in pair)
                block = MethodTable(
                    title="Detection comparison",
                    columns=columns,
                    rows=(MethodRow(name="LAG", values=values),),
                )
            else:
                f1, acc = rows[0]
                block = MethodTable(
                    title=f"Detection on {datasets[0]}",
                    columns=("Acc. (%)", "F1 (%)"),
                    rows=(MethodRow(name="LAG", values=(acc, f1)),),
                )
        elif table_number in ("4", "7"):
            if not annotation_specs:
                raise click.UsageError("tables 4 and 7 need --annotations label=path entries")
            rows = []
            for spec in annotation_specs:
                label, _, csv_path = spec.partition("=")
                matrix = _read_annotation_csv(csv_path)
                votes = majority_vote(matrix)
                accuracy = sum(1 for v in votes if v == "correct") / len(votes) * 100
                rows.append(MethodRow(name=label, values=(accuracy,)))
            block = MethodTable(
                title="Visual metaphor understanding", columns=("Acc. (%)",), rows=tuple(rows)
            )
        if tags_path:
            tags = _read_tags_csv(tags_path)
            block = DistributionBlock(title="Error distribution", distribution=tally_errors(tags))
        click.echo(render_report(block), nl=False)
        _write_csv_report(out_path, f"table{table_number}", block)
    except (OperationalError, click.UsageError):
        raise
    except Exception as exc:
        raise OperationalError(str(exc)) from exc


@cli.group()
def cache() -> None:
    """Inspect or prune the SKG cache."""


@cache.command("list")
@click.option("--cache-dir", default="skg_cache", type=click.Path())
def cache_list(cache_dir) -> None:
    store = TurtleCache(cache_dir)
    for entry in store.entries():
        text = entry.get("text", "")
        shown = text if len(text) <= 60 else text[:57] + "..."
        click.echo(f"{entry['key'][:16]}  {shown}")
    click.echo(f"{len(store.entries())} entries", err=True)


@cache.command("clear")
@click.option("--cache-dir", default="skg_cache", type=click.Path())
@click.confirmation_option(prompt="Remove every cached graph?")
def cache_clear(cache_dir) -> None:
    removed = TurtleCache(cache_dir).clear()
    click.echo(f"removed {removed} entries")


def _resolve_scorer(spec: str):
    """`exact`, `http:<url>`, or a bare scorer-service URL."""
    if spec == "exact":
        return exact_match_scorer
    url = spec
    if spec.startswith("http:") and not spec.startswith(("http://", "https://")):
        url = spec[len("http:"):]
    return HttpScorer(url)


def _write_csv_report(out_path: Optional[str], default_name: str, block) -> None:
    target = Path(out_path) if out_path else Path("reports") / f"{default_name}.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_report_csv(block), encoding="utf-8")
    click.echo(f"csv written to {target}", err=True)


def _read_annotation_csv(path: str) -> AnnotationMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(r["item_id"], r["annotator_id"], r["label"]) for r in csv.DictReader(fh)]
    return AnnotationMatrix.from_long_rows(rows)


def _read_tags_csv(path: str) -> list[tuple[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(r["instance_id"], r["category"]) for r in csv.DictReader(fh)]


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
