#!/usr/bin/env python3
"""
pagrad CLI

Command-line interface for pixel-array graph and radiomics classification of 3D ROI patches.
"""

import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from pydantic import ValidationError as PydanticValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config import get_settings, load_run_config, parse_key_values
from .exceptions import ConfigurationError, PagradError
from .logging_config import StructuredLogger, setup_logging
from .models.features import FeatureTable
from .models.volume import PhantomConfig
from .services import PipelineService, generate_phantom, write_phantom
from .services.evaluation_service import feature_distributions, permutation_importance
from .services.learner_service import load_model
from .services.report_service import load_report, summary_rows, write_csv
from .utils import (
    format_json,
    format_metrics_summary,
    format_table,
    format_value,
    validate_dims,
    validate_existing_file,
    validate_repeats,
)

# Initialize logging
setup_logging()
logger = StructuredLogger("main")

console = Console()


def _fail(command: str, error: Exception) -> None:
    """Print, log and exit with the error's exit code."""
    if isinstance(error, PagradError):
        label = type(error).__name__.replace("Error", " Error")
        console.print(f"[red]{label}: {error.message}[/red]")
        logger.error(f"Error in {command}", code=error.code, error=error.message)
        sys.exit(error.exit_code)
    console.print(f"[red]Unexpected error: {error}[/red]")
    logger.error(f"Unexpected error in {command}", exc_info=True, error=str(error))
    sys.exit(1)


def _summary_table(title: str, rows: List[Dict[str, Any]]) -> Table:
    table = Table(title=title)
    table.add_column("Region", style="cyan")
    table.add_column("Model", style="green")
    table.add_column("Features", justify="right")
    table.add_column("Accuracy", justify="right")
    table.add_column("F1", justify="right")
    table.add_column("AUROC", justify="right")
    table.add_column("Holdout F1", justify="right")
    for row in rows:
        table.add_row(
            row["region"],
            row["model"],
            format_value(row["features"]),
            format_value(row["accuracy"]),
            format_value(row["f1"]),
            format_value(row["auroc"]),
            format_value(row["holdout_f1"]),
        )
    return table


@click.group()
@click.version_option(version=__version__)
def cli():
    """pagrad CLI

    Classify labeled 3D ROI patches with pixel-array graph spectral features or radiomics features.
    """


@cli.command('phantom')
@click.option('--n-per-group', type=int, help='Subjects per class (default 20)')
@click.option('--dims', help='ROI dims as dx,dy,dz (default 8,8,16)')
@click.option('--snr', type=float, help='Signal-to-noise ratio; 0 gives a null cohort (default 4)')
@click.option('--seed', type=int, help='Random seed (default 7)')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), required=True, help='Output directory')
@click.option('--config', 'config_path', type=click.Path(), help='key=value file with the same keys')
def phantom(n_per_group: Optional[int], dims: Optional[str], snr: Optional[float], seed: Optional[int],
            out_dir: str, config_path: Optional[str]):
    """Generate a seeded synthetic cohort with a manifest."""
    try:
        values: Dict[str, Any] = {}
        if config_path:
            path = Path(config_path)
            if not path.exists():
                raise ConfigurationError(f"Config file not found: {path}", code="FILE_NOT_FOUND")
            values = parse_key_values(path.read_text(encoding="utf-8"), source=str(path))
        overrides = {"n_per_group": n_per_group, "snr": snr, "seed": seed,
                     "roi_dims": validate_dims(dims) if dims else None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            cfg = PhantomConfig(**values)
        except PydanticValidationError as e:
            raise ConfigurationError(f"Invalid phantom configuration: {e}", code="INVALID_CONFIG") from e

        with console.status("[bold green]Generating phantom cohort..."):
            manifest_path = write_phantom(generate_phantom(cfg), Path(out_dir))

        console.print(f"[green]✓[/green] Phantom cohort written to {out_dir}")
        console.print(f"  Subjects: {2 * cfg.n_per_group}")
        console.print(f"  ROI dims: {','.join(str(d) for d in cfg.roi_dims)}")
        console.print(f"  Manifest: {manifest_path}")

    except Exception as e:
        _fail("phantom", e)


def _run_pipeline(pipeline: str, manifest: str, config_path: Optional[str], out_dir: Optional[str],
                  seed: Optional[int], workers: Optional[int], no_timestamp: bool) -> None:
    try:
        manifest_path = validate_existing_file(manifest, "Manifest")
        overrides = {
            "pipeline": pipeline,
            "seed": seed,
            "out_dir": out_dir,
            "workers": workers,
            "timestamp": False if no_timestamp else None,
        }
        config = load_run_config(Path(config_path) if config_path else None, overrides)
        n_workers = config.workers or get_settings().workers
        logger.info("Starting pipeline", pipeline=pipeline, manifest=str(manifest_path), seed=config.seed,
                    workers=n_workers, model=config.kind)

        with console.status(f"[bold green]Running {pipeline} pipeline..."):
            report = PipelineService(config, workers=n_workers).run(manifest_path)

        console.print(_summary_table(f"{pipeline} results", summary_rows(report)))
        for region, entry in report["regions"].items():
            logger.info("Region summary", region=region, summary=format_metrics_summary(entry))
        if "fusion" in report:
            fp = report["fusion"]["false_positives"]
            console.print(Panel(
                "  ".join(f"{name}: {count}" for name, count in fp.items()),
                title="CV false positives",
            ))
        console.print(f"[green]✓[/green] Report written to {Path(config.out_dir) / 'report.json'}")

    except Exception as e:
        _fail(pipeline, e)


@cli.command('pag')
@click.option('--manifest', required=True, help='Cohort manifest CSV')
@click.option('--config', 'config_path', help='key=value run configuration file')
@click.option('--out', 'out_dir', help='Output directory (default results)')
@click.option('--seed', type=int, help='Random seed')
@click.option('--workers', type=int, help='Worker threads')
@click.option('--no-timestamp', is_flag=True, help='Omit created_at from the report')
def pag(manifest: str, config_path: Optional[str], out_dir: Optional[str], seed: Optional[int],
        workers: Optional[int], no_timestamp: bool):
    """Pixel-array graph spectral classification per region with cistern fusion."""
    _run_pipeline("pag", manifest, config_path, out_dir, seed, workers, no_timestamp)


@cli.command('radiomics')
@click.option('--manifest', required=True, help='Cohort manifest CSV')
@click.option('--config', 'config_path', help='key=value run configuration file')
@click.option('--out', 'out_dir', help='Output directory (default results)')
@click.option('--seed', type=int, help='Random seed')
@click.option('--workers', type=int, help='Worker threads')
@click.option('--no-timestamp', is_flag=True, help='Omit created_at from the report')
def radiomics(manifest: str, config_path: Optional[str], out_dir: Optional[str], seed: Optional[int],
              workers: Optional[int], no_timestamp: bool):
    """Radiomics feature classification per region with holdout evaluation."""
    _run_pipeline("radiomics", manifest, config_path, out_dir, seed, workers, no_timestamp)


@cli.command('explain')
@click.option('--model', 'model_path', required=True, help='Saved model JSON')
@click.option('--table', 'table_path', required=True, help='Feature table CSV')
@click.option('--out', 'out_dir', required=True, help='Output directory')
@click.option('--seed', type=int, default=0, help='Random seed')
@click.option('--repeats', type=int, default=20, help='Permutations per feature')
@click.option('--top', type=int, default=10, help='Features in the distribution report')
@click.option('--workers', type=int, help='Worker threads')
def explain(model_path: str, table_path: str, out_dir: str, seed: int, repeats: int, top: int,
            workers: Optional[int]):
    """Permutation importance of a saved model's features."""
    try:
        validate_repeats(repeats)
        model = load_model(Path(model_path))
        table = FeatureTable.from_csv(Path(table_path))
        missing = [name for name in model.feature_names if name not in table.feature_names]
        if not missing:
            table = table.select_columns(model.feature_names)
        out = Path(out_dir)

        with console.status("[bold green]Permuting features..."):
            importance = permutation_importance(model, table, n_repeats=repeats, seed=seed,
                                                workers=workers or get_settings().workers)
            top_features = importance["feature"].head(max(0, top)).tolist()
            distributions = feature_distributions(table, top_features)
            write_csv(importance, out / "importance.csv")
            write_csv(distributions, out / "feature_distributions.csv")

        console.print(format_table(importance.head(max(0, top)).to_dict(orient="records"),
                                   headers=["rank", "feature", "mean_drop", "std_drop"]))
        console.print(f"[green]✓[/green] Importance written to {out / 'importance.csv'}")

    except Exception as e:
        _fail("explain", e)


@cli.command('report')
@click.option('--report', 'report_path', required=True, help='Saved report.json')
@click.option('--format', 'output_format', type=click.Choice(['table', 'json']), default='table',
              help='Output format')
def report(report_path: str, output_format: str):
    """Render a saved run report."""
    try:
        data = load_report(Path(report_path))
        rows = summary_rows(data)

        if output_format == 'json':
            click.echo(format_json(rows))
            return

        console.print(_summary_table(f"{data['pipeline']} report (schema {data['schema_version']})", rows))
        if "created_at" in data:
            console.print(f"Created: {data['created_at']}")
        console.print(f"Version: {data['version']}  Reduction: {data['reduction_scope']}")

    except Exception as e:
        _fail("report", e)


if __name__ == '__main__':
    cli()
