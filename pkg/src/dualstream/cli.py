"""
Command-line interface for DualStream.

This module provides the CLI using Click. Every subcommand loads its
configuration with the following precedence (highest to lowest):
1. ``--set section.key=value`` overrides
2. CLI arguments
3. Config file (``--config`` or $DUALSTREAM_CONFIG)
4. Default values

and records the resolved configuration as resolved_config.json in its output
directory.
"""

import json
import sys
import traceback
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click

from dualstream.core.config import ENV_CACHE_ROOT, ENV_CONFIG_FILE, Config
from dualstream.core.logging import get_logger, setup_logging
from dualstream.core.schema import ConfigError
from dualstream.core.utils import DualStreamError, atomic_write
from dualstream.flow import estimate_flow, extract_flows, write_flow_visualizations
from dualstream.fusion import SUITE_KINDS, ModelKind, run_gradchecks
from dualstream.metrics import (
    emit_suite,
    load_suite_report,
    table_csv,
    write_cross_dataset_table,
)
from dualstream.synthgen import CueMode, generate
from dualstream.train import (
    configure_determinism,
    evaluate_checkpoint,
    load_manifest,
    prepare_data,
    run_experiment,
    run_experiment_suite,
)
from dualstream.videoio import ingest_clip, sample_uniform, to_gray

logger = get_logger()

EXIT_FAILURE = 1
EXIT_CONFIG = 2


@dataclass
class CliState:
    """Options shared by every subcommand."""

    config_file: Path | None = None
    overrides: tuple[str, ...] = ()
    verbose: int = 0
    quiet: bool = False
    deterministic: bool = False
    progress: bool = field(default=True)

    def load_config(self, cli_args: dict[str, Any] | None = None) -> Config:
        args = dict(cli_args or {})
        if self.deterministic:
            args["deterministic"] = True
        return Config.load(self.config_file, args, self.overrides)


@contextmanager
def command_errors(command: str, verbose: int) -> Iterator[None]:
    """Log failures as '<command> failed: <message>' and exit non-zero."""
    try:
        yield
    except ConfigError as e:
        logger.error(f"{command} failed: configuration error: {e}")
        if verbose > 0:
            traceback.print_exc()
        sys.exit(EXIT_CONFIG)
    except (DualStreamError, OSError, ValueError) as e:
        logger.error(f"{command} failed: {e}")
        if verbose > 0:
            traceback.print_exc()
        sys.exit(EXIT_FAILURE)


@click.group()
@click.option(
    "-c", "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    envvar=ENV_CONFIG_FILE,
    default=None,
    help=f"Path to a YAML or JSON configuration file. [env: {ENV_CONFIG_FILE}]",
)
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override a configuration value (repeatable), e.g. --set train.lr=5e-4.",
)
@click.option(
    "--deterministic",
    is_flag=True,
    default=False,
    help="Single-worker loading, deterministic kernels and fixed seeds.",
)
@click.option(
    "-v", "--verbose",
    count=True,
    default=0,
    help="Increase verbosity level (-v for DEBUG, -vv for VERBOSE).",
)
@click.option(
    "-q", "--quiet",
    is_flag=True,
    default=False,
    help="Suppress all output except errors.",
)
@click.version_option(package_name="dualstream-hybrid")
@click.pass_context
def main(
    ctx: click.Context,
    config_file: Path | None,
    overrides: tuple[str, ...],
    deterministic: bool,
    verbose: int,
    quiet: bool,
) -> None:
    """
    DualStream - Two-stream action recognition with Farneback flow, a transformer
    appearance encoder, a convolutional motion encoder and five fusion heads.

    Example usage:

    \b
        # Generate a synthetic desk-scale dataset
        dualstream synth --out data/mixed --cue-mode mixed

        # Pre-extract optical flow
        dualstream -c configs/desk_experiment.yaml extract-flow --workers 4

        # Train and compare all seven configurations
        dualstream -c configs/desk_experiment.yaml --deterministic compare-fusions

        # Verify gradients of every trainable component
        dualstream gradcheck
    """
    setup_logging(verbosity_level=verbose, quiet=quiet)
    ctx.obj = CliState(
        config_file=config_file,
        overrides=tuple(overrides),
        verbose=verbose,
        quiet=quiet,
        deterministic=deterministic,
        progress=not quiet,
    )


PATH = click.Path(path_type=Path)
FILE = click.Path(exists=True, dir_okay=False, path_type=Path)

dataset_root_option = click.option("--dataset-root", type=PATH, default=None, help="Dataset root.")
cache_root_option = click.option(
    "--cache-root",
    type=PATH,
    default=None,
    help=f"Flow cache directory. [env: {ENV_CACHE_ROOT}]",
)


def _strings(cli_args: dict[str, Any]) -> dict[str, Any]:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in cli_args.items()}


@main.command()
@click.option("--out", "dataset_root", type=PATH, default=None, help="Dataset root to write.")
@click.option(
    "--cue-mode",
    type=click.Choice([m.value for m in CueMode]),
    default=None,
    help="Which stream carries the class signal.",
)
@click.option("--num-classes", type=int, default=None, help="Number of classes.")
@click.option("--clips-per-class", type=int, default=None, help="Clips per class.")
@click.option("--frames", "frames_per_clip", type=int, default=None, help="Frames per clip.")
@click.option("--image-size", type=int, default=None, help="Frame side in pixels.")
@click.option(
    "--noise",
    "noise_level",
    type=float,
    default=None,
    help="Per-pixel noise std as a fraction of 255.",
)
@click.option("--seed", "synth_seed", type=int, default=None, help="Generator seed.")
@click.option("--workers", type=int, default=1, show_default=True, help="Worker processes.")
@click.pass_obj
def synth(state: CliState, workers: int, **cli_args: Any) -> None:
    """Generate a deterministic synthetic dataset."""
    with command_errors("synth", state.verbose):
        config = state.load_config(_strings(cli_args))
        root = config.dataset.root
        if not root:
            raise ConfigError("No dataset root given (--out or dataset.root)")
        manifest = generate(config.synth, root, workers=workers, progress=state.progress)
        config.save_resolved(root)
        click.echo(f"Wrote {len(manifest.clips)} clips in {manifest.num_classes} classes to {root}")


def _write_visualizations(config: Config, count: int) -> Path:
    out_dir = Path(config.dataset.cache_root) / "viz"
    root = Path(config.dataset.root)
    manifest = load_manifest(root)
    for record in manifest.clips[:count]:
        clip = ingest_clip(record.frame_dir(root), record.class_index, clip_id=record.id)
        sampled = sample_uniform(clip, config.dataset.num_frames, config.dataset.frame_size)
        first, second = sampled.frames[0], sampled.frames[1]
        flow = estimate_flow(to_gray(first), to_gray(second), config.flow.farneback)
        write_flow_visualizations(flow, first, out_dir, record.id)
    return out_dir


@main.command("extract-flow")
@dataset_root_option
@cache_root_option
@click.option("--workers", type=int, default=None, help="Worker processes.")
@click.option("--keep-going", is_flag=True, default=None, help="Exit 0 even if some clips fail.")
@click.option(
    "--visualize",
    type=int,
    default=0,
    show_default=True,
    help="Write flow images for the first N clips.",
)
@click.pass_obj
def extract_flow(state: CliState, visualize: int, **cli_args: Any) -> None:
    """Pre-extract the optical-flow stack of every clip into the cache."""
    with command_errors("extract-flow", state.verbose):
        config = state.load_config(_strings(cli_args))
        if not config.dataset.root:
            raise ConfigError("No dataset root given (--dataset-root or dataset.root)")
        manifest = load_manifest(config.dataset.root)
        summary = extract_flows(
            manifest,
            config.dataset.root,
            config.dataset.cache_root,
            config.flow.farneback,
            num_frames=config.dataset.num_frames,
            size=config.dataset.frame_size,
            workers=1 if config.train.deterministic else config.flow.workers,
            progress=state.progress,
        )
        config.save_resolved(config.dataset.cache_root)
        if visualize > 0:
            out_dir = _write_visualizations(config, visualize)
            logger.info(f"Flow visualisations written to {out_dir}")
        click.echo(json.dumps(summary.to_dict(), indent=2))
        if not summary.ok and not config.flow.keep_going:
            logger.error(
                f"extract-flow failed: {len(summary.failed)} clip(s) could not be processed"
            )
            sys.exit(EXIT_FAILURE)


@main.command()
@dataset_root_option
@cache_root_option
@click.option(
    "--kind",
    type=click.Choice([k.value for k in ModelKind]),
    default=None,
    help="Configuration to train.",
)
@click.option("--output-dir", type=PATH, default=None, help="Run directory.")
@click.option(
    "--init-checkpoint",
    type=FILE,
    default=None,
    help="Import matching weights (e.g. exported pretrained encoders) before training.",
)
@click.option("--seed", type=int, default=None, help="Training seed.")
@click.pass_obj
def train(state: CliState, **cli_args: Any) -> None:
    """Train one configuration and evaluate it on the test split."""
    with command_errors("train", state.verbose):
        config = state.load_config(_strings(cli_args))
        configure_determinism(config.train.deterministic)
        out = Path(config.output_dir)
        config.save_resolved(out)
        manifest, datasets = prepare_data(config)
        report = run_experiment(
            config, config.model.kind, manifest, datasets, out, progress=state.progress
        )
        click.echo(table_csv([report], config.report.top_k), nl=False)


@main.command("eval")
@click.argument("checkpoint", type=FILE)
@click.option(
    "--split",
    type=click.Choice(["train", "val", "test"]),
    default="test",
    show_default=True,
    help="Split to evaluate.",
)
@dataset_root_option
@cache_root_option
@click.option("--output-dir", type=PATH, default=None, help="Report directory.")
@click.pass_obj
def evaluate(state: CliState, checkpoint: Path, split: str, **cli_args: Any) -> None:
    """Evaluate a saved checkpoint on one split."""
    with command_errors("eval", state.verbose):
        output_dir = cli_args.pop("output_dir") or checkpoint.parent / f"eval_{split}"
        cli_args = _strings(cli_args)
        cli_args["output_dir"] = str(output_dir)
        config = state.load_config(cli_args)
        config.save_resolved(output_dir)
        report = evaluate_checkpoint(config, checkpoint, split, output_dir)
        click.echo(table_csv([report], config.report.top_k), nl=False)


@main.command("compare-fusions")
@dataset_root_option
@cache_root_option
@click.option("--output-dir", type=PATH, default=None, help="Suite directory.")
@click.option(
    "--kind",
    "kinds",
    type=click.Choice([k.value for k in ModelKind]),
    multiple=True,
    help="Restrict the suite to these configurations (repeatable). [default: all seven]",
)
@click.option("--seed", type=int, default=None, help="Training seed shared by every run.")
@click.pass_obj
def compare_fusions(state: CliState, kinds: tuple[str, ...], **cli_args: Any) -> None:
    """Train the single-stream baselines and all fusion heads on one shared split."""
    with command_errors("compare-fusions", state.verbose):
        config = state.load_config(_strings(cli_args))
        out = Path(config.output_dir)
        config.save_resolved(out)
        selected = [ModelKind(k) for k in kinds] if kinds else list(SUITE_KINDS)
        suite = run_experiment_suite(config, selected, out, progress=state.progress)
        click.echo(table_csv(suite.runs, config.report.top_k), nl=False)


@main.command()
@click.option("--tol", type=float, default=1e-4, show_default=True, help="Maximum relative error.")
@click.option(
    "--seed", type=int, default=0, show_default=True, help="Seed for the check instances."
)
@click.option("--output-dir", type=PATH, default=None, help="Write gradcheck.json here.")
@click.pass_obj
def gradcheck(state: CliState, tol: float, seed: int, output_dir: Path | None) -> None:
    """Verify gradients of the fusion heads, projection and encoder blocks."""
    with command_errors("gradcheck", state.verbose):
        reports = run_gradchecks(tol=tol, seed=seed)
        for name, report in reports.items():
            click.echo(f"{name:28s} {report}")
        if output_dir is not None:
            config = state.load_config({"output_dir": str(output_dir)})
            config.save_resolved(output_dir)
            payload = {
                name: {"passed": r.passed, "max_rel_error": r.max_rel_error, "checked": r.checked}
                for name, r in reports.items()
            }
            text = json.dumps(
                {"tol": tol, "seed": seed, "checks": payload}, indent=2, sort_keys=True
            )
            atomic_write(
                output_dir / "gradcheck.json", lambda f: f.write(text.encode("utf-8") + b"\n")
            )
        failed = [name for name, r in reports.items() if not r.passed]
        if failed:
            logger.error(f"gradcheck failed: {', '.join(failed)}")
            sys.exit(EXIT_FAILURE)


@main.command()
@click.argument("suites", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option(
    "--output-dir",
    type=PATH,
    default=Path("comparison"),
    show_default=True,
    help="Where the comparison table and re-rendered suite reports go.",
)
@click.pass_obj
def report(state: CliState, suites: tuple[Path, ...], output_dir: Path) -> None:
    """Re-render suite reports and compare several suites side by side."""
    with command_errors("report", state.verbose):
        loaded = [load_suite_report(path) for path in suites]
        config = state.load_config({"output_dir": str(output_dir)})
        config.save_resolved(output_dir)
        for i, suite in enumerate(loaded):
            emit_suite(suite, output_dir / (suite.dataset or f"suite{i + 1}"), config.report.top_k)
        table = write_cross_dataset_table(loaded, output_dir / "comparison.csv")
        click.echo(table.read_text(encoding="utf-8"), nl=False)


if __name__ == "__main__":
    main()
