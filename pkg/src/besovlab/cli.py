"""Command line driver: ``besovlab run | validate | list-weights``."""

import concurrent.futures as cf
import os
import sys
import time
from pathlib import Path

import click
import yaml

from .reports import Report
from .tasks import ManifestError, TaskError, run_task, task_ok, validate_manifest

EXIT_FAILED = 1
EXIT_INVALID = 2

CATALOG = [
    {"name": "Power", "params": {"alpha": "float > -1"},
     "density": "(1-t)^alpha",
     "classification": "weakly normal of order alpha; doubling with constant 2^(alpha+1); "
                       "B2 profile per eta"},
    {"name": "PowerLog", "params": {"alpha": "float >= -1 (-1 needs beta < -1)", "beta": "float",
                                 "t1": "float in (0,1), default 0.5"},
     "density": "(1-t)^alpha log(1/(1-t))^beta for t >= t1, constant below t1",
     "classification": "doubling; weakly normal of every order above alpha "
                       "(order alpha itself when beta >= 0)"},
    {"name": "ExpCusp", "params": {"beta": "float"},
     "density": "(1-t)^beta exp(-1/(1-t))",
     "classification": "not weakly normal; not doubling; not in B2"},
    {"name": "Tabulated", "params": {"grid": "strictly increasing list from 0 to 1",
                                  "values": "positive list"},
     "density": "piecewise log-linear interpolation of the table",
     "classification": "depends on the table; classified numerically"},
]


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ManifestError("manifest", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ManifestError("manifest", f"parse error: {exc}") from None
    return validate_manifest(doc)


def _write(out_dir: Path, stem: str, task, report: Report):
    base = out_dir / stem
    base.parent.mkdir(parents=True, exist_ok=True)
    base.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
    head = (f"task: {task.kind}\noutput: {stem}\nexpect_negative: "
            f"{'true' if task.expect_negative else 'false'}\n"
            f"outcome: {'OK' if task_ok(task, report) else 'UNEXPECTED'}\n")
    base.with_suffix(".txt").write_text(head + report.summary_text(), encoding="utf-8")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Numerical experiments on weighted Besov spaces of the ball."""


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-dir", default="reports", show_default=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Override the manifest seed.")
@click.option("--precision", type=click.Choice(["double", "extended"]), default=None,
              help="Override the manifest precision.")
@click.option("--jobs", type=int, default=None, help="Worker threads (default: up to 4).")
def run(manifest_path, out_dir, seed, precision, jobs):
    """Execute every task in a manifest and write CSV and summary reports."""
    try:
        manifest = _load(manifest_path)
    except ManifestError as exc:
        click.echo(f"invalid manifest: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    seed = manifest.seed if seed is None else seed
    precision = manifest.precision if precision is None else precision
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = jobs or min(4, len(manifest.tasks), os.cpu_count() or 1)

    def work(task):
        start = time.perf_counter()
        try:
            return task, run_task(task, seed, precision), None, time.perf_counter() - start
        except TaskError as exc:
            return task, None, exc, time.perf_counter() - start

    with cf.ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(work, manifest.tasks))

    all_ok = True
    click.echo(f"{'task':<28} {'kind':<18} {'verdict':<32} {'outcome':<10} {'seconds':>8}")
    for task, report, error, elapsed in results:
        if error is not None:
            all_ok = False
            click.echo(f"{task.output:<28} {task.kind:<18} {'ERROR':<32} {'FAILED':<10} {elapsed:8.2f}")
            click.echo(f"  {error}", err=True)
            continue
        _write(out, task.output, task, report)
        ok = task_ok(task, report)
        all_ok &= ok
        shown = report.verdict + (" (expected)" if task.expect_negative and ok else "")
        click.echo(f"{task.output:<28} {task.kind:<18} {shown:<32} "
                   f"{'OK' if ok else 'FAILED':<10} {elapsed:8.2f}")
    sys.exit(0 if all_ok else EXIT_FAILED)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(dir_okay=False))
def validate(manifest_path):
    """Parse and validate a manifest without running it."""
    try:
        manifest = _load(manifest_path)
    except ManifestError as exc:
        click.echo(f"invalid manifest: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    click.echo(f"ok: {len(manifest.tasks)} tasks, seed {manifest.seed}, precision {manifest.precision}")


@main.command("list-weights")
def list_weights():
    """Built-in weight families with parameters and known classification."""
    click.echo(yaml.safe_dump(CATALOG, sort_keys=False).rstrip())


if __name__ == "__main__":  # pragma: no cover
    main()
