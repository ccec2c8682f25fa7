"""Command-line entry point: ``symtensor bench | check | convert``.

Exit codes: 0 success, 1 correctness failure, 2 configuration error.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from . import bench
from .errors import ConfigError, SymTensorError
from .io import from_bytes, from_json, to_bytes, to_json


class _Group(click.Group):
    def main(self, *args, standalone_mode=True, **kwargs):
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            exc.show()
            sys.exit(2)
        except click.exceptions.Abort:
            sys.exit(2)
        except (ConfigError, ValueError, OSError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Symmetric tensor maps: benchmarks, consistency checks, file conversion."""


@main.command("bench")
@click.option("--workload", type=click.Choice(bench.WORKLOADS), default="single_site")
@click.option("--sector", "sector", required=True, help='Sector kind, e.g. "SU2" or "fZ2 x SU2 x SU2".')
@click.option("--physical", default="", help="Physical space P, e.g. SU2[1:1].")
@click.option("--virtual", default="", help="Virtual space V, or @fixture[#key].")
@click.option("--mpo", default="", help="MPO bond space W.")
@click.option("--reps", default=3, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--workers", default=1, type=int, show_default=True,
              help="Threads for per-block work (1 keeps runs single-threaded).")
@click.option("--max-label", default=1.0, type=float, show_default=True,
              help="Label magnitude bound for the consistency workload.")
@click.option("--out", "out", default=None, type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", default=None, type=click.Path(dir_okay=False),
              help="Optional CSV of per-iteration times.")
def bench_cmd(workload, sector, physical, virtual, mpo, reps, seed, workers, max_label, out, csv_path):
    """Run a benchmark workload and emit one JSON document."""
    cfg = bench.BenchConfig(sector, physical, virtual, mpo, reps, seed, workload, out, workers, max_label)
    result = bench.run(cfg)
    if isinstance(result, dict):
        doc, ok = result, result["passed"]
    else:
        doc, ok = result.to_dict(), True
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "seconds"])
                for i, t in enumerate(result.times_s):
                    w.writerow([i, t])
    text = json.dumps(doc, indent=2, default=float)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)
    sys.exit(0 if ok else 1)


@main.command("check")
@click.option("--sector", "sector", required=True)
@click.option("--max-label", default=1.0, type=float, show_default=True)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out", default=None, type=click.Path(dir_okay=False))
def check_cmd(sector, max_label, seed, out):
    """Validate pentagon/hexagon/unitarity (plus dense oracle for groups)."""
    cfg = bench.BenchConfig(sector, workload="consistency", seed=seed, max_label=max_label)
    report = bench.run_consistency(cfg)
    for c in report["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        click.echo(f"{flag} {c['check']:<22} max residual {c['max_residual']:.3e} "
                   f"({c['tuples']} tuples, tol {c['tol']:.0e})")
    if out:
        Path(out).write_text(json.dumps(report, indent=2, default=float) + "\n")
    sys.exit(0 if report["passed"] else 1)


@main.command("convert")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.argument("dst", type=click.Path(dir_okay=False))
@click.option("--to", "fmt", type=click.Choice(["json", "binary"]), default=None,
              help="Target format (default: the opposite of the input).")
def convert_cmd(src, dst, fmt):
    """Convert a tensor file between the JSON and STNS binary formats."""
    raw = Path(src).read_bytes()
    try:
        is_bin = raw[:4] == b"STNS"
        A = from_bytes(raw) if is_bin else from_json(raw.decode())
    except (SymTensorError, KeyError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {src}: {exc}") from None
    fmt = fmt or ("json" if is_bin else "binary")
    if fmt == "json":
        Path(dst).write_text(to_json(A))
    else:
        Path(dst).write_bytes(to_bytes(A))
    sys.exit(0)


if __name__ == "__main__":
    main()
