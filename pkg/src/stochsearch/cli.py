"""Command-line entry point.

Examples
--------
::

    stochsearch fit --input data.csv --response y --add-intercept --B 200 --seed 7 --output fit.json
    stochsearch sim-weibull --q 2 --B 20000 --reps 500 --seed 1
    stochsearch sim-mindist --q 1 --B-grid 10 100 1000 --output mindist.json

Exit status is 0 on success, 2 when an asserted check fails and 1 on input
errors. Reports are single JSON objects written to ``--output`` (or stdout);
tables go next to it as ``<output>.<table>.csv``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from .datagen import DESIGNS, ERROR_MODELS
from .experiments import EXPERIMENTS, SimConfig, run
from .weights import SCHEMES

log = logging.getLogger("stochsearch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochsearch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=int)
        p.add_argument("--q", type=int)
        p.add_argument("--B", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--c", type=float)
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--seed", type=int)
        p.add_argument("--error-model", choices=ERROR_MODELS)
        p.add_argument("--design", choices=DESIGNS)
        p.add_argument("--tol", type=float)
        p.add_argument("--input")
        p.add_argument("--response")
        p.add_argument("--add-intercept", action="store_true", default=None)
        p.add_argument("--output")
        p.add_argument("--n-grid", type=int, nargs="+")
        p.add_argument("--B-grid", type=int, nargs="+")
        p.add_argument("--c-grid", type=float, nargs="+")
        p.add_argument("--inner", type=int, help="weight draws per dataset (sim-bootstrap)")
        p.add_argument("--deltas", type=float, nargs="+")
        p.add_argument("--Ks", type=float, nargs="+")
        p.add_argument("--dump-weights", action="store_true", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> SimConfig:
    opts = vars(args).copy()
    experiment = opts.pop("experiment")
    return SimConfig.resolve(experiment, **opts)


def write_outputs(result, output: str | None) -> None:
    text = json.dumps(result.report, indent=2, sort_keys=True, allow_nan=True)
    if output is None:
        sys.stdout.write(text + "\n")
        return
    with open(output, "w") as fh:
        fh.write(text + "\n")
    for name, (header, rows) in result.tables.items():
        with open(f"{output}.{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = run(cfg)
    except (ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 1
    write_outputs(result, cfg.output)
    if not result.passed:
        failed = [k for k, ok in result.report["checks"].items() if not ok]
        log.error("checks failed: %s", ", ".join(failed))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
