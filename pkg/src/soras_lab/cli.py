"""``soras-lab`` command line.

    soras-lab run --config exp.cfg --set overlap_layers=3 --set pu=PU1
    soras-lab table table1 --out table1.csv
    soras-lab spectrum --out table5.csv
    soras-lab fov --out fov.csv

Exit status is 0 on success and 2 when any cell or stage fails.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import harness

EXIT_FAILURE = 2


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="seed for random initial guesses (u64)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soras-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one configuration")
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    run.add_argument("--out", help="append the result row to this CSV")
    _common(run)

    table = sub.add_parser("table", help="reproduce a table preset")
    table.add_argument("name", choices=["table1", "table2", "table3", "table4", "table5", "fov"])
    table.add_argument("--out", required=True)
    table.add_argument("--full", action="store_true", help="table4: include N=32 and N=64")
    table.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    _common(table)

    for name, helptext in (("spectrum", "extreme eigenvalues, SPD preset"),
                           ("fov", "numerical range boundaries, non-symmetric preset")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--out", required=True)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        if name == "fov":
            p.add_argument("--angles", type=int, default=64)
        _common(p)
    return parser


def _append_row(path, row):
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=harness.ROW_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")

    try:
        if args.command == "run":
            cfg = harness.load_config(args.config, overrides)
            report, row = harness.run_experiment(cfg)
            out = args.out or cfg.out
            if out:
                _append_row(out, row)
            print(",".join(str(row[c]) for c in harness.ROW_COLUMNS))
            return 0 if report.converged else EXIT_FAILURE

        kw = harness.parse_assignments(overrides)
        if args.command == "table":
            rows, ok = harness.run_table(args.name, args.out, full=args.full, **kw)
            if args.name not in ("table5", "fov"):
                print(harness.format_table(rows))
        elif args.command == "spectrum":
            rows, ok = harness.run_table("table5", args.out, **kw)
        else:
            rows, ok = harness.run_table("fov", args.out, n_angles=args.angles, **kw)
        return 0 if ok else EXIT_FAILURE
    except (harness.StageError, ValueError, KeyError, OSError) as exc:
        print(f"soras-lab: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
