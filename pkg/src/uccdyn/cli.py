"""``ucc-dyn`` command line.

Exit codes: 0 success, 1 parse or model error, 2 integrity alarm.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dynamics import ModelIntegrityAlarm, PreconditionError
from .mtree import TreeError
from .reports import HANDLERS, jsonable, measure_csv
from .scenario import COMMANDS, ScenarioError, load


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucc-dyn", description="Exact fixed-point and measure diagnostics on tower scenarios.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("scenario", type=Path)
    p.add_argument("--level", type=int, help="tower prefix level (default: the scenario's run.level)")
    p.add_argument("--radius", type=int, help="word radius; for measure, the last Følner index")
    p.add_argument("--seed", type=int, help="seed for sampled checks")
    p.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    p.add_argument("--csv", type=Path, help="write the measure table as CSV")
    p.add_argument("--svg", type=Path, help="write an SVG picture")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def report_text(command: str, scenario_hash: str, outcome: dict, tables: dict) -> str:
    body = {"command": command, "scenario_hash": scenario_hash, "outcome": outcome, "tables": tables, "version": __version__}
    return json.dumps(jsonable(body), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _error(msg: str) -> int:
    print(f"ucc-dyn: error: {msg}", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = load(args.scenario)
    except (OSError, ScenarioError, TreeError) as exc:
        return _error(str(exc))
    if args.command not in s.commands:
        return _error(f"command {args.command!r} is not enabled for scenario {s.name!r}")
    svg = None
    try:
        res = HANDLERS[args.command](s, level=args.level, radius=args.radius, seed=args.seed)
        if len(res) == 4:
            outcome, tables, status, svg = res
        else:
            outcome, tables, status = res
    except ModelIntegrityAlarm as exc:
        print(f"ucc-dyn: alarm: {exc}", file=sys.stderr)
        return 2
    except (PreconditionError, ScenarioError, TreeError, ValueError) as exc:
        return _error(str(exc))
    text = report_text(args.command, s.hash(), outcome, tables)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv:
        if "folner" not in tables:
            return _error("--csv needs the measure command")
        args.csv.write_text(measure_csv(tables), encoding="utf-8")
    if args.svg:
        if svg is None:
            from .render import render_svg
            from .reports import render_marks

            svg = render_svg(s.model, args.level or s.run.level, render_marks(s), s.name)
        args.svg.write_text(svg, encoding="utf-8")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
