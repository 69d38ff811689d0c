"""Run every enabled command on every scenario; reports, CSV tables and SVGs go to out/."""

import argparse
from pathlib import Path

from uccdyn.cli import main as cli
from uccdyn.scenario import load

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", type=Path, default=ROOT / "scenarios")
    ap.add_argument("--out", type=Path, default=ROOT / "out")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for path in sorted(args.scenarios.glob("*.json")):
        s = load(path)
        for cmd in s.commands:
            stem = args.out / f"{s.name}.{cmd}"
            extra = ["--csv", f"{stem}.csv"] if cmd == "measure" else []
            extra += ["--svg", f"{stem}.svg"] if cmd == "render" else []
            code = cli([cmd, str(path), "--out", f"{stem}.json", *extra])
            print(f"{s.name:14s} {cmd:15s} exit {code}")
            worst = max(worst, code)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
