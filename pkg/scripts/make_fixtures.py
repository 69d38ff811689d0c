"""Write every built-in scenario to scenarios/<name>.json."""

import argparse
from pathlib import Path

from uccdyn import fixtures
from uccdyn.scenario import dumps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "scenarios")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, build in sorted(fixtures.ALL.items()):
        path = args.out / f"{name}.json"
        path.write_text(dumps(build()), encoding="utf-8")
        print(path)


if __name__ == "__main__":
    main()
