#!/usr/bin/env python3
"""Run every scenario config in configs/ and write reports.

    python scripts/run_all.py [--out reports] [--seed N] [--format json|csv]

Configs under configs/variants/ are run too but are reported separately,
since some of them are built to fail (a measure in the counterexample slot).
Exit status is 0 when every top-level config passes.
"""

import argparse
import contextlib
import io
import sys
import time
from pathlib import Path

from lusincap.experiments import cli

ROOT = Path(__file__).resolve().parent.parent


def run_one(path: Path, out: Path, seed, fmt: str) -> int:
    kind = path.stem if path.parent.name == "configs" else _kind_of(path)
    argv = [kind, "--config", str(path), "--out", str(out), "--format", fmt]
    if seed is not None:
        argv += ["--seed", str(seed)]
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(argv)
    last = buf.getvalue().strip().splitlines()[-1:] or [""]
    print(f"  [{code}] {path.relative_to(ROOT)}: {last[0]}")
    return code


def _kind_of(path: Path) -> str:
    import json

    return json.loads(path.read_text())["kind"]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "reports"))
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    args = ap.parse_args()
    out = Path(args.out)
    t0 = time.perf_counter()
    print("main configs")
    codes = [run_one(p, out, args.seed, args.format) for p in sorted((ROOT / "configs").glob("*.json"))]
    print("variants")
    for p in sorted((ROOT / "configs" / "variants").glob("*.json")):
        run_one(p, out / "variants" / p.stem, args.seed, args.format)
    ok = all(c == 0 for c in codes)
    print(f"{'all passed' if ok else 'FAILURES'} in {time.perf_counter() - t0:.2f}s")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
