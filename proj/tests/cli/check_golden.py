"""Run the CLI cases listed in cases.json and compare stdout with the golden files.

usage: check_golden.py PLROUTE_EXE GOLDEN_DIR [--update]
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path


def expand(args, golden_dir):
    return [a.replace("@GOLDEN@", str(golden_dir)) for a in args]


def run(exe, args):
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{args[0]} exited with {proc.returncode}: {proc.stderr.strip()}")
    return proc.stdout


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("exe")
    parser.add_argument("golden_dir", type=Path)
    parser.add_argument("--update", action="store_true", help="rewrite fixtures and golden files")
    opts = parser.parse_args()

    spec = json.loads((opts.golden_dir / "cases.json").read_text())
    if opts.update:
        for fixture in spec["fixtures"]:
            run(opts.exe, expand(fixture, opts.golden_dir))

    failed = 0
    for case in spec["cases"]:
        out = run(opts.exe, expand(case["args"], opts.golden_dir))
        path = opts.golden_dir / case["golden"]
        if opts.update:
            path.write_text(out)
            print(f"wrote {path.name}")
        elif path.read_text() != out:
            failed += 1
            print(f"MISMATCH {path.name}")
        else:
            print(f"ok {path.name}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
