"""Dimension sweep of the filtered Werner state's CHSH value.

    python scripts/run_sweep.py --d-max 30 --out results/sweep.csv
"""

import argparse
from pathlib import Path

from nonlocality.chsh import first_violating, sweep_to_csv, sweep_to_json, violation_sweep

parser = argparse.ArgumentParser()
parser.add_argument("--d-min", type=int, default=2)
parser.add_argument("--d-max", type=int, default=30)
parser.add_argument("--out", type=Path, default=Path("results/sweep.csv"))
args = parser.parse_args()

rows = violation_sweep(args.d_min, args.d_max)
args.out.parent.mkdir(parents=True, exist_ok=True)
args.out.write_bytes(sweep_to_csv(rows).encode())
args.out.with_suffix(".json").write_text(sweep_to_json(rows))

for r in rows:
    flag = "violates" if r.violates else ""
    print(f"d={r.d:3d}  closed={r.closed_form:.9f}  numeric={r.numeric:.9f}  {flag}")
print("first violating d:", first_violating(rows))
