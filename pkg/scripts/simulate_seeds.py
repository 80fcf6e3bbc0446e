"""Repeat the protocol simulation over several seeds and report z-scores
of the subensemble-{1,1} CHSH estimate against the exact value.

    python scripts/simulate_seeds.py --d 5 --trials 1000000 --seeds 0 1 2 3 4
"""

import argparse

import numpy as np

from nonlocality.measurement import empirical_chsh, run_protocol_exact, sample_protocol

parser = argparse.ArgumentParser()
parser.add_argument("--d", type=int, default=5)
parser.add_argument("--trials", type=int, default=10**6)
parser.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
args = parser.parse_args()

stats = run_protocol_exact(args.d)
exact = stats.chsh()
zs = []
for seed in args.seeds:
    value, se = empirical_chsh(sample_protocol(seed, args.d, trials=args.trials, stats=stats))
    zs.append((value - exact) / se)
    print(f"seed={seed}  chsh={value:.6f} +- {se:.6f}  z={zs[-1]:+.2f}")
print(f"exact={exact:.9f}  mean z={np.mean(zs):+.3f}  sd z={np.std(zs, ddof=1) if len(zs) > 1 else 0:.3f}")
