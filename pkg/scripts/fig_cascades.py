"""Class populations under both amplitude damping models (n=6, from |111111>)."""

import argparse
from pathlib import Path

from qtraj.cli import main

GAMMAS = "0,0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--seed", default="0")
    parser.add_argument("--sub-steps", default="64")
    args = parser.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for model in ("shared", "independent"):
        main(["cascade", "--model", model, "--qubits", "6", "--trajectories", "400",
              "--gamma", GAMMAS, "--sub-steps", args.sub_steps, "--seed", args.seed,
              "--out", str(out / f"cascade_{model}.csv")])
        print(f"wrote {out / f'cascade_{model}.csv'}")
