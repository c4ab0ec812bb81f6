"""Fidelity of a random 6-qubit state after 2n^2 phase-flip intervals."""

import argparse
from pathlib import Path

from qtraj.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--seed", default="0")
    args = parser.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "phaseflip.csv"
    main(["phaseflip", "--qubits", "6", "--trajectories", "400", "--seed", args.seed,
          "--gamma", "0,0.0025,0.005,0.0075,0.01,0.0125,0.015,0.02,0.025,0.03", "--out", str(path)])
    print(f"wrote {path}")
