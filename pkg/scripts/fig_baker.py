"""Forward/backward baker map under phase flips: F(gamma) at n=10 and k_f(n)."""

import argparse
import csv
from pathlib import Path

import numpy as np

from qtraj.cli import main
from qtraj.protocols import power_law_fit


def read_rows(path: Path):
    return list(csv.DictReader(ln for ln in path.read_text().splitlines() if not ln.startswith("#")))


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--seed", default="0")
    parser.add_argument("--kf-trajectories", default="10000")
    args = parser.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    path = out / "baker_fidelity.csv"
    gammas = ",".join(f"{x:g}" for x in np.arange(0, 13) * 5e-5)
    main(["baker", "--qubits", "10", "--map-steps", "1", "--trajectories", "500",
          "--gamma", gammas, "--seed", args.seed, "--out", str(path)])
    print(f"wrote {path}")

    # k_f(n=6) = 20 by construction of gamma.
    gamma = -np.log(0.9) / (2 * 6**3 * 20)
    path = out / "baker_kf.csv"
    main(["baker-kf", "--qubits", "6,8,10", "--gamma", repr(float(gamma)),
          "--trajectories", args.kf_trajectories, "--chunk-size", "256",
          "--seed", args.seed, "--out", str(path)])
    rows = read_rows(path)
    p, c = power_law_fit([float(r["x_aux"]) for r in rows], [float(r["mean"]) for r in rows])
    print(f"wrote {path}; k_f ~ {c:.0f} n^{p:.2f} (predicted {-np.log(0.9) / (2 * gamma):.0f} n^-3)")
