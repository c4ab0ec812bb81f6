"""Command-line harness: one CSV per figure-style experiment, plus oracle checks.

Usage::

    python -m qtraj cascade --model shared --qubits 6 --sub-steps 64 --out cascade.csv
    python -m qtraj phaseflip --qubits 6 --gamma 0,0.005,0.01 --out phaseflip.csv
    python -m qtraj teleport --model independent --qubits 10 --out teleport.csv
    python -m qtraj baker --qubits 10 --gamma 1e-4,2e-4 --out baker.csv
    python -m qtraj baker-kf --qubits 6,8,10 --gamma 1.22e-5 --out kf.csv
    python -m qtraj oracle-check --scenario teleport-shared --qubits 5

Exit codes: 0 success, 1 configuration error, 2 some rows hit a rate error,
3 an oracle check failed. ``QTRAJ_WORKERS`` (or ``--workers``) sets the
number of worker processes; results do not depend on it.
"""

from __future__ import annotations

import argparse
import shlex
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analytics
from .engine import (
    DEFAULT_BAKER_TRAJECTORIES,
    DEFAULT_TRAJECTORIES,
    NOISE,
    TrajectoryConfig,
    ensemble_density_matrix,
    ensemble_observable,
)
from .noise import (
    AMP_INDEPENDENT,
    AMP_SHARED,
    MODEL_ALIASES,
    PHASE_FLIP,
    NoiseChannel,
    RateTooLargeError,
)
from .oracle import evolve_density
from .protocols import (
    AVERAGED,
    SAMPLED,
    BakerSetup,
    TeleportSetup,
    baker_fidelity_experiment,
    baker_kf_scan,
    baker_schedule,
    build_chain_initial,
    fidelity_observable,
    setup_rng,
    swap_chain_schedule,
    teleport_fidelity,
)
from .state import StateVector, popcounts, random_state

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ROW_ERRORS = 2
EXIT_CHECK_FAILED = 3

LARGE_N = 12
ORACLE_MAX_N = 6
Z_BOUND = 5.0
ROUNDING_FLOOR = 1e-10

DEFAULT_GAMMAS = {
    "cascade": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
    "phaseflip": [0.0, 0.002, 0.004, 0.006, 0.008, 0.01, 0.015, 0.02, 0.025, 0.03],
    "teleport": [0.0, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
    "baker": [0.0, 5e-5, 1e-4, 1.5e-4, 2e-4, 2.5e-4, 3e-4, 3.5e-4, 4e-4],
}

COLUMNS = ["gamma", "x_aux", "mean", "std_error", "theory", "status"]


class ConfigError(Exception):
    pass


@dataclass
class ExperimentRecord:
    gamma: float
    x_aux: float
    mean: float | None
    std_error: float | None
    theory: float | None
    status: str = "ok"
    extra: dict | None = None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def row_seed(master_seed: int, row: int) -> int:
    """Independent per-row seed so every grid point has its own trajectory streams."""
    return int(np.random.SeedSequence([master_seed, row]).generate_state(1, np.uint64)[0])


def write_csv(path: str | None, manifest: dict, records: list[ExperimentRecord],
              extra_columns: list[str] = ()) -> str:
    lines = [f"# {key}: {value}" for key, value in manifest.items()]
    cols = COLUMNS[:5] + list(extra_columns) + COLUMNS[5:]
    lines.append(",".join(cols))
    for r in records:
        extra = r.extra or {}
        vals = [r.gamma, r.x_aux, r.mean, r.std_error, r.theory]
        vals += [extra.get(c) for c in extra_columns] + [r.status]
        lines.append(",".join(_fmt(v) for v in vals))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


# argument helpers ------------------------------------------------------------------------

def _float_list(values: list[str] | None) -> list[float] | None:
    if not values:
        return None
    out = []
    for v in values:
        out += [float(x) for x in v.split(",") if x.strip()]
    return out


def _int_list(values: list[str] | None) -> list[int] | None:
    if not values:
        return None
    out = []
    for v in values:
        out += [int(x) for x in v.split(",") if x.strip()]
    return out


def _single_n(args, default: int) -> int:
    ns = _int_list(args.qubits) or [default]
    if len(ns) != 1:
        raise ConfigError("this command takes a single --qubits value")
    n = ns[0]
    if n > LARGE_N and not args.allow_large:
        raise ConfigError(f"n={n} > {LARGE_N} needs --allow-large (memory and runtime grow as 2**n)")
    return n


def _model(name: str) -> str:
    try:
        return MODEL_ALIASES[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}") from None


def _check_common(args):
    if args.trajectories < 2:
        raise ConfigError("need at least 2 trajectories for a standard error")
    if args.sub_steps < 1:
        raise ConfigError("--sub-steps must be >= 1")


def _config(channel, args, row: int) -> TrajectoryConfig:
    return TrajectoryConfig(channel, args.trajectories, row_seed(args.seed, row),
                            chunk_size=args.chunk_size, workers=args.workers)


# commands ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class _ClassPopulations:
    n: int

    def __call__(self, psi):
        up = popcounts(self.n)
        probs = psi.real**2 + psi.imag**2
        return np.stack([probs[:, up == self.n - k].sum(axis=1) for k in range(self.n + 1)], axis=1)


def cmd_cascade(args) -> tuple[list[ExperimentRecord], list[str]]:
    model = _model(args.model)
    if model == PHASE_FLIP:
        raise ConfigError("cascade needs an amplitude damping model (shared or independent)")
    n = _single_n(args, 6)
    steps = args.steps or (2 * n if model == AMP_SHARED else n)
    gammas = _float_list(args.gamma) or DEFAULT_GAMMAS["cascade"]
    initial = StateVector.basis(n, 2**n - 1)
    records = []
    for row, g in enumerate(gammas):
        rate_time = steps * g
        theory = (analytics.cascade_shared(n, rate_time) if model == AMP_SHARED
                  else analytics.cascade_independent(n, n, rate_time)).probabilities
        try:
            channel = NoiseChannel.create(model, n, g, args.sub_steps)
            est = ensemble_observable(initial, [NOISE] * steps, _config(channel, args, row),
                                      _ClassPopulations(n))
        except RateTooLargeError as exc:
            records += [ExperimentRecord(g, k, None, None, theory[k], f"rate_too_large: {exc}")
                        for k in range(n + 1)]
            continue
        records += [ExperimentRecord(g, k, est.mean[k], est.std_error[k], theory[k])
                    for k in range(n + 1)]
    return records, []


def cmd_phaseflip(args):
    n = _single_n(args, 6)
    steps = args.steps or 2 * n * n
    gammas = _float_list(args.gamma) or DEFAULT_GAMMAS["phaseflip"]
    psi0 = random_state(n, setup_rng(args.seed))
    f_inf = 1.0 / 2**n
    records = []
    for row, g in enumerate(gammas):
        theory = analytics.phaseflip_fidelity(n, steps * g).value
        try:
            channel = NoiseChannel.create(PHASE_FLIP, n, g, args.sub_steps)
            est = ensemble_observable(psi0, [NOISE] * steps, _config(channel, args, row),
                                      fidelity_observable(psi0))
        except RateTooLargeError as exc:
            records.append(ExperimentRecord(g, n, None, None, theory, f"rate_too_large: {exc}"))
            continue
        records.append(ExperimentRecord(g, n, est.mean, est.std_error, theory,
                                        extra={"fbar": est.mean - f_inf,
                                               "theory_fbar": theory - f_inf}))
    return records, ["fbar", "theory_fbar"]


def cmd_teleport(args):
    model = _model(args.model)
    n = _single_n(args, 10)
    gammas = _float_list(args.gamma) or DEFAULT_GAMMAS["teleport"]
    a, b = complex(args.a), complex(args.b)
    nrm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / nrm, b / nrm
    base = TeleportSetup(n, NoiseChannel.create(model, n, 0.0), a, b, args.mode,
                         trailing_noise=args.trailing_noise)
    initial = build_chain_initial(base, setup_rng(args.seed))
    plus_input = abs(a - b) < 1e-12
    records = []
    for row, g in enumerate(gammas):
        theory = None
        if model == AMP_INDEPENDENT and plus_input:
            k = n - 2 + (1 if args.trailing_noise else 0)
            theory = analytics.teleport_fidelity_independent(g, k).value
        try:
            channel = NoiseChannel.create(model, n, g, args.sub_steps)
            setup = TeleportSetup(n, channel, a, b, args.mode, trailing_noise=args.trailing_noise)
            est = teleport_fidelity(setup, _config(channel, args, row), initial)
        except RateTooLargeError as exc:
            records.append(ExperimentRecord(g, n, None, None, theory, f"rate_too_large: {exc}"))
            continue
        records.append(ExperimentRecord(
            g, n, est.mean, est.std_error, theory,
            extra={"fbar": est.mean - 0.5, "theory_fbar": None if theory is None else theory - 0.5},
        ))
    return records, ["fbar", "theory_fbar"]


def cmd_baker(args):
    n = _single_n(args, 10)
    gammas = _float_list(args.gamma) or DEFAULT_GAMMAS["baker"]
    psi0 = random_state(n, setup_rng(args.seed))
    records = []
    for row, g in enumerate(gammas):
        theory = analytics.baker_fidelity(n, g, args.map_steps).value
        try:
            channel = NoiseChannel.create(PHASE_FLIP, n, g, args.sub_steps)
            est = baker_fidelity_experiment(BakerSetup(n, args.map_steps, channel, psi0),
                                            _config(channel, args, row))
        except RateTooLargeError as exc:
            records.append(ExperimentRecord(g, args.map_steps, None, None, theory,
                                            f"rate_too_large: {exc}"))
            continue
        records.append(ExperimentRecord(g, args.map_steps, est.mean, est.std_error, theory))
    return records, []


def kf_standard_error(res, trajectories: int) -> float:
    """Delta-method error of the interpolated crossing from binomial errors of the two brackets."""
    k_hi = res.k_f
    k_lo = k_hi - 1
    f_lo, f_hi = res.fidelities[k_lo], res.fidelities[k_hi]
    slope = np.log(f_lo) - np.log(max(f_hi, 1e-300))
    t = res.k_f_fraction - k_lo

    def var_log(f):
        return 0.0 if f >= 1.0 else (1.0 - f) / (f * trajectories)

    return float(np.sqrt((1 - t) ** 2 * var_log(f_lo) + t**2 * var_log(f_hi)) / slope)


def cmd_baker_kf(args):
    ns = _int_list(args.qubits) or [6, 8, 10]
    if max(ns) > LARGE_N and not args.allow_large:
        raise ConfigError(f"n > {LARGE_N} needs --allow-large")
    gammas = _float_list(args.gamma)
    if not gammas or len(gammas) != 1:
        raise ConfigError("baker-kf takes exactly one --gamma value")
    g = gammas[0]
    if g <= 0.0:
        raise ConfigError("baker-kf needs gamma > 0")
    channel = NoiseChannel.create(PHASE_FLIP, ns[0], g, args.sub_steps)
    config = TrajectoryConfig(channel, args.trajectories, args.seed,
                              chunk_size=args.chunk_size, workers=args.workers)
    results = baker_kf_scan(ns, g, args.target, config)
    c_theory = analytics.baker_kf_prefactor(g, args.target)
    records = []
    for res in results:
        records.append(ExperimentRecord(
            g, res.n, res.k_f_fraction, kf_standard_error(res, args.trajectories),
            c_theory / res.n**3,
            status="ok" if not res.below_one_step else "below_one_step",
            extra={"k_f_int": res.k_f},
        ))
    return records, ["k_f_int"]


# oracle check -------------------------------------------------------------------------------

ORACLE_GAMMA = {"decay": 0.1, "teleport": 0.2, "baker": 0.02}
SCENARIO_MODELS = {"shared": AMP_SHARED, "independent": AMP_INDEPENDENT, "phaseflip": PHASE_FLIP}
SCENARIOS = [f"{kind}-{model}" for kind in ("decay", "teleport", "baker") for model in SCENARIO_MODELS]
SCENARIO_ALIASES = {"phaseflip": "decay-phaseflip", "shared": "decay-shared",
                    "independent": "decay-independent"}


@dataclass
class OracleReport:
    scenario: str
    n: int
    trajectories: int
    max_abs_deviation: float
    max_z: float
    passed: bool


def oracle_scenario(scenario: str, n: int, gamma: float | None, sub_steps: int,
                    master_seed: int) -> tuple[StateVector, list, NoiseChannel]:
    scenario = SCENARIO_ALIASES.get(scenario, scenario)
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    kind, model_key = scenario.split("-")
    model = SCENARIO_MODELS[model_key]
    g = ORACLE_GAMMA[kind] if gamma is None else gamma
    channel = NoiseChannel.create(model, n, g, sub_steps)
    rng = setup_rng(master_seed)
    if kind == "decay":
        return random_state(n, rng), [NOISE] * 4, channel
    if kind == "teleport":
        if n < 3:
            raise ConfigError("teleport scenario needs n >= 3")
        setup = TeleportSetup(n, channel)
        return build_chain_initial(setup, rng), swap_chain_schedule(setup), channel
    if n < 2:
        raise ConfigError("baker scenario needs n >= 2")
    return random_state(n, rng), baker_schedule(n, 1), channel


def oracle_check(scenario: str, n: int, trajectories: int, master_seed: int,
                 gamma: float | None = None, sub_steps: int = 1, workers: int | None = None,
                 chunk_size: int = 128) -> OracleReport:
    if trajectories < 2:
        raise ConfigError("oracle check needs at least 2 trajectories (standard error undefined)")
    if n > ORACLE_MAX_N:
        raise ConfigError(f"oracle check limited to n <= {ORACLE_MAX_N}")
    initial, schedule, channel = oracle_scenario(scenario, n, gamma, sub_steps, master_seed)
    config = TrajectoryConfig(channel, trajectories, master_seed, chunk_size, workers)
    mean, se = ensemble_density_matrix(initial, schedule, config)
    exact = evolve_density(initial.density_matrix(), schedule, channel).elements
    dev = mean - exact
    z = []
    for d, s in ((dev.real, se.real), (dev.imag, se.imag)):
        # Entries equal in every trajectory have a rounding-level sample error;
        # deviations below the rounding floor count as exact agreement.
        d = np.where(np.abs(d) <= ROUNDING_FLOOR, 0.0, np.abs(d))
        z.append(np.max(np.divide(d, s, out=np.where(d > 0, np.inf, 0.0), where=s > 0)))
    max_z = float(max(z))
    return OracleReport(scenario, n, trajectories, float(np.abs(dev).max()), max_z, max_z < Z_BOUND)


def cmd_oracle_check(args):
    ns = _int_list(args.qubits) or [4]
    scenarios = args.scenario or ["decay-phaseflip"]
    if scenarios == ["all"]:
        scenarios = SCENARIOS
    gammas = _float_list(args.gamma)
    gamma = gammas[0] if gammas else None
    reports = []
    for sc in scenarios:
        for n in ns:
            reports.append(oracle_check(sc, n, args.trajectories, args.seed, gamma,
                                        args.sub_steps, args.workers, args.chunk_size))
    return reports


# entry point ------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--qubits", "-n", action="append", help="qubit count (comma list for baker-kf)")
    common.add_argument("--gamma", "-g", action="append",
                        help="dimensionless rate per gate interval; repeatable or comma list")
    common.add_argument("--trajectories", "-N", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--sub-steps", type=int, default=1, help="noise sub-steps per interval")
    common.add_argument("--out", "-o", default=None, help="output CSV path (stdout if omitted)")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: $QTRAJ_WORKERS or 1)")
    common.add_argument("--chunk-size", type=int, default=128, help=argparse.SUPPRESS)
    common.add_argument("--allow-large", action="store_true", help=f"permit n > {LARGE_N}")

    parser = argparse.ArgumentParser(prog="qtraj", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qtraj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cascade", parents=[common], help="class populations under amplitude damping")
    p.add_argument("--model", default="shared", help="shared | independent")
    p.add_argument("--steps", type=int, default=None, help="noise intervals (default 2n or n)")

    p = sub.add_parser("phaseflip", parents=[common], help="random-state fidelity under phase flip")
    p.add_argument("--steps", type=int, default=None, help="noise intervals (default 2n^2)")

    p = sub.add_parser("teleport", parents=[common], help="teleportation through a noisy swap chain")
    p.add_argument("--model", default="independent", help="shared | independent | phase_flip")
    p.add_argument("--a", default=str(1 / np.sqrt(2)), help="amplitude of |0> (complex literal)")
    p.add_argument("--b", default=str(1 / np.sqrt(2)), help="amplitude of |1> (complex literal)")
    p.add_argument("--mode", choices=[AVERAGED, SAMPLED], default=AVERAGED)
    p.add_argument("--trailing-noise", action="store_true",
                   help="add a noise interval after the last swap")

    p = sub.add_parser("baker", parents=[common], help="forward/backward baker map fidelity")
    p.add_argument("--map-steps", "-k", type=int, default=1)

    p = sub.add_parser("baker-kf", parents=[common], help="map steps until fidelity reaches a target")
    p.add_argument("--target", type=float, default=0.9)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="trajectory average vs exact density matrix")
    p.add_argument("--scenario", action="append",
                   help=f"one of {SCENARIOS}, 'phaseflip', or 'all'; repeatable")
    return parser


COMMANDS = {
    "cascade": cmd_cascade,
    "phaseflip": cmd_phaseflip,
    "teleport": cmd_teleport,
    "baker": cmd_baker,
    "baker-kf": cmd_baker_kf,
}


def _recorded_argv(argv: list[str]) -> str:
    # Worker count does not affect results, so it is left out of the manifest.
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--workers":
            skip = True
            continue
        if tok.startswith("--workers="):
            continue
        out.append(tok)
    return shlex.join(["qtraj"] + out)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trajectories is None:
        args.trajectories = (DEFAULT_BAKER_TRAJECTORIES if args.command in ("baker", "baker-kf")
                             else 2000 if args.command == "oracle-check" else DEFAULT_TRAJECTORIES)
    start = time.perf_counter()
    try:
        _check_common(args)
        if args.command == "oracle-check":
            reports = cmd_oracle_check(args)
            lines = ["scenario,n,trajectories,max_abs_deviation,max_z,bound,result"]
            for r in reports:
                lines.append(f"{r.scenario},{r.n},{r.trajectories},{r.max_abs_deviation:.6g},"
                             f"{r.max_z:.4g},{Z_BOUND:g},{'pass' if r.passed else 'FAIL'}")
            text = "\n".join(lines) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            sys.stdout.write(text)
            return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED
        records, extra_cols = COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"qtraj {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {
        "command": _recorded_argv(argv),
        "master_seed": args.seed,
        "trajectories": args.trajectories,
        "sub_steps": args.sub_steps,
        "version": f"qtraj {__version__}",
        "wall_time_s": f"{time.perf_counter() - start:.3f}",
    }
    write_csv(args.out, manifest, records, extra_cols)
    return EXIT_ROW_ERRORS if any(r.status.startswith("rate_too_large") for r in records) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
