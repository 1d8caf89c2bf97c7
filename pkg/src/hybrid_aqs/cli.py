"""Command-line runner.

Every subcommand prints a JSON object on stdout.  Exit codes: 0 success,
1 a stage failed (message on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .config import SEED_ENV, ExperimentConfig, validate_config
from .errors import ConfigError, FitFailed, SimulatorError
from .gadget import GadgetSpec, default_grid, verify_gadget
from .measurement import RamseyDataset
from .noise import OMEGA0
from .spin_model import build_hamiltonian

log = logging.getLogger("hybrid_aqs")

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_config(args) -> ExperimentConfig:
    """Config file (or defaults) with --seed, then HYBRID_AQS_SEED, overriding the stored seed."""
    if args.config is not None:
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        base = path.parent
    else:
        data, base = {}, None
    if os.environ.get(SEED_ENV) is not None:
        data["seed"] = int(os.environ[SEED_ENV])
    if args.seed is not None:
        data["seed"] = args.seed
    if data.get("seed") is None:
        raise UsageError("a seed is required: pass --seed, set it in the config, or set " + SEED_ENV)
    try:
        config = ExperimentConfig.from_dict(data, base_dir=base, env=False)
    except (ConfigError, OSError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc
    if getattr(args, "no_noise", False):
        config = config.with_overrides(noise={"enabled": False})
    diags = validate_config(config)
    if diags:
        raise UsageError("invalid config:\n  " + "\n  ".join(diags))
    return config


# -- subcommands -------------------------------------------------------------


def cmd_build(args) -> dict:
    config = load_config(args)
    graph = config.target_graph()
    h = build_hamiltonian(graph)
    energies, _ = h.eigh()
    if args.out:
        Path(args.out).write_text(json.dumps(graph.to_dict(), indent=2, sort_keys=True) + "\n")
    return {
        "graph": graph.to_dict(),
        "n_qubits": graph.n_vertices,
        "ground_energy": float(energies[0]),
        "spectrum": [float(e) for e in energies],
    }


def cmd_gap(args) -> dict:
    problem = pipeline.build_problem(load_config(args))
    report = pipeline.gap_report(problem, args.resolution)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_prepare(args) -> dict:
    config = load_config(args)
    problem = pipeline.build_problem(config)
    noise = pipeline.noise_model(config, problem.n_system + 1)
    state, fidelity = pipeline.prepare(problem, noise)
    if args.out:
        np.save(args.out, state)
    return {"prep_fidelity": fidelity, "noise": noise is not None, "total_time": config.schedule.total_time_inv_omega0}


def cmd_scan(args) -> dict:
    config = load_config(args)
    problem = pipeline.build_problem(config)
    noise = pipeline.noise_model(config, problem.n_system + 1)
    state, fidelity = pipeline.prepare(problem, noise)
    dataset = pipeline.scan(problem, state, noise)
    out = Path(args.out or "dataset.csv")
    dataset.to_csv(out)
    return {"csv": str(out), "n_points": len(dataset), "prep_fidelity": fidelity, "t_max_inv_omega0": float(dataset.t[-1])}


def cmd_fit(args) -> dict:
    try:
        dataset = RamseyDataset.from_csv(args.input, omega0=args.omega0)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read dataset {args.input}: {exc}") from exc
    _, report = pipeline.fit_report(dataset, args.delta, args.omega_hint)
    return report


def cmd_gadget_verify(args) -> dict:
    spec = GadgetSpec.from_labels(args.operators, args.coupling, args.epsilon, delta=args.delta)
    report = verify_gadget(spec, default_grid(spec, args.grid))
    return {"max_error": report.max_error, "pass": bool(report.passed), "spectrum_deviation": report.spectrum_deviation}


def cmd_full_run(args) -> dict:
    config = load_config(args)
    return pipeline.run_full(config, args.out, args.resolution)


# -- parser ------------------------------------------------------------------


def _shared(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--config", help="experiment JSON config")
    p.add_argument("--seed", type=int, help="master seed (overrides config and environment)")
    p.add_argument("--out", help=out_help)
    p.add_argument("--no-noise", action="store_true", help="closed-system run")


def _gadget_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--coupling", type=float, default=1.0, help="target coupling J")
    p.add_argument("--operators", default="ZZZ", help="three Pauli labels for A1 A2 A3")
    p.add_argument("--delta", type=float, default=None, help="penalty gap (default epsilon^-3)")
    p.add_argument("--grid", type=int, default=21, help="number of z points")
    p.set_defaults(func=cmd_gadget_verify)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-aqs", description="Adiabatic state preparation with probe-qubit readout.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="generate the target Hamiltonian")
    _shared(p, "write the graph JSON here")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("gap", help="spectral gap along the interpolation")
    _shared(p, "also write the JSON report here")
    p.add_argument("--resolution", type=int, default=101)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("prepare", help="adiabatic preparation of the register")
    _shared(p, "save the final state (.npy)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("scan", help="prepare, then run the Ramsey scan")
    _shared(p, "dataset CSV path (default dataset.csv)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", help="fit a saved scan")
    p.add_argument("--in", dest="input", required=True, help="dataset CSV")
    p.add_argument("--delta", type=float, required=True, help="probe gap in units of hbar*omega0")
    p.add_argument("--omega-hint", type=float, default=1.0, help="order-of-magnitude frequency guess (omega0)")
    p.add_argument("--omega0", type=float, default=OMEGA0, help="energy scale in rad/s")
    p.set_defaults(func=cmd_fit)

    _gadget_args(sub.add_parser("gadget-verify", help="check the 3-body gadget"))
    g = sub.add_parser("gadget", help="gadget tools")
    gsub = g.add_subparsers(dest="gadget_command", required=True)
    _gadget_args(gsub.add_parser("verify", help="check the 3-body gadget"))

    p = sub.add_parser("full-run", help="build, gap, prepare, scan, fit, estimate")
    _shared(p, "output directory for dataset, result and plot-data files")
    p.add_argument("--resolution", type=int, default=101)
    p.set_defaults(func=cmd_full_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _emit(args.func(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitFailed as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (SimulatorError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
