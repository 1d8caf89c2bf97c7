"""End-to-end experiment: build -> gap -> prepare -> scan -> fit -> estimate."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, substream
from .errors import SimulatorError
from .estimation import FitResult, estimate_observable, fit_damped_cosine
from .evolution import Schedule, adiabatic_prepare, gap_profile
from .measurement import CoupledSystem, ProbeSpec, RamseyDataset, attach_probe, run_scan, verify_ground_lemma
from .noise import NoiseModel
from .spin_model import build_hamiltonian, ground_state

log = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
RESULT_FILE = "result.json"
PLOT_FILE = "plot_data.csv"
FAILURE_FILE = "FAILED.json"


class StageError(SimulatorError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class Problem:
    config: ExperimentConfig
    h_initial: object
    h_target: object
    observable: object
    system: CoupledSystem

    @property
    def n_system(self) -> int:
        return self.h_target.n_qubits


def build_problem(config: ExperimentConfig) -> Problem:
    graph = config.target_graph()
    h_t = build_hamiltonian(graph)
    h_i = build_hamiltonian(config.initial_graph_for(h_t, graph.n_vertices))
    a = config.observable_for(h_t)
    probe = ProbeSpec(config.probe_delta_omega0)
    # raises LemmaUnverifiable when |s0>|p0> is not the ground state of H2
    verify_ground_lemma(h_t, probe, a)
    system = CoupledSystem(h_t, a, probe)
    return Problem(config, h_i, h_t, a, system)


def noise_model(config: ExperimentConfig, n_qubits: int) -> NoiseModel | None:
    if not config.noise.enabled:
        return None
    seed = config.noise.seed if config.noise.seed is not None else substream(config.seed, "bath")
    return config.noise.build(n_qubits, config.omega0_rad_s, rng_seed=seed)


def gap_report(problem: Problem, resolution: int = 101) -> dict:
    s, gaps = gap_profile(problem.h_initial, problem.h_target, resolution)
    k = int(np.argmin(gaps))
    return {"min_gap": float(gaps[k]), "s_at_min": float(s[k]), "gap_profile": [float(g) for g in gaps]}


def prepare(problem: Problem, noise: NoiseModel | None):
    """Sweep the full register (system plus idle probe) from H0 to H1."""
    probe = problem.system.probe
    h0 = attach_probe(problem.h_initial, probe)
    h1 = problem.system.h1
    sc = problem.config.schedule
    schedule = Schedule(sc.total_time_inv_omega0, sc.steps)
    _, g0 = ground_state(h0)
    return adiabatic_prepare(h0, h1, schedule, g0[:, 0], noise=noise)


def coarse_omega(problem: Problem) -> float:
    """delta + <A> in the ground state of H_I: the a-priori frequency guess."""
    _, g = ground_state(problem.h_initial)
    psi = g[:, 0]
    a_est = float(np.real(np.vdot(psi, np.asarray(problem.observable) @ psi)))
    w = problem.system.probe.delta + a_est
    return w if w > 0 else problem.system.probe.delta


def scan_window(problem: Problem) -> float:
    sc = problem.config.scan
    if sc.t_max_inv_omega0 is not None:
        return float(sc.t_max_inv_omega0)
    return sc.periods * 2 * math.pi / coarse_omega(problem)


def scan(problem: Problem, state, noise: NoiseModel | None) -> RamseyDataset:
    cfg = problem.config
    return run_scan(
        problem.system,
        scan_window(problem),
        cfg.scan.n_points,
        cfg.scan.shots,
        rng_seed=substream(cfg.seed, "shots"),
        noise=noise,
        state=state,
        omega0=cfg.omega0_rad_s,
    )


def fit_report(dataset: RamseyDataset, delta: float, omega_hint: float | None) -> tuple[FitResult, dict]:
    """Fit in SI time and convert back, so a re-read CSV reproduces the numbers exactly."""
    hint = None if omega_hint is None else omega_hint * dataset.omega0
    fit = fit_damped_cosine((dataset.t_seconds, dataset.p0_hat), omega_hint=hint)
    omega_hat = fit.model.omega_hat / dataset.omega0
    report = {
        "omega_hat": omega_hat,
        "a0_hat": omega_hat - delta,
        "residual": fit.residual_norm,
        "converged": fit.converged,
        "starts_tried": fit.starts_tried,
    }
    return fit, report


def fit_curve(fit: FitResult, dataset: RamseyDataset) -> np.ndarray:
    return fit.model(dataset.t_seconds)


def write_plot_data(path, dataset: RamseyDataset, curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_seconds", "p0_exact", "p0_hat", "fit_curve"])
        exact = dataset.p0_exact if dataset.p0_exact is not None else [math.nan] * len(dataset)
        for t, pe, ph, fc in zip(dataset.t_seconds, exact, dataset.p0_hat, curve):
            w.writerow([repr(float(t)), repr(float(pe)), repr(float(ph)), repr(float(fc))])


def _dump(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_full(config: ExperimentConfig, out_dir=None, resolution: int = 101) -> dict:
    """Run every stage; write dataset, result and plot-data files when ``out_dir`` is given.

    A failing stage raises StageError; artifacts from earlier stages stay on
    disk next to a FAILED.json marker.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / FAILURE_FILE).unlink(missing_ok=True)
    result: dict = {"seed": config.seed, "noise": config.noise.enabled}
    stage = "build"
    try:
        problem = build_problem(config)
        s0 = ground_state(problem.h_target)[0]
        result["s0_true"] = s0
        result["a0_true"] = problem.system.a0
        result["omega_true"] = problem.system.omega

        stage = "gap"
        gap = gap_report(problem, resolution)
        result["min_gap"] = gap["min_gap"]
        result["s_at_min"] = gap["s_at_min"]

        stage = "prepare"
        noise = noise_model(config, problem.n_system + 1)
        state, fidelity = prepare(problem, noise)
        result["prep_fidelity"] = fidelity
        log.info("prepared state with ground-space population %.6f", fidelity)

        stage = "scan"
        dataset = scan(problem, state, noise)
        result["t_max_inv_omega0"] = float(dataset.t[-1])
        if out is not None:
            dataset.to_csv(out / DATASET_FILE)

        stage = "fit"
        fit, report = fit_report(dataset, config.probe_delta_omega0, config.fit.omega_hint_omega0)
        stage = "estimate"
        a0_hat = estimate_observable(fit, config.probe_delta_omega0 * config.omega0_rad_s) / config.omega0_rad_s
        report["a0_hat"] = a0_hat
        result.update(report)
        result["rel_error"] = abs(report["omega_hat"] - problem.system.omega) / abs(problem.system.omega)
        a0 = problem.system.a0
        result["a0_rel_error"] = abs(a0_hat - a0) / abs(a0) if a0 != 0 else abs(a0_hat)
        if out is not None:
            write_plot_data(out / PLOT_FILE, dataset, fit_curve(fit, dataset))
            _dump(out / RESULT_FILE, result)
    except Exception as exc:
        if out is not None:
            _dump(out / FAILURE_FILE, {"stage": stage, "error": f"{type(exc).__name__}: {exc}", "partial": result})
        raise StageError(stage, exc) from exc
    return result
