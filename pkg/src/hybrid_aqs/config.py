"""Experiment configuration: JSON parsing, validation and seeded substreams.

Units are explicit in field names.  ``*_inv_omega0`` times are in units of
1/omega0, ``*_omega0`` energies and frequencies in units of hbar*omega0.
"""

from __future__ import annotations

import json
import math
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .measurement import ProbeSpec, attach_probe, couple_observable
from .noise import OMEGA0, NoiseConfig, max_transition, t2_from
from .spin_model import SpinGraph, build_hamiltonian, mean_field_graph, random_graph, transverse_field_graph

SEED_ENV = "HYBRID_AQS_SEED"


def substream(master_seed: int, name: str) -> np.random.SeedSequence:
    """Independent, named child of the master seed."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(zlib.crc32(name.encode()),))


@dataclass(frozen=True)
class ScheduleConfig:
    total_time_inv_omega0: float = 10.0
    steps: int = 10_000
    path: str = "linear"


@dataclass(frozen=True)
class ScanConfig:
    t_max_inv_omega0: float | None = None
    periods: float = 6.0
    n_points: int = 40
    shots: int = 50


@dataclass(frozen=True)
class FitConfig:
    omega_hint_omega0: float = 1.0


@dataclass(frozen=True)
class GadgetConfig:
    epsilon: float = 0.1
    delta: float | None = None
    coupling: float = 1.0
    operators: str = "ZZZ"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    graph: dict = field(default_factory=lambda: {"random": {"n": 2, "scale": 1.0}})
    initial_graph: str | dict = "mean_field"
    observable: str | dict = "H_ST"
    probe_delta_omega0: float = 4.0
    omega0_rad_s: float = OMEGA0
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    gadget: GadgetConfig | None = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None, env: bool = True) -> "ExperimentConfig":
        """Build from parsed JSON; with ``env`` the HYBRID_AQS_SEED variable overrides the seed."""
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        env_seed = os.environ.get(SEED_ENV) if env else None
        if env_seed is not None:
            data["seed"] = int(env_seed)
        if data.get("seed") is None:
            raise ConfigError("a seed is required")
        try:
            kw = dict(data)
            kw["seed"] = int(data["seed"])
            for key in ("graph", "initial_graph", "observable"):
                if isinstance(kw.get(key), str) and kw[key] not in ("H_ST", "mean_field", "transverse"):
                    path = Path(kw[key])
                    if base_dir is not None and not path.is_absolute():
                        path = base_dir / path
                    kw[key] = json.loads(path.read_text())
            kw["schedule"] = ScheduleConfig(**data.get("schedule", {}))
            kw["noise"] = NoiseConfig.from_dict(data.get("noise"))
            kw["scan"] = ScanConfig(**data.get("scan", {}))
            kw["fit"] = FitConfig(**data.get("fit", {}))
            if data.get("gadget") is not None:
                kw["gadget"] = GadgetConfig(**data["gadget"])
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        def plain(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {k: plain(getattr(obj, k)) for k in obj.__dataclass_fields__}
            return obj

        return plain(self)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        for key, value in kw.items():
            if isinstance(value, dict) and isinstance(d.get(key), dict):
                d[key] = {**d[key], **value}
            else:
                d[key] = value
        return ExperimentConfig.from_dict(d, env=False)

    # -- derived objects ----------------------------------------------------

    def target_graph(self) -> SpinGraph:
        g = self.graph
        if "random" in g:
            params = g["random"]
            rng = np.random.default_rng(substream(self.seed, "hamiltonian"))
            return random_graph(int(params.get("n", 2)), rng, float(params.get("scale", 1.0)))
        return SpinGraph.from_dict(g)

    def initial_graph_for(self, h_target, n: int) -> SpinGraph:
        if self.initial_graph == "mean_field":
            return mean_field_graph(h_target, n)
        if self.initial_graph == "transverse":
            return transverse_field_graph(n)
        return SpinGraph.from_dict(self.initial_graph)

    def observable_for(self, h_target):
        if self.observable == "H_ST":
            return h_target
        return build_hamiltonian(SpinGraph.from_dict(self.observable))


def validate_config(config) -> list[str]:
    """Structural and physical diagnostics; an empty list means the config is usable."""
    diags: list[str] = []
    if isinstance(config, dict):
        try:
            config = ExperimentConfig.from_dict(config)
        except Exception as exc:  # diagnostics are returned, never raised
            return [f"InvalidConfig: {exc}"]
    try:
        graph = config.target_graph()
    except Exception as exc:
        return [f"InvalidGraph: {exc}"]
    n = graph.n_vertices
    if config.probe_delta_omega0 <= 0:
        diags.append("InvalidProbe: probe delta must be positive")
    sched = config.schedule
    if sched.total_time_inv_omega0 < 0 or sched.steps < 1:
        diags.append("InvalidSchedule: need total time >= 0 and at least one step")
    if sched.path != "linear":
        diags.append(f"InvalidSchedule: unsupported path {sched.path!r}")
    scan = config.scan
    if scan.n_points < 2 or scan.shots < 1:
        diags.append("InvalidScan: need n_points >= 2 and shots >= 1")
    if scan.t_max_inv_omega0 is not None and scan.t_max_inv_omega0 <= 0:
        diags.append("InvalidScan: t_max must be positive")
    nz = config.noise
    if nz.enabled:
        if nz.temperature_mK <= 0:
            diags.append("Unphysical: temperature must be positive")
        t1, tphi = nz.T1_mean_us, nz.Tphi_mean_us
        if t1 <= 0:
            diags.append("Unphysical: mean T1 must be positive")
        elif tphi <= 0 or t2_from(t1, tphi) > 2 * t1 * (1 + 1e-12):
            # 1/T2 = 1/(2 T1) + 1/T_phi, so T2 > 2 T1 needs a negative dephasing rate
            diags.append("Unphysical: T_phi implies T2 > 2*T1")
        elif t1 - 3 * nz.T1_sd_us <= 0 or tphi - 3 * nz.Tphi_sd_us <= 0:
            diags.append("Unphysical: 3-sigma spread admits non-positive times")
    h2 = None
    if config.probe_delta_omega0 > 0:
        try:
            h_t = build_hamiltonian(graph)
            h_i = build_hamiltonian(config.initial_graph_for(h_t, n))
            probe = ProbeSpec(config.probe_delta_omega0)
            h2 = couple_observable(attach_probe(h_t, probe), config.observable_for(h_t))
        except Exception as exc:
            diags.append(f"InvalidObservable: {exc}")
    if nz.enabled and h2 is not None:
        top = max(max_transition(h2), max_transition(attach_probe(h_i, probe)))
        if nz.omega_c_over_omega0 <= top:
            diags.append(
                f"CutoffTooLow: omega_c = {nz.omega_c_over_omega0} omega0 is below the largest transition {top:.3g} omega0"
            )
    if config.gadget is not None:
        g = config.gadget
        if g.epsilon <= 0:
            diags.append("InvalidGap: gadget epsilon must be positive")
        elif g.delta is not None and g.delta < g.epsilon**-3 * (1 - 1e-12):
            diags.append(f"InvalidGap: gadget delta {g.delta} < epsilon^-3 = {g.epsilon ** -3:g}")
    if not math.isfinite(config.omega0_rad_s) or config.omega0_rad_s <= 0:
        diags.append("InvalidScale: omega0 must be positive")
    return diags
