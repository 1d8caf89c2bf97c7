"""Probe-qubit readout: coupling the observable, the ground-state lemma, and Ramsey scans.

The probe is the last tensor factor of the register, |p0> = |0>, |p1> = |1>.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import LemmaUnverifiable, ObservableNotCommuting
from .evolution import apply_unitary, check_state, to_density
from .noise import OMEGA0, ConstantGenerator, NoiseModel
from .spin_model import HermitianOperator, as_matrix, as_operator, commutator, ground_state, subspace_fidelity

COMMUTE_RTOL = 1e-9
LEMMA_TOL = 1e-9

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
KET0 = np.array([1, 0], dtype=complex)


@dataclass(frozen=True)
class ProbeSpec:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"probe gap must be positive, got {self.delta}")

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.delta * P1


def attach_probe(h_st, probe: ProbeSpec) -> HermitianOperator:
    """H_ST (x) 1 + 1 (x) delta |p1><p1|."""
    h = as_matrix(h_st)
    eye_s = np.eye(h.shape[0])
    return HermitianOperator(np.kron(h, np.eye(2)) + np.kron(eye_s, probe.hamiltonian), check=False)


def system_block(h1) -> np.ndarray:
    """The |p0><p0| block of a register operator, i.e. H_ST for H1 = attach_probe(H_ST, .)."""
    m = as_matrix(h1)
    d = m.shape[0] // 2
    return m.reshape(d, 2, d, 2)[:, 0, :, 0]


def check_commutes(a, h, rtol: float = COMMUTE_RTOL) -> float:
    a, h = as_operator(a), as_operator(h)
    c = np.linalg.norm(commutator(a, h), 2)
    if c > rtol * a.norm() * h.norm():
        raise ObservableNotCommuting(f"||[A, H_ST]|| = {c:.3e} exceeds tolerance")
    return float(c)


def couple_observable(h1, a) -> HermitianOperator:
    """H2 = H1 + A (x) |p1><p1|."""
    h1m, am = as_matrix(h1), as_matrix(a)
    check_commutes(am, system_block(h1m))
    return HermitianOperator(h1m + np.kron(am, P1), check=False)


def ground_expectation(h_st, a) -> float:
    """a0 = <s0|A|s0>; on a degenerate ground space the lowest compressed eigenvalue."""
    _, basis = ground_state(h_st)
    compressed = basis.conj().T @ as_matrix(a) @ basis
    return float(np.linalg.eigvalsh(0.5 * (compressed + compressed.conj().T))[0])


@dataclass(frozen=True)
class CoupledSystem:
    h_st: HermitianOperator
    a: HermitianOperator
    probe: ProbeSpec
    h1: HermitianOperator = field(init=False)
    h2: HermitianOperator = field(init=False)
    a0: float = field(init=False)

    def __post_init__(self):
        h_st, a = as_operator(self.h_st), as_operator(self.a)
        object.__setattr__(self, "h_st", h_st)
        object.__setattr__(self, "a", a)
        h1 = attach_probe(h_st, self.probe)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", couple_observable(h1, a))
        object.__setattr__(self, "a0", ground_expectation(h_st, a))

    @property
    def omega(self) -> float:
        return self.a0 + self.probe.delta

    def ground_register_state(self) -> np.ndarray:
        _, basis = ground_state(self.h_st)
        return np.kron(basis[:, 0], KET0)


class LemmaCheck(NamedTuple):
    holds: bool
    shifted: bool
    precondition: bool
    fidelity: float
    invariance_error: float


def _h2(h_s, h_p, a) -> np.ndarray:
    d = h_s.shape[0]
    return np.kron(h_s, np.eye(2)) + np.kron(np.eye(d), h_p) + np.kron(a, P1)


def verify_ground_lemma(h_s, probe: ProbeSpec, a) -> LemmaCheck:
    """Check that the ground space of H2 is ground(H_S) (x) |p0>.

    When A has a negative eigenvalue the shift H_S + a_min, H_P - a_min P0,
    A - a_min is applied and its invariance of H2 is recorded.  The shift
    leaves a_min + delta unchanged, so a failed precondition cannot be
    repaired; if the numerical check also fails, LemmaUnverifiable is raised.
    """
    hs, am = as_matrix(h_s), as_matrix(a)
    check_commutes(am, hs)
    d = hs.shape[0]
    a_min = float(np.linalg.eigvalsh(am)[0])
    precondition = a_min + probe.delta > 0
    h_p = probe.hamiltonian
    h2 = _h2(hs, h_p, am)
    shifted = a_min < 0
    invariance_error = 0.0
    if shifted:
        h2_shifted = _h2(hs + a_min * np.eye(d), h_p - a_min * P0, am - a_min * np.eye(d))
        invariance_error = float(np.max(np.abs(h2_shifted - h2)))
        h2 = h2_shifted
    _, g_h2 = ground_state(h2)
    _, g_s = ground_state(hs)
    expected = np.kron(g_s, KET0[:, None])
    fid = subspace_fidelity(g_h2, expected)
    holds = fid >= 1 - LEMMA_TOL
    if not holds and not precondition:
        raise LemmaUnverifiable(
            f"a_min + delta = {a_min + probe.delta:g} <= 0 and the ground space of H2 left the p0 sector"
        )
    return LemmaCheck(bool(holds), shifted, bool(precondition), fid, invariance_error)


def probe_hadamard(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    d = state.shape[0] // 2
    u = np.kron(np.eye(d), HADAMARD)
    return apply_unitary(u, state)


def probe_p0(state) -> float:
    """Probability of finding the probe in |p0>."""
    state = np.asarray(state, dtype=complex)
    d = state.shape[0] // 2
    if state.ndim == 1:
        return float(np.sum(np.abs(state.reshape(d, 2)[:, 0]) ** 2))
    return float(np.trace(state.reshape(d, 2, d, 2)[:, 0, :, 0]).real)


def ramsey_p0_exact(state, h2, t: float, open_noise: NoiseModel | None = None) -> float:
    """Hadamard, evolve under H2 for t, Hadamard, then P(p0)."""
    return float(ramsey_curve(state, h2, [t], open_noise)[0])


def ramsey_curve(state, h2, times: Sequence[float], open_noise: NoiseModel | None = None) -> np.ndarray:
    state = check_state(state, tol=1e-8)
    h2 = as_operator(h2)
    prepared = probe_hadamard(state)
    out = np.empty(len(times))
    if open_noise is None:
        for i, t in enumerate(times):
            out[i] = probe_p0(probe_hadamard(apply_unitary(h2.expm(t), prepared)))
    else:
        gen = ConstantGenerator(h2, open_noise)
        rho = to_density(prepared)
        for i, t in enumerate(times):
            out[i] = probe_p0(probe_hadamard(gen.evolve(rho, t)))
    return np.clip(out, 0.0, 1.0)


def degenerate_p0(weights, a: float, spectrum, delta: float, t):
    """Mode sum 1/2 (1 + sum_kl c_kl cos(w_kl t) (2a - 1)), w_kl = a_kl + delta.

    ``weights`` are the diagonal populations c_klkl of the register state in the
    joint eigenbasis of (H_S, A); ``spectrum`` lists the matching (s_k, a_kl)
    pairs; ``a`` is the initial |p0> population of the probe.
    """
    c = np.asarray(weights, dtype=float)
    spec = np.asarray(spectrum, dtype=float).reshape(-1, 2)
    if c.shape[0] != spec.shape[0]:
        raise ValueError("weights and spectrum differ in length")
    omega = spec[:, 1] + delta
    t = np.asarray(t, dtype=float)
    modes = np.cos(np.multiply.outer(t, omega)) @ c
    return 0.5 * (1 + modes * (2 * a - 1))


def thermal_p0(beta: float, spectrum, delta: float, t):
    """Boltzmann-weighted mode sum for a thermal register and the probe in |p0>.

    The normalization runs over the same (k, l) pairs as the numerator.
    """
    spec = np.asarray(spectrum, dtype=float).reshape(-1, 2)
    e = spec[:, 0]
    w = np.exp(-beta * (e - e.min()))
    return degenerate_p0(w / w.sum(), 1.0, spec, delta, t)


def joint_eigenbasis(h_s, a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common eigenvectors of commuting H_S and A with their (s, a) eigenvalues."""
    hs, am = as_matrix(h_s), as_matrix(a)
    # a generic combination has the common eigenvectors as its own
    mix = hs + np.pi / 7 * am
    _, v = np.linalg.eigh(mix)
    s = np.real(np.einsum("ij,ik,kj->j", v.conj(), hs, v))
    av = np.real(np.einsum("ij,ik,kj->j", v.conj(), am, v))
    return v, s, av


@dataclass
class RamseyDataset:
    """Shot counts per delay.  ``t`` is in internal units (1/omega0)."""

    t_seconds: np.ndarray
    shots: np.ndarray
    successes: np.ndarray
    p0_exact: np.ndarray | None = None
    omega0: float = OMEGA0

    def __post_init__(self):
        self.t_seconds = np.asarray(self.t_seconds, dtype=float)
        self.shots = np.asarray(self.shots, dtype=np.int64)
        self.successes = np.asarray(self.successes, dtype=np.int64)
        if self.p0_exact is not None:
            self.p0_exact = np.asarray(self.p0_exact, dtype=float)
        if np.any(self.successes < 0) or np.any(self.successes > self.shots):
            raise ValueError("successes must lie in [0, shots]")
        if np.any(self.t_seconds < 0) or np.any(np.diff(self.t_seconds) <= 0):
            raise ValueError("delays must be non-negative and strictly increasing")

    @property
    def t(self) -> np.ndarray:
        return self.t_seconds * self.omega0

    @property
    def p0_hat(self) -> np.ndarray:
        return self.successes / self.shots

    def __len__(self):
        return len(self.t_seconds)

    COLUMNS = ("t_index", "t_seconds", "shots", "successes", "p0_exact", "p0_hat")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for i in range(len(self)):
                p = "" if self.p0_exact is None else repr(float(self.p0_exact[i]))
                w.writerow([i, repr(float(self.t_seconds[i])), int(self.shots[i]), int(self.successes[i]), p, repr(float(self.p0_hat[i]))])

    @classmethod
    def from_csv(cls, path, omega0: float = OMEGA0) -> "RamseyDataset":
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty dataset")
        rows.sort(key=lambda r: int(r["t_index"]))
        exact = [r.get("p0_exact", "") for r in rows]
        p0 = None if any(x in ("", None) for x in exact) else [float(x) for x in exact]
        return cls(
            [float(r["t_seconds"]) for r in rows],
            [int(r["shots"]) for r in rows],
            [int(r["successes"]) for r in rows],
            p0,
            omega0,
        )


def scan_times(t_max: float, n_points: int) -> np.ndarray:
    """n_points evenly spaced delays on (0, t_max]."""
    return t_max * np.arange(1, n_points + 1) / n_points


def run_scan(
    system: CoupledSystem,
    t_max: float,
    n_points: int = 40,
    shots: int = 50,
    rng_seed=None,
    noise: NoiseModel | None = None,
    state=None,
    omega0: float = OMEGA0,
) -> RamseyDataset:
    """Ramsey scan with binomial shot sampling.

    ``state`` is the register state at the start of every point (default: the
    pure ground state).  Point i draws from its own spawned substream of
    ``rng_seed``.
    """
    if n_points < 2:
        raise ValueError("need at least two delays")
    if shots < 1:
        raise ValueError("need at least one shot per delay")
    if state is None:
        state = system.ground_register_state()
    t_seconds = scan_times(t_max, n_points) / omega0
    t = t_seconds * omega0
    p0 = ramsey_curve(state, system.h2, t, noise)
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    streams = seq.spawn(n_points)
    successes = [int(np.random.default_rng(s).binomial(shots, p)) for s, p in zip(streams, p0)]
    return RamseyDataset(t_seconds, np.full(n_points, shots), successes, p0, omega0)
