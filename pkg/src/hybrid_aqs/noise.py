"""Born-Markov open-system dynamics with one independent Ohmic bath per qubit.

Physical inputs (times, temperature, cutoff, level splitting) are SI; the
propagator works in internal units where hbar = 1 and energies are in units
of hbar*omega0, so times are in units of 1/omega0.  The coupling strength
lambda is dimensionless and therefore unit independent.

Jump operators follow the secular (Davies) construction: each qubit's
coupling operator is split into Bohr-frequency components in the
instantaneous eigenbasis of the total Hamiltonian, with rates

    gamma(w) = 2*pi * J(|w|) * (N(|w|) + 1)   for w > 0 (emission)
    gamma(w) = 2*pi * J(|w|) * N(|w|)         for w < 0 (absorption)
    gamma(0) = 2*pi / beta

which reproduce the single-qubit T1 and T2 formulas exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy import constants, integrate, stats

from .errors import BadState, ConfigError, Unphysical
from .evolution import HamiltonianPath, _is_constant, _path_at, check_state
from .spin_model import PAULI, HermitianOperator, as_operator, embed

HBAR = constants.hbar
K_B = constants.k
OMEGA0 = 2 * math.pi * 25e6  # rad/s
MICRO = 1e-6
MILLI = 1e-3

_LAMB_GRID_POINTS = 801


def ohmic_density(omega: float, omega_c: float) -> float:
    """J(w) = w for 0 < w < w_c, zero otherwise (hbar = 1)."""
    omega = np.asarray(omega, dtype=float)
    out = np.where((omega > 0) & (omega < omega_c), omega, 0.0)
    return float(out) if out.ndim == 0 else out


def bose(omega, beta):
    return 1.0 / np.expm1(beta * np.asarray(omega, dtype=float))


def transition_rate(omega, beta: float, omega_c: float):
    """gamma(w) per unit lambda^2, in the same units as w (see module docstring)."""
    w = np.asarray(omega, dtype=float)
    small = np.abs(beta * w) < 1e-12
    safe = np.where(small, 1.0, w)
    # w * (N(w) + 1) = w / (1 - exp(-beta w)) covers both signs of w
    val = np.where(small, 1.0 / beta, safe / -np.expm1(-beta * safe))
    val = np.where(np.abs(w) < omega_c, val, 0.0)
    out = 2 * np.pi * val
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=16)
def _lamb_table(beta: float, omega_c: float) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(-0.98 * omega_c, 0.98 * omega_c, _LAMB_GRID_POINTS)

    def rate(w):
        return transition_rate(w, beta, omega_c)

    vals = np.empty_like(grid)
    for i, w in enumerate(grid):
        # quad's cauchy weight gives PV int f(x) / (x - w)
        pv, _ = integrate.quad(rate, -omega_c, omega_c, weight="cauchy", wvar=w, limit=200)
        vals[i] = -pv / (2 * np.pi)
    vals.setflags(write=False)
    return grid, vals


def lamb_shift_function(omega, beta: float, omega_c: float):
    """S(w) = (1/2pi) PV int gamma(w') / (w - w') dw', per unit lambda^2."""
    grid, vals = _lamb_table(float(beta), float(omega_c))
    return np.interp(omega, grid, vals)


def coupling_operator(lam: float, alpha: float) -> HermitianOperator:
    """lambda (cos(alpha) sigma_z + sin(alpha) sigma_x)."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return HermitianOperator(lam * (math.cos(alpha) * PAULI["Z"] + math.sin(alpha) * PAULI["X"]), check=False)


def t2_from(t1: float, t_phi: float) -> float:
    return 1.0 / (0.5 / t1 + 1.0 / t_phi)


def forward_rates(lam: float, alpha: float, temperature: float, delta_q: float) -> tuple[float, float]:
    """(1/T1, 1/T2) in 1/s from bath coupling (lambda, alpha); SI inputs."""
    beta_hbar = HBAR / (K_B * temperature)
    inv_t1 = lam**2 * math.sin(alpha) ** 2 * 2 * math.pi * delta_q / math.tanh(beta_hbar * delta_q / 2)
    inv_t2 = 0.5 * inv_t1 + lam**2 * math.cos(alpha) ** 2 * 4 * math.pi / beta_hbar
    return inv_t1, inv_t2


def solve_coupling(t1: float, t2: float, temperature: float, delta_q: float) -> tuple[float, float]:
    """Invert the single-qubit T1/T2 formulas for (lambda, alpha), alpha in [0, pi/2].

    SI inputs: seconds, kelvin, rad/s.  ``t1 = inf`` is allowed (no relaxation).
    """
    if temperature <= 0:
        raise Unphysical("temperature must be positive")
    if not (t1 > 0 and t2 > 0):
        raise Unphysical("decoherence times must be positive")
    inv_t1 = 0.0 if math.isinf(t1) else 1.0 / t1
    pure = 1.0 / t2 - 0.5 * inv_t1
    if pure < -1e-12 * (1.0 / t2):
        raise Unphysical(f"T2 = {t2:g} exceeds 2*T1 = {2 * t1:g}")
    pure = max(pure, 0.0)
    beta_hbar = HBAR / (K_B * temperature)
    x = inv_t1 * math.tanh(beta_hbar * delta_q / 2) / (2 * math.pi * delta_q)  # lambda^2 sin^2
    y = pure * beta_hbar / (4 * math.pi)  # lambda^2 cos^2
    lam = math.sqrt(x + y)
    alpha = math.atan2(math.sqrt(x), math.sqrt(y))
    return lam, alpha


@dataclass(frozen=True)
class BathSpec:
    """One qubit's bath.  SI units: seconds, kelvin, rad/s."""

    T1: float
    T_phi: float
    temperature: float = 20 * MILLI
    omega_c: float = 20 * OMEGA0
    delta_q: float = OMEGA0
    lam: float = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self):
        if not (self.T1 > 0 and self.T_phi > 0):
            raise Unphysical("T1 and T_phi must be positive")
        lam, alpha = solve_coupling(self.T1, self.T2, self.temperature, self.delta_q)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", alpha)

    @property
    def T2(self) -> float:
        return t2_from(self.T1, self.T_phi)

    @classmethod
    def decoupled(cls, **kw) -> "BathSpec":
        """A bath with lambda = 0."""
        spec = cls(T1=1.0, T_phi=1.0, **kw)
        object.__setattr__(spec, "lam", 0.0)
        return spec


@dataclass(frozen=True)
class NoiseModel:
    """Uncorrelated per-qubit baths; ``omega0`` sets the internal energy unit."""

    baths: tuple[BathSpec, ...]
    omega0: float = OMEGA0
    lamb_shift: bool = True

    def __post_init__(self):
        object.__setattr__(self, "baths", tuple(self.baths))

    @property
    def n_qubits(self) -> int:
        return len(self.baths)

    def beta(self, q: int) -> float:
        """Inverse temperature in units of 1/(hbar omega0)."""
        return HBAR * self.omega0 / (K_B * self.baths[q].temperature)

    def cutoff(self, q: int) -> float:
        return self.baths[q].omega_c / self.omega0

    def coupling(self, q: int) -> np.ndarray:
        b = self.baths[q]
        return embed(coupling_operator(b.lam, b.alpha).matrix, q, self.n_qubits)

    def to_internal_time(self, seconds: float) -> float:
        return seconds * self.omega0


def _frequency_labels(omega: np.ndarray, tol: float) -> np.ndarray:
    flat = omega.ravel()
    order = np.argsort(flat, kind="stable")
    steps = np.diff(flat[order]) > tol
    labels_sorted = np.concatenate([[0], np.cumsum(steps)])
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return labels.reshape(omega.shape)


def eigenbasis_generator(h, noise: NoiseModel) -> tuple[np.ndarray, np.ndarray]:
    """Liouvillian in the eigenbasis of ``h`` (row-major vectorization) and that basis."""
    op = as_operator(h)
    energies, vecs = op.eigh()
    d = op.dim
    if d != 2**noise.n_qubits:
        raise ValueError(f"noise model covers {noise.n_qubits} qubits, Hamiltonian has dimension {d}")
    omega = energies[None, :] - energies[:, None]  # omega[a, b] = E_b - E_a
    labels = _frequency_labels(omega, 1e-9 * max(1.0, float(np.max(np.abs(energies)))))
    same_jump = labels[:, :, None, None] == labels[None, None, :, :]  # [a,b,c,d]: w_ab == w_cd
    same_row = labels[:, :, None] == labels[:, None, :]  # [a,b,d]: w_ab == w_ad

    eye = np.eye(d)
    jump = np.zeros((d, d, d, d), dtype=complex)
    k = np.zeros((d, d), dtype=complex)
    h_ls = np.zeros((d, d), dtype=complex)
    for q in range(noise.n_qubits):
        if noise.baths[q].lam == 0:
            continue
        m = vecs.conj().T @ noise.coupling(q) @ vecs
        beta, wc = noise.beta(q), noise.cutoff(q)
        g = transition_rate(omega, beta, wc) * m
        jump += g[:, :, None, None] * m.conj()[None, None, :, :] * same_jump
        k += np.einsum("ab,ad,abd->bd", g.conj(), m, same_row)
        if noise.lamb_shift:
            s = lamb_shift_function(omega, beta, wc) * m
            h_ls += np.einsum("ab,ad,abd->bd", s.conj(), m, same_row)

    h_eff = np.diag(energies).astype(complex) + 0.5 * (h_ls + h_ls.conj().T)
    k = 0.5 * (k + k.conj().T)
    lindblad = -1j * (np.kron(h_eff, eye) - np.kron(eye, h_eff.T))
    lindblad += jump.transpose(0, 2, 1, 3).reshape(d * d, d * d)
    lindblad -= 0.5 * (np.kron(k, eye) + np.kron(eye, k.T))
    return lindblad, np.array(vecs)


def _step(rho: np.ndarray, h, noise: NoiseModel, dt: float) -> np.ndarray:
    lindblad, v = eigenbasis_generator(h, noise)
    d = v.shape[0]
    r = v.conj().T @ rho @ v
    r = (scipy.linalg.expm(lindblad * dt) @ r.reshape(-1)).reshape(d, d)
    rho = v @ r @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


def evolve_open(rho, hamiltonian_path: HamiltonianPath, noise: NoiseModel, t0: float, t1: float, n_steps: int = 1) -> np.ndarray:
    """Integrate the master equation with a piecewise-constant (midpoint) generator."""
    try:
        rho = check_state(rho, tol=1e-8)
    except BadState:
        raise
    if rho.ndim != 2:
        raise BadState("evolve_open needs a density matrix")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if t1 == t0:
        return rho.copy()
    if _is_constant(hamiltonian_path):
        return _step(rho, as_operator(hamiltonian_path), noise, t1 - t0)
    dt = (t1 - t0) / n_steps
    for k in range(n_steps):
        rho = _step(rho, _path_at(hamiltonian_path, t0 + (k + 0.5) * dt), noise, dt)
    return rho


class ConstantGenerator:
    """Liouvillian of a fixed Hamiltonian, built once and reused for many evolution times."""

    def __init__(self, h, noise: NoiseModel):
        self.lindblad, self.basis = eigenbasis_generator(h, noise)

    def evolve(self, rho: np.ndarray, t: float) -> np.ndarray:
        v = self.basis
        d = v.shape[0]
        r = v.conj().T @ rho @ v
        r = (scipy.linalg.expm(self.lindblad * t) @ r.reshape(-1)).reshape(d, d)
        rho = v @ r @ v.conj().T
        return 0.5 * (rho + rho.conj().T)


def sample_bath_parameters(
    rng_seed,
    n_qubits: int,
    t1_mean: float = 1.0 * MICRO,
    t1_sd: float = 0.1 * MICRO,
    tphi_mean: float = 1.3 * MICRO,
    tphi_sd: float = 0.1 * MICRO,
) -> list[tuple[float, float]]:
    """Per-qubit (T1, T_phi) drawn from Gaussians truncated at 3 sigma; seconds."""
    rng = np.random.default_rng(rng_seed)

    def draw(mean, sd):
        if sd == 0:
            return np.full(n_qubits, float(mean))
        return stats.truncnorm.rvs(-3, 3, loc=mean, scale=sd, size=n_qubits, random_state=rng)

    t1 = draw(t1_mean, t1_sd)
    tphi = draw(tphi_mean, tphi_sd)
    if np.any(t1 <= 0) or np.any(tphi <= 0):
        raise Unphysical("3-sigma truncation still admits non-positive times; reduce the spread")
    return [(float(a), float(b)) for a, b in zip(t1, tphi)]


@dataclass(frozen=True)
class NoiseConfig:
    """The JSON noise block; defaults describe a 20 mK ohmic bath with T1 ~ 1 us."""

    enabled: bool = True
    temperature_mK: float = 20.0
    omega_c_over_omega0: float = 20.0
    T1_mean_us: float = 1.0
    T1_sd_us: float = 0.1
    Tphi_mean_us: float = 1.3
    Tphi_sd_us: float = 0.1
    lamb_shift: bool = True
    seed: int | None = None

    @classmethod
    def from_dict(cls, data: dict | None) -> "NoiseConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def build(self, n_qubits: int, omega0: float = OMEGA0, rng_seed=None) -> NoiseModel:
        seed = self.seed if rng_seed is None else rng_seed
        draws = sample_bath_parameters(
            seed,
            n_qubits,
            self.T1_mean_us * MICRO,
            self.T1_sd_us * MICRO,
            self.Tphi_mean_us * MICRO,
            self.Tphi_sd_us * MICRO,
        )
        baths = [
            BathSpec(
                T1=t1,
                T_phi=tphi,
                temperature=self.temperature_mK * MILLI,
                omega_c=self.omega_c_over_omega0 * omega0,
                delta_q=omega0,
            )
            for t1, tphi in draws
        ]
        return NoiseModel(tuple(baths), omega0=omega0, lamb_shift=self.lamb_shift)


def max_transition(h: Sequence | HermitianOperator) -> float:
    w, _ = as_operator(h).eigh()
    return float(w[-1] - w[0])
