"""Adiabatic interpolation, closed-system propagation and spectral-gap scans.

States are plain numpy arrays: 1-D for state vectors, 2-D for density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import BadInitialState, BadState, DimensionError, InvalidPathParameter
from .spin_model import HermitianOperator, as_matrix, as_operator, ground_state, spectral_decomposition

STATE_TOL = 1e-9
GROUND_TOL = 1e-9
DEFAULT_STEPS = 10_000

HamiltonianPath = Union[Callable[[float], object], HermitianOperator, np.ndarray]


def linear_path(x: float) -> float:
    return x


@dataclass(frozen=True)
class Schedule:
    """s(t) = path(t / total_time) over ``n_steps`` propagation steps."""

    total_time: float
    n_steps: int = DEFAULT_STEPS
    path: Callable[[float], float] = linear_path

    def __post_init__(self):
        if self.total_time < 0:
            raise ValueError("total_time must be non-negative")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.path(0.0) != 0.0 or self.path(1.0) != 1.0:
            raise InvalidPathParameter("schedule path must satisfy s(0) = 0 and s(1) = 1")

    def s(self, t: float) -> float:
        if self.total_time == 0:
            return 1.0
        return float(np.clip(self.path(t / self.total_time), 0.0, 1.0))


# -- state helpers ----------------------------------------------------------


def is_density(state: np.ndarray) -> bool:
    return np.ndim(state) == 2


def check_state(state, tol: float = STATE_TOL) -> np.ndarray:
    """Validate a state vector or density matrix and return it as a complex array."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        norm = np.linalg.norm(state)
        if abs(norm - 1) > tol:
            raise BadState(f"state vector norm {norm} differs from 1")
        return state
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise BadState(f"not a state: shape {state.shape}")
    if np.max(np.abs(state - state.conj().T)) > tol:
        raise BadState("density matrix is not Hermitian")
    tr = np.trace(state).real
    if abs(tr - 1) > tol:
        raise BadState(f"density matrix trace {tr} differs from 1")
    if np.linalg.eigvalsh(state)[0] < -tol:
        raise BadState("density matrix has a negative eigenvalue")
    return state


def to_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def subspace_population(state, basis: np.ndarray) -> float:
    """<psi|P|psi> or tr(P rho) for the projector onto span(basis columns)."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        amp = basis.conj().T @ state
        return float(np.vdot(amp, amp).real)
    return float(np.trace(basis.conj().T @ state @ basis).real)


def apply_unitary(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    if state.ndim == 1:
        return u @ state
    return u @ state @ u.conj().T


# -- Hamiltonians -----------------------------------------------------------


def interpolate(h_initial, h_target, s: float) -> HermitianOperator:
    """(1 - s) H_I + s H_T."""
    if not 0.0 <= s <= 1.0:
        raise InvalidPathParameter(f"path parameter {s} outside [0, 1]")
    a, b = as_matrix(h_initial), as_matrix(h_target)
    if a.shape != b.shape:
        raise DimensionError(f"shapes {a.shape} and {b.shape} differ")
    return HermitianOperator((1.0 - s) * a + s * b, check=False)


def adiabatic_path(h_initial, h_target, schedule: Schedule) -> Callable[[float], HermitianOperator]:
    a, b = as_matrix(h_initial), as_matrix(h_target)
    return lambda t: interpolate(a, b, schedule.s(t))


def _path_at(path: HamiltonianPath, t: float) -> HermitianOperator:
    if callable(path) and not isinstance(path, (HermitianOperator, np.ndarray)):
        return as_operator(path(t))
    return as_operator(path)


def _is_constant(path: HamiltonianPath) -> bool:
    return isinstance(path, (HermitianOperator, np.ndarray))


def evolve_closed(state, hamiltonian_path: HamiltonianPath, t0: float, t1: float, n_steps: int = 1) -> np.ndarray:
    """Product of midpoint step propagators exp(-i H(t_mid) dt) from t0 to t1."""
    state = np.array(state, dtype=complex)
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if t1 == t0:
        return state
    dt = (t1 - t0) / n_steps
    if _is_constant(hamiltonian_path):
        u = as_operator(hamiltonian_path).expm(t1 - t0)
        return apply_unitary(u, state)
    for k in range(n_steps):
        h = _path_at(hamiltonian_path, t0 + (k + 0.5) * dt)
        state = apply_unitary(h.expm(dt), state)
    return state


def spectral_gap(h) -> float:
    spaces = spectral_decomposition(h)
    if len(spaces) < 2:
        return float("inf")
    return spaces[1].value - spaces[0].value


def gap_profile(h_initial, h_target, resolution: int = 101) -> tuple[np.ndarray, np.ndarray]:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    s_grid = np.linspace(0.0, 1.0, resolution)
    gaps = np.array([spectral_gap(interpolate(h_initial, h_target, s)) for s in s_grid])
    return s_grid, gaps


def min_gap(h_initial, h_target, resolution: int = 101) -> tuple[float, float]:
    """Smallest ground-to-first-distinct-level gap along the linear path, and where it occurs."""
    s_grid, gaps = gap_profile(h_initial, h_target, resolution)
    k = int(np.argmin(gaps))
    return float(gaps[k]), float(s_grid[k])


def adiabatic_prepare(h_initial, h_target, schedule: Schedule, initial, noise=None):
    """Sweep from H_I to H_T; return the final state and its ground-subspace population.

    With ``noise`` (a NoiseModel) the sweep runs under the Lindblad generator and
    the result is a density matrix.
    """
    initial = check_state(initial)
    _, g_init = ground_state(h_initial)
    if subspace_population(initial, g_init) < 1 - GROUND_TOL:
        raise BadInitialState("initial state is not in the ground subspace of H_I")
    path = adiabatic_path(h_initial, h_target, schedule)
    if noise is None:
        final = evolve_closed(initial, path, 0.0, schedule.total_time, schedule.n_steps)
    else:
        from .noise import evolve_open

        final = evolve_open(to_density(initial), path, noise, 0.0, schedule.total_time, schedule.n_steps)
    _, g_target = ground_state(h_target)
    return final, subspace_population(final, g_target)
