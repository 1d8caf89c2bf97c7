"""Perturbative gadget: a 3-body coupling J*A1 A2 A3 from 2-body terms and a mediator qubit.

Register order is (1, 2, 3, m) with the mediator as the last tensor factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidGadgetOperator, InvalidGap, RangeWarning
from .spin_model import PAULI, HermitianOperator, as_matrix, kron_all

C_GADGET = 10.0
DEFAULT_GRID = 21

_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)
_I2 = PAULI["I"]
_I8 = np.eye(8, dtype=complex)


def _single(label_or_matrix) -> np.ndarray:
    if isinstance(label_or_matrix, str):
        return PAULI[label_or_matrix.upper()]
    return as_matrix(label_or_matrix)


@dataclass(frozen=True)
class GadgetSpec:
    J: float
    epsilon: float
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    delta: float | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidGap("epsilon must be positive")
        bound = self.epsilon**-3
        delta = bound if self.delta is None else float(self.delta)
        if delta < bound * (1 - 1e-12):
            raise InvalidGap(f"gap {delta} violates delta >= epsilon^-3 = {bound}")
        object.__setattr__(self, "delta", delta)
        for name in ("A1", "A2", "A3"):
            a = _single(getattr(self, name))
            if a.shape != (2, 2):
                raise InvalidGadgetOperator(f"{name} must be a single-qubit operator")
            if not np.allclose(a, a.conj().T, atol=1e-12):
                raise InvalidGadgetOperator(f"{name} is not Hermitian")
            if not np.allclose(a @ a, _I2, atol=1e-12):
                raise InvalidGadgetOperator(f"{name} is not an involution (A^2 != 1)")
            object.__setattr__(self, name, a)
        y = np.zeros((8, 8), dtype=complex) if self.y is None else as_matrix(self.y)
        if y.shape != (8, 8):
            raise InvalidGadgetOperator("background y must act on qubits 1-3 (8x8)")
        object.__setattr__(self, "y", y)

    @classmethod
    def from_labels(cls, labels: str, J: float, epsilon: float, **kw) -> "GadgetSpec":
        if len(labels) != 3:
            raise InvalidGadgetOperator("need exactly three operator labels")
        return cls(J, epsilon, *(PAULI[c.upper()] for c in labels), **kw)

    @property
    def z_range(self) -> float:
        return 2 * abs(self.J) + self.epsilon

    def target(self) -> np.ndarray:
        """y + J A1 A2 A3 on qubits 1-3."""
        return self.y + self.J * kron_all([self.A1, self.A2, self.A3])


def build_penalty(delta: float, n_qubits: int = 4) -> HermitianOperator:
    """Delta |1><1| on the mediator (last qubit), identity on the other ``n_qubits - 1``."""
    if delta <= 0:
        raise InvalidGap(f"penalty gap must be positive, got {delta}")
    rest = np.eye(2 ** (n_qubits - 1), dtype=complex)
    return HermitianOperator(delta * np.kron(rest, _P1), check=False)


def build_perturbation(spec: GadgetSpec) -> HermitianOperator:
    d13 = spec.delta ** (1 / 3)
    d23 = spec.delta ** (2 / 3)
    a1 = kron_all([spec.A1, _I2, _I2])
    a2 = kron_all([_I2, spec.A2, _I2])
    a3 = kron_all([_I2, _I2, spec.A3])
    v = (
        np.kron(spec.y, _I2)
        + d13 * np.kron(_I8, _P0)
        - d13 * np.kron(a1 @ a2, _I2)
        + d23 / np.sqrt(2) * np.kron(a2 - a1, PAULI["X"])
        + spec.J * np.kron(a3, _I2 - d23 * _P1)
    )
    return HermitianOperator(v)


def mediator_blocks(v) -> np.ndarray:
    """blocks[i, j] = <i|V|j>_m as 8x8 operators on qubits 1-3."""
    m = as_matrix(v).reshape(8, 2, 8, 2)
    return np.transpose(m, (1, 3, 0, 2))


def self_energy(z: float, spec: GadgetSpec, v=None) -> HermitianOperator:
    """Self-energy series truncated after the (z - Delta)^-2 term."""
    if abs(z) > spec.z_range * (1 + 1e-12):
        warnings.warn(f"|z| = {abs(z):g} outside |z| <= 2|J| + eps = {spec.z_range:g}", RangeWarning)
    if v is None:
        v = build_perturbation(spec)
    b = mediator_blocks(v)
    v00, v01, v10, v11 = b[0, 0], b[0, 1], b[1, 0], b[1, 1]
    g = 1.0 / (z - spec.delta)
    sigma = v00 + g * (v01 @ v10) + g * g * (v01 @ v11 @ v10)
    return HermitianOperator(sigma)


def default_grid(spec: GadgetSpec, points: int = DEFAULT_GRID) -> np.ndarray:
    return np.linspace(-spec.z_range, spec.z_range, points)


class GadgetReport(NamedTuple):
    max_error: float
    passed: bool
    spectrum_deviation: float


def low_spectrum(spec: GadgetSpec) -> tuple[np.ndarray, np.ndarray]:
    """Eight lowest eigenvalues and eigenvectors of H_p + V."""
    h = build_penalty(spec.delta) + build_perturbation(spec)
    w, vecs = h.eigh()
    return np.array(w[:8]), np.array(vecs[:, :8])


def mediator_ground_overlap(spec: GadgetSpec) -> float:
    """Smallest weight any of the 8 lowest eigenvectors places in the |0>_m sector."""
    _, vecs = low_spectrum(spec)
    weights = np.sum(np.abs(vecs.reshape(8, 2, 8)[:, 0, :]) ** 2, axis=0)
    return float(np.min(weights))


def verify_gadget(spec: GadgetSpec, z_grid: Sequence[float] | None = None) -> GadgetReport:
    """Compare the truncated self-energy and the low spectrum with y + J A1 A2 A3.

    The Delta^(1/3) offsets in <0|V|0> cancel against the leading part of the
    second-order term, so the self-energy is compared with the target directly.
    """
    if z_grid is None:
        z_grid = default_grid(spec)
    v = build_perturbation(spec)
    target = spec.target()
    max_error = 0.0
    for z in z_grid:
        diff = self_energy(float(z), spec, v).matrix - target
        max_error = max(max_error, float(np.linalg.norm(diff, 2)))
    low, _ = low_spectrum(spec)
    ideal = np.linalg.eigvalsh(target)
    spectrum_deviation = float(np.max(np.abs(low - ideal)))
    bound = C_GADGET * spec.epsilon
    passed = max_error <= bound and spectrum_deviation <= bound
    return GadgetReport(max_error, bool(passed), spectrum_deviation)
