from __future__ import annotations

import numpy as np
import pytest

from hybrid_aqs.spin_model import PAULI


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (m + m.conj().T) / 2


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def naive_kron(labels: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, written out with an explicit loop."""
    out = np.array([[1.0 + 0j]])
    for c in labels:
        out = np.kron(out, PAULI[c])
    return out


def commuting_pair(rng: np.random.Generator, dim: int, a_spread: float = 1.0):
    """(H_S, A) diagonal in a shared random basis, returned with their eigenvalues."""
    u = random_unitary(rng, dim)
    s = np.sort(rng.uniform(-1, 1, dim))
    a = rng.uniform(-a_spread, a_spread, dim)
    return u @ np.diag(s) @ u.conj().T, u @ np.diag(a) @ u.conj().T, s, a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
