"""Spin-graph Hamiltonians and the dense Hermitian operator type used everywhere else.

Conventions: qubit 0 is the leftmost (most significant) tensor factor, and
``Z|0> = |0>``.  Energies are in units of hbar*omega0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import DimensionError, InvalidGraph, NotHermitian

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

MAX_BODY = 3
HERMITIAN_RTOL = 1e-12
DEGENERACY_RTOL = 1e-9


class HermitianOperator:
    """Immutable dense Hermitian matrix with a lazily cached eigendecomposition."""

    __slots__ = ("_matrix", "_eig")

    def __init__(self, matrix, *, check: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if check:
            scale = np.max(np.abs(m)) if m.size else 0.0
            asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if asym > HERMITIAN_RTOL * scale:
                raise NotHermitian(f"max|M - M^dagger| = {asym:.3e} exceeds tolerance")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self._matrix = m
        self._eig = None

    @classmethod
    def zeros(cls, dim: int) -> "HermitianOperator":
        return cls(np.zeros((dim, dim)), check=False)

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim), check=False)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        n = int(round(math.log2(self.dim))) if self.dim else 0
        if 2**n != self.dim:
            raise DimensionError(f"dimension {self.dim} is not a power of two")
        return n

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and orthonormal eigenvector columns (cached, read-only)."""
        if self._eig is None:
            w, v = np.linalg.eigh(self._matrix)
            w.setflags(write=False)
            v.setflags(write=False)
            self._eig = (w, v)
        return self._eig

    def norm(self) -> float:
        """Spectral norm."""
        w, _ = self.eigh()
        return float(np.max(np.abs(w))) if w.size else 0.0

    @property
    def degeneracy_tol(self) -> float:
        return DEGENERACY_RTOL * max(1.0, self.norm())

    def kron(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(np.kron(self._matrix, as_matrix(other)), check=False)

    def expm(self, t: float) -> np.ndarray:
        """exp(-i H t) through the cached eigendecomposition."""
        w, v = self.eigh()
        return (v * np.exp(-1j * w * t)) @ v.conj().T

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._matrix
        return self._matrix.astype(dtype)

    def __add__(self, other):
        return HermitianOperator(self._matrix + as_matrix(other), check=False)

    __radd__ = __add__

    def __sub__(self, other):
        return HermitianOperator(self._matrix - as_matrix(other), check=False)

    def __rsub__(self, other):
        return HermitianOperator(as_matrix(other) - self._matrix, check=False)

    def __neg__(self):
        return HermitianOperator(-self._matrix, check=False)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            return NotImplemented
        return HermitianOperator(float(np.real(scalar)) * self._matrix, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self._matrix @ np.asarray(other)

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def as_matrix(op) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def as_operator(op) -> HermitianOperator:
    if isinstance(op, HermitianOperator):
        return op
    return HermitianOperator(op)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def embed(op, site: int, n: int) -> np.ndarray:
    """Place a single-qubit matrix on ``site`` of an ``n``-qubit register."""
    if not 0 <= site < n:
        raise InvalidGraph(f"site {site} out of range for {n} qubits")
    m = as_matrix(op)
    return kron_all(PAULI["I"] if k != site else m for k in range(n))


def pauli_matrix(label: str, site: int, n: int) -> HermitianOperator:
    label = label.upper()
    if label not in PAULI:
        raise InvalidGraph(f"unknown Pauli label {label!r}")
    return HermitianOperator(embed(PAULI[label], site, n), check=False)


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * P_0 (x) P_1 (x) ... (x) P_{n-1}`` with ``paulis`` a string over IXYZ."""

    coefficient: float
    paulis: str

    def __post_init__(self):
        c = self.coefficient
        if isinstance(c, complex) or not math.isfinite(float(c)):
            raise InvalidGraph(f"coefficient must be finite and real, got {c!r}")
        object.__setattr__(self, "coefficient", float(c))
        p = self.paulis.upper()
        if not p or set(p) - set("IXYZ"):
            raise InvalidGraph(f"bad Pauli string {self.paulis!r}")
        object.__setattr__(self, "paulis", p)
        if len(self.support) > MAX_BODY:
            raise InvalidGraph(f"term {p} acts on more than {MAX_BODY} sites")

    @classmethod
    def on_sites(cls, coefficient: float, n: int, sites: Sequence[int], paulis: str) -> "PauliTerm":
        if len(sites) != len(paulis):
            raise InvalidGraph("sites and Pauli labels differ in length")
        labels = ["I"] * n
        for s, p in zip(sites, paulis):
            if not 0 <= s < n:
                raise InvalidGraph(f"site {s} out of range for {n} vertices")
            if labels[s] != "I":
                raise InvalidGraph(f"site {s} repeated in one term")
            labels[s] = p
        return cls(coefficient, "".join(labels))

    @property
    def n_sites(self) -> int:
        return len(self.paulis)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.paulis) if p != "I")

    def sort_key(self):
        return (self.support, self.paulis, self.coefficient)

    def to_matrix(self) -> np.ndarray:
        return self.coefficient * kron_all(PAULI[p] for p in self.paulis)


@dataclass(frozen=True)
class SpinGraph:
    """Local fields on vertices plus pairwise couplings on edges."""

    n_vertices: int
    local_terms: tuple[PauliTerm, ...] = field(default_factory=tuple)
    edge_terms: tuple[PauliTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "local_terms", tuple(self.local_terms))
        object.__setattr__(self, "edge_terms", tuple(self.edge_terms))
        self.validate()

    def validate(self) -> None:
        n = self.n_vertices
        if n < 1:
            raise InvalidGraph("graph needs at least one vertex")
        for term in self.local_terms + self.edge_terms:
            if term.n_sites != n:
                raise InvalidGraph(f"term {term.paulis} does not span {n} vertices")
        for term in self.local_terms:
            if len(term.support) != 1:
                raise InvalidGraph(f"local term {term.paulis} must touch exactly one site")
        for term in self.edge_terms:
            if len(term.support) != 2:
                # also rules out self-loops: a term cannot repeat a site
                raise InvalidGraph(f"edge term {term.paulis} must touch exactly two sites")

    @property
    def terms(self) -> list[PauliTerm]:
        return sorted(self.local_terms + self.edge_terms, key=PauliTerm.sort_key)

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {t.support for t in self.edge_terms}

    def __add__(self, other: "SpinGraph") -> "SpinGraph":
        if other.n_vertices != self.n_vertices:
            raise InvalidGraph("graphs live on different vertex sets")
        return SpinGraph(
            self.n_vertices,
            self.local_terms + other.local_terms,
            self.edge_terms + other.edge_terms,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "SpinGraph":
        try:
            n = int(data["n"])
            local = [
                PauliTerm.on_sites(float(t["coeff"]), n, [int(t["site"])], str(t["pauli"]))
                for t in data.get("local", [])
            ]
            edges = []
            for t in data.get("edges", []):
                sites = [int(s) for s in t["sites"]]
                paulis = str(t["paulis"]).upper()
                if len(sites) != 2 or len(paulis) != 2 or "I" in paulis:
                    raise InvalidGraph(f"edge entry {t!r} needs two sites and two labels from XYZ")
                if sites[0] == sites[1]:
                    raise InvalidGraph(f"self-loop on site {sites[0]}")
                edges.append(PauliTerm.on_sites(float(t["coeff"]), n, sites, paulis))
        except (KeyError, TypeError) as exc:
            raise InvalidGraph(f"malformed graph description: {exc}") from exc
        return cls(n, local, edges)

    def to_dict(self) -> dict:
        return {
            "n": self.n_vertices,
            "local": [
                {"site": t.support[0], "pauli": t.paulis[t.support[0]], "coeff": t.coefficient}
                for t in self.local_terms
            ],
            "edges": [
                {
                    "sites": list(t.support),
                    "paulis": "".join(t.paulis[s] for s in t.support),
                    "coeff": t.coefficient,
                }
                for t in self.edge_terms
            ],
        }


def build_hamiltonian(graph: SpinGraph) -> HermitianOperator:
    """Sum of all local and edge terms as a 2^n x 2^n matrix (canonical summation order)."""
    graph.validate()
    dim = 2**graph.n_vertices
    h = np.zeros((dim, dim), dtype=complex)
    for term in graph.terms:
        h += term.to_matrix()
    return HermitianOperator(h, check=False)


def random_graph(n: int, rng: np.random.Generator, scale: float = 1.0) -> SpinGraph:
    """Random Z/X fields on every vertex and ZZ/XX couplings on every pair, coefficients in [-scale, scale]."""
    local = []
    for v in range(n):
        for p in "ZX":
            local.append(PauliTerm.on_sites(rng.uniform(-scale, scale), n, [v], p))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            for p in ("ZZ", "XX"):
                edges.append(PauliTerm.on_sites(rng.uniform(-scale, scale), n, [i, j], p))
    return SpinGraph(n, local, edges)


def transverse_field_graph(n: int, strength: float = 1.0) -> SpinGraph:
    """-strength * sum_v X_v; unique ground state |+...+>."""
    return SpinGraph(n, [PauliTerm.on_sites(-strength, n, [v], "X") for v in range(n)])


class Eigenspace(NamedTuple):
    value: float
    basis: np.ndarray  # columns are orthonormal eigenvectors

    @property
    def multiplicity(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def spectral_decomposition(h, tol: float | None = None) -> list[Eigenspace]:
    """Eigenspaces in ascending order; eigenvalues closer than ``tol`` are grouped together."""
    op = as_operator(h)
    w, v = op.eigh()
    if tol is None:
        tol = op.degeneracy_tol
    groups: list[Eigenspace] = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            groups.append(Eigenspace(float(np.mean(w[start:k])), np.array(v[:, start:k])))
            start = k
    return groups


def ground_state(h, tol: float | None = None) -> tuple[float, np.ndarray]:
    """Lowest eigenvalue and an orthonormal basis (columns) of its eigenspace."""
    space = spectral_decomposition(h, tol)[0]
    return space.value, space.basis


def reassemble(spaces: Sequence[Eigenspace]) -> np.ndarray:
    return sum(s.value * s.projector for s in spaces)


def subspace_fidelity(basis_a: np.ndarray, basis_b: np.ndarray) -> float:
    """Smallest squared principal cosine between two subspaces; 0 if dimensions differ."""
    basis_a = np.atleast_2d(basis_a.T).T if basis_a.ndim == 1 else basis_a
    basis_b = np.atleast_2d(basis_b.T).T if basis_b.ndim == 1 else basis_b
    if basis_a.shape[1] != basis_b.shape[1]:
        return 0.0
    s = np.linalg.svd(basis_a.conj().T @ basis_b, compute_uv=False)
    return float(np.min(s) ** 2)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def _product_state(angles: np.ndarray) -> np.ndarray:
    psi = np.ones(1, dtype=complex)
    for th, ph in angles.reshape(-1, 2):
        psi = np.kron(psi, [math.cos(th / 2), np.exp(1j * ph) * math.sin(th / 2)])
    return psi


def mean_field_graph(h, n: int, strength: float = 1.0, starts: int = 20, seed: int = 0) -> SpinGraph:
    """Local fields whose unique ground state is the lowest-energy product state of ``h``.

    Each field is ``-strength * (n_v . sigma_v)`` with n_v the Bloch vector of
    site v in the optimal product state.
    """
    hm = as_matrix(h)
    if hm.shape[0] != 2**n:
        raise DimensionError(f"operator dimension {hm.shape[0]} does not match {n} qubits")

    def energy(x):
        psi = _product_state(x)
        return float(np.vdot(psi, hm @ psi).real)

    rng = np.random.default_rng(seed)
    runs = [optimize.minimize(energy, rng.uniform(0, 2 * np.pi, 2 * n), method="BFGS") for _ in range(starts)]
    best = min(runs, key=lambda r: r.fun)
    terms = []
    for v, (th, ph) in enumerate(best.x.reshape(-1, 2)):
        bloch = (math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th))
        for label, comp in zip("XYZ", bloch):
            if abs(comp) > 1e-12:
                terms.append(PauliTerm.on_sites(-strength * comp, n, [v], label))
    return SpinGraph(n, terms)
