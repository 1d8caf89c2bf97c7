"""First-order switching sequences for sums and commutators of two generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .spin_model import HermitianOperator, as_operator


@dataclass(frozen=True)
class Segment:
    label: str
    generator: HermitianOperator
    duration: float


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments:
            if not seg.duration > 0:
                raise ValueError(f"segment {seg.label!r} has non-positive duration {seg.duration}")

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def __len__(self):
        return len(self.segments)

    def to_json(self) -> str:
        return json.dumps([[s.label, s.duration] for s in self.segments])


def _check_pair(a, b) -> tuple[HermitianOperator, HermitianOperator]:
    a, b = as_operator(a), as_operator(b)
    if a.dim != b.dim:
        raise DimensionError(f"generators have dimensions {a.dim} and {b.dim}")
    return a, b


def sum_sequence(a, b, t: float, n: int) -> PulseSequence:
    """(A, t/n), (B, t/n) repeated n times; approximates exp(-i(A+B)t)."""
    a, b = _check_pair(a, b)
    if n < 1:
        raise ValueError("n must be at least 1")
    tau = t / n
    return PulseSequence([Segment("A", a, tau), Segment("B", b, tau)] * n)


def commutator_sequence(a, b, t: float, n: int) -> PulseSequence:
    """Group-commutator cycles with segment length sqrt(t/n), approximating exp([-iA, -iB] t).

    Each cycle realizes exp(-iA s) exp(-iB s) exp(iA s) exp(iB s) with the
    rightmost factor applied first.
    """
    a, b = _check_pair(a, b)
    if n < 1:
        raise ValueError("n must be at least 1")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return PulseSequence()
    s = math.sqrt(t / n)
    cycle = [Segment("-B", -b, s), Segment("-A", -a, s), Segment("B", b, s), Segment("A", a, s)]
    return PulseSequence(cycle * n)


def sequence_exponential(seq: PulseSequence, dim: int | None = None) -> np.ndarray:
    """Time-ordered product of exp(-i H_k tau_k), later segments on the left."""
    if not seq.segments:
        return np.eye(dim or 1, dtype=complex)
    u = np.eye(seq.segments[0].generator.dim, dtype=complex)
    cache: dict[tuple[int, float], np.ndarray] = {}
    for seg in seq.segments:
        key = (id(seg.generator), seg.duration)
        step = cache.get(key)
        if step is None:
            step = cache[key] = seg.generator.expm(seg.duration)
        u = step @ u
    return u


def commutator_generator(a, b) -> HermitianOperator:
    """-i[A, B], the Hermitian generator targeted by commutator_sequence."""
    a, b = _check_pair(a, b)
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    return HermitianOperator(-1j * c)
