"""QUBO and Ising energy models with exact bidirectional conversion.

A QUBO instance is a second-order polynomial over binary vectors
``x in {0,1}^n``; the Ising form is the same polynomial over spin vectors
``s in {-1,+1}^n`` under the substitution ``s_i = 2*x_i - 1``.  Both carry an
explicit constant offset so that energies (not just argmins) are preserved
exactly by the conversions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .fm import LabelTransform

__all__ = [
    "QuboProblem",
    "IsingProblem",
    "ConnectivityReport",
    "as_binary_vector",
    "as_spin_vector",
    "binary_to_spin",
    "spin_to_binary",
    "qubo_energy",
    "ising_energy",
    "qubo_to_ising",
    "ising_to_qubo",
    "analyze_connectivity",
    "save_qubo",
    "load_qubo",
    "save_ising",
    "load_ising",
]

# Decimal precision that round-trips float64 exactly.
FLOAT_FORMAT = "%.17g"


def as_binary_vector(bits) -> np.ndarray:
    """Validate a {0,1} vector and return it as a 1-D uint8 array."""
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"binary vector must be 1-D and nonempty, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("binary vector entries must be exactly 0 or 1")
    return arr.astype(np.uint8)


def as_spin_vector(spins) -> np.ndarray:
    """Validate a {-1,+1} vector and return it as a 1-D int8 array."""
    arr = np.asarray(spins)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"spin vector must be 1-D and nonempty, got shape {arr.shape}")
    if not np.all((arr == -1) | (arr == 1)):
        raise ValueError("spin vector entries must be exactly -1 or +1")
    return arr.astype(np.int8)


def binary_to_spin(bits) -> np.ndarray:
    """Map x in {0,1}^n to s in {-1,+1}^n via s_i = 2*x_i - 1."""
    x = as_binary_vector(bits)
    return (2 * x.astype(np.int8) - 1).astype(np.int8)


def spin_to_binary(spins) -> np.ndarray:
    """Inverse of :func:`binary_to_spin`: x_i = (s_i + 1) / 2."""
    s = as_spin_vector(spins)
    return ((s + 1) // 2).astype(np.uint8)


def _validate_pairs(quadratic, n: int) -> dict[tuple[int, int], float]:
    """Canonicalize a sparse pair map: strictly upper triangular, finite, no zeros."""
    out: dict[tuple[int, int], float] = {}
    for key, value in quadratic.items():
        i, j = key
        i, j = int(i), int(j)
        if not (0 <= i < j < n):
            raise ValueError(
                f"quadratic key {key!r} must satisfy 0 <= i < j < n with n={n}"
            )
        c = float(value)
        if not np.isfinite(c):
            raise ValueError(f"quadratic coefficient for {key!r} is not finite: {value!r}")
        if c != 0.0:
            out[(i, j)] = c
    return out


@dataclass(frozen=True)
class QuboProblem:
    """Quadratic unconstrained binary optimization problem.

    Energy of a binary assignment x:

        E(x) = offset + sum_i linear[i] * x_i + sum_{i<j} quadratic[i,j] * x_i * x_j

    Parameters
    ----------
    linear : array_like
        Length-n vector of linear coefficients.
    quadratic : dict[(int, int), float]
        Strictly upper-triangular pair coefficients (keys require i < j).
        Zero-valued entries are dropped so equality is canonical.
    offset : float
        Constant added to every energy; never changes the argmin.
    label_transform : LabelTransform, optional
        Metadata recorded when the problem was extracted from a surrogate
        model trained on negated labels; lets callers map sampled energies
        back to original-scale figures of merit.  Ignored by the energy.
    """

    linear: np.ndarray
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    label_transform: "LabelTransform | None" = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        linear = np.array(self.linear, dtype=np.float64)
        if linear.ndim != 1 or linear.size == 0:
            raise ValueError(
                f"linear coefficients must form a nonempty 1-D vector, got shape {linear.shape}"
            )
        if not np.all(np.isfinite(linear)):
            raise ValueError("linear coefficients must be finite")
        offset = float(self.offset)
        if not np.isfinite(offset):
            raise ValueError(f"offset must be finite, got {self.offset!r}")
        linear.setflags(write=False)
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "quadratic", _validate_pairs(self.quadratic, linear.size))
        object.__setattr__(self, "offset", offset)

    @property
    def n(self) -> int:
        return self.linear.size

    @cached_property
    def dense_upper(self) -> np.ndarray:
        """Strictly upper-triangular dense (n, n) coefficient matrix."""
        m = np.zeros((self.n, self.n))
        for (i, j), c in self.quadratic.items():
            m[i, j] = c
        m.setflags(write=False)
        return m

    @cached_property
    def dense_symmetric(self) -> np.ndarray:
        """Symmetric zero-diagonal matrix W with W[i, j] = quadratic[min, max]."""
        m = self.dense_upper + self.dense_upper.T
        m.setflags(write=False)
        return m

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        """Per-variable neighbor list [(j, coeff), ...] for O(degree) flip deltas."""
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (i, j), c in self.quadratic.items():
            adj[i].append((j, c))
            adj[j].append((i, c))
        return tuple(tuple(row) for row in adj)


@dataclass(frozen=True)
class IsingProblem:
    """Classical Ising energy model.

    Energy of a spin assignment s in {-1,+1}^n:

        H(s) = offset + sum_i h[i] * s_i + sum_{i<j} j[i,j] * s_i * s_j
    """

    h: np.ndarray
    j: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        if h.ndim != 1 or h.size == 0:
            raise ValueError(f"local biases must form a nonempty 1-D vector, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("local biases must be finite")
        offset = float(self.offset)
        if not np.isfinite(offset):
            raise ValueError(f"offset must be finite, got {self.offset!r}")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "j", _validate_pairs(self.j, h.size))
        object.__setattr__(self, "offset", offset)

    @property
    def n(self) -> int:
        return self.h.size


@dataclass(frozen=True)
class ConnectivityReport:
    """Connectivity summary of a QUBO against a hardware clique limit."""

    n: int
    edge_count: int
    is_fully_connected: bool
    max_supported_clique: int
    fits_hardware: bool


def qubo_energy(q: QuboProblem, bits) -> float:
    """Evaluate the QUBO energy at a binary assignment."""
    x = as_binary_vector(bits)
    if x.size != q.n:
        raise ValueError(f"dimension mismatch: problem has n={q.n}, vector has length {x.size}")
    energy = q.offset + float(np.dot(q.linear, x))
    for (i, j), c in q.quadratic.items():
        if x[i] and x[j]:
            energy += c
    return energy


def ising_energy(m: IsingProblem, spins) -> float:
    """Evaluate the Ising energy at a spin assignment."""
    s = as_spin_vector(spins)
    if s.size != m.n:
        raise ValueError(f"dimension mismatch: problem has n={m.n}, vector has length {s.size}")
    energy = m.offset + float(np.dot(m.h, s))
    for (i, j), c in m.j.items():
        energy += c * float(s[i]) * float(s[j])
    return energy


def qubo_to_ising(q: QuboProblem) -> IsingProblem:
    """Convert to the Ising form; energies agree exactly under s = 2x - 1.

    Coefficients: J_ij = Q_ij / 4, h_i = Q_i / 2 + sum_{j != i} Q_ij / 4,
    offset' = offset + sum_i Q_i / 2 + sum_{i<j} Q_ij / 4.
    """
    h = q.linear / 2.0
    offset = q.offset + float(np.sum(q.linear)) / 2.0
    j: dict[tuple[int, int], float] = {}
    for (a, b), c in q.quadratic.items():
        j[(a, b)] = c / 4.0
        h[a] += c / 4.0
        h[b] += c / 4.0
        offset += c / 4.0
    return IsingProblem(h=h, j=j, offset=offset)


def ising_to_qubo(m: IsingProblem) -> QuboProblem:
    """Convert to the QUBO form; exact inverse of :func:`qubo_to_ising`."""
    linear = 2.0 * m.h
    offset = m.offset - float(np.sum(m.h))
    quad: dict[tuple[int, int], float] = {}
    for (a, b), c in m.j.items():
        quad[(a, b)] = 4.0 * c
        linear[a] -= 2.0 * c
        linear[b] -= 2.0 * c
        offset += c
    return QuboProblem(linear=linear, quadratic=quad, offset=offset)


def analyze_connectivity(q: QuboProblem, max_clique: int) -> ConnectivityReport:
    """Check whether the problem's coupling graph fits a clique-limited sampler.

    The check is conservative: no minor-embedding is attempted, so a problem
    fits exactly when its dimension does not exceed the largest fully
    connected subgraph the hardware supports.
    """
    if max_clique < 1:
        raise ValueError(f"max_clique must be >= 1, got {max_clique}")
    edge_count = len(q.quadratic)
    full_edges = q.n * (q.n - 1) // 2
    return ConnectivityReport(
        n=q.n,
        edge_count=edge_count,
        is_fully_connected=edge_count == full_edges,
        max_supported_clique=max_clique,
        fits_hardware=q.n <= max_clique,
    )


def _format_float(v: float) -> str:
    return FLOAT_FORMAT % v


def _serialize(header: str, n: int, offset: float, linear: np.ndarray, pairs) -> str:
    lines = [f"{header} v1 n={n} offset={_format_float(offset)}"]
    for i in range(n):
        if linear[i] != 0.0:
            lines.append(f"L {i} {_format_float(linear[i])}")
    for (i, j) in sorted(pairs):
        lines.append(f"Q {i} {j} {_format_float(pairs[(i, j)])}")
    return "\n".join(lines) + "\n"


def _parse(text: str, header: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty problem file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != header or head[1] != "v1":
        raise ValueError(f"expected header '{header} v1 n=<n> offset=<x>', got {lines[0]!r}")
    n = int(head[2].removeprefix("n="))
    offset = float(head[3].removeprefix("offset="))
    linear = np.zeros(n)
    pairs: dict[tuple[int, int], float] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "L" and len(parts) == 3:
            linear[int(parts[1])] = float(parts[2])
        elif parts[0] == "Q" and len(parts) == 4:
            pairs[(int(parts[1]), int(parts[2]))] = float(parts[3])
        else:
            raise ValueError(f"unrecognized line in problem file: {ln!r}")
    return n, offset, linear, pairs


def save_qubo(q: QuboProblem, path) -> None:
    Path(path).write_text(_serialize("QUBO", q.n, q.offset, q.linear, q.quadratic))


def load_qubo(path) -> QuboProblem:
    _, offset, linear, pairs = _parse(Path(path).read_text(), "QUBO")
    return QuboProblem(linear=linear, quadratic=pairs, offset=offset)


def save_ising(m: IsingProblem, path) -> None:
    Path(path).write_text(_serialize("ISING", m.n, m.offset, m.h, m.j))


def load_ising(path) -> IsingProblem:
    _, offset, h, pairs = _parse(Path(path).read_text(), "ISING")
    return IsingProblem(h=h, j=pairs, offset=offset)
