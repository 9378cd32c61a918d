"""Labeled binary-vector datasets: rows of (latent bits, label, provenance tag)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .qubo import FLOAT_FORMAT, as_binary_vector

__all__ = ["LabeledDataset", "save_dataset", "load_dataset"]


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable (X, Y) table with a free-form provenance token per row.

    X rows are binary latent vectors, Y holds real-valued figure-of-merit
    labels.  Appending returns a new dataset; with dedup enabled, rows whose
    vector already occurs keep the first-seen label and are not re-added.
    """

    X: np.ndarray
    Y: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D (rows, bits), got shape {X.shape}")
        if X.shape[1] == 0:
            raise ValueError("X must have at least one bit column")
        if X.size and not np.all((X == 0) | (X == 1)):
            raise ValueError("X entries must be exactly 0 or 1")
        X = X.astype(np.uint8)
        Y = np.asarray(self.Y, dtype=np.float64)
        if Y.shape != (X.shape[0],):
            raise ValueError(
                f"Y must be 1-D with one label per row, got shape {Y.shape} for {X.shape[0]} rows"
            )
        if Y.size and not np.all(np.isfinite(Y)):
            raise ValueError("labels must be finite")
        tags = tuple(self.provenance)
        if len(tags) != X.shape[0]:
            raise ValueError(f"need one provenance tag per row, got {len(tags)}")
        for tag in tags:
            if not tag or any(ch.isspace() for ch in tag):
                raise ValueError(f"provenance tags must be nonempty and whitespace-free: {tag!r}")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "provenance", tags)

    @classmethod
    def empty(cls, n: int) -> "LabeledDataset":
        return cls(X=np.zeros((0, n), dtype=np.uint8), Y=np.zeros(0), provenance=())

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    @cached_property
    def _keys(self) -> frozenset[bytes]:
        return frozenset(self.X[r].tobytes() for r in range(len(self)))

    def contains(self, bits) -> bool:
        x = as_binary_vector(bits)
        return x.tobytes() in self._keys

    def max_label(self) -> float:
        if len(self) == 0:
            raise ValueError("dataset is empty")
        return float(self.Y.max())

    def best_row(self) -> tuple[np.ndarray, float]:
        """Vector and label of the highest-labeled row (first on ties)."""
        idx = int(np.argmax(self.Y))
        return self.X[idx], float(self.Y[idx])

    def append_rows(
        self, X_new, Y_new, tags, dedup: bool = True
    ) -> tuple["LabeledDataset", int]:
        """Append rows, returning (new dataset, number actually added).

        With dedup, a row is skipped when its vector matches any existing row
        or an earlier row of this same batch; the first label wins.
        """
        X_new = np.atleast_2d(np.asarray(X_new))
        Y_new = np.atleast_1d(np.asarray(Y_new, dtype=np.float64))
        tags = tuple(tags)
        if not (X_new.shape[0] == Y_new.shape[0] == len(tags)):
            raise ValueError("X_new, Y_new, and tags must have matching lengths")
        if X_new.shape[0] == 0:
            return self, 0
        if X_new.shape[1] != self.n:
            raise ValueError(
                f"dimension mismatch: dataset has n={self.n}, new rows have {X_new.shape[1]}"
            )
        keep = []
        seen = set(self._keys) if dedup else None
        for r in range(X_new.shape[0]):
            key = as_binary_vector(X_new[r]).tobytes()
            if dedup:
                if key in seen:
                    continue
                seen.add(key)
            keep.append(r)
        if not keep:
            return self, 0
        merged = LabeledDataset(
            X=np.vstack([self.X, X_new[keep]]),
            Y=np.concatenate([self.Y, Y_new[keep]]),
            provenance=self.provenance + tuple(tags[r] for r in keep),
        )
        return merged, len(keep)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            X=self.X[idx],
            Y=self.Y[idx],
            provenance=tuple(self.provenance[i] for i in idx),
        )


def save_dataset(data: LabeledDataset, path) -> None:
    lines = [f"DATASET v1 n={data.n} count={len(data)}"]
    for r in range(len(data)):
        bits = "".join(str(b) for b in data.X[r])
        lines.append(f"{bits} {FLOAT_FORMAT % data.Y[r]} {data.provenance[r]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> LabeledDataset:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty dataset file: {path}")
    head = lines[0].split()
    if (
        len(head) != 4
        or head[:2] != ["DATASET", "v1"]
        or not head[2].startswith("n=")
        or not head[3].startswith("count=")
    ):
        raise ValueError(f"expected header 'DATASET v1 n=<n> count=<c>', got {lines[0]!r}")
    n = int(head[2].removeprefix("n="))
    count = int(head[3].removeprefix("count="))
    rows = lines[1:]
    if len(rows) != count:
        raise ValueError(f"dataset declares {count} rows but file has {len(rows)}")
    X = np.zeros((count, n), dtype=np.uint8)
    Y = np.zeros(count)
    tags = []
    for r, ln in enumerate(rows):
        bits, label, tag = ln.split()
        if len(bits) != n:
            raise ValueError(f"row {r} has {len(bits)} bits, expected {n}")
        X[r] = [int(ch) for ch in bits]
        Y[r] = float(label)
        tags.append(tag)
    return LabeledDataset(X=X, Y=Y, provenance=tuple(tags))
