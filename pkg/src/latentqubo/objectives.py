"""Figure-of-merit objectives plus toy corpus and dataset builders.

Objectives are pure maps from an m-by-m binary pattern to a score in [0,1];
they stand in for the expensive physics evaluations a real design problem
would run, while keeping the optimization loop's interface identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .bvae import BvaeModel, decode
from .dataset import LabeledDataset

__all__ = [
    "FigureOfMerit",
    "ProductEfficiencyObjective",
    "TargetOverlapObjective",
    "StratificationSpec",
    "evaluate_fom",
    "build_latent_dataset",
    "stratify_dataset",
    "generate_toy_corpus",
    "CORPUS_KINDS",
]

CORPUS_KINDS = ("half_planes", "blobs", "stripes")


class FigureOfMerit:
    """Behavioral contract: a named, deterministic pattern score in [0,1]."""

    name: str = "abstract"

    def evaluate(self, pattern: np.ndarray) -> float:
        raise NotImplementedError


def _check_pattern(pattern) -> np.ndarray:
    arr = np.asarray(pattern)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"pattern must be a nonempty square 2-D array, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("pattern entries must be exactly 0 or 1")
    return arr.astype(np.float64)


@dataclass(frozen=True)
class ProductEfficiencyObjective(FigureOfMerit):
    """Product of a fill-factor band term and a boundary-smoothness term.

    eff_in  = exp(-(fill - target_fill)^2 / 0.02) rewards patterns whose mean
    pixel value sits near target_fill; eff_out = 1 / (1 + w * boundary_density)
    penalizes jagged patterns, where boundary_density counts unequal
    4-neighbor pixel pairs normalized by the 2m(m-1) total pairs.
    """

    target_fill: float
    smoothness_weight: float
    name: str = "product_efficiency"

    def __post_init__(self):
        if not 0.0 < self.target_fill < 1.0:
            raise ValueError(f"target_fill must lie in (0, 1), got {self.target_fill}")
        if self.smoothness_weight < 0:
            raise ValueError(f"smoothness_weight must be >= 0, got {self.smoothness_weight}")

    def evaluate(self, pattern: np.ndarray) -> float:
        arr = _check_pattern(pattern)
        m = arr.shape[0]
        fill = float(arr.mean())
        eff_in = float(np.exp(-((fill - self.target_fill) ** 2) / 0.02))
        unequal = int(np.sum(arr[:, 1:] != arr[:, :-1])) + int(np.sum(arr[1:, :] != arr[:-1, :]))
        boundary_density = unequal / (2 * m * (m - 1)) if m > 1 else 0.0
        eff_out = 1.0 / (1.0 + self.smoothness_weight * boundary_density)
        return eff_in * eff_out


@dataclass(frozen=True)
class TargetOverlapObjective(FigureOfMerit):
    """Fraction of pixels matching a fixed target; 1 exactly on the target."""

    target: np.ndarray
    name: str = "target_overlap"

    def __post_init__(self):
        target = _check_pattern(self.target).astype(np.uint8)
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    def evaluate(self, pattern: np.ndarray) -> float:
        arr = _check_pattern(pattern)
        if arr.shape != self.target.shape:
            raise ValueError(
                f"pattern shape {arr.shape} does not match target shape {self.target.shape}"
            )
        return float(np.mean(arr == self.target))


def evaluate_fom(obj: FigureOfMerit, pattern) -> float:
    value = obj.evaluate(np.asarray(pattern))
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"objective {obj.name!r} returned {value}, outside [0, 1]")
    return value


@dataclass(frozen=True)
class StratificationSpec:
    """Figure-of-merit bands and the fraction of the output drawn from each.

    Bands are half-open [lower, upper) except the topmost, which is closed so
    a perfect score of 1.0 still lands in a band.
    """

    bands: tuple[tuple[float, float], ...]
    fractions: tuple[float, ...]

    def __post_init__(self):
        bands = tuple((float(lo), float(hi)) for lo, hi in self.bands)
        fractions = tuple(float(f) for f in self.fractions)
        if len(bands) != len(fractions) or not bands:
            raise ValueError("need one fraction per band and at least one band")
        for lo, hi in bands:
            if not lo < hi:
                raise ValueError(f"band ({lo}, {hi}) must have lower < upper")
        if any(f < 0 for f in fractions):
            raise ValueError("fractions must be nonnegative")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
        ordered = sorted(bands)
        for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
            if hi > lo:
                raise ValueError(f"bands overlap at {lo}")
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "fractions", fractions)

    def band_mask(self, labels: np.ndarray, band_index: int) -> np.ndarray:
        lo, hi = self.bands[band_index]
        top = max(b[1] for b in self.bands)
        labels = np.asarray(labels)
        if hi == top:
            return (labels >= lo) & (labels <= hi)
        return (labels >= lo) & (labels < hi)


def build_latent_dataset(
    model: BvaeModel, obj: FigureOfMerit, count: int, seed: int, blur: float = 0.0
) -> LabeledDataset:
    """Label uniform random latent vectors by decoding and scoring each."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    n = model.architecture.latent_bits
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(count, n)).astype(np.uint8)
    Y = np.zeros(count)
    for r in range(count):
        _, pattern = decode(model, X[r], blur_radius_px=blur)
        Y[r] = evaluate_fom(obj, pattern)
    return LabeledDataset(X=X, Y=Y, provenance=("random",) * count)


def stratify_dataset(
    pool: LabeledDataset, spec: StratificationSpec, total: int, seed: int
) -> LabeledDataset:
    """Draw round(fraction*total) rows per band from the pool, without replacement."""
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for b, (band, fraction) in enumerate(zip(spec.bands, spec.fractions)):
        quota = int(np.floor(fraction * total + 0.5))
        if quota == 0:
            continue
        members = np.flatnonzero(spec.band_mask(pool.Y, b))
        if members.size < quota:
            raise ValueError(
                f"band [{band[0]}, {band[1]}] needs {quota} rows but the pool has "
                f"{members.size} (deficit {quota - members.size})"
            )
        chosen.extend(rng.choice(members, size=quota, replace=False).tolist())
    return pool.subset(chosen)


def _half_plane_base(m: int) -> np.ndarray:
    patterns = [np.zeros((m, m)), np.ones((m, m))]
    for cut in range(1, m):
        rows = np.zeros((m, m))
        rows[:cut, :] = 1.0
        patterns.append(rows)
        cols = np.zeros((m, m))
        cols[:, :cut] = 1.0
        patterns.append(cols)
    return np.stack(patterns)


def generate_toy_corpus(kind: str, m: int, count: int, seed: int) -> np.ndarray:
    """Produce a (count, m, m) binary image corpus of the requested family.

    half_planes cycles through every axis-aligned half plane (plus the empty
    and full patterns) in shuffled order; blobs thresholds smoothed Gaussian
    noise at its median; stripes draws periodic bands of random orientation,
    pitch, and phase.
    """
    if kind not in CORPUS_KINDS:
        raise ValueError(f"unknown corpus kind {kind!r}, expected one of {CORPUS_KINDS}")
    if m < 4:
        raise ValueError(f"image side must be >= 4, got {m}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    if kind == "half_planes":
        base = _half_plane_base(m)
        reps = np.resize(np.arange(len(base)), count)
        return base[rng.permutation(reps)]
    if kind == "blobs":
        fields = gaussian_filter(rng.normal(size=(count, m, m)), sigma=(0, m / 4, m / 4))
        cutoffs = np.median(fields, axis=(1, 2), keepdims=True)
        return (fields > cutoffs).astype(np.float64)
    images = np.zeros((count, m, m))
    for i in range(count):
        pitch = int(rng.integers(2, max(3, m // 2) + 1))
        phase = int(rng.integers(0, pitch))
        coords = (np.arange(m) + phase) % pitch < (pitch + 1) // 2
        if rng.integers(0, 2):
            images[i] = np.tile(coords[:, None], (1, m))
        else:
            images[i] = np.tile(coords[None, :], (m, 1))
    return images
