"""Sample-retrain optimization loop over a learned binary latent space.

Each iteration refits a factorization-machine surrogate to the current
labeled dataset (on negated labels, so maximization becomes minimization),
extracts the equivalent QUBO, samples low-energy latent vectors, decodes and
scores them with the true objective, and appends the new rows.  Convergence
statistics are recorded per iteration and exported as plot-ready CSV.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .bvae import BvaeModel, decode, load_bvae
from .dataset import LabeledDataset, load_dataset, save_dataset
from .fm import (
    FmModel,
    FmTrainConfig,
    LabelTransform,
    apply_label_transform,
    fm_predict,
    fm_to_qubo,
    fm_train,
    save_fm,
)
from .images import save_pgm
from .objectives import FigureOfMerit, evaluate_fom
from .qubo import ConnectivityReport, QuboProblem, analyze_connectivity, as_binary_vector
from .samplers import (
    AnnealSchedule,
    SampleSet,
    brute_force_sample,
    simulated_annealing_sample,
)

__all__ = [
    "PipelineConfig",
    "ConvergenceRecord",
    "RunState",
    "bit_flip_augment",
    "run_iteration",
    "run_pipeline",
    "check_hardware_feasibility",
    "write_convergence_csv",
]

SAMPLER_NAMES = ("brute_force", "simulated_annealing")
AUGMENTATION_NAMES = ("none", "bit_flip")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one optimization run needs, file paths included."""

    latent_bits: int
    fm_rank: int
    objective: FigureOfMerit
    bvae_checkpoint: str
    dataset_path: str
    output_dir: str
    samples_per_iteration: int = 10
    iterations: int = 30
    sampler: str = "simulated_annealing"
    schedule: AnnealSchedule = AnnealSchedule()
    augmentation: str = "none"
    bit_flip_copies: int = 10
    label_margin: float = 0.05
    dedup: bool = True
    warm_start_fm: bool = True
    seed: int = 0
    fm_epochs: int = 30
    fm_learning_rate: float = 0.05
    decode_blur: float = 0.0

    def __post_init__(self):
        if self.latent_bits < 1 or self.fm_rank < 1:
            raise ValueError("latent_bits and fm_rank must both be >= 1")
        if self.samples_per_iteration < 1:
            raise ValueError(
                f"samples_per_iteration must be >= 1, got {self.samples_per_iteration}"
            )
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.sampler not in SAMPLER_NAMES:
            raise ValueError(f"sampler must be one of {SAMPLER_NAMES}, got {self.sampler!r}")
        if self.augmentation not in AUGMENTATION_NAMES:
            raise ValueError(
                f"augmentation must be one of {AUGMENTATION_NAMES}, got {self.augmentation!r}"
            )
        if self.augmentation == "bit_flip" and not 1 <= self.bit_flip_copies <= self.latent_bits:
            raise ValueError(
                f"bit_flip copies must lie in [1, {self.latent_bits}], got {self.bit_flip_copies}"
            )
        if self.label_margin < 0:
            raise ValueError(f"label_margin must be >= 0, got {self.label_margin}")
        if self.fm_epochs < 1:
            raise ValueError(f"fm_epochs must be >= 1, got {self.fm_epochs}")
        if self.decode_blur < 0:
            raise ValueError(f"decode_blur must be >= 0, got {self.decode_blur}")


@dataclass(frozen=True)
class ConvergenceRecord:
    """Per-iteration statistics over the newly evaluated designs.

    surrogate_error is the mean |fm_predict(x) - (c - actual_fom(x))| over the
    iteration's designs; it is logged for trend inspection and kept out of the
    CSV schema.
    """

    iteration: int
    mean_fom: float
    std_fom: float
    max_fom: float
    running_max_fom: float
    dataset_size: int
    sampler_energy_min: float
    surrogate_error: float

    def __post_init__(self):
        if not (np.isnan(self.std_fom) or self.std_fom >= 0):
            raise ValueError(f"std_fom must be >= 0, got {self.std_fom}")


@dataclass
class RunState:
    """Mutable loop state owned by a single orchestrator."""

    dataset: LabeledDataset
    bvae: BvaeModel
    objective: FigureOfMerit
    fm: FmModel | None = None
    transform: LabelTransform | None = None
    iteration: int = 0
    running_max_fom: float = float("-inf")
    seed_seq: np.random.SeedSequence = dataclass_field(
        default_factory=lambda: np.random.SeedSequence(0)
    )
    history: list[ConvergenceRecord] = dataclass_field(default_factory=list)


def bit_flip_augment(bits, copies: int, seed: int) -> list[np.ndarray]:
    """Hamming-distance-1 copies of a vector, flip positions drawn without replacement."""
    x = as_binary_vector(bits)
    if not 1 <= copies <= x.size:
        raise ValueError(f"copies must lie in [1, {x.size}], got {copies}")
    rng = np.random.default_rng(seed)
    positions = rng.choice(x.size, size=copies, replace=False)
    out = []
    for pos in positions:
        flipped = x.copy()
        flipped[pos] ^= 1
        out.append(flipped)
    return out


def _sample(q: QuboProblem, cfg: PipelineConfig, dataset_size: int, seed: int) -> SampleSet:
    if cfg.sampler == "brute_force":
        # request enough entries that already-seen vectors cannot crowd out
        # samples_per_iteration new ones
        return brute_force_sample(q, top_k=cfg.samples_per_iteration + dataset_size)
    return simulated_annealing_sample(q, cfg.schedule, seed=seed)


def run_iteration(state: RunState, cfg: PipelineConfig) -> ConvergenceRecord:
    """One retrain/sample/evaluate/append cycle; mutates and returns via state."""
    fm_seed, sampler_seed, augment_seed = (
        int(child.generate_state(1)[0]) for child in state.seed_seq.spawn(3)
    )
    transformed, transform = apply_label_transform(state.dataset.Y, cfg.label_margin)
    train_data = LabeledDataset(
        X=state.dataset.X, Y=transformed, provenance=state.dataset.provenance
    )
    fm_cfg = FmTrainConfig(
        epochs=cfg.fm_epochs,
        learning_rate=cfg.fm_learning_rate,
        rank=cfg.fm_rank,
        seed=fm_seed,
    )
    warm = state.fm if cfg.warm_start_fm else None
    state.fm, _ = fm_train(train_data, fm_cfg, warm_start=warm)
    state.transform = transform

    q = fm_to_qubo(state.fm, transform)
    sample_set = _sample(q, cfg, len(state.dataset), sampler_seed)

    selected: list[np.ndarray] = []
    selected_tags: list[str] = []
    seen_now: set[bytes] = set()
    tag = f"iter{state.iteration}"
    for entry in sample_set.entries:
        if len(selected) >= cfg.samples_per_iteration:
            break
        key = entry.vector.tobytes()
        if cfg.dedup and (state.dataset.contains(entry.vector) or key in seen_now):
            continue
        seen_now.add(key)
        selected.append(entry.vector)
        selected_tags.append(tag)

    if len(selected) < cfg.samples_per_iteration and cfg.augmentation == "bit_flip":
        source = selected[0] if selected else sample_set.best().vector
        for flipped in bit_flip_augment(source, cfg.bit_flip_copies, augment_seed):
            if len(selected) >= cfg.samples_per_iteration:
                break
            key = flipped.tobytes()
            if cfg.dedup and (state.dataset.contains(flipped) or key in seen_now):
                continue
            seen_now.add(key)
            selected.append(flipped)
            selected_tags.append(f"{tag}_flip")

    labels = np.zeros(len(selected))
    surrogate_gaps = np.zeros(len(selected))
    for r, x in enumerate(selected):
        _, pattern = decode(state.bvae, x, blur_radius_px=cfg.decode_blur)
        labels[r] = evaluate_fom(state.objective, pattern)
        surrogate_gaps[r] = abs(fm_predict(state.fm, x) - (transform.c - labels[r]))

    if selected:
        state.dataset, _ = state.dataset.append_rows(
            np.stack(selected), labels, selected_tags, dedup=cfg.dedup
        )
        mean_fom = float(labels.mean())
        std_fom = float(labels.std())
        max_fom = float(labels.max())
        state.running_max_fom = max(state.running_max_fom, max_fom)
        surrogate_error = float(surrogate_gaps.mean())
    else:
        # stagnation: sampler produced nothing new; carry the running max
        mean_fom = std_fom = max_fom = float("nan")
        surrogate_error = float("nan")

    record = ConvergenceRecord(
        iteration=state.iteration,
        mean_fom=mean_fom,
        std_fom=std_fom,
        max_fom=max_fom,
        running_max_fom=state.running_max_fom,
        dataset_size=len(state.dataset),
        sampler_energy_min=sample_set.best().energy,
        surrogate_error=surrogate_error,
    )
    state.history.append(record)
    state.iteration += 1
    return record


def write_convergence_csv(history, path) -> None:
    fmt = "%.17g"
    lines = ["iteration,mean_fom,std_fom,max_fom,running_max_fom,dataset_size,min_energy"]
    for rec in history:
        lines.append(
            f"{rec.iteration},{fmt % rec.mean_fom},{fmt % rec.std_fom},"
            f"{fmt % rec.max_fom},{fmt % rec.running_max_fom},{rec.dataset_size},"
            f"{fmt % rec.sampler_energy_min}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _dedupe_initial(data: LabeledDataset) -> LabeledDataset:
    empty = LabeledDataset.empty(data.n)
    merged, _ = empty.append_rows(data.X, data.Y, data.provenance, dedup=True)
    return merged


def run_pipeline(cfg: PipelineConfig) -> RunState:
    """Execute the configured number of iterations and write all artifacts.

    Outputs under cfg.output_dir: convergence.csv, dataset_final.txt,
    fm_final.txt, best_design.pgm, and best_design_bits.txt.
    """
    for path in (cfg.bvae_checkpoint, cfg.dataset_path):
        if not Path(path).exists():
            raise FileNotFoundError(f"required input file does not exist: {path}")
    bvae = load_bvae(cfg.bvae_checkpoint)
    if bvae.architecture.latent_bits != cfg.latent_bits:
        raise ValueError(
            f"config expects {cfg.latent_bits} latent bits but the checkpoint "
            f"has {bvae.architecture.latent_bits}"
        )
    data = load_dataset(cfg.dataset_path)
    if data.n != cfg.latent_bits:
        raise ValueError(
            f"config expects {cfg.latent_bits} latent bits but the dataset has n={data.n}"
        )
    if len(data) == 0:
        raise ValueError("initial dataset is empty")
    if cfg.dedup:
        data = _dedupe_initial(data)

    state = RunState(
        dataset=data,
        bvae=bvae,
        objective=cfg.objective,
        running_max_fom=data.max_label(),
        seed_seq=np.random.SeedSequence(cfg.seed),
    )
    for _ in range(cfg.iterations):
        run_iteration(state, cfg)

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(state.history, out / "convergence.csv")
    save_dataset(state.dataset, out / "dataset_final.txt")
    save_fm(state.fm, out / "fm_final.txt")
    best_bits, best_label = state.dataset.best_row()
    _, pattern = decode(state.bvae, best_bits, blur_radius_px=cfg.decode_blur)
    save_pgm(pattern.astype(np.float64), out / "best_design.pgm")
    bits_text = "".join(str(b) for b in best_bits)
    (out / "best_design_bits.txt").write_text(
        f"{bits_text} {'%.17g' % best_label}\n"
    )
    return state


def check_hardware_feasibility(cfg: PipelineConfig, max_clique: int) -> ConnectivityReport:
    """Clique check for a fully connected problem of the configured size."""
    n = cfg.latent_bits
    full = QuboProblem(
        linear=np.zeros(n),
        quadratic={(i, j): 1.0 for i in range(n) for j in range(i + 1, n)},
    )
    report = analyze_connectivity(full, max_clique)
    if not report.fits_hardware:
        warnings.warn(
            f"{n} latent bits exceed the hardware clique limit of {max_clique}; "
            "sampling would require embedding or a decomposing solver",
            stacklevel=2,
        )
    return report
