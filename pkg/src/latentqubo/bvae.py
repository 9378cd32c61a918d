"""Binary variational autoencoder over square grayscale patterns.

Dense encoder and decoder joined by a two-category Gumbel-softmax latent per
bit.  Training minimizes binary cross-entropy reconstruction plus a Bernoulli
KL against the uniform prior, with Adam updates and an annealed relaxation
temperature; forward, backward, and the optimizer are implemented directly on
numpy arrays so gradients can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .qubo import FLOAT_FORMAT, as_binary_vector

__all__ = [
    "BvaeArchitecture",
    "BvaeModel",
    "TemperatureSchedule",
    "LossBreakdown",
    "TrainCurves",
    "gumbel_softmax",
    "sample_gumbel_noise",
    "bernoulli_kl",
    "anneal_tau",
    "bvae_loss",
    "bvae_loss_and_grads",
    "bvae_train",
    "encode",
    "decode",
    "reconstruction_accuracy",
    "save_bvae",
    "load_bvae",
]

PROB_CLAMP = 1e-7
CATEGORIES_PER_BIT = 2

_LAYER_NAMES = (
    "enc1_w", "enc1_b",
    "enc2_w", "enc2_b",
    "enc3_w", "enc3_b",
    "dec1_w", "dec1_b",
    "dec2_w", "dec2_b",
    "dec3_w", "dec3_b",
)


@dataclass(frozen=True)
class BvaeArchitecture:
    """Layer sizing: m*m pixels in, n latent bits, two categories per bit."""

    image_side: int
    latent_bits: int
    encoder_hidden: tuple[int, int] = (512, 256)
    decoder_hidden: tuple[int, int] = (256, 512)

    def __post_init__(self):
        if self.image_side < 2:
            raise ValueError(f"image_side must be >= 2, got {self.image_side}")
        if self.latent_bits < 1:
            raise ValueError(f"latent_bits must be >= 1, got {self.latent_bits}")
        for sizes in (self.encoder_hidden, self.decoder_hidden):
            if len(sizes) != 2 or any(s < 1 for s in sizes):
                raise ValueError(f"hidden sizes must be two positive integers, got {sizes!r}")

    def layer_shapes(self) -> dict[str, tuple[int, int]]:
        m2 = self.image_side**2
        n = self.latent_bits
        e1, e2 = self.encoder_hidden
        d1, d2 = self.decoder_hidden
        return {
            "enc1_w": (m2, e1), "enc1_b": (1, e1),
            "enc2_w": (e1, e2), "enc2_b": (1, e2),
            "enc3_w": (e2, CATEGORIES_PER_BIT * n), "enc3_b": (1, CATEGORIES_PER_BIT * n),
            "dec1_w": (n, d1), "dec1_b": (1, d1),
            "dec2_w": (d1, d2), "dec2_b": (1, d2),
            "dec3_w": (d2, m2), "dec3_b": (1, m2),
        }


@dataclass(frozen=True)
class BvaeModel:
    architecture: BvaeArchitecture
    params: dict[str, np.ndarray]
    tau: float

    def __post_init__(self):
        shapes = self.architecture.layer_shapes()
        if set(self.params) != set(shapes):
            raise ValueError(
                f"parameter names {sorted(self.params)} do not match architecture layers"
            )
        locked = {}
        for name, expected in shapes.items():
            arr = np.array(self.params[name], dtype=np.float64)
            if arr.shape != expected:
                raise ValueError(f"layer {name} has shape {arr.shape}, expected {expected}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"layer {name} contains non-finite values")
            arr.setflags(write=False)
            locked[name] = arr
        object.__setattr__(self, "params", locked)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class TemperatureSchedule:
    """Relaxation temperature state with multiplicative per-epoch decay."""

    tau: float = 5.0
    tau_max: float = 5.0
    tau_min: float = 0.4
    gamma: float = 0.0003

    def __post_init__(self):
        if not 0 < self.tau_min <= self.tau_max:
            raise ValueError(
                f"need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}"
            )
        if not self.tau_min <= self.tau <= self.tau_max:
            raise ValueError(
                f"tau must stay within [{self.tau_min}, {self.tau_max}], got {self.tau}"
            )
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


def anneal_tau(s: TemperatureSchedule, epoch: int) -> TemperatureSchedule:
    """One annealing step: tau <- max(tau_min, tau * exp(-gamma * epoch)).

    The epoch index sits inside the exponent, so the decay compounds faster
    as training progresses.
    """
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    tau = max(s.tau_min, s.tau * float(np.exp(-s.gamma * epoch)))
    return TemperatureSchedule(tau=tau, tau_max=s.tau_max, tau_min=s.tau_min, gamma=s.gamma)


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    kl: float

    @property
    def total(self) -> float:
        return self.reconstruction + self.kl


@dataclass(frozen=True)
class TrainCurves:
    train: tuple[LossBreakdown, ...]
    validation: tuple[LossBreakdown, ...]


def sample_gumbel_noise(rng: np.random.Generator, shape) -> np.ndarray:
    u = np.clip(rng.random(shape), 1e-12, 1.0 - 1e-12)
    return -np.log(-np.log(u))


def gumbel_softmax(logits, tau: float, noise) -> np.ndarray:
    """Relaxed categorical sample: softmax((logits + noise) / tau) per pair.

    Operates on arrays whose last axis holds the two per-bit category logits;
    outputs are strictly positive and sum to one along that axis.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    logits = np.asarray(logits, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if logits.shape != noise.shape:
        raise ValueError(f"noise shape {noise.shape} must match logits shape {logits.shape}")
    if logits.shape[-1] != CATEGORIES_PER_BIT:
        raise ValueError(
            f"last axis must hold {CATEGORIES_PER_BIT} category logits, got {logits.shape}"
        )
    u = (logits + noise) / tau
    u = u - u.max(axis=-1, keepdims=True)
    e = np.exp(u)
    return e / e.sum(axis=-1, keepdims=True)


def bernoulli_kl(q, p: float = 0.5) -> np.ndarray:
    """KL(Bernoulli(q) || Bernoulli(p)) elementwise, with clamped logs."""
    q = np.clip(np.asarray(q, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return q * np.log(q / p) + (1.0 - q) * np.log((1.0 - q) / (1.0 - p))


def _check_batch(arch: BvaeArchitecture, batch) -> np.ndarray:
    m = arch.image_side
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != (m, m):
        raise ValueError(f"expected images of shape ({m}, {m}), got {np.asarray(batch).shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("pixel values must lie in [0, 1]")
    return arr.reshape(arr.shape[0], m * m)


def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _forward(params, arch: BvaeArchitecture, T: np.ndarray, tau: float, noise: np.ndarray):
    B = T.shape[0]
    n = arch.latent_bits
    if noise.shape != (B, n, CATEGORIES_PER_BIT):
        raise ValueError(
            f"noise must have shape {(B, n, CATEGORIES_PER_BIT)}, got {noise.shape}"
        )
    a1 = T @ params["enc1_w"] + params["enc1_b"]
    h1 = np.maximum(a1, 0.0)
    a2 = h1 @ params["enc2_w"] + params["enc2_b"]
    h2 = np.maximum(a2, 0.0)
    logits = (h2 @ params["enc3_w"] + params["enc3_b"]).reshape(B, n, CATEGORIES_PER_BIT)
    q = _sigmoid(logits[:, :, 1] - logits[:, :, 0])
    relaxed = gumbel_softmax(logits, tau, noise)
    z = relaxed[:, :, 1]
    b1 = z @ params["dec1_w"] + params["dec1_b"]
    g1 = np.maximum(b1, 0.0)
    b2 = g1 @ params["dec2_w"] + params["dec2_b"]
    g2 = np.maximum(b2, 0.0)
    out_logits = g2 @ params["dec3_w"] + params["dec3_b"]
    p = _sigmoid(out_logits)
    return {
        "T": T, "a1": a1, "h1": h1, "a2": a2, "h2": h2, "logits": logits,
        "q": q, "z": z, "b1": b1, "g1": g1, "b2": b2, "g2": g2, "p": p,
        "tau": tau,
    }


def _losses(cache) -> LossBreakdown:
    B = cache["T"].shape[0]
    pc = np.clip(cache["p"], PROB_CLAMP, 1.0 - PROB_CLAMP)
    T = cache["T"]
    recon = -float(np.sum(T * np.log(pc) + (1.0 - T) * np.log(1.0 - pc))) / B
    kl = float(np.sum(bernoulli_kl(cache["q"]))) / B
    return LossBreakdown(reconstruction=recon, kl=kl)


def _backward(params, arch: BvaeArchitecture, cache) -> dict[str, np.ndarray]:
    B = cache["T"].shape[0]
    grads = {}

    d_out = (cache["p"] - cache["T"]) / B
    grads["dec3_w"] = cache["g2"].T @ d_out
    grads["dec3_b"] = d_out.sum(axis=0, keepdims=True)
    d_g2 = (d_out @ params["dec3_w"].T) * (cache["b2"] > 0)
    grads["dec2_w"] = cache["g1"].T @ d_g2
    grads["dec2_b"] = d_g2.sum(axis=0, keepdims=True)
    d_g1 = (d_g2 @ params["dec2_w"].T) * (cache["b1"] > 0)
    grads["dec1_w"] = cache["z"].T @ d_g1
    grads["dec1_b"] = d_g1.sum(axis=0, keepdims=True)
    d_z = d_g1 @ params["dec1_w"].T

    # z = sigmoid of the noisy logit gap scaled by 1/tau; q = sigmoid of the
    # clean gap; both route into d(gap), with opposite signs per category.
    z = cache["z"]
    q = cache["q"]
    qc = np.clip(q, PROB_CLAMP, 1.0 - PROB_CLAMP)
    d_gap = d_z * z * (1.0 - z) / cache["tau"]
    d_gap += (np.log(qc) - np.log(1.0 - qc)) * q * (1.0 - q) / B
    d_logits = np.stack([-d_gap, d_gap], axis=-1).reshape(B, -1)

    grads["enc3_w"] = cache["h2"].T @ d_logits
    grads["enc3_b"] = d_logits.sum(axis=0, keepdims=True)
    d_h2 = (d_logits @ params["enc3_w"].T) * (cache["a2"] > 0)
    grads["enc2_w"] = cache["h1"].T @ d_h2
    grads["enc2_b"] = d_h2.sum(axis=0, keepdims=True)
    d_h1 = (d_h2 @ params["enc2_w"].T) * (cache["a1"] > 0)
    grads["enc1_w"] = cache["T"].T @ d_h1
    grads["enc1_b"] = d_h1.sum(axis=0, keepdims=True)
    return grads


def bvae_loss(model: BvaeModel, batch, tau: float, noise) -> LossBreakdown:
    """Reconstruction BCE plus Bernoulli KL, both averaged per image."""
    T = _check_batch(model.architecture, batch)
    cache = _forward(model.params, model.architecture, T, tau, np.asarray(noise, dtype=np.float64))
    return _losses(cache)


def bvae_loss_and_grads(model: BvaeModel, batch, tau: float, noise):
    """Loss breakdown together with analytic gradients for every layer."""
    T = _check_batch(model.architecture, batch)
    params = model.params
    cache = _forward(params, model.architecture, T, tau, np.asarray(noise, dtype=np.float64))
    return _losses(cache), _backward(params, model.architecture, cache)


def _init_params(arch: BvaeArchitecture, rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    for name, shape in arch.layer_shapes().items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape)
        else:
            fan_in = shape[0]
            # ReLU-oriented scaling for hidden layers, unit-variance for heads
            gain = 2.0 if name not in ("enc3_w", "dec3_w") else 1.0
            params[name] = rng.normal(0.0, np.sqrt(gain / fan_in), size=shape)
    return params


def bvae_train(
    data,
    arch: BvaeArchitecture,
    epochs: int,
    seed: int,
    learning_rate: float = 1e-3,
    batch_size: int = 32,
    schedule: TemperatureSchedule | None = None,
    val_fraction: float = 0.15,
) -> tuple[BvaeModel, TrainCurves]:
    """Train with Adam on shuffled mini-batches, annealing tau each epoch.

    The dataset is split 85/15 into train/validation by a seeded shuffle.
    All stochastic choices (init, shuffles, Gumbel draws) come from a single
    seeded generator, so identical inputs give identical models.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    T_all = _check_batch(arch, data)
    count = T_all.shape[0]
    if count == 0:
        raise ValueError("cannot train on an empty image set")
    rng = np.random.default_rng(seed)
    params = _init_params(arch, rng)

    perm = rng.permutation(count)
    n_val = min(int(np.floor(val_fraction * count + 0.5)), count - 1)
    train_idx = perm[: count - n_val]
    val_idx = perm[count - n_val :]

    sched = schedule if schedule is not None else TemperatureSchedule()
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    mom = {k: np.zeros_like(v) for k, v in params.items()}
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    n = arch.latent_bits

    train_curve, val_curve = [], []
    for epoch in range(epochs):
        order = rng.permutation(train_idx)
        recon_sum = kl_sum = 0.0
        for start in range(0, len(order), batch_size):
            batch = T_all[order[start : start + batch_size]]
            noise = sample_gumbel_noise(rng, (batch.shape[0], n, CATEGORIES_PER_BIT))
            cache = _forward(params, arch, batch, sched.tau, noise)
            losses = _losses(cache)
            grads = _backward(params, arch, cache)
            recon_sum += losses.reconstruction * batch.shape[0]
            kl_sum += losses.kl * batch.shape[0]
            step += 1
            for name in params:
                g = grads[name]
                mom[name] = beta1 * mom[name] + (1.0 - beta1) * g
                vel[name] = beta2 * vel[name] + (1.0 - beta2) * g**2
                m_hat = mom[name] / (1.0 - beta1**step)
                v_hat = vel[name] / (1.0 - beta2**step)
                params[name] = params[name] - learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        train_curve.append(
            LossBreakdown(recon_sum / len(order), kl_sum / len(order))
        )
        if len(val_idx):
            noise = sample_gumbel_noise(rng, (len(val_idx), n, CATEGORIES_PER_BIT))
            val_curve.append(_losses(_forward(params, arch, T_all[val_idx], sched.tau, noise)))
        else:
            val_curve.append(LossBreakdown(float("nan"), float("nan")))
        sched = anneal_tau(sched, epoch)

    model = BvaeModel(architecture=arch, params=params, tau=sched.tau)
    return model, TrainCurves(train=tuple(train_curve), validation=tuple(val_curve))


def encode(model: BvaeModel, image) -> np.ndarray:
    """Deterministic encoding: bit_i = 1 when the category-1 logit leads."""
    T = _check_batch(model.architecture, image)
    if T.shape[0] != 1:
        raise ValueError(f"encode expects a single image, got {T.shape[0]}")
    p = model.params
    h1 = np.maximum(T @ p["enc1_w"] + p["enc1_b"], 0.0)
    h2 = np.maximum(h1 @ p["enc2_w"] + p["enc2_b"], 0.0)
    logits = (h2 @ p["enc3_w"] + p["enc3_b"]).reshape(-1, CATEGORIES_PER_BIT)
    return (logits[:, 1] > logits[:, 0]).astype(np.uint8)


def decode(
    model: BvaeModel, bits, blur_radius_px: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Generate from hard latent bits: (continuous image, thresholded pattern).

    A nonzero blur radius applies a Gaussian filter (in pixels) to the
    continuous output before thresholding at 0.5.
    """
    x = as_binary_vector(bits)
    n = model.architecture.latent_bits
    if x.size != n:
        raise ValueError(f"dimension mismatch: model has n={n}, vector has length {x.size}")
    if blur_radius_px < 0:
        raise ValueError(f"blur_radius_px must be >= 0, got {blur_radius_px}")
    p = model.params
    z = x.astype(np.float64)[None, :]
    g1 = np.maximum(z @ p["dec1_w"] + p["dec1_b"], 0.0)
    g2 = np.maximum(g1 @ p["dec2_w"] + p["dec2_b"], 0.0)
    m = model.architecture.image_side
    continuous = _sigmoid(g2 @ p["dec3_w"] + p["dec3_b"]).reshape(m, m)
    if blur_radius_px > 0:
        continuous = gaussian_filter(continuous, sigma=blur_radius_px)
    pattern = (continuous >= 0.5).astype(np.uint8)
    return continuous, pattern


def reconstruction_accuracy(model: BvaeModel, images) -> float:
    """Mean fraction of pixels where decode(encode(img)) matches img >= 0.5."""
    T = _check_batch(model.architecture, images)
    m = model.architecture.image_side
    total = 0.0
    for row in T:
        img = row.reshape(m, m)
        _, pattern = decode(model, encode(model, img))
        total += float(np.mean(pattern == (img >= 0.5)))
    return total / T.shape[0]


def save_bvae(model: BvaeModel, path) -> None:
    arch = model.architecture
    lines = [f"BVAE v1 m={arch.image_side} n={arch.latent_bits}"]
    for name in _LAYER_NAMES:
        arr = model.params[name]
        lines.append(f"LAYER {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append(" ".join(FLOAT_FORMAT % v for v in row))
    lines.append(f"TAU {FLOAT_FORMAT % model.tau}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_bvae(path) -> BvaeModel:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"empty checkpoint file: {path}")
    head = lines[0].split()
    if (
        len(head) != 4
        or head[:2] != ["BVAE", "v1"]
        or not head[2].startswith("m=")
        or not head[3].startswith("n=")
    ):
        raise ValueError(f"expected header 'BVAE v1 m=<m> n=<n>', got {lines[0]!r}")
    m = int(head[2].removeprefix("m="))
    n = int(head[3].removeprefix("n="))
    params: dict[str, np.ndarray] = {}
    tau = None
    i = 1
    while i < len(lines):
        ln = lines[i].strip()
        if not ln:
            i += 1
            continue
        parts = ln.split()
        if parts[0] == "LAYER" and len(parts) == 4:
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            block = np.zeros((rows, cols))
            for r in range(rows):
                i += 1
                block[r] = np.array(lines[i].split(), dtype=np.float64)
            params[name] = block
            i += 1
        elif parts[0] == "TAU" and len(parts) == 2:
            tau = float(parts[1])
            i += 1
        else:
            raise ValueError(f"unrecognized line in checkpoint: {ln!r}")
    if tau is None:
        raise ValueError("checkpoint is missing the TAU line")
    missing = set(_LAYER_NAMES) - set(params)
    if missing:
        raise ValueError(f"checkpoint is missing layers: {sorted(missing)}")
    arch = BvaeArchitecture(
        image_side=m,
        latent_bits=n,
        encoder_hidden=(params["enc1_w"].shape[1], params["enc2_w"].shape[1]),
        decoder_hidden=(params["dec1_w"].shape[1], params["dec2_w"].shape[1]),
    )
    return BvaeModel(architecture=arch, params=params, tau=tau)
