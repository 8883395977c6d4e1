"""Adversarial training of one dense GAN per character class.

The generator maps a 100-d Gaussian latent through three widening dense
blocks (LeakyReLU 0.2, BatchNorm momentum 0.8) to a tanh image in
[-1, 1]; the discriminator flattens and scores realness through two
dense blocks into a sigmoid.  One training iteration is one
discriminator step on a real batch and an equal fake batch, then one
generator step through the frozen discriminator.

Real data must be in symmetric normalization to match the tanh range.
Everything is deterministic under (seed, config): per-iteration rng
streams are derived from the seed and iteration number, so a run
resumed from a checkpoint continues with the exact randomness of an
uninterrupted one.
"""

import csv
import dataclasses
import hashlib
import os

import numpy as np
from PIL import Image

from . import checkpoint as ckpt_io
from . import layers as L
from . import losses
from .data import LabeledDataset, denormalize
from .errors import DataError, NumericError, ShapeError
from .network import Network
from .optim import Adam
from .rng import Rng

IMAGE_SHAPE = (32, 32, 1)
GRID_ROWS = 5
GRID_COLS = 5


@dataclasses.dataclass
class GanConfig:
    latent_dim: int = 100
    iterations: int = 10000
    checkpoint_every: int = 500
    batch_size: int = 64
    seed: int = 42
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.checkpoint_every < 1:
            raise ValueError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")


@dataclasses.dataclass
class GanCheckpoint:
    generator: Network
    discriminator: Network
    iteration: int
    seed: int
    class_name: str = None
    latent_dim: int = 100


def build_generator(cfg: GanConfig, seed: int) -> Network:
    n_out = int(np.prod(IMAGE_SHAPE))
    stack = []
    for width in (256, 512, 1024):
        stack += [L.Dense(width), L.Activation("leaky_relu", 0.2), L.BatchNorm(momentum=0.8)]
    stack += [L.Dense(n_out), L.Activation("tanh"), L.Reshape(IMAGE_SHAPE)]
    return Network(stack, input_shape=(cfg.latent_dim,), seed=seed, name="generator")


def build_discriminator(cfg: GanConfig, seed: int) -> Network:
    stack = [
        L.Flatten(),
        L.Dense(512),
        L.Activation("leaky_relu", 0.2),
        L.Dense(256),
        L.Activation("leaky_relu", 0.2),
        L.Dense(1),
        L.Activation("sigmoid"),
    ]
    return Network(stack, input_shape=IMAGE_SHAPE, seed=seed, loss="binary_ce", name="discriminator")


def params_digest(net: Network) -> str:
    """sha256 over all parameter bytes, in declaration order."""
    h = hashlib.sha256()
    for layer in net.layers:
        for name in layer.param_order():
            h.update(layer.params[name].tobytes())
    return h.hexdigest()


def _optimizer(cfg: GanConfig) -> Adam:
    return Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)


def discriminator_step(gen, disc, real_batch, rng: Rng, cfg: GanConfig) -> float:
    """One discriminator update on real (label 1) plus fake (label 0)."""
    b = real_batch.shape[0]
    if b < 2:
        raise ShapeError(f"degenerate batch of size {b}; adversarial step needs >= 2")
    z = rng.normal((b, cfg.latent_dim)).astype(np.float32)
    fake = gen.forward(z, mode="train")
    x = np.concatenate([real_batch, fake], axis=0)
    y = np.concatenate([np.ones((b, 1)), np.zeros((b, 1))]).astype(np.float32)
    preds = disc.forward(x, mode="train")
    d_loss = disc.loss_and_backward(preds, y)
    _optimizer(cfg).step(disc)
    return d_loss


def generator_step(gen, disc, batch_size, rng: Rng, cfg: GanConfig) -> float:
    """One generator update through the frozen discriminator.

    The discriminator backpropagates the error signal but its parameters
    are excluded from the optimizer step, so they are bit-identical
    before and after.
    """
    z = rng.normal((batch_size, cfg.latent_dim)).astype(np.float32)
    disc.set_trainable(False)
    try:
        fake = gen.forward(z, mode="train")
        preds = disc.forward(fake, mode="train")
        target = np.ones_like(preds)
        g_loss, _ = losses.binary_ce(preds, target)
        dfake = disc.backward(losses.sigmoid_bce_fused_grad(preds, target), skip_last=1)
        gen.backward(dfake)
        _optimizer(cfg).step(gen)
    finally:
        disc.set_trainable(True)
    return g_loss


def adversarial_step(gen, disc, real_batch, rng: Rng, cfg: GanConfig):
    """One full iteration; returns (d_loss, g_loss)."""
    d_loss = discriminator_step(gen, disc, real_batch, rng, cfg)
    g_loss = generator_step(gen, disc, real_batch.shape[0], rng, cfg)
    return d_loss, g_loss


def generate(checkpoint: GanCheckpoint, count, rng: Rng):
    """Sample ``count`` images in [-1, 1] from fresh latents, infer mode."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    z = rng.normal((count, checkpoint.latent_dim)).astype(np.float32)
    return checkpoint.generator.forward(z, mode="infer")


def tile_grid(images_uint8, rows=GRID_ROWS, cols=GRID_COLS):
    """Tile (n, h, w) uint8 images into a (rows*h, cols*w) mosaic."""
    images_uint8 = np.asarray(images_uint8)
    n, h, w = images_uint8.shape
    if n != rows * cols:
        raise ShapeError(f"grid needs {rows * cols} images, got {n}")
    return (
        images_uint8.reshape(rows, cols, h, w).transpose(0, 2, 1, 3).reshape(rows * h, cols * w)
    )


def save_grid_png(images_sym, path, rng_unused=None):
    """Write a 5×5 grid PNG from symmetric-normalized samples."""
    pixels = denormalize(images_sym[..., 0], "symmetric")
    Image.fromarray(tile_grid(pixels), mode="L").save(path)


def save_gan_checkpoint(checkpoint: GanCheckpoint, path):
    meta = {
        "kind": "gan",
        "iteration": checkpoint.iteration,
        "seed": checkpoint.seed,
        "class_name": checkpoint.class_name,
        "latent_dim": checkpoint.latent_dim,
    }
    ckpt_io.save_networks([checkpoint.generator, checkpoint.discriminator], path, meta)


def load_gan_checkpoint(path) -> GanCheckpoint:
    nets, meta = ckpt_io.load_networks(path)
    if meta.get("kind") != "gan" or set(nets) != {"generator", "discriminator"}:
        raise DataError(f"{path} is not a GAN checkpoint")
    return GanCheckpoint(
        generator=nets["generator"],
        discriminator=nets["discriminator"],
        iteration=int(meta["iteration"]),
        seed=int(meta["seed"]),
        class_name=meta.get("class_name"),
        latent_dim=int(meta["latent_dim"]),
    )


def _write_loss_log(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "d_loss", "g_loss"])
        for it, dl, gl in rows:
            writer.writerow([it, f"{dl:.6f}", f"{gl:.6f}"])


def _read_loss_log(path, up_to):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for rec in reader:
            if int(rec[0]) <= up_to:
                rows.append((int(rec[0]), float(rec[1]), float(rec[2])))
    return rows


def train_gan(class_ds: LabeledDataset, cfg: GanConfig, out_dir, resume=None) -> GanCheckpoint:
    """Train one GAN on a single-class slice; write periodic checkpoints,
    sample grids and a loss log under ``out_dir``.

    ``resume`` may be a GanCheckpoint or a checkpoint path; training
    then continues from its iteration with the same derived rng streams,
    so the remaining loss log matches an uninterrupted run exactly.
    """
    if class_ds.norm != "symmetric":
        raise DataError(f"GAN training needs symmetric normalization, got {class_ds.norm!r}")
    if class_ds.num_classes != 1:
        raise DataError(f"train_gan takes a single-class slice, got {class_ds.num_classes} classes")
    if class_ds.n < cfg.batch_size:
        raise DataError(f"class has {class_ds.n} samples, fewer than batch_size {cfg.batch_size}")
    class_name = class_ds.class_names[0]
    os.makedirs(out_dir, exist_ok=True)

    if resume is not None:
        if not isinstance(resume, GanCheckpoint):
            resume = load_gan_checkpoint(resume)
        if resume.seed != cfg.seed:
            raise DataError(f"resume checkpoint has seed {resume.seed}, config says {cfg.seed}")
        gen, disc = resume.generator, resume.discriminator
        start = resume.iteration
    else:
        gen = build_generator(cfg, seed=Rng(cfg.seed).derive("generator").seed)
        disc = build_discriminator(cfg, seed=Rng(cfg.seed).derive("discriminator").seed)
        start = 0

    log_path = os.path.join(out_dir, "loss_log.csv")
    rows = _read_loss_log(log_path, start) if (resume is not None and os.path.exists(log_path)) else []

    images = class_ds.images
    for it in range(start + 1, cfg.iterations + 1):
        rng_it = Rng(cfg.seed).derive("iter", it)
        batch = images[rng_it.integers(cfg.batch_size, class_ds.n)]
        d_loss, g_loss = adversarial_step(gen, disc, batch, rng_it, cfg)
        rows.append((it, d_loss, g_loss))
        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            diag = GanCheckpoint(gen, disc, it, cfg.seed, class_name, cfg.latent_dim)
            diag_path = os.path.join(out_dir, f"ckpt_diag_{it}.bin")
            save_gan_checkpoint(diag, diag_path)
            _write_loss_log(log_path, rows)
            raise NumericError(
                f"non-finite loss at iteration {it} (d={d_loss}, g={g_loss})",
                checkpoint_path=diag_path,
            )
        if it % cfg.checkpoint_every == 0:
            snap = GanCheckpoint(gen, disc, it, cfg.seed, class_name, cfg.latent_dim)
            save_gan_checkpoint(snap, os.path.join(out_dir, f"ckpt_{it}.bin"))
            grid = generate(snap, GRID_ROWS * GRID_COLS, Rng(cfg.seed).derive("grid", it))
            save_grid_png(grid, os.path.join(out_dir, f"grid_{it}.png"))
            _write_loss_log(log_path, rows)
    _write_loss_log(log_path, rows)
    return GanCheckpoint(gen, disc, cfg.iterations, cfg.seed, class_name, cfg.latent_dim)
