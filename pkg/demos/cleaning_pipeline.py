"""Walk generated images through each cleaning stage.

Samples from an untrained generator (gray mush is exactly what the
pipeline has to cope with), then shows how the value histogram collapses
stage by stage: blur, Otsu threshold, opening, closing, invert.  Saves
before/after grids next to this script.
"""

import os

import numpy as np
from PIL import Image

from glyphgan.cleaning import (
    bitwise_not,
    closing,
    gaussian_blur_3x3,
    opening,
    otsu_threshold,
)
from glyphgan.data import denormalize
from glyphgan.gan import GanCheckpoint, GanConfig, build_discriminator, build_generator, generate
from glyphgan.rng import Rng

HERE = os.path.dirname(__file__)


def describe(label, img):
    vals = np.unique(img)
    shown = ", ".join(map(str, vals[:6])) + (", ..." if vals.size > 6 else "")
    print(f"{label:18s} {vals.size:3d} distinct values [{shown}]")


def grid(images, path):
    tile = np.vstack([np.hstack(list(images[r * 4:(r + 1) * 4])) for r in range(2)])
    Image.fromarray(tile, mode="L").save(path)


def main():
    cfg = GanConfig(latent_dim=100, seed=17)
    ckpt = GanCheckpoint(build_generator(cfg, 1), build_discriminator(cfg, 2),
                         0, cfg.seed, "demo", cfg.latent_dim)
    raw = denormalize(generate(ckpt, 8, Rng(5))[..., 0], "symmetric")
    grid(raw, os.path.join(HERE, "cleaning_before.png"))

    img = raw[0]
    describe("generator output", img)
    blurred = gaussian_blur_3x3(img)
    describe("gaussian blur", blurred)
    t, binary = otsu_threshold(blurred)
    describe(f"otsu (t={t})", binary)
    opened = opening(binary)
    describe("opening", opened)
    closed = closing(opened)
    describe("closing", closed)
    final = bitwise_not(closed)
    describe("bitwise not", final)

    stages = [bitwise_not(closing(opening(otsu_threshold(gaussian_blur_3x3(im))[1])))
              for im in raw]
    grid(np.stack(stages), os.path.join(HERE, "cleaning_after.png"))
    print("\nwrote cleaning_before.png / cleaning_after.png")


if __name__ == "__main__":
    main()
