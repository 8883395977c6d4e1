"""Train a small GAN on one synthetic glyph class and tile a sample grid.

300 iterations is nowhere near convergence; the point is to watch the
loss log move and get a checkpoint + preview grid in about a minute.
Artifacts land in demos/out_tiny_gan/.
"""

import os

from glyphgan.data import convert_norm, filter_class
from glyphgan.gan import GanConfig, train_gan
from glyphgan.synthetic import build_synthetic_dataset

OUT = os.path.join(os.path.dirname(__file__), "out_tiny_gan")


def main():
    ds = build_synthetic_dataset(samples_per_class=200, seed=3)
    one_class = filter_class(convert_norm(ds, "symmetric"), "digit_0")
    cfg = GanConfig(iterations=300, checkpoint_every=100, batch_size=32, seed=3)
    ckpt = train_gan(one_class, cfg, OUT)
    print(f"\nfinal checkpoint at iteration {ckpt.iteration}; see {OUT}/ for "
          "grid_*.png previews and loss_log.csv")


if __name__ == "__main__":
    main()
