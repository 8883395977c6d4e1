"""Command-line pipeline: ingest, train classifiers, train per-class
GANs, generate, clean, score, and the all-in-one `reproduce`.

Every command is deterministic under (config file, flags, seed) and
writes only under the configured output directory.  Exit codes: 0
success, 1 usage/config error, 2 data error, 3 numeric failure.
"""

import concurrent.futures
import os
import sys

import click
import numpy as np
from PIL import Image, UnidentifiedImageError

from . import classifiers as clf
from . import checkpoint as ckpt_io
from . import report as report_mod
from .cleaning import clean
from .config import RunConfig, load_run_config
from .data import (
    SplitSpec,
    convert_norm,
    denormalize,
    filter_class,
    load_dataset,
    load_train_test,
    split,
)
from .errors import DataError, GlyphGanError, NumericError
from .gan import GanConfig, load_gan_checkpoint, tile_grid, train_gan
from .gan import generate as gan_generate
from .report import ReportRow
from .rng import Rng
from .synthetic import build_synthetic_dataset


def _build_cfg(ctx_obj, **dotted) -> RunConfig:
    overrides = dict(ctx_obj["overrides"])
    overrides.update(dotted)
    return load_run_config(ctx_obj["config_path"], overrides)


def _load_train_val(cfg: RunConfig):
    """(train, val, source note) in unit normalization.

    Prefers the real tree (official Train/Test subtrees if present,
    stratified split otherwise) and falls back to the bundled synthetic
    set when no usable data root is configured.
    """
    if not cfg.synthetic and cfg.data_root and os.path.isdir(cfg.data_root):
        pair = load_train_test(cfg.data_root, cfg.class_subset, norm="unit")
        if pair is not None:
            return pair[0], pair[1], f"{cfg.data_root} (Train/ and Test/ subtrees)"
        ds = load_dataset(cfg.data_root, cfg.class_subset, norm="unit")
        train, val = split(ds, SplitSpec(0.8, cfg.seed))
        return train, val, f"{cfg.data_root} (stratified 80/20 split)"
    subset = None
    if isinstance(cfg.class_subset, list):
        subset = cfg.class_subset
    ds = build_synthetic_dataset(cfg.synthetic_per_class, seed=cfg.seed, class_names=subset)
    train, val = split(ds, SplitSpec(0.8, cfg.seed))
    return train, val, "bundled synthetic glyphs (no data root configured)"


def _classifier_dir(cfg):
    return os.path.join(cfg.out_dir, "classifiers")


def _gan_dir(cfg, class_name=None):
    base = os.path.join(cfg.out_dir, "gan")
    return os.path.join(base, class_name) if class_name else base


def _save_classifier(net, cfg, class_names):
    path = os.path.join(_classifier_dir(cfg), f"{net.name}.bin")
    meta = {"kind": "classifier", "classifier": net.name, "class_names": list(class_names), "norm": "unit"}
    ckpt_io.save_networks([net], path, meta)
    return path


def _load_classifiers(cfg):
    """All trained classifiers under out_dir, sorted by id."""
    cdir = _classifier_dir(cfg)
    if not os.path.isdir(cdir):
        raise DataError(f"no classifier checkpoints under {cdir}; run train-classifiers first")
    nets = []
    class_names = None
    for fname in sorted(os.listdir(cdir)):
        if not fname.endswith(".bin"):
            continue
        loaded, meta = ckpt_io.load_networks(os.path.join(cdir, fname))
        if meta.get("kind") != "classifier":
            continue
        net = next(iter(loaded.values()))
        nets.append(net)
        if class_names is None:
            class_names = meta["class_names"]
        elif class_names != meta["class_names"]:
            raise DataError("classifier checkpoints disagree on their class list")
    if not nets:
        raise DataError(f"no classifier checkpoints under {cdir}; run train-classifiers first")
    return nets, class_names


def _latest_checkpoint(class_dir):
    best_it = -1
    best_path = None
    for fname in os.listdir(class_dir):
        if fname.startswith("ckpt_") and fname.endswith(".bin") and "diag" not in fname:
            try:
                it = int(fname[len("ckpt_") : -len(".bin")])
            except ValueError:
                continue
            if it > best_it:
                best_it, best_path = it, os.path.join(class_dir, fname)
    return best_path


def _load_gan_checkpoints(cfg, class_names):
    ckpts = {}
    missing = []
    for name in class_names:
        class_dir = _gan_dir(cfg, name)
        path = _latest_checkpoint(class_dir) if os.path.isdir(class_dir) else None
        if path is None:
            missing.append(name)
        else:
            ckpts[name] = load_gan_checkpoint(path)
    if missing:
        raise DataError(
            "missing GAN checkpoints for: " + ", ".join(missing) + "; run train-gan first"
        )
    return ckpts


def _echo_report(report):
    click.echo(report_mod.render_report(report, "markdown_table"), nl=False)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="TOML config file; flags override its values.")
@click.option("--data-root", envvar="GLYPHGAN_DATA_ROOT", default=None, help="Dataset root (one subdirectory per class, or Train/Test subtrees). Env: GLYPHGAN_DATA_ROOT. Default: bundled synthetic data.")
@click.option("--out-dir", default=None, help="Output directory for checkpoints and reports. Default: out")
@click.option("--seed", type=int, default=None, help="Master seed for every stage. Default: 42")
@click.option("--synthetic", is_flag=True, default=None, help="Force the bundled synthetic glyph set even if a data root exists.")
@click.pass_context
def cli(ctx, config_path, data_root, out_dir, seed, synthetic):
    """Train glyph GANs, clean their samples, and score the cleanup."""
    ctx.obj = {
        "config_path": config_path,
        "overrides": {
            "run.data_root": data_root,
            "run.out_dir": out_dir,
            "run.seed": seed,
            "run.synthetic": synthetic,
        },
    }


@cli.command("train-classifiers")
@click.option("--classifier", "ids", multiple=True, type=click.Choice(clf.CLASSIFIER_IDS), help="Train only the given classifier (repeatable). Default: all three.")
@click.option("--epochs", type=int, default=None, help="Training epochs per classifier. Default: 30")
@click.option("--batch-size", type=int, default=None, help="Mini-batch size. Default: 64")
@click.pass_context
def train_classifiers_cmd(ctx, ids, epochs, batch_size):
    """Train the judge classifiers and write a metric table on the
    original data."""
    cfg = _build_cfg(ctx.obj, **{"classifier.epochs": epochs, "classifier.batch_size": batch_size})
    ids = list(ids) or list(clf.CLASSIFIER_IDS)
    train, val, source = _load_train_val(cfg)
    click.echo(f"data: {source}; {train.n} train / {val.n} val, {train.num_classes} classes")
    os.makedirs(_classifier_dir(cfg), exist_ok=True)
    rows = []
    for cid in ids:
        net, rep = clf.train_classifier(
            cid, train, val, cfg.classifier_epochs, cfg.classifier_batch_size, cfg.seed
        )
        rep.to_csv(os.path.join(_classifier_dir(cfg), f"train_{cid}.csv"))
        path = _save_classifier(net, cfg, train.class_names)
        best = rep.best_row()
        rows.append(ReportRow(cid, best.loss, best.accuracy, best.val_loss, best.val_accuracy))
        click.echo(f"{cid}: best epoch {best.epoch}, val_accuracy {best.val_accuracy:.4f} -> {path}")
    report = report_mod.MetricsReport("original", rows)
    report_mod.write_report(report, cfg.out_dir)
    _echo_report(report)


def _train_one_gan(args):
    class_name, images, labels, class_names, gan_cfg_dict, out_dir = args
    from .data import LabeledDataset

    ds = LabeledDataset(images, labels, class_names, "symmetric")
    train_gan(ds, GanConfig(**gan_cfg_dict), out_dir)
    return class_name


@cli.command("train-gan")
@click.option("--class-name", default=None, help="Train the GAN for this class only.")
@click.option("--all-classes", is_flag=True, help="Train one GAN per class in the subset.")
@click.option("--iterations", type=int, default=None, help="Adversarial iterations. Default: 10000")
@click.option("--checkpoint-every", type=int, default=None, help="Checkpoint/sample cadence. Default: 500")
@click.option("--batch-size", type=int, default=None, help="Real/fake batch size. Default: 64")
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None, help="Continue from this checkpoint (single-class mode).")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel workers for --all-classes.")
@click.pass_context
def train_gan_cmd(ctx, class_name, all_classes, iterations, checkpoint_every, batch_size, resume, jobs):
    """Adversarially train one GAN per character class."""
    cfg = _build_cfg(
        ctx.obj,
        **{
            "gan.iterations": iterations,
            "gan.checkpoint_every": checkpoint_every,
            "gan.batch_size": batch_size,
        },
    )
    if bool(class_name) == bool(all_classes):
        raise click.UsageError("pass exactly one of --class-name or --all-classes")
    train, val, source = _load_train_val(cfg)
    full = convert_norm(train, "symmetric")
    click.echo(f"data: {source}")
    names = [class_name] if class_name else list(full.class_names)
    if class_name and class_name not in full.class_names:
        raise DataError(f"unknown class {class_name!r}; have {', '.join(full.class_names)}")
    if resume and len(names) > 1:
        raise click.UsageError("--resume only works with a single --class-name")
    jobs = max(1, jobs)
    if jobs == 1 or len(names) == 1:
        for name in names:
            ds = filter_class(full, name)
            out = _gan_dir(cfg, name)
            final = train_gan(ds, cfg.gan, out, resume=resume)
            click.echo(f"{name}: {final.iteration} iterations -> {out}")
    else:
        tasks = []
        for name in names:
            ds = filter_class(full, name)
            tasks.append((name, ds.images, ds.labels, ds.class_names, vars(cfg.gan), _gan_dir(cfg, name)))
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for name in pool.map(_train_one_gan, tasks):
                click.echo(f"{name}: done -> {_gan_dir(cfg, name)}")


@cli.command("generate")
@click.option("--class-name", required=True, help="Class whose GAN to sample.")
@click.option("--count", type=int, default=25, show_default=True, help="Number of samples.")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Checkpoint file; default: latest under out/gan/<class>/.")
@click.pass_context
def generate_cmd(ctx, class_name, count, ckpt_path):
    """Write generated samples for one class as PNGs plus a grid."""
    cfg = _build_cfg(ctx.obj)
    if ckpt_path is None:
        class_dir = _gan_dir(cfg, class_name)
        ckpt_path = _latest_checkpoint(class_dir) if os.path.isdir(class_dir) else None
        if ckpt_path is None:
            raise DataError(f"no checkpoint for class {class_name!r}; run train-gan first")
    ckpt = load_gan_checkpoint(ckpt_path)
    samples = gan_generate(ckpt, count, Rng(cfg.seed).derive("generate", class_name))
    pixels = denormalize(samples[..., 0], "symmetric")
    out = os.path.join(cfg.out_dir, "generated", class_name)
    os.makedirs(out, exist_ok=True)
    for i in range(count):
        Image.fromarray(pixels[i], mode="L").save(os.path.join(out, f"gen_{i:05d}.png"))
    if count >= 25:
        Image.fromarray(tile_grid(pixels[:25]), mode="L").save(os.path.join(out, "grid.png"))
    click.echo(f"{count} samples from {ckpt_path} -> {out}")


@cli.command("clean")
@click.argument("in_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("out_dir_arg", metavar="OUT_DIR", type=click.Path(file_okay=False))
@click.option("--blur-sigma", type=float, default=None, help="Gaussian sigma for the 3x3 blur. Default: 0.8")
@click.option("--skip-not", "skip_not", flag_value=True, default=None, help="Skip the final bitwise NOT (for data whose polarity already matches).")
@click.pass_context
def clean_cmd(ctx, in_dir, out_dir_arg, blur_sigma, skip_not):
    """Run the cleaning pipeline over every PNG in IN_DIR into OUT_DIR."""
    cfg = _build_cfg(ctx.obj, **{"cleaning.blur_sigma": blur_sigma, "cleaning.skip_not": skip_not})
    names = sorted(os.listdir(in_dir))
    pngs = [n for n in names if n.lower().endswith(".png") and os.path.isfile(os.path.join(in_dir, n))]
    skipped = [n for n in names if n not in pngs and os.path.isfile(os.path.join(in_dir, n))]
    if skipped:
        click.echo(f"skipping {len(skipped)} non-PNG file(s): {', '.join(skipped)}", err=True)
    if not pngs:
        raise DataError(f"no images found in {in_dir}")
    os.makedirs(out_dir_arg, exist_ok=True)
    failed = []
    all_binary = True
    for name in pngs:
        try:
            with Image.open(os.path.join(in_dir, name)) as img:
                pixels = np.asarray(img.convert("L"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError) as exc:
            failed.append(f"{name}: {exc}")
            continue
        all_binary = all_binary and bool(np.isin(pixels, (0, 255)).all())
        Image.fromarray(clean(pixels, cfg.cleaning), mode="L").save(os.path.join(out_dir_arg, name))
    if all_binary and not cfg.cleaning.skip_not and not failed:
        click.echo(
            "note: inputs were already binary; the final NOT flips their polarity "
            "(rerunning would flip it back). Use --skip-not to keep polarity.",
            err=True,
        )
    for line in failed:
        click.echo(f"failed: {line}", err=True)
    done = len(pngs) - len(failed)
    click.echo(f"cleaned {done}/{len(pngs)} image(s) -> {out_dir_arg}")
    if done == 0:
        raise DataError("every input failed to decode")


def _score_once(cfg: RunConfig):
    """Shared by `score` and `reproduce`: raw + cleaned reports and grids."""
    nets, class_names = _load_classifiers(cfg)
    ckpts = _load_gan_checkpoints(cfg, class_names)
    base_rng = Rng(cfg.seed).derive("score")
    raw_ds = report_mod.build_generated_dataset(
        ckpts, cfg.per_class_count, base_rng, cleaned=False, label_names=class_names
    )
    cleaned_ds = report_mod.build_generated_dataset(
        ckpts,
        cfg.per_class_count,
        base_rng,
        cleaned=True,
        cleaning_cfg=cfg.cleaning,
        label_names=class_names,
    )
    raw_report = report_mod.score_dataset(nets, raw_ds, "generated_raw")
    cleaned_report = report_mod.score_dataset(nets, cleaned_ds, "generated_cleaned")
    report_mod.write_report(raw_report, cfg.out_dir)
    report_mod.write_report(cleaned_report, cfg.out_dir)
    for ds, fname in ((raw_ds, "raw_samples.png"), (cleaned_ds, "cleaned_samples.png")):
        k = min(25, ds.n)
        pixels = denormalize(ds.images[:k, ..., 0], "unit")
        rows, cols = (5, 5) if k == 25 else (1, k)
        Image.fromarray(tile_grid(pixels, rows, cols), mode="L").save(
            os.path.join(cfg.out_dir, fname)
        )
    for raw_row, clean_row in zip(raw_report.rows, cleaned_report.rows):
        if clean_row.accuracy < raw_row.accuracy:
            click.echo(
                f"warning: {raw_row.classifier_id} scored lower on cleaned data "
                f"({clean_row.accuracy:.4f} < {raw_row.accuracy:.4f})",
                err=True,
            )
    return raw_report, cleaned_report


@cli.command("score")
@click.option("--per-class-count", type=int, default=None, help="Generated samples per class. Default: 100")
@click.option("--skip-not", "skip_not", flag_value=True, default=None, help="Skip the final bitwise NOT in the cleaning stage.")
@click.pass_context
def score_cmd(ctx, per_class_count, skip_not):
    """Score the classifiers on raw and cleaned generated data."""
    cfg = _build_cfg(
        ctx.obj, **{"report.per_class_count": per_class_count, "cleaning.skip_not": skip_not}
    )
    raw_report, cleaned_report = _score_once(cfg)
    _echo_report(raw_report)
    _echo_report(cleaned_report)


@cli.command("reproduce")
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel workers for GAN training.")
@click.pass_context
def reproduce_cmd(ctx, jobs):
    """Run the whole pipeline at the configured scale: train the
    classifiers, train one GAN per class, generate, clean, score."""
    cfg = _build_cfg(ctx.obj)
    os.makedirs(cfg.out_dir, exist_ok=True)
    ctx.invoke(train_classifiers_cmd, ids=(), epochs=None, batch_size=None)
    ctx.invoke(
        train_gan_cmd,
        class_name=None,
        all_classes=True,
        iterations=None,
        checkpoint_every=None,
        batch_size=None,
        resume=None,
        jobs=jobs,
    )
    ctx.invoke(score_cmd, per_class_count=None, skip_not=None)
    click.echo(f"done; reports under {cfg.out_dir}")


def run_cli(argv=None) -> int:
    """Invoke the CLI, mapping exceptions onto the exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        if exc.checkpoint_path:
            click.echo(f"diagnostic checkpoint: {exc.checkpoint_path}", err=True)
        return 3
    except GlyphGanError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
