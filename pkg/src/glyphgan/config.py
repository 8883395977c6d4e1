"""Run configuration: one TOML file with flat per-module sections, every
value overridable by a CLI flag.

Sections and keys mirror the module configs: [run] for paths/seed/class
subset, [gan], [classifier], [cleaning], [report].  Unknown sections or
keys are rejected so a typo cannot silently fall back to a default.
"""

import dataclasses
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cleaning import CleaningConfig
from .gan import GanConfig

_SCHEMA = {
    "run": {
        "data_root": (str, type(None)),
        "out_dir": (str,),
        "seed": (int,),
        "class_subset": (str, list, type(None)),
        "synthetic": (bool,),
        "synthetic_per_class": (int,),
    },
    "gan": {
        "latent_dim": (int,),
        "iterations": (int,),
        "checkpoint_every": (int,),
        "batch_size": (int,),
        "learning_rate": (float, int),
        "beta1": (float, int),
        "beta2": (float, int),
        "epsilon": (float, int),
    },
    "classifier": {
        "epochs": (int,),
        "batch_size": (int,),
    },
    "cleaning": {
        "blur_sigma": (float, int),
        "skip_not": (bool,),
    },
    "report": {
        "per_class_count": (int,),
    },
}

_DEFAULTS = {
    "run": {
        "data_root": None,
        "out_dir": "out",
        "seed": 42,
        "class_subset": "digits",
        "synthetic": False,
        "synthetic_per_class": 300,
    },
    "gan": {
        "latent_dim": 100,
        "iterations": 10000,
        "checkpoint_every": 500,
        "batch_size": 64,
        "learning_rate": 2e-4,
        "beta1": 0.5,
        "beta2": 0.999,
        "epsilon": 1e-7,
    },
    "classifier": {"epochs": 30, "batch_size": 64},
    "cleaning": {"blur_sigma": 0.8, "skip_not": False},
    "report": {"per_class_count": 100},
}


@dataclasses.dataclass
class RunConfig:
    data_root: str
    out_dir: str
    seed: int
    class_subset: object
    synthetic: bool
    synthetic_per_class: int
    gan: GanConfig
    classifier_epochs: int
    classifier_batch_size: int
    cleaning: CleaningConfig
    per_class_count: int


def _read_toml(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValueError(f"cannot parse config {path}: {exc}") from exc


def _validate(sections: dict, origin: str):
    for section, values in sections.items():
        if section not in _SCHEMA:
            raise ValueError(f"{origin}: unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ValueError(f"{origin}: section [{section}] must hold key/value pairs")
        for key, value in values.items():
            if key not in _SCHEMA[section]:
                raise ValueError(f"{origin}: unknown key {key!r} in section [{section}]")
            allowed = _SCHEMA[section][key]
            # bool subclasses int, so spell the check out to keep true = 1 out of int slots
            ok = isinstance(value, allowed) and not (isinstance(value, bool) and bool not in allowed)
            if not ok:
                wanted = "/".join(t.__name__ for t in allowed)
                raise ValueError(
                    f"{origin}: key {section}.{key} should be {wanted}, got {type(value).__name__}"
                )


def load_run_config(path=None, overrides: dict = None) -> RunConfig:
    """Merge defaults <- config file <- overrides into a RunConfig.

    ``overrides`` maps dotted keys ("gan.iterations") to values; None
    values are ignored so unset CLI flags fall through.
    """
    merged = {sec: dict(vals) for sec, vals in _DEFAULTS.items()}
    if path is not None:
        file_sections = _read_toml(path)
        _validate(file_sections, str(path))
        for section, values in file_sections.items():
            merged[section].update(values)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        merged.setdefault(section, {})[key] = value
    _validate(merged, "config")
    run = merged["run"]
    gan = GanConfig(seed=run["seed"], **{k: merged["gan"][k] for k in merged["gan"]})
    cleaning = CleaningConfig(**merged["cleaning"])
    return RunConfig(
        data_root=run["data_root"],
        out_dir=run["out_dir"],
        seed=run["seed"],
        class_subset=run["class_subset"],
        synthetic=run["synthetic"],
        synthetic_per_class=run["synthetic_per_class"],
        gan=gan,
        classifier_epochs=merged["classifier"]["epochs"],
        classifier_batch_size=merged["classifier"]["batch_size"],
        cleaning=cleaning,
        per_class_count=merged["report"]["per_class_count"],
    )
