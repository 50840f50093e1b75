"""One-file pipeline configuration with flag overrides.

The config is YAML with sections mirroring the stage configs (paths,
labeling, model, train, loss, eval, attribution). Every key has a
default; the global seed is inherited by labeling and training unless
those sections set their own. Values given with -O key=value on the
command line win over the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources

import yaml

from patclass.attribution import AttributionConfig
from patclass.errors import ConfigError
from patclass.nn.loss import LossConfig
from patclass.nn.model import ModelConfig
from patclass.nn.train import TrainConfig
from patclass.taxonomy import Taxonomy, default_taxonomy, load_taxonomy_file
from patclass.weaklabel import LabelingConfig

CONFIG_VERSION = 1


@dataclass
class PathsConfig:
    corpus: str | None = None        # default: bundled sample corpus
    taxonomy: str | None = None      # default: bundled scheme
    dataset_dir: str = "out/dataset"
    checkpoint_dir: str = "out/checkpoints"
    report_dir: str = "out/reports"


@dataclass
class EvalSettings:
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("eval threshold must be in [0, 1]")


@dataclass
class PipelineConfig:
    version: int = CONFIG_VERSION
    seed: int = 7
    paths: PathsConfig = field(default_factory=PathsConfig)
    labeling: LabelingConfig = field(default_factory=LabelingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    eval: EvalSettings = field(default_factory=EvalSettings)
    attribution: AttributionConfig = field(default_factory=AttributionConfig)

    def taxonomy(self) -> Taxonomy:
        if self.paths.taxonomy is None:
            return default_taxonomy()
        return load_taxonomy_file(self.paths.taxonomy)

    def corpus_path(self) -> str:
        if self.paths.corpus is None:
            return sample_corpus_path()
        return self.paths.corpus


def sample_corpus_path() -> str:
    return str(resources.files("patclass.data").joinpath("sample_corpus.jsonl"))


_SECTIONS: dict[str, type] = {
    "paths": PathsConfig,
    "labeling": LabelingConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "loss": LossConfig,
    "eval": EvalSettings,
    "attribution": AttributionConfig,
}


def _build_section(name: str, cls: type, data: dict, global_seed: int):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} in section {name!r}")
    kwargs = dict(data)
    if "seed" in known and "seed" not in kwargs:
        kwargs["seed"] = global_seed
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name} config: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("pipeline config must be a mapping")
    unknown = set(data) - (set(_SECTIONS) | {"version", "seed"})
    if unknown:
        raise ConfigError(f"unknown top-level config key(s) {sorted(unknown)}")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    seed = data.get("seed", PipelineConfig.seed)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    sections = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")
        sections[name] = _build_section(name, cls, raw, seed)
    return PipelineConfig(version=version, seed=seed, **sections)


def _apply_overrides(data: dict, overrides: tuple[str, ...]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {value!r}: {exc}")
        target = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override {key!r} does not address a section")
        target[parts[-1]] = parsed
    return data


def load_pipeline_config(
    path: str | None,
    overrides: tuple[str, ...] = (),
) -> PipelineConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if loaded is not None:
            data = loaded
    data = _apply_overrides(data, overrides)
    return config_from_dict(data)


def config_reference() -> list[tuple[str, str]]:
    """Every config key with its default, for --help and the docs."""
    rows = [("version", str(CONFIG_VERSION)), ("seed", str(PipelineConfig.seed))]
    for name, cls in _SECTIONS.items():
        for f in dataclasses.fields(cls):
            if f.default is not dataclasses.MISSING:
                default = f.default
            elif f.default_factory is not dataclasses.MISSING:  # type: ignore[misc]
                default = f.default_factory()  # type: ignore[misc]
            else:
                default = ""
            rows.append((f"{name}.{f.name}", repr(default)))
    return rows
