"""Run configuration: flat ``key = value`` files with dotted keys.

Every tunable lives under a section (``graph.k``, ``model.lambda``,
``train.patience``, ``sampler.rho1`` ...). Unknown keys are rejected.
Command-line ``--set key=value`` pairs and the global flags are applied
on top of the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from . import model as M
from .graph import DEFAULT_K
from .nn import digest
from .sampler import SamplerConfig
from .synth import SynthSpec
from .trainer import TrainConfig


class ConfigError(ValueError):
    """Malformed config file, unknown key or invalid value."""


@dataclass
class PathsConfig:
    labeled: Optional[str] = None
    unlabeled: Optional[str] = None
    embeddings: Optional[str] = None
    graph: Optional[str] = None
    checkpoint: Optional[str] = None
    log: Optional[str] = None
    input: Optional[str] = None
    output: Optional[str] = None


@dataclass
class CorpusConfig:
    train_ratio: float = 0.6
    test_ratio: float = 0.3
    dev_ratio: float = 0.1
    split_seed: int = 0
    unlabeled_cap: Optional[int] = None

    @property
    def ratios(self) -> tuple:
        return (self.train_ratio, self.test_ratio, self.dev_ratio)


@dataclass
class EmbeddingConfig:
    dim: Optional[int] = None       # None: take the dimension from the file


@dataclass
class GraphConfig:
    k: int = DEFAULT_K


@dataclass
class SweepConfig:
    budgets: str = "100,500,1000,2000,all"
    modes: str = "supervised,semi"

    def budget_list(self) -> list:
        out = []
        for tok in _split_list(self.budgets):
            out.append(None if tok == "all" else int(tok))
        return out

    def mode_list(self) -> list:
        return _split_list(self.modes)


def _split_list(s: str) -> list:
    return [t.strip() for t in s.split(",") if t.strip()]


@dataclass
class RunConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    model: M.ModelConfig = field(default_factory=M.ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    synth: SynthSpec = field(default_factory=SynthSpec)

    # the seed key fans out to the per-module seeds
    def train_config(self) -> TrainConfig:
        return replace(self.train, seed=self.seed)

    def sampler_config(self) -> SamplerConfig:
        return replace(self.sampler, seed=self.seed)

    def synth_spec(self) -> SynthSpec:
        return replace(self.synth, seed=self.seed)

    def model_digest(self, K: int) -> str:
        """Digest of everything that fixes the architecture and the data split."""
        return digest({"model": replace(self.model, K=K).to_dict(),
                       "corpus": _section_dict(self.corpus)})


# config key -> dataclass field name where they differ
_ALIASES = {("model", "lambda"): "lam"}
_SKIP = {("model", "K"), ("train", "seed"), ("sampler", "seed"), ("synth", "seed")}


def _section_dict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def known_keys() -> list:
    keys = ["seed"]
    for sec in fields(RunConfig):
        if sec.name == "seed":
            continue
        for f in fields(_default_section(sec.name)):
            if (sec.name, f.name) in _SKIP:
                continue
            name = {v: k[1] for k, v in _ALIASES.items() if k[0] == sec.name}.get(f.name, f.name)
            keys.append(f"{sec.name}.{name}")
    return keys


def _default_section(name: str):
    return getattr(RunConfig(), name)


def _parse_filters(text: str) -> list:
    out = []
    for spec in _split_list(text):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"filter bank {spec!r} must be width:count:pool")
        out.append(tuple(int(p) for p in parts))
    return out


def _coerce(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if key == "model.filters":
            return _parse_filters(raw)
        if key == "model.hidden":
            return tuple(int(x) for x in _split_list(raw))
        if raw.lower() in ("none", "auto", "") and (default is None or key in _OPTIONAL):
            return None
        if isinstance(default, bool):
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if isinstance(default, int) or key in _INT_OPTIONAL:
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


_INT_OPTIONAL = {"train.context_per_epoch", "corpus.unlabeled_cap", "embedding.dim"}
_OPTIONAL = _INT_OPTIONAL


def parse_pairs(text: str, origin: str = "<config>") -> list:
    """``key = value`` lines to ``[(key, value, where)]``; ``#`` starts a comment."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip(), f"{origin}:{lineno}"))
    return pairs


def build(pairs) -> RunConfig:
    """Apply ``(key, value, where)`` pairs over the defaults; later pairs win."""
    known = set(known_keys())
    values: dict = {}
    for key, value, where in pairs:
        if key not in known:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        values[key] = value
    cfg = RunConfig()
    if "seed" in values:
        cfg.seed = _coerce("seed", values.pop("seed"), 0)
    grouped: dict = {}
    for key, value in values.items():
        sec, name = key.split(".", 1)
        grouped.setdefault(sec, {})[_ALIASES.get((sec, name), name)] = (key, value)
    for sec, items in grouped.items():
        current = getattr(cfg, sec)
        updates = {fname: _coerce(key, value, getattr(current, fname))
                   for fname, (key, value) in items.items()}
        try:
            setattr(cfg, sec, replace(current, **updates))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid {sec} settings: {exc}") from None
    return cfg


def load(path: Optional[str] = None, overrides=()) -> RunConfig:
    pairs = []
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        pairs += parse_pairs(text, str(path))
    for i, item in enumerate(overrides):
        if "=" not in item:
            raise ConfigError(f"override {item!r} must be key=value")
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip(), f"--set #{i + 1}"))
    return build(pairs)


def dump(cfg: RunConfig) -> str:
    """Render a config back to ``key = value`` lines (round-trips through :func:`load`)."""
    lines = [f"seed = {cfg.seed}"]
    for key in known_keys()[1:]:
        sec, name = key.split(".", 1)
        value = getattr(getattr(cfg, sec), _ALIASES.get((sec, name), name))
        if key == "model.filters":
            value = ",".join(":".join(str(x) for x in f) for f in value)
        elif key == "model.hidden":
            value = ",".join(str(h) for h in value)
        elif value is None:
            value = "none"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
