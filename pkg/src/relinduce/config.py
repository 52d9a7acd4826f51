"""Run configuration, config-file parsing, seed derivation, manifest."""
from __future__ import annotations

import hashlib
import json
import platform
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy

from . import __version__
from .errors import ConfigError, DataError
from .mining import MAX_SPAN_GAP, MAX_TEMPLATE_TOKENS
from .model import TrainConfig

AGGREGATIONS = ("max", "sum")
DATASET_FORMATS = ("google", "bats", "diffvec", "tsv")


def derive_seed(global_seed: int, *parts: str) -> int:
    """Stable 63-bit seed for a named random decision."""
    payload = "|".join([str(global_seed), *parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") >> 1


@dataclass
class RunConfig:
    corpus: Path
    dataset: Path
    out: Path
    dataset_format: str = "tsv"
    categories: Path | None = None
    presplit: bool = False
    fixture: Path | None = None
    remote: str | None = None
    k: int = 10
    prefilter_size: int = 1000
    final_k: int | None = 100  # None disables filtering and keeps every template
    aggregation: str = "max"
    seed: int = 0
    workers: int = 1
    cache: bool = True
    max_len: int = MAX_TEMPLATE_TOKENS
    max_window: int = MAX_SPAN_GAP
    cross_ratio: float = 1.0
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    warmup_fraction: float = 0.1
    epochs: int = 5
    batch_size: int = 32
    figures: bool = True

    def validate(self) -> None:
        if (self.fixture is None) == (self.remote is None):
            raise ConfigError("configure exactly one oracle backend: fixture or remote")
        if self.dataset_format not in DATASET_FORMATS:
            raise ConfigError(
                f"unknown dataset format {self.dataset_format!r}; "
                f"expected one of {', '.join(DATASET_FORMATS)}"
            )
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {', '.join(AGGREGATIONS)}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.final_k is not None and not 1 <= self.final_k <= self.prefilter_size:
            raise ConfigError(
                f"final_k {self.final_k} must lie in [1, prefilter_size={self.prefilter_size}]"
            )
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.max_len > MAX_TEMPLATE_TOKENS or self.max_window > MAX_SPAN_GAP:
            raise ConfigError(
                f"limits exceed hard caps ({MAX_TEMPLATE_TOKENS} tokens, gap {MAX_SPAN_GAP})"
            )
        if self.cross_ratio < 0:
            raise ConfigError("cross_ratio must be non-negative")
        try:
            # constructor validates ranges
            self.train_config(rng_seed=0)
        except DataError as exc:
            raise ConfigError(str(exc)) from exc

    def train_config(self, rng_seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            warmup_fraction=self.warmup_fraction,
            epochs=self.epochs,
            batch_size=self.batch_size,
            rng_seed=rng_seed,
        )


_BOOL_FIELDS = {"presplit", "cache", "figures"}
_INT_FIELDS = {"k", "prefilter_size", "seed", "workers", "max_len", "max_window",
               "epochs", "batch_size"}
_FLOAT_FIELDS = {"cross_ratio", "learning_rate", "weight_decay", "warmup_fraction"}
_PATH_FIELDS = {"corpus", "dataset", "out", "categories", "fixture"}


def parse_config_file(path: str | Path) -> dict:
    """key = value lines; '#' starts a comment; values typed per field."""
    values: dict = {}
    known = {f.name for f in fields(RunConfig)}
    base = Path(path).resolve().parent
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value, lineno, path, base)
    return values


def _coerce(key: str, value: str, lineno: int, path, base: Path):
    if key == "final_k":
        if value.lower() in ("all", "none"):
            return None
        return int(value)
    if key in _BOOL_FIELDS:
        low = value.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{path}:{lineno}: expected a boolean for {key}, got {value!r}")
    try:
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    if key in _PATH_FIELDS:
        p = Path(value)
        return p if p.is_absolute() else base / p
    return value


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _hash_input(path: Path) -> str:
    if path.is_file():
        return _sha256_file(path)
    digest = hashlib.sha256()
    for f in sorted(path.rglob("*")):
        if f.is_file():
            digest.update(f.relative_to(path).as_posix().encode())
            digest.update(_sha256_file(f).encode())
    return digest.hexdigest()


def build_manifest(config: RunConfig) -> dict:
    """Everything needed to reproduce a run: config, input hashes, versions."""
    cfg = {}
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        cfg[f.name] = str(value) if isinstance(value, Path) else value
    inputs = {}
    for name in ("corpus", "dataset", "categories", "fixture"):
        p = getattr(config, name)
        if p is not None and Path(p).exists():
            inputs[name] = _hash_input(Path(p))
    return {
        "config": cfg,
        "input_sha256": inputs,
        "versions": {
            "relinduce": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
        },
    }


def make_oracle(config: RunConfig):
    """Instantiate the configured backend, wrapped in the on-disk cache."""
    from .oracle import CachedOracle, FixtureOracle, FixtureWorld, RemoteOracle

    if config.fixture is not None:
        oracle = FixtureOracle(FixtureWorld.load(config.fixture))
    else:
        assert config.remote is not None
        oracle = RemoteOracle(config.remote)
    if config.cache:
        config.out.mkdir(parents=True, exist_ok=True)
        return CachedOracle(oracle, config.out / "oracle_cache.sqlite")
    return oracle
