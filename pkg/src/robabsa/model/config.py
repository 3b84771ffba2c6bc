"""Model hyperparameters and the key-value text format shared by all config files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


def parse_kv(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys may use - or _."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def coerce(value: str, like):
    if isinstance(like, bool):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return value


def apply_kv(obj, values: dict, strict: bool = True):
    """Return a copy of dataclass `obj` with matching keys overridden."""
    names = {f.name for f in dataclasses.fields(obj)}
    changes = {}
    for key, value in values.items():
        if key not in names:
            if strict:
                raise KeyError(f"unknown key {key!r} for {type(obj).__name__}")
            continue
        current = getattr(obj, key)
        changes[key] = coerce(value, current) if isinstance(value, str) else value
    return dataclasses.replace(obj, **changes)


def format_kv(obj) -> str:
    lines = []
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = ",".join(map(str, v))
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_transformer_layers: int = 2
    n_heads: int = 4
    d_ff: int = 128
    d_gcn: int = 32
    n_gcn_layers: int = 3
    d_label_embedding: int = 16
    vocab_size: int = 0
    n_label_ids: int = 0
    max_positions: int = 160
    dropout_word: float = 0.3
    dropout_feature: float = 0.1
    mark_aspect: bool = True   # give the aspect's own sentence positions the aspect segment id

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.n_gcn_layers < 0 or self.n_transformer_layers < 0:
            raise ValueError("layer counts must be >= 0")

    @property
    def d_final(self) -> int:
        return (self.d_gcn if self.n_gcn_layers else self.d_model) + self.d_model


PAPER_SCALE = dict(d_model=768, n_transformer_layers=4, n_heads=12, d_ff=3072,
                   d_gcn=300, n_gcn_layers=3, d_label_embedding=100)


def load_model_config(path) -> ModelConfig:
    return apply_kv(ModelConfig(), parse_kv(Path(path).read_text(encoding="utf-8")))
