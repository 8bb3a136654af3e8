"""Experiment configuration: YAML in, validated dataclass out."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .groups import GroupError, GroupSpec
from .orders import OrderError, model_from_dict
from .systems import Bernoulli, ProcessError, factor_from_dict, process_from_dict

# keys that steer execution but never change results
EXECUTION_KEYS = ("output", "threads", "cache_dir")


class ConfigError(ValueError):
    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass
class ExperimentConfig:
    group: GroupSpec
    process: Any
    factor: Any
    order_model: Any
    params: dict
    seed: int
    raw: dict = field(repr=False)
    threads: int = 1
    cache_dir: str | None = None
    output_path: str | None = None
    output_format: str = "json"

    def canonical(self) -> dict:
        """Result-relevant part of the config with sorted keys and normalized numbers."""
        data = {k: v for k, v in self.raw.items() if k not in EXECUTION_KEYS}
        data["seed"] = self.seed
        return _normalize(data)

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _normalize(x):
    if isinstance(x, dict):
        return {str(k): _normalize(v) for k, v in sorted(x.items(), key=lambda kv: str(kv[0]))}
    if isinstance(x, (list, tuple)):
        return [_normalize(v) for v in x]
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        return int(x) if x.is_integer() and abs(x) < 2**53 else x
    return x


def load_config(source: str | Path | dict, *, seed: int | None = None) -> ExperimentConfig:
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = Path(source).read_text()
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"unparseable config: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = _normalize(raw)
    if seed is not None:
        raw["seed"] = seed
    if "seed" not in raw:
        raise ConfigError("seed must be given explicitly", "seed")
    try:
        seed_val = int(raw["seed"])
    except (TypeError, ValueError):
        raise ConfigError("seed must be an integer", "seed") from None

    try:
        group = GroupSpec.from_dict(raw.get("group", {"family": "lattice", "dim": 1}))
    except (GroupError, KeyError, TypeError) as e:
        raise ConfigError(str(e), "group") from None

    if "process" not in raw:
        raise ConfigError("missing process section", "process")
    pdict = dict(raw["process"])
    if pdict.get("kind") == "bernoulli" and "group" not in pdict:
        pdict["group"] = group.to_dict()
    if pdict.get("kind") == "factored" and pdict.get("base", {}).get("kind") == "bernoulli":
        pdict["base"] = {"group": group.to_dict(), **pdict["base"]}
    try:
        process = process_from_dict(pdict)
    except (ProcessError, GroupError) as e:
        fld = getattr(e, "field", "") or "process"
        raise ConfigError(str(e).split(": ", 1)[-1], fld) from None
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), "process") from None

    factor = None
    if raw.get("factor"):
        try:
            factor = factor_from_dict(raw["factor"])
        except (ProcessError, KeyError, TypeError) as e:
            raise ConfigError(str(e), "factor") from None

    mdict = dict(raw.get("order_model") or {"kind": "lexicographic"})
    if mdict.get("kind") in ("iid-uniform", "intersection"):
        mdict.setdefault("seed", seed_val)
    try:
        model = model_from_dict(mdict)
    except (OrderError, KeyError, ValueError) as e:
        raise ConfigError(str(e), "order_model") from None

    out = raw.get("output") or {}
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown format {fmt!r}", "output.format")
    return ExperimentConfig(
        group=process.group if isinstance(process, Bernoulli) else group,
        process=process,
        factor=factor,
        order_model=model,
        params=dict(raw.get("params") or {}),
        seed=seed_val,
        raw=raw,
        threads=int(raw.get("threads", 1)),
        cache_dir=raw.get("cache_dir"),
        output_path=out.get("path"),
        output_format=fmt,
    )
