"""Run configuration: JSON file values overridden by command-line flags."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

from ..adversary import ATTACK_KINDS, AttackSpec
from ..alphabet import Alphabet
from ..assignment import SystemConfig
from ..errors import ConfigurationError


@dataclass
class RunConfig:
    s: int = 2
    u: int = 1
    m: int = 1
    p: int = 8
    d: int = 4
    alphabet_log2: int = 16
    n: Optional[int] = None
    attack: str = "none"
    seed: int = 0
    repetitions: int = 1
    malicious: Optional[list] = None
    stragglers: Optional[list] = None
    n_stragglers: int = 0
    collapse: Optional[bool] = None
    case: int = 1
    corruption_rate: float = 0.5
    forced_local_comps: int = 0
    out: Optional[str] = None
    transcript: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def system(self, seed: Optional[int] = None) -> SystemConfig:
        n = self.m * (self.s + self.u)
        if self.n is not None and self.n != n:
            raise ConfigurationError(f"n = {self.n} does not match m(s+u) = {n}")
        return SystemConfig(n, self.s, self.u, self.m, self.p, self.d, Alphabet(self.alphabet_log2),
                            self.seed if seed is None else seed)

    def attack_spec(self, seed: Optional[int] = None) -> AttackSpec:
        to_tuple = lambda ids: None if ids is None else tuple(int(w) for w in ids)
        return AttackSpec(
            kind=self.attack,
            malicious=to_tuple(self.malicious),
            stragglers=to_tuple(self.stragglers),
            seed=self.seed if seed is None else seed,
            n_stragglers=self.n_stragglers,
            collapse=self.collapse,
            case=self.case,
            corruption_rate=self.corruption_rate,
            forced_local_comps=self.forced_local_comps,
        )

    @property
    def seeds(self) -> range:
        if self.repetitions < 1:
            raise ConfigurationError(f"repetitions must be >= 1, got {self.repetitions}")
        return range(self.seed, self.seed + self.repetitions)


_FIELDS = {f.name for f in fields(RunConfig)} - {"extra"}


def load_config(path) -> dict[str, Any]:
    """Read a JSON run configuration.

    ``attack`` may be a string or an object whose keys mirror the attack
    fields (``kind``, ``malicious``, ``stragglers``, ...); those are flattened
    into the run configuration.  Unknown keys are an error.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    flat = {}
    for key, value in doc.items():
        key = key.replace("-", "_")
        if key == "attack" and isinstance(value, dict):
            for akey, avalue in value.items():
                akey = akey.replace("-", "_")
                if akey == "kind":
                    flat["attack"] = avalue
                elif akey == "malicious_set":
                    flat["malicious"] = avalue
                elif akey == "straggler_set":
                    flat["stragglers"] = avalue
                elif akey == "rng_seed":
                    flat["seed"] = avalue
                else:
                    flat[akey] = avalue
        else:
            flat[key] = value
    return flat


def merge(file_values: dict, flag_values: dict) -> RunConfig:
    """Flags override file values; ``None`` flags count as absent."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    unknown = sorted(set(merged) - _FIELDS)
    extra = {k: merged.pop(k) for k in unknown if k in ("figure", "which", "iterations", "lr", "frac_bits")}
    unknown = [k for k in unknown if k not in extra]
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(**merged, extra=extra)
    if cfg.attack not in ATTACK_KINDS:
        raise ConfigurationError(f"unknown attack {cfg.attack!r}; expected one of {', '.join(ATTACK_KINDS)}")
    for name in ("s", "u", "m", "p", "d", "alphabet_log2", "seed", "repetitions", "n_stragglers", "case",
                 "forced_local_comps"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    return cfg
