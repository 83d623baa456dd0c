"""Round-by-round message log with bit accounting.

Serialized records are 0-indexed (workers, samples, coordinates and
groups all start at 0); in memory everything stays 1-indexed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

FIELDS = ("round", "group", "worker", "kind", "payload", "uplink_bits", "downlink_bits")


@dataclass
class Record:
    round: int
    group: int
    worker: Optional[int]
    kind: str
    payload: dict
    uplink_bits: int = 0
    downlink_bits: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "round": self.round,
            "group": self.group - 1,
            "worker": None if self.worker is None else self.worker - 1,
            "kind": self.kind,
            "payload": _zero_index(self.payload),
            "uplink_bits": self.uplink_bits,
            "downlink_bits": self.downlink_bits,
        }


_INDEX_KEYS = {"index", "coord", "lo", "hi"}


def _zero_index(payload: dict) -> dict:
    out = {}
    for key, value in payload.items():
        if key in _INDEX_KEYS:
            out[key] = int(value) - 1
        elif key == "workers":
            out[key] = [int(w) - 1 for w in value]
        elif isinstance(value, np.ndarray):
            out[key] = value.tolist()
        elif isinstance(value, (np.integer, np.bool_)):
            out[key] = value.item()
        else:
            out[key] = value
    return out


@dataclass
class Transcript:
    records: list[Record] = field(default_factory=list)
    local_comp_indices: list[int] = field(default_factory=list)
    local_comp_values: list[np.ndarray] = field(default_factory=list)
    rounds_used: int = 0

    def next_round(self) -> int:
        self.rounds_used += 1
        return self.rounds_used

    def log(self, round_: int, group: int, worker: Optional[int], kind: str, payload: dict,
            uplink_bits: int = 0, downlink_bits: int = 0) -> Record:
        rec = Record(round_, group, worker, kind, payload, uplink_bits, downlink_bits)
        self.records.append(rec)
        return rec

    @property
    def kappa_bits(self) -> int:
        # the round-0 gradient-code responses are not part of the protocol overhead
        return sum(r.uplink_bits for r in self.records if r.round >= 1)

    @property
    def initial_bits(self) -> int:
        return sum(r.uplink_bits for r in self.records if r.round == 0)

    @property
    def downlink_bits(self) -> int:
        return sum(r.downlink_bits for r in self.records)

    @property
    def local_computations(self) -> int:
        return len(self.local_comp_indices)

    def dumps(self) -> str:
        return "".join(json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
                       for r in self.records)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
