"""Machine-readable reports with stable field names.

A report captures enough to re-run its command deterministically: the
command echo, the full configuration including the seed, the verdict and
the witness.  `replay` re-executes the command and compares everything but
the wall time.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

TOOL_VERSION = "0.1.0"

REPLAY_IGNORED = ("wall_time_s",)


@dataclass
class Report:
    command: list
    config: dict
    verdict: str
    witness: Optional[dict] = None
    tallies: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    tool_version: str = TOOL_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def matches(self, other: "Report") -> bool:
        a, b = asdict(self), asdict(other)
        for key in REPLAY_IGNORED:
            a.pop(key, None)
            b.pop(key, None)
        return a == b


def load_report(path: str) -> Report:
    with open(path) as fh:
        data = json.load(fh)
    return Report(
        command=data["command"],
        config=data.get("config", {}),
        verdict=data["verdict"],
        witness=data.get("witness"),
        tallies=data.get("tallies", {}),
        wall_time_s=data.get("wall_time_s", 0.0),
        tool_version=data.get("tool_version", TOOL_VERSION),
    )
