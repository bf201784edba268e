"""Scenario configuration files (YAML).

Example::

    q: 101
    seed: 0
    K: 6
    assignment:          # one list per cluster, one dataset list per user
      - [[1, 3, 4, 6], [1, 2, 6]]
      - [[2, 3, 5], [2, 3, 4, 5], [2, 3, 4], [3, 4, 5]]
    s2: [0, 1]
    T: [1, 1]
    lprime: 1
    dropouts: [[], [4]]  # optional, 1-based user ids per cluster
    audit_caps: {exhaustive: 10000, sample: 1000}
    reading: pieces      # colluder inputs: pieces | partial_sum

``U`` and ``V`` may be given and are then checked against ``assignment``.
Dataset and user indices are 1-based in the file and 0-based in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from .errors import ParameterError
from .ff import DEFAULT_Q
from .scenarios import Caps
from .topology import Assignment

KNOWN = {"q", "seed", "K", "U", "V", "assignment", "s2", "T", "lprime", "dropouts", "audit_caps", "reading"}


@dataclass(frozen=True)
class ScenarioConfig:
    K: int
    assignment: list[list[list[int]]]
    s2: list[int]
    T: list[int]
    q: int = DEFAULT_Q
    seed: int = 0
    lprime: int = 1
    dropouts: list[list[int]] | None = None
    caps: Caps = field(default_factory=Caps)
    reading: str = "pieces"

    @property
    def U(self) -> int:
        return len(self.assignment)

    def to_assignment(self) -> Assignment:
        return Assignment.from_lists(self.K, self.assignment)

    def dropout_sets(self) -> list[frozenset[int]] | None:
        if self.dropouts is None:
            return None
        return [frozenset(v - 1 for v in d) for d in self.dropouts]

    def with_overrides(self, **kw) -> ScenarioConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _int_list(doc: dict, key: str, n: int) -> list[int]:
    val = doc.get(key, [0] * n)
    if not isinstance(val, list) or len(val) != n or not all(isinstance(x, int) for x in val):
        raise ParameterError(f"config: {key} must be a list of {n} integers")
    return val


def parse_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ParameterError("config: expected a mapping at top level")
    unknown = set(doc) - KNOWN
    if unknown:
        raise ParameterError(f"config: unknown keys {sorted(unknown)}")
    for key in ("K", "assignment"):
        if key not in doc:
            raise ParameterError(f"config: missing {key}")
    assignment = doc["assignment"]
    if not isinstance(assignment, list) or not all(isinstance(c, list) for c in assignment):
        raise ParameterError("config: assignment must be a list of clusters")
    U = len(assignment)
    if "U" in doc and doc["U"] != U:
        raise ParameterError(f"config: U={doc['U']} but assignment has {U} clusters")
    if "V" in doc and list(doc["V"]) != [len(c) for c in assignment]:
        raise ParameterError(f"config: V={doc['V']} disagrees with assignment")
    caps = doc.get("audit_caps") or {}
    cfg = ScenarioConfig(
        K=int(doc["K"]),
        assignment=assignment,
        s2=_int_list(doc, "s2", U),
        T=_int_list(doc, "T", U),
        q=int(doc.get("q", DEFAULT_Q)),
        seed=int(doc.get("seed", 0)),
        lprime=int(doc.get("lprime", 1)),
        dropouts=doc.get("dropouts"),
        caps=Caps(int(caps.get("exhaustive", Caps.exhaustive)), int(caps.get("sample", Caps.sample))),
        reading=doc.get("reading", "pieces"),
    )
    if cfg.reading not in ("pieces", "partial_sum"):
        raise ParameterError(f"config: reading must be pieces or partial_sum, not {cfg.reading!r}")
    if cfg.dropouts is not None and len(cfg.dropouts) != U:
        raise ParameterError(f"config: dropouts needs one list per cluster ({U})")
    cfg.to_assignment()
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(yaml.safe_load(fh))


def example_config() -> ScenarioConfig:
    """The packaged two-cluster example configuration."""
    text = resources.files("hsecagg").joinpath("data/example.yaml").read_text()
    return parse_config(yaml.safe_load(text))
