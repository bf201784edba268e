"""Scheme serialization.

Text format (``.scheme``), line oriented, all indices 1-based::

    hsecagg-scheme 1
    q 101
    seed 7
    K 6
    U 2
    V 2 4
    s2 0 1
    T 1 1
    holds 1 1 : 1 3 4 6
    ...
    matrix S1 4 4
    1 3 2 1
    ...                      (one line per row, decimal entries)
    matrix S2.1 4 4
    ...
    digest <sha256 hex of every preceding line>

Matrices appear in a fixed order: ``S1 A V F F1 Q B1 G`` and then
``S2.u F2.u B2.u`` for each cluster.  The structured variant is the same
content as one JSON object.
"""

from __future__ import annotations

import hashlib
import json

from .builder import ClusterCode, RelayCode, Scheme
from .errors import DumpError
from .ff import Field
from .matrix import Matrix
from .topology import Assignment, derive_params, rates

MAGIC = "hsecagg-scheme 1"
RELAY_FIELDS = ("S1", "A", "V", "F", "F1", "Q", "B1", "G")
CLUSTER_FIELDS = ("S2", "F2", "B2")


def _matrices(s: Scheme) -> list[tuple[str, Matrix]]:
    out = [(name, getattr(s.relay, name)) for name in RELAY_FIELDS]
    for c in s.clusters:
        out += [(f"{name}.{c.u + 1}", getattr(c, name)) for name in CLUSTER_FIELDS]
    return out


def _header(s: Scheme) -> dict:
    p = s.params
    return {
        "q": s.field.q,
        "seed": s.seed,
        "K": p.K,
        "U": p.U,
        "V": list(p.V),
        "s2": list(p.s2),
        "T": list(p.T),
        "holds": [[sorted(k + 1 for k in d) for d in c] for c in s.assignment.holds],
    }


def digest(lines: list[str]) -> str:
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def dumps(s: Scheme) -> str:
    h = _header(s)
    lines = [MAGIC, f"q {h['q']}", f"seed {'none' if h['seed'] is None else h['seed']}", f"K {h['K']}", f"U {h['U']}"]
    lines += [f"V {' '.join(map(str, h['V']))}", f"s2 {' '.join(map(str, h['s2']))}", f"T {' '.join(map(str, h['T']))}"]
    for u, c in enumerate(h["holds"]):
        for v, d in enumerate(c):
            lines.append(f"holds {u + 1} {v + 1} : {' '.join(map(str, d))}")
    for name, M in _matrices(s):
        lines.append(f"matrix {name} {M.rows} {M.cols}")
        lines += [" ".join(map(str, row)) for row in M.tolist()]
    lines.append(f"digest {digest(lines)}")
    return "\n".join(lines) + "\n"


def dumps_structured(s: Scheme) -> str:
    doc = _header(s)
    doc["matrices"] = {name: {"rows": M.rows, "cols": M.cols, "entries": M.tolist()} for name, M in _matrices(s)}
    body = json.dumps(doc, sort_keys=True)
    doc["digest"] = hashlib.sha256(body.encode()).hexdigest()
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _assemble(h: dict, mats: dict[str, list[list[int]]], shapes: dict[str, tuple[int, int]]) -> Scheme:
    missing = [k for k in ("q", "seed", "K", "U", "V", "s2", "T") if k not in h]
    if missing:
        raise DumpError(f"header fields missing: {', '.join(missing)}")
    field = Field(int(h["q"]))
    a = Assignment.from_lists(int(h["K"]), h["holds"])
    if list(a.V) != list(h["V"]) or a.U != int(h["U"]):
        raise DumpError("holds table disagrees with U/V header")
    p = derive_params(a, h["s2"], h["T"])
    rr = rates(p)

    def get(name):
        if name not in mats:
            raise DumpError(f"matrix {name} missing")
        return Matrix(field, mats[name], shape=shapes[name])

    relay = RelayCode(*(get(n) for n in RELAY_FIELDS))
    clusters = tuple(
        ClusterCode(u, *(get(f"{n}.{u + 1}") for n in CLUSTER_FIELDS), p.user_rows(u)) for u in range(p.U)
    )
    for c in clusters:
        if c.S2.rows != p.V[c.u] * c.user_rows:
            raise DumpError(f"S2.{c.u + 1} has {c.S2.rows} rows, expected {p.V[c.u] * c.user_rows}")
    return Scheme(field, a, p, rr, relay, clusters, h["seed"])


def loads(text: str) -> tuple[Scheme, bool]:
    """Parse a dump; returns the scheme and whether its digest matches."""
    if text.lstrip().startswith("{"):
        return _loads_structured(text)
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise DumpError("not a scheme dump")
    h: dict = {"holds": []}
    mats: dict[str, list[list[int]]] = {}
    shapes: dict[str, tuple[int, int]] = {}
    ok_digest = False
    i = 1
    try:
        while i < len(lines):
            parts = lines[i].split()
            i += 1
            if not parts:
                continue
            key = parts[0]
            if key == "digest":
                ok_digest = parts[1] == digest(lines[: i - 1])
            elif key == "holds":
                u, v = int(parts[1]), int(parts[2])
                while len(h["holds"]) < u:
                    h["holds"].append([])
                if len(h["holds"][u - 1]) != v - 1:
                    raise DumpError(f"holds lines out of order at ({u},{v})")
                h["holds"][u - 1].append([int(x) for x in parts[4:]])
            elif key == "matrix":
                name, r, c = parts[1], int(parts[2]), int(parts[3])
                mats[name] = [[int(x) for x in lines[i + t].split()] for t in range(r)]
                if any(len(row) != c for row in mats[name]):
                    raise DumpError(f"matrix {name}: row width differs from {c}")
                shapes[name] = (r, c)
                i += r
            elif key == "seed":
                h["seed"] = None if parts[1] == "none" else int(parts[1])
            elif key in ("V", "s2", "T"):
                h[key] = [int(x) for x in parts[1:]]
            else:
                h[key] = int(parts[1])
    except (ValueError, IndexError) as e:
        raise DumpError(f"malformed dump near line {i}: {e}") from e
    return _assemble(h, mats, shapes), ok_digest


def _loads_structured(text: str) -> tuple[Scheme, bool]:
    try:
        doc = json.loads(text)
        claimed = doc.pop("digest", None)
        ok = claimed == hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
        mats = {k: v["entries"] for k, v in doc["matrices"].items()}
        shapes = {k: (v["rows"], v["cols"]) for k, v in doc["matrices"].items()}
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise DumpError(f"malformed structured dump: {e}") from e
    return _assemble(doc, mats, shapes), ok
