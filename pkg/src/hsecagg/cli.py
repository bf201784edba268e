"""Command line entry point.

    hsecagg rates   CONFIG
    hsecagg build   CONFIG --out scheme.txt
    hsecagg run     CONFIG|--scheme PATH [--drop 2:4] [--all-dropouts]
    hsecagg audit   SCHEME [--oracle]
    hsecagg fixture [--q 101]

CONFIG is a YAML file, or the word ``example`` for the packaged two-cluster
example.  Every common flag can also be set through an environment variable
``HSECAGG_<FLAG>`` (e.g. ``HSECAGG_Q=7``, ``HSECAGG_ORACLE=1``); explicit
flags win.

Exit codes: 0 ok, 2 infeasible parameters or failed precondition,
3 construction failure, 4 security audit failure, 5 decode mismatch,
6 fixture check failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from .audit import DEFAULT_BUDGET, CheckResult, audit_full
from .builder import Scheme, build_scheme
from .config import ScenarioConfig, example_config, load_config
from .dump import dumps, dumps_structured, loads
from .errors import (
    ConstructionError,
    DumpError,
    FieldError,
    HSecAggError,
    ParameterError,
    SecurityConstraintViolated,
)
from .ff import make_rng
from .fixtures import FIXTURE_Q, verify_fixtures
from .runtime import sample_inputs, simulate, transcript_dict, transcript_text
from .scenarios import Caps, dropout_patterns, format_pattern
from .topology import check_feasibility, derive_params, rates

log = logging.getLogger("hsecagg")

EXIT_OK, EXIT_ERROR, EXIT_PARAM, EXIT_BUILD, EXIT_SECURITY, EXIT_DECODE, EXIT_FIXTURE = 0, 1, 2, 3, 4, 5, 6
ENV_PREFIX = "HSECAGG_"


def _env(name: str, cast=str):
    val = os.environ.get(ENV_PREFIX + name)
    if val is None or val == "":
        return None
    if cast is bool:
        return val.lower() in ("1", "true", "yes", "on")
    return cast(val)


def _caps(text: str) -> Caps:
    """``N`` or ``N,M``: exhaustive cap and sample size."""
    parts = [int(x) for x in text.split(",")]
    if len(parts) == 1:
        return Caps(parts[0], min(parts[0], Caps.sample))
    return Caps(parts[0], parts[1])


def _fmt(x: Fraction) -> str:
    return str(x)


def _emit(args, text: str, data) -> None:
    if args.format == "structured":
        sys.stdout.write(json.dumps(data, sort_keys=True, default=str) + "\n")
    else:
        sys.stdout.write(text)


def _config(args) -> ScenarioConfig:
    cfg = example_config() if args.config == "example" else load_config(args.config)
    caps = _caps(args.exhaustive_caps) if args.exhaustive_caps else None
    return cfg.with_overrides(q=args.q, seed=args.seed, lprime=args.lprime, caps=caps)


def _build(cfg: ScenarioConfig) -> Scheme:
    log.debug("building q=%d seed=%d s2=%s T=%s", cfg.q, cfg.seed, cfg.s2, cfg.T)
    return build_scheme(cfg.to_assignment(), cfg.s2, cfg.T, q=cfg.q, seed=cfg.seed, caps=cfg.caps)


def rates_report(cfg: ScenarioConfig) -> tuple[str, dict]:
    p = derive_params(cfg.to_assignment(), cfg.s2, cfg.T)
    check_feasibility(p)
    r = rates(p)
    r2 = "[" + ", ".join(map(_fmt, r.R2)) + "]"
    lines = [
        f"R1={_fmt(r.R1)} R2={r2} RZ={_fmt(r.RZ)} keys={r.key_count}",
        f"r1={p.r1} r2={list(p.r2)} m1={p.m1} m2={list(p.m2)} m={p.m}",
        "feasible yes",
        f"boundary {'yes' if r.on_boundary else 'no'}: R1 >= 1/m1 = {_fmt(r.R1_bound)},"
        f" R2 >= [{', '.join(map(_fmt, r.R2_bound))}]",
    ]
    data = {
        "R1": _fmt(r.R1), "R2": [_fmt(x) for x in r.R2], "RZ": _fmt(r.RZ), "keys": r.key_count,
        "r1": p.r1, "r2": list(p.r2), "m1": p.m1, "m2": list(p.m2), "m": p.m,
        "feasible": True, "on_boundary": r.on_boundary,
    }
    return "\n".join(lines) + "\n", data


def cmd_rates(args) -> int:
    text, data = rates_report(_config(args))
    _emit(args, text, data)
    return EXIT_OK


def _audit_exit(rep) -> int:
    if rep.passed:
        return EXIT_OK
    first = rep.failures[0]
    sys.stderr.write(f"first failure: {first.line()}\n")
    return EXIT_SECURITY


def cmd_build(args) -> int:
    cfg = _config(args)
    s = _build(cfg)
    rep = audit_full(s, cfg.caps, oracle=args.oracle, reading=cfg.reading, seed=cfg.seed)
    dump = dumps_structured(s) if args.format == "structured" else dumps(s)
    if args.out:
        Path(args.out).write_text(dump)
    _emit(args, rep.text() + ("" if args.out else dump), {"audit": rep.as_dict(), "out": args.out})
    return _audit_exit(rep)


def _parse_drop(text: str, U: int) -> list[frozenset[int]]:
    sets = [set() for _ in range(U)]
    for item in filter(None, text.split(",")):
        u, v = (int(x) for x in item.split(":"))
        if not 1 <= u <= U:
            raise ParameterError(f"--drop: no cluster {u}")
        sets[u - 1].add(v - 1)
    return [frozenset(s) for s in sets]


def _run_once(s: Scheme, W, N, pattern):
    tr = simulate(s, W, N, pattern)
    p, lp = s.params, W.lprime
    L = p.m * lp
    lines = [f"dropouts={format_pattern(pattern)}"]
    ok_links = True
    for (u, v), n in sorted(tr.user_link_symbols().items()):
        want = s.rates.R2[u] * L
        ok_links &= n == want
        lines.append(f"link user ({u + 1},{v + 1}) symbols={n} R2*L={_fmt(want)}")
    for u, n in enumerate(tr.relay_link_symbols()):
        want = s.rates.R1 * L
        ok_links &= n == want
        lines.append(f"link relay {u + 1} symbols={n} R1*L={_fmt(want)}")
    for j, row in enumerate(tr.decoded.tolist()):
        lines.append(f"decoded {j + 1} : " + " ".join(map(str, row)))
    lines.append(f"decode {'OK' if tr.ok else 'MISMATCH'}")
    data = transcript_dict(tr)
    data["dropouts"] = [sorted(v + 1 for v in d) for d in pattern]
    data["links_on_rate"] = ok_links
    return "\n".join(lines) + "\n", data, tr.ok, tr


def cmd_run(args) -> int:
    if args.scheme:
        s, _ = loads(Path(args.scheme).read_text())
        seed = args.seed if args.seed is not None else (s.seed or 0)
        lprime = args.lprime or 1
        drops = None
    else:
        cfg = _config(args)
        s = _build(cfg)
        seed, lprime, drops = cfg.seed, cfg.lprime, cfg.dropout_sets()
    p = s.params
    W, N = sample_inputs(s, lprime, make_rng(f"inputs:{seed}"))
    if args.all_dropouts:
        patterns = dropout_patterns(p, Caps())
    elif args.drop is not None:
        patterns = [_parse_drop(args.drop, p.U)]
    else:
        patterns = [drops or [frozenset()] * p.U]
    texts, datas, all_ok, transcripts = [], [], True, []
    for pat in patterns:
        text, data, ok, tr = _run_once(s, W, N, pat)
        texts.append(text)
        datas.append(data)
        transcripts.append(tr)
        all_ok &= ok
    if args.out:
        Path(args.out).write_text(
            json.dumps(datas, sort_keys=True) + "\n" if args.format == "structured"
            else "".join(transcript_text(t) for t in transcripts)
        )
    summary = f"SUMMARY patterns={len(patterns)} decode {'OK' if all_ok else 'MISMATCH'}\n"
    _emit(args, "".join(texts) + summary, datas)
    return EXIT_OK if all_ok else EXIT_DECODE


def cmd_audit(args) -> int:
    s, digest_ok = loads(Path(args.scheme).read_text())
    caps = _caps(args.exhaustive_caps) if args.exhaustive_caps else Caps()
    rep = audit_full(s, caps, oracle=args.oracle, budget=args.budget, seed=args.seed or 0)
    rep.results.insert(0, CheckResult("dump-digest", args.scheme, "match" if digest_ok else "mismatch", "match", digest_ok))
    _emit(args, rep.text(), rep.as_dict())
    return _audit_exit(rep)


def cmd_fixture(args) -> int:
    q = args.q if args.q is not None else FIXTURE_Q
    checks = verify_fixtures(q)
    ok = all(c.passed for c in checks)
    failed = [c for c in checks if not c.passed]
    text = "".join(c.line() + "\n" for c in checks)
    text += f"SUMMARY {'PASS' if ok else 'FAIL'} q={q} checks={len(checks)} failures={len(failed)}\n"
    _emit(args, text, {"q": q, "passed": ok, "checks": [vars(c) for c in checks]})
    return EXIT_OK if ok else EXIT_FIXTURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=_env("Q", int), help="field modulus (prime)")
    common.add_argument("--seed", type=int, default=_env("SEED", int))
    common.add_argument("--lprime", type=int, default=_env("LPRIME", int), help="symbols per piece")
    common.add_argument("--exhaustive-caps", default=_env("EXHAUSTIVE_CAPS"), metavar="N[,M]",
                        help="enumerate scenarios exhaustively up to N, else sample M")
    common.add_argument("--oracle", action="store_true", default=bool(_env("ORACLE", bool)),
                        help="cross-check MI by exhaustive counting (tiny fields only)")
    common.add_argument("--out", default=_env("OUT"))
    common.add_argument("--format", choices=("text", "structured"), default=_env("FORMAT") or "text")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="hsecagg", description="Hierarchical secure aggregation toolkit.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("rates", parents=[common], help="optimal rates and key count")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_rates)

    sp = sub.add_parser("build", parents=[common], help="build, audit and dump a scheme")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("run", parents=[common], help="simulate one round")
    sp.add_argument("config", nargs="?", default="example")
    sp.add_argument("--scheme", help="use a dumped scheme instead of building")
    sp.add_argument("--drop", help="dropped users as cluster:user pairs, e.g. 2:4,1:1")
    sp.add_argument("--all-dropouts", action="store_true", help="sweep every admissible dropout pattern")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("audit", parents=[common], help="audit a dumped scheme")
    sp.add_argument("scheme")
    sp.add_argument("--budget", type=int, default=_env("BUDGET", int) or DEFAULT_BUDGET,
                    help="largest q^n the counting oracle may enumerate")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("fixture", parents=[common], help="verify the embedded worked example")
    sp.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SecurityConstraintViolated as e:
        sys.stderr.write(f"SecurityConstraintViolated: {e}\n")
        return EXIT_SECURITY
    except ConstructionError as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_BUILD
    except (ParameterError, FieldError, DumpError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_PARAM
    except HSecAggError as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_ERROR
    except OSError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
