"""Command-line entry point: ``tpmke simulate | attack | entropy``.

Exit codes: 0 success, 1 an assertion or gate failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema

from tpmke import adversary, ake, entropy
from tpmke.adversary import ATTACKS, PROFILES, Profile
from tpmke.curves import CURVES, get_curve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_schema(name: str) -> dict:
    text = resources.files("tpmke").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(doc, name: str):
    jsonschema.validate(doc, load_schema(name))


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- simulate ---------------------------------------------------------------

def _load_scenario(source: str) -> dict:
    if source in ake.BUILTIN_SCENARIOS:
        return json.loads(json.dumps(ake.BUILTIN_SCENARIOS[source]))
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"no built-in scenario or file named {source!r}; built-ins: "
                         + ", ".join(ake.BUILTIN_SCENARIOS))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source}: not valid JSON ({exc})") from None
    return doc


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.curve:
        scenario["curve"] = args.curve
    if args.profile:
        backing = Profile(args.profile).honest_backing.value
        for p in scenario.get("parties", []):
            p["backing"] = backing
    try:
        validate(scenario, "scenario")
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid scenario: {exc.message}") from None
    if scenario.get("curve", "toy") not in CURVES:
        raise UsageError(f"unknown curve {scenario['curve']!r}")
    try:
        env, pairs = ake.run_scenario(scenario, args.seed)
    except ake.AkeError as exc:
        raise UsageError(f"scenario failed: {exc}") from None
    transcript = env.transcript_jsonl()
    schema = load_schema("transcript-event")
    for line in transcript.splitlines():
        jsonschema.validate(json.loads(line), schema)
    if args.out:
        Path(args.out).write_text(transcript)
    results = [{"scheme": a.sc.short, "initiator": a.owner, "responder": b.owner,
                "initiator_key": ake.key_fingerprint(a.key),
                "responder_key": ake.key_fingerprint(b.key),
                "equal": a.key == b.key and ake.matching(a, b)} for a, b in pairs]
    ok = all(r["equal"] for r in results)
    if args.format == "json":
        sys.stdout.write(json.dumps({"seed": args.seed, "sessions": results, "consistent": ok},
                                    indent=2, sort_keys=True) + "\n")
    else:
        for r in results:
            mark = "equal" if r["equal"] else "MISMATCH"
            sys.stdout.write(f"{r['scheme']:<4} {r['initiator']} -> {r['responder']}: "
                             f"{r['initiator_key']} {r['responder_key']} {mark}\n")
    return EXIT_OK if ok else EXIT_FAIL


# -- attack -----------------------------------------------------------------

def _split(values):
    out = []
    for v in values or []:
        out += [x for x in v.split(",") if x]
    return out


def cmd_attack(args) -> int:
    attacks = _split(args.attack) or list(ATTACKS)
    profiles = _split(args.profile) or [p.value for p in PROFILES]
    for a in attacks:
        if a not in ATTACKS:
            raise UsageError(f"unknown attack {a!r}; known: {', '.join(ATTACKS)}")
    for p in profiles:
        if p not in {q.value for q in PROFILES}:
            raise UsageError(f"unknown profile {p!r}")
    matrix = adversary.run_matrix(attacks, profiles, args.seed)
    diff = adversary.matrix_diff(matrix)
    matrix["diff"] = diff
    validate(matrix, "matrix")
    if args.format == "table":
        _write(adversary.render_table(matrix), args.out)
    else:
        _write(json.dumps(matrix, indent=2, sort_keys=True) + "\n", args.out)
    if diff:
        sys.stderr.write("attack matrix differs from the expected table:\n")
        for line in diff:
            sys.stderr.write(f"  {line}\n")
        return EXIT_FAIL
    return EXIT_OK


# -- entropy ----------------------------------------------------------------

def cmd_entropy(args) -> int:
    curves = _split(args.curve) or ["P-256", "SM2-P256"]
    for c in curves:
        if c not in CURVES:
            raise UsageError(f"unknown curve {c!r}; known: {', '.join(CURVES)}")
    functions = _split(args.function) or list(entropy.FUNCTIONS)
    for f in functions:
        if f not in entropy.FUNCTIONS:
            raise UsageError(f"unknown function {f!r}")
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    reports, running = [], []
    for c in curves:
        r, run = entropy.run_curve_report(get_curve(c), functions, args.n, args.seed,
                                          args.depth, running_step=1024)
        reports += r
        running += run
    failures = entropy.gate_failures(reports)
    if args.format == "json":
        text = entropy.reports_json(reports, failures)
        validate(json.loads(text), "entropy-report")
    elif args.format == "csv":
        text = entropy.reports_csv(reports)
    else:
        text = _entropy_table(reports)
    _write(text, args.out)
    if args.running:
        Path(args.running).write_text(entropy.running_csv(running))
    for f in failures:
        sys.stderr.write(f"gate failure: {f}\n")
    return EXIT_FAIL if failures else EXIT_OK


def _entropy_table(reports) -> str:
    lines = [f"{'curve':<10} {'function':<8} {'width':>5} {'n':>6} {'NIST bits':>10} {'CTW %':>8}"]
    for r in reports:
        ratio = "-" if r.ctw_ratio is None else f"{r.ctw_ratio:.2f}"
        lines.append(f"{r.curve:<10} {r.function:<8} {r.width:>5} {r.n:>6} {r.nist_bits:>10.2f} {ratio:>8}")
    return "\n".join(lines) + "\n"


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpmke", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a handshake scenario and check key consistency")
    sim.add_argument("--scenario", default="um-handshake",
                     help="built-in scenario name or path to a scenario JSON file")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--curve", choices=sorted(CURVES))
    sim.add_argument("--profile", choices=[p.value for p in PROFILES],
                     help="override every party's backing with this profile's")
    sim.add_argument("--out", help="write the transcript JSONL here")
    sim.add_argument("--format", choices=["table", "json"], default="table")
    sim.set_defaults(func=cmd_simulate)

    att = sub.add_parser("attack", help="run the attack matrix and compare with the expected table")
    att.add_argument("--seed", type=int, required=True)
    att.add_argument("--attack", action="append", help="attack name(s); repeat or comma-separate")
    att.add_argument("--profile", action="append", help="profile(s); repeat or comma-separate")
    att.add_argument("--out")
    att.add_argument("--format", choices=["json", "table"], default="json")
    att.set_defaults(func=cmd_attack)

    ent = sub.add_parser("entropy", help="estimate min-entropy of avf and a hash on sampled points")
    ent.add_argument("--curve", action="append", help="curve name(s); default P-256 and SM2-P256")
    ent.add_argument("--function", action="append", help="avf, avf' or sha2")
    ent.add_argument("--n", type=int, default=entropy.DEFAULT_N)
    ent.add_argument("--depth", type=int, default=entropy.DEFAULT_DEPTH)
    ent.add_argument("--seed", type=int, default=0)
    ent.add_argument("--out")
    ent.add_argument("--running", help="write running NIST estimates (every 1024 samples) as CSV")
    ent.add_argument("--format", choices=["csv", "json", "table"], default="csv")
    ent.set_defaults(func=cmd_entropy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"tpmke: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
