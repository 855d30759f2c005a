"""Command-line entry point: ``qdialogue {run,attack,leakage,efficiency}``.

Exit codes: 0 success, 2 configuration error (argparse uses the same code for
usage errors), 3 the session aborted on a failed decoy check.

``--format records`` prints one JSON object per line with stable field names.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qdialogue.adversary import AttackKind, AttackStrategy, Target, detection_experiment
from qdialogue.analysis import COMPARISONS, efficiency, enumerate_hypotheses, leakage_entropy
from qdialogue.decoy import DecoyMode
from qdialogue.errors import ConfigError, ContractViolation
from qdialogue.protocol import (
    PartyInputs,
    SessionConfig,
    Transcript,
    label_token,
    parse_label,
    run_session,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3

SEED_ENV = "QDIALOGUE_SEED"
DEFAULT_ROUNDS = 8
DEFAULT_TRIALS = 100_000


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("values must be non-negative")
    return values


def _emit(fmt: str, record: dict[str, Any], human: str) -> None:
    if fmt == "records":
        print(json.dumps(record, separators=(",", ":")))
    else:
        print(human)


def _session_inputs(args: argparse.Namespace) -> tuple[int, PartyInputs, PartyInputs]:
    alice = bob = None
    if args.bits_file is not None:
        try:
            text = Path(args.bits_file).read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read bit file: {exc}") from None
        both = PartyInputs.from_string(text)
        if len(both.bits) % 2:
            raise ConfigError("bit file must hold Alice's 2N bits followed by Bob's 2N bits")
        half = len(both.bits) // 2
        alice, bob = PartyInputs(both.bits[:half]), PartyInputs(both.bits[half:])
    if args.alice_bits is not None:
        alice = PartyInputs.from_string(args.alice_bits)
    if args.bob_bits is not None:
        bob = PartyInputs.from_string(args.bob_bits)

    n = args.rounds
    if n is None:
        n = len(alice.bits) if alice is not None else len(bob.bits) if bob is not None else DEFAULT_ROUNDS
    if n < 1:
        raise ConfigError(f"--rounds must be >= 1, got {n}")
    rng = np.random.default_rng([args.seed, 0xB175])
    if alice is None:
        alice = PartyInputs.random(n, rng)
    if bob is None:
        bob = PartyInputs.random(n, rng)
    return n, alice, bob


def cmd_run(args: argparse.Namespace) -> int:
    n, alice, bob = _session_inputs(args)
    decoys = None
    if args.decoys is not None:
        if len(args.decoys) != 3:
            raise ConfigError("--decoys takes three counts: d1,d2,d3")
        decoys = tuple(args.decoys)
    cfg = SessionConfig(n, decoys, args.threshold, args.seed)
    attack = AttackStrategy(AttackKind(args.attack), Target(args.target), args.eve_seed)
    result = run_session(cfg, alice, bob, attack)

    if args.transcript_out is not None:
        Path(args.transcript_out).write_text(result.transcript.to_jsonl(), encoding="ascii")

    record = {
        "record": "session",
        "rounds": n,
        "seed": args.seed,
        "attack": attack.kind.value,
        "target": attack.target.value,
        "aborted": result.aborted,
        "abort_step": result.abort.step if result.abort else None,
        "abort_report": result.abort.report.to_dict() if result.abort else None,
        "alice_bits": str(alice),
        "bob_bits": str(bob),
        "alice_decoded": "".join(str(b) for b in result.alice_decoded),
        "bob_decoded": "".join(str(b) for b in result.bob_decoded),
        "transcript": args.transcript_out,
    }
    if result.aborted:
        rep = result.abort.report
        human = (
            f"ABORTED in block {result.abort.step}: {rep.mismatches}/{rep.tested} decoys wrong "
            f"(error rate {rep.error_rate:.4f})"
        )
    else:
        human = "\n".join(
            [
                f"rounds        {n}",
                f"Alice sent    {record['alice_bits']}",
                f"Bob read      {record['bob_decoded']}",
                f"Bob sent      {record['bob_bits']}",
                f"Alice read    {record['alice_decoded']}",
            ]
        )
    if args.transcript_out is not None:
        human += f"\ntranscript    {args.transcript_out}"
    _emit(args.format, record, human)
    return EXIT_ABORT if result.aborted else EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    kind, mode = AttackKind(args.attack), DecoyMode(args.mode)
    rows = []
    for delta in args.deltas:
        rep = detection_experiment(kind, mode, delta, args.trials, args.seed, workers=args.workers)
        rows.append(rep)
    if args.format == "records":
        for rep in rows:
            print(json.dumps({"record": "attack", **rep.to_dict(), "seed": args.seed}, separators=(",", ":")))
    else:
        print(f"attack={kind.value} mode={mode.value} trials={args.trials} seed={args.seed}")
        print(f"{'delta':>6} {'empirical':>10} {'analytic':>10} {'3sigma':>5} {'pass/photon':>12}")
        for rep in rows:
            ok = "ok" if rep.agrees() else "OFF"
            print(f"{rep.delta:>6} {rep.empirical_detection:>10.5f} {rep.analytic_detection:>10.5f} {ok:>5} {rep.per_photon_pass:>12.5f}")
    return EXIT_OK


def cmd_leakage(args: argparse.Namespace) -> int:
    if args.label is not None:
        labels = [parse_label(args.label)]
    elif args.transcript is not None:
        try:
            text = Path(args.transcript).read_text(encoding="ascii")
        except OSError as exc:
            raise ConfigError(f"cannot read transcript: {exc}") from None
        labels = Transcript.from_jsonl(text).announced_labels()
    else:
        raise ConfigError("leakage needs --label or --transcript")

    for i, label in enumerate(labels):
        table = enumerate_hypotheses(label)
        bits = leakage_entropy(table)
        if args.format == "records":
            rows = [[label_token(r.initial), str(r.alice_bits), str(r.bob_bits)] for r in table.rows]
            print(json.dumps({"record": "leakage", "index": i, "announced": label_token(label),
                              "rows": rows, "entropy_bits": bits}, separators=(",", ":")))
        else:
            print(f"announced {label_token(label)}: {len(table)} hypotheses, entropy {bits:.1f} bits")
            print(f"  {'carrier':<8} {'(t,j)':<6} {'(k,l)':<6} p")
            for row, p in zip(table.rows, table.probabilities):
                print(f"  {label_token(row.initial):<8} {str(row.alice_bits):<6} {str(row.bob_bits):<6} {p:.4f}")
    return EXIT_OK


def cmd_efficiency(args: argparse.Namespace) -> int:
    entries = [("this-protocol", efficiency())]
    if args.compare:
        entries += list(COMPARISONS.items())
    for name, br in entries:
        terms = "+".join(str(n) for _, n in br.qubit_terms)
        human = f"{name}: gamma = {br.b_s}/({terms}+{br.b_t}) = {br.gamma:.0%}"
        _emit(args.format, {"record": "efficiency", "protocol": name, **br.to_dict()}, human)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    common.add_argument("--format", choices=("human", "records"), default="human")

    parser = argparse.ArgumentParser(prog="qdialogue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="simulate one dialogue session")
    run.add_argument("--rounds", type=int, default=None)
    run.add_argument("--decoys", type=_int_list, default=None, metavar="D1,D2,D3")
    run.add_argument("--threshold", type=float, default=0.0)
    run.add_argument("--attack", choices=[k.value for k in AttackKind], default="none")
    run.add_argument("--target", choices=[t.value for t in Target], default="step2")
    run.add_argument("--eve-seed", type=int, default=None)
    run.add_argument("--alice-bits", default=None, help="inline 0/1 string, 2N characters")
    run.add_argument("--bob-bits", default=None)
    run.add_argument("--bits-file", default=None, help="file with Alice's 2N bits then Bob's 2N bits")
    run.add_argument("--transcript-out", default=None)
    run.set_defaults(func=cmd_run)

    attack = sub.add_parser("attack", parents=[common], help="decoy detection experiment")
    attack.add_argument("--attack", choices=[k.value for k in AttackKind], default="measure")
    attack.add_argument("--mode", choices=[m.value for m in DecoyMode], default="dual")
    attack.add_argument("--deltas", type=_int_list, default=[1, 2, 5, 10])
    attack.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    attack.add_argument("--workers", type=int, default=1)
    attack.set_defaults(func=cmd_attack)

    leak = sub.add_parser("leakage", parents=[common], help="Eve's hypotheses for an announcement")
    leak.add_argument("--label", default=None, help='announced Z x Z label, e.g. "H,b2"')
    leak.add_argument("--transcript", default=None)
    leak.set_defaults(func=cmd_leakage)

    eff = sub.add_parser("efficiency", parents=[common], help="information-theoretical efficiency")
    eff.add_argument("--compare", action="store_true", help="also show earlier dual-DOF designs")
    eff.set_defaults(func=cmd_efficiency)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        return args.func(args)
    except (ConfigError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
