"""Alice and Bob running the four-step dialogue over a simulated channel.

Step 1  Alice prepares N key states, keeps (A1, A2) and sends the B1 and B2
        sequences to Bob as two decoy-checked blocks.
Step 2  Alice picks a carrier photon per round, reads her key pair, encrypts
        the carrier with the matching composite operation and sends the
        ciphertext block.
Step 3  Bob reads his key pair, decrypts, measures Z x Z to learn the carrier,
        re-prepares it, encodes his two bits and sends the block back.
Step 4  Alice encodes her two bits, measures Z x Z and announces the label;
        each side reads the other's bits from the flips it did not cause.

Each step runs for all rounds at once (block transmission). Every quantum
block is followed by receipt -> disclosure -> results, and the sender aborts
when the decoy error rate exceeds the threshold.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from qdialogue.adversary import NO_ATTACK, AttackStrategy, Target, attack_block
from qdialogue.analysis import Label, check_zz_label, flip_pattern
from qdialogue.decoy import (
    DEFAULT_THRESHOLD,
    CheckReport,
    DecoyRecord,
    compare_decoys,
    drop_positions,
    generate_decoys,
    interleave,
    measure_decoys,
)
from qdialogue.dof_core import (
    Z_P,
    Z_S,
    ZZ_LABELS,
    BitPair,
    DualPhoton,
    apply_composite,
    measure,
    op_for_bits,
    product_state,
)
from qdialogue.entangled_key import KeyOutcome, KeyRound, Pair, key_to_op, prepare_psi, project_pair
from qdialogue.errors import ConfigError, ContractViolation, SessionAborted

ALICE_TO_BOB = "A->B"
BOB_TO_ALICE = "B->A"


def label_token(label: Sequence[str | None]) -> str:
    return ",".join(x for x in label if x is not None)


def parse_label(token: str) -> Label:
    parts = tuple(p.strip() for p in token.split(","))
    if len(parts) != 2:
        raise ContractViolation(f"bad label token {token!r}")
    return check_zz_label(parts)


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class SessionConfig:
    """Session parameters; ``decoy_counts`` defaults to N decoys for every block.

    The first decoy count applies to each of the two key-distribution blocks.
    """

    n_rounds: int
    decoy_counts: tuple[int, int, int] | None = None
    abort_threshold: float = DEFAULT_THRESHOLD
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rounds < 1:
            raise ConfigError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.decoy_counts is None:
            object.__setattr__(self, "decoy_counts", (self.n_rounds,) * 3)
        counts = tuple(int(d) for d in self.decoy_counts)
        if len(counts) != 3 or any(d < 0 for d in counts):
            raise ConfigError(f"decoy counts must be three non-negative integers, got {self.decoy_counts}")
        object.__setattr__(self, "decoy_counts", counts)
        if not 0.0 <= self.abort_threshold <= 1.0:
            raise ConfigError(f"abort threshold must lie in [0, 1], got {self.abort_threshold}")

    def decoys_for(self, block: Target) -> int:
        d1, d2, d3 = self.decoy_counts
        return {Target.STEP1_B1: d1, Target.STEP1_B2: d1, Target.STEP2: d2, Target.STEP3: d3}[block]


@dataclass(frozen=True)
class PartyInputs:
    bits: tuple[BitPair, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bits", tuple(self.bits))

    @classmethod
    def from_string(cls, text: str) -> PartyInputs:
        """Parse a 0/1 string (whitespace ignored) into consecutive bit pairs."""
        digits = "".join(text.split())
        if any(c not in "01" for c in digits):
            raise ConfigError("bit strings may only contain 0 and 1")
        if len(digits) % 2:
            raise ConfigError(f"need an even number of bits, got {len(digits)}")
        return cls(tuple(BitPair(int(digits[i]), int(digits[i + 1])) for i in range(0, len(digits), 2)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> PartyInputs:
        raw = rng.integers(2, size=(n, 2))
        return cls(tuple(BitPair(int(a), int(b)) for a, b in raw))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


# -- per-round operations -----------------------------------------------------


def sample_carrier(rng: np.random.Generator) -> Label:
    return ZZ_LABELS[int(rng.integers(4))]


def encrypt_carrier(carrier: DualPhoton, key: KeyOutcome) -> DualPhoton:
    return apply_composite(key_to_op(key), carrier)


def decrypt_and_recover(received: DualPhoton, key: KeyOutcome, rng: np.random.Generator) -> Label:
    """Bob's decryption followed by the Z x Z readout that reveals the carrier."""
    restored = apply_composite(key_to_op(key), received)
    return measure(restored, Z_P, Z_S, rng).labels


def encode_bits(carrier: Label, bits: BitPair) -> DualPhoton:
    """Fresh photon in the carrier state with the bit pair's operation applied."""
    return apply_composite(op_for_bits(bits), product_state(*carrier))


def announce(received: DualPhoton, alice_bits: BitPair, rng: np.random.Generator) -> Label:
    encoded = apply_composite(op_for_bits(alice_bits), received)
    return measure(encoded, Z_P, Z_S, rng).labels


def alice_decode(initial: Sequence[str], alice_bits: BitPair, announced: Sequence[str]) -> BitPair:
    """Bob's bits as read by Alice: the observed flips minus her own."""
    return flip_pattern(tuple(initial), tuple(announced)) ^ alice_bits


def bob_decode(initial: Sequence[str], bob_bits: BitPair, announced: Sequence[str]) -> BitPair:
    return flip_pattern(tuple(initial), tuple(announced)) ^ bob_bits


@dataclass(frozen=True)
class RoundRecord:
    index: int
    carrier: Label
    alice_key: str
    bob_key: str
    recovered: Label
    announced: Label

    def to_dict(self) -> dict[str, Any]:
        return {
            "round": self.index,
            "carrier": label_token(self.carrier),
            "alice_key": self.alice_key,
            "bob_key": self.bob_key,
            "recovered": label_token(self.recovered),
            "announced": label_token(self.announced),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RoundRecord:
        return cls(
            d["round"],
            parse_label(d["carrier"]),
            d["alice_key"],
            d["bob_key"],
            parse_label(d["recovered"]),
            parse_label(d["announced"]),
        )


@dataclass(frozen=True)
class RoundResult:
    record: RoundRecord
    alice_decoded: BitPair
    bob_decoded: BitPair


def simulate_round(
    carrier: Label,
    alice_bits: BitPair,
    bob_bits: BitPair,
    rng: np.random.Generator,
    key_outcome: KeyOutcome | None = None,
) -> RoundResult:
    """One noiseless round with no decoys, optionally fixing Alice's key outcome.

    A fixed outcome is imposed by projecting the fresh key state onto it; Bob
    still measures his pair by the Born rule.
    """
    state = prepare_psi()
    if key_outcome is not None:
        state = project_pair(state, Pair.ALICE, key_outcome)
    key = KeyRound(state)
    alice_key = key.measure_alice(rng)
    ciphertext = encrypt_carrier(product_state(*carrier), alice_key)
    bob_key = key.measure_bob(rng)
    recovered = decrypt_and_recover(ciphertext, bob_key, rng)
    outgoing = encode_bits(recovered, bob_bits)
    announced = announce(outgoing, alice_bits, rng)
    record = RoundRecord(0, tuple(carrier), str(alice_key), str(bob_key), recovered, announced)
    return RoundResult(
        record,
        alice_decode(carrier, alice_bits, announced),
        bob_decode(recovered, bob_bits, announced),
    )


# -- messages and transcript --------------------------------------------------


class MessageKind(enum.Enum):
    QUANTUM_BLOCK = "QuantumBlock"
    RECEIPT_ACK = "ReceiptAck"
    DECOY_DISCLOSURE = "DecoyDisclosure"
    DECOY_RESULTS = "DecoyResults"
    FINAL_ANNOUNCEMENT = "FinalAnnouncement"


@dataclass(frozen=True)
class Message:
    seq: int
    direction: str
    kind: MessageKind
    payload: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"type": "message", "seq": self.seq, "dir": self.direction, "kind": self.kind.value, "payload": self.payload}


@dataclass(frozen=True)
class AbortInfo:
    step: str
    report: CheckReport

    def to_dict(self) -> dict[str, Any]:
        return {"type": "abort", "step": self.step, "report": self.report.to_dict()}


@dataclass(frozen=True)
class Transcript:
    messages: tuple[Message, ...]
    rounds: tuple[RoundRecord, ...] = ()
    abort: AbortInfo | None = None

    def announced_labels(self) -> list[Label]:
        finals = [m for m in self.messages if m.kind is MessageKind.FINAL_ANNOUNCEMENT]
        if len(finals) != 1:
            raise ContractViolation(f"expected one final announcement, found {len(finals)}")
        return [parse_label(t) for t in finals[0].payload["labels"]]

    def to_jsonl(self) -> str:
        lines = [m.to_dict() for m in self.messages]
        lines += [{"type": "round", **r.to_dict()} for r in self.rounds]
        if self.abort is not None:
            lines.append(self.abort.to_dict())
        return "".join(json.dumps(line, separators=(",", ":")) + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        messages, rounds, abort = [], [], None
        for raw in text.splitlines():
            if not raw.strip():
                continue
            d = json.loads(raw)
            if d["type"] == "message":
                messages.append(Message(d["seq"], d["dir"], MessageKind(d["kind"]), d["payload"]))
            elif d["type"] == "round":
                rounds.append(RoundRecord.from_dict(d))
            elif d["type"] == "abort":
                r = d["report"]
                abort = AbortInfo(d["step"], CheckReport(r["tested"], r["mismatches"], r["error_rate"], r["abort"]))
            else:
                raise ContractViolation(f"unknown transcript line type {d['type']!r}")
        return cls(tuple(messages), tuple(rounds), abort)


class QuantumBlock:
    """A batch of particles in flight; the receiver may take it only once."""

    def __init__(self, target: Target, items: list[Any]):
        self.target = target
        self._items: list[Any] | None = items

    def take(self) -> list[Any]:
        if self._items is None:
            raise ContractViolation(f"block {self.target.value} already consumed")
        items, self._items = self._items, None
        return items


class Channel:
    """Quantum channel exposed to Eve plus an authenticated public classical channel."""

    def __init__(self, attack: AttackStrategy = NO_ATTACK, eve_rng: np.random.Generator | None = None):
        self.attack = attack
        self.eve_rng = eve_rng if eve_rng is not None else np.random.default_rng(0)
        self.eve_log: list = []
        self.messages: list[Message] = []
        self._acked: set[Target] = set()

    def _log(self, direction: str, kind: MessageKind, payload: dict[str, Any]) -> Message:
        msg = Message(len(self.messages) + 1, direction, kind, payload)
        self.messages.append(msg)
        return msg

    def send_quantum(self, direction: str, target: Target, items: list[Any]) -> QuantumBlock:
        if self.attack.hits(target):
            items = attack_block(items, self.attack, self.eve_rng, log=self.eve_log)
        self._log(direction, MessageKind.QUANTUM_BLOCK, {"block": target.value, "length": len(items)})
        return QuantumBlock(target, items)

    def ack(self, direction: str, target: Target) -> None:
        self._acked.add(target)
        self._log(direction, MessageKind.RECEIPT_ACK, {"block": target.value})

    def disclose(self, direction: str, target: Target, records: Sequence[DecoyRecord]) -> None:
        if target not in self._acked:
            raise ContractViolation(f"decoys of {target.value} disclosed before receipt was confirmed")
        self._log(direction, MessageKind.DECOY_DISCLOSURE, {"block": target.value, "decoys": [r.disclosure() for r in records]})

    def report_results(self, direction: str, target: Target, results: Sequence[tuple[str, str | None]]) -> None:
        self._log(direction, MessageKind.DECOY_RESULTS, {"block": target.value, "results": [label_token(r) for r in results]})

    def announce(self, direction: str, labels: Sequence[Label]) -> None:
        self._log(direction, MessageKind.FINAL_ANNOUNCEMENT, {"labels": [label_token(x) for x in labels]})


def _reverse(direction: str) -> str:
    return BOB_TO_ALICE if direction == ALICE_TO_BOB else ALICE_TO_BOB


def checked_transfer(
    channel: Channel,
    direction: str,
    target: Target,
    payload: list[Any],
    n_decoys: int,
    threshold: float,
    sender_rng: np.random.Generator,
    receiver_rng: np.random.Generator,
) -> list[Any]:
    """Send ``payload`` with decoys mixed in and run the security check.

    Returns the payload as the receiver holds it after dropping the decoys,
    or raises :class:`SessionAborted`.
    """
    mode = target.decoy_mode
    decoys = generate_decoys(n_decoys, mode, sender_rng)
    sequence, records, _ = interleave(payload, decoys, sender_rng)
    block = channel.send_quantum(direction, target, sequence)
    received = block.take()
    channel.ack(_reverse(direction), target)
    channel.disclose(direction, target, records)
    results = measure_decoys(received, records, receiver_rng)
    channel.report_results(_reverse(direction), target, results)
    report = compare_decoys(records, results, threshold)
    if report.abort:
        raise SessionAborted(target.value, report)
    return drop_positions(received, [r.position for r in records])


# -- party state machines -----------------------------------------------------


class Phase(enum.IntEnum):
    START = 0
    KEY_DISTRIBUTED = 1
    CIPHERTEXT_SENT = 2
    ENCODED_SENT = 3
    ANNOUNCED = 4


class _Party:
    def __init__(self, bits: Sequence[BitPair], rng: np.random.Generator):
        self.bits = tuple(bits)
        self.rng = rng
        self.phase = Phase.START

    def _advance(self, expected: Phase, new: Phase) -> None:
        if self.phase is not expected:
            raise ContractViolation(f"{type(self).__name__} is in {self.phase.name}, expected {expected.name}")
        self.phase = new


class Alice(_Party):
    def __init__(self, bits: Sequence[BitPair], rng: np.random.Generator):
        super().__init__(bits, rng)
        self.keys: list[KeyRound] = []
        self.key_outcomes: list[KeyOutcome] = []
        self.carriers: list[Label] = []
        self.announced: list[Label] = []

    def prepare_keys(self) -> tuple[list[Any], list[Any]]:
        self.keys = [KeyRound(prepare_psi()) for _ in self.bits]
        return [k.particle("B1") for k in self.keys], [k.particle("B2") for k in self.keys]

    def key_delivered(self) -> None:
        self._advance(Phase.START, Phase.KEY_DISTRIBUTED)

    def encrypt(self) -> list[DualPhoton]:
        self._advance(Phase.KEY_DISTRIBUTED, Phase.CIPHERTEXT_SENT)
        self.carriers = [sample_carrier(self.rng) for _ in self.keys]
        self.key_outcomes = [k.measure_alice(self.rng) for k in self.keys]
        return [encrypt_carrier(product_state(*c), k) for c, k in zip(self.carriers, self.key_outcomes)]

    def encode_and_announce(self, received: Sequence[DualPhoton]) -> list[Label]:
        self._advance(Phase.CIPHERTEXT_SENT, Phase.ANNOUNCED)
        if len(received) != len(self.bits):
            raise ContractViolation("payload length does not match the number of rounds")
        self.announced = [announce(p, b, self.rng) for p, b in zip(received, self.bits)]
        return self.announced

    def decode(self, announced: Sequence[Label]) -> list[BitPair]:
        return [alice_decode(c, b, a) for c, b, a in zip(self.carriers, self.bits, announced)]


class Bob(_Party):
    def __init__(self, bits: Sequence[BitPair], rng: np.random.Generator):
        super().__init__(bits, rng)
        self.keys: list[KeyRound] = []
        self.key_outcomes: list[KeyOutcome] = []
        self.recovered: list[Label] = []

    def hold_keys(self, b1: Sequence[Any], b2: Sequence[Any]) -> None:
        self._advance(Phase.START, Phase.KEY_DISTRIBUTED)
        if any(x.round is not y.round for x, y in zip(b1, b2)):
            raise ContractViolation("B1 and B2 sequences are out of step")
        self.keys = [x.round for x in b1]

    def decrypt_and_encode(self, received: Sequence[DualPhoton]) -> list[DualPhoton]:
        self._advance(Phase.KEY_DISTRIBUTED, Phase.ENCODED_SENT)
        if len(received) != len(self.bits):
            raise ContractViolation("payload length does not match the number of rounds")
        self.key_outcomes = [k.measure_bob(self.rng) for k in self.keys]
        self.recovered = [decrypt_and_recover(p, k, self.rng) for p, k in zip(received, self.key_outcomes)]
        return [encode_bits(c, b) for c, b in zip(self.recovered, self.bits)]

    def decode(self, announced: Sequence[Label]) -> list[BitPair]:
        self._advance(Phase.ENCODED_SENT, Phase.ANNOUNCED)
        return [bob_decode(c, b, a) for c, b, a in zip(self.recovered, self.bits, announced)]


# -- steps --------------------------------------------------------------------


def step1_distribute_key(cfg: SessionConfig, channel: Channel, alice: Alice, bob: Bob) -> None:
    b1, b2 = alice.prepare_keys()
    held = []
    for target, seq in ((Target.STEP1_B1, b1), (Target.STEP1_B2, b2)):
        held.append(
            checked_transfer(
                channel, ALICE_TO_BOB, target, seq, cfg.decoys_for(target), cfg.abort_threshold, alice.rng, bob.rng
            )
        )
    alice.key_delivered()
    bob.hold_keys(*held)


def step2_encrypt_and_send(cfg: SessionConfig, channel: Channel, alice: Alice, bob: Bob) -> list[DualPhoton]:
    ciphertext = alice.encrypt()
    return checked_transfer(
        channel, ALICE_TO_BOB, Target.STEP2, ciphertext, cfg.decoys_for(Target.STEP2), cfg.abort_threshold, alice.rng, bob.rng
    )


def step3_decrypt_encode_send(
    cfg: SessionConfig, channel: Channel, alice: Alice, bob: Bob, received: list[DualPhoton]
) -> list[DualPhoton]:
    encoded = bob.decrypt_and_encode(received)
    return checked_transfer(
        channel, BOB_TO_ALICE, Target.STEP3, encoded, cfg.decoys_for(Target.STEP3), cfg.abort_threshold, bob.rng, alice.rng
    )


def step4_encode_announce(channel: Channel, alice: Alice, received: list[DualPhoton]) -> list[Label]:
    labels = alice.encode_and_announce(received)
    channel.announce(ALICE_TO_BOB, labels)
    return labels


# -- sessions -----------------------------------------------------------------


@dataclass(frozen=True)
class SessionResult:
    alice_decoded: tuple[BitPair, ...]
    bob_decoded: tuple[BitPair, ...]
    transcript: Transcript
    aborted: bool
    abort: AbortInfo | None = field(default=None)


def party_streams(cfg: SessionConfig, attack: AttackStrategy) -> tuple[np.random.Generator, ...]:
    alice_ss, bob_ss, eve_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    eve = np.random.default_rng(attack.seed) if attack.seed is not None else np.random.default_rng(eve_ss)
    return np.random.default_rng(alice_ss), np.random.default_rng(bob_ss), eve


def run_session(
    cfg: SessionConfig,
    alice_in: PartyInputs,
    bob_in: PartyInputs,
    attack: AttackStrategy = NO_ATTACK,
) -> SessionResult:
    for who, inputs in (("Alice", alice_in), ("Bob", bob_in)):
        if len(inputs.bits) != cfg.n_rounds:
            raise ConfigError(f"{who} supplied {len(inputs.bits)} bit pairs for {cfg.n_rounds} rounds")
    alice_rng, bob_rng, eve_rng = party_streams(cfg, attack)
    channel = Channel(attack, eve_rng)
    alice = Alice(alice_in.bits, alice_rng)
    bob = Bob(bob_in.bits, bob_rng)
    try:
        step1_distribute_key(cfg, channel, alice, bob)
        at_bob = step2_encrypt_and_send(cfg, channel, alice, bob)
        at_alice = step3_decrypt_encode_send(cfg, channel, alice, bob, at_bob)
        announced = step4_encode_announce(channel, alice, at_alice)
    except SessionAborted as exc:
        info = AbortInfo(exc.step, exc.report)
        return SessionResult((), (), Transcript(tuple(channel.messages), (), info), True, info)

    rounds = tuple(
        RoundRecord(i, c, str(ka), str(kb), r, a)
        for i, (c, ka, kb, r, a) in enumerate(
            zip(alice.carriers, alice.key_outcomes, bob.key_outcomes, bob.recovered, announced)
        )
    )
    transcript = Transcript(tuple(channel.messages), rounds)
    heard = transcript.announced_labels()
    return SessionResult(tuple(alice.decode(heard)), tuple(bob.decode(heard)), transcript, False)


def replay_alice(transcript: Transcript, carriers: Iterable[Label], alice_bits: Iterable[BitPair]) -> list[BitPair]:
    """Alice's readout recomputed from the public announcement and her private data."""
    return [alice_decode(c, b, a) for c, b, a in zip(carriers, alice_bits, transcript.announced_labels())]


def replay_bob(transcript: Transcript, recovered: Iterable[Label], bob_bits: Iterable[BitPair]) -> list[BitPair]:
    return [bob_decode(c, b, a) for c, b, a in zip(recovered, bob_bits, transcript.announced_labels())]
