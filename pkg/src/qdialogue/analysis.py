"""What a passive listener learns from one announcement, and protocol efficiency.

Without the carrier state, an announced Z x Z label is consistent with every
carrier; for each carrier exactly four splits of the flip pattern into
(Alice's bits, Bob's bits) remain, so Eve faces 16 equally likely hypotheses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from qdialogue.dof_core import (
    ALL_BIT_PAIRS,
    Z_P,
    Z_S,
    ZZ_LABELS,
    BitPair,
    apply_composite,
    measure,
    op_for_bits,
    product_state,
)
from qdialogue.errors import ContractViolation

Label = tuple[str, str]


def check_zz_label(label: Sequence[str]) -> Label:
    label = tuple(label)
    if label not in ZZ_LABELS:
        raise ContractViolation(f"{label!r} is not a Z_p x Z_s product label")
    return label  # type: ignore[return-value]


def flip_pattern(initial: Label, announced: Label) -> BitPair:
    """Which degrees of freedom differ between two Z x Z labels."""
    check_zz_label(initial)
    check_zz_label(announced)
    return BitPair(int(initial[0] != announced[0]), int(initial[1] != announced[1]))


@dataclass(frozen=True)
class Hypothesis:
    initial: Label
    alice_bits: BitPair
    bob_bits: BitPair


@dataclass(frozen=True)
class HypothesisTable:
    announced: Label
    rows: tuple[Hypothesis, ...]
    probabilities: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.probabilities:
            n = len(self.rows)
            object.__setattr__(self, "probabilities", tuple(1.0 / n for _ in self.rows))
        if len(self.probabilities) != len(self.rows):
            raise ContractViolation("one probability per hypothesis row is required")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            raise ContractViolation("hypothesis probabilities must sum to 1")

    def __len__(self) -> int:
        return len(self.rows)

    def __contains__(self, row: object) -> bool:
        return row in self.rows


def enumerate_hypotheses(announced: Sequence[str]) -> HypothesisTable:
    announced = check_zz_label(announced)
    rows = []
    for initial in ZZ_LABELS:
        flips = flip_pattern(initial, announced)
        for alice in ALL_BIT_PAIRS:
            rows.append(Hypothesis(initial, alice, alice ^ flips))
    return HypothesisTable(announced, tuple(rows))


def forward_announcement(initial: Label, alice_bits: BitPair, bob_bits: BitPair) -> Label:
    """Run one round through the state algebra and return the Z x Z readout.

    The photon is in a basis product state at readout, so the measurement is
    deterministic; the generator below is never consulted for the outcome.
    """
    photon = product_state(*initial)
    photon = apply_composite(op_for_bits(bob_bits), photon)
    photon = apply_composite(op_for_bits(alice_bits), photon)
    out = measure(photon, Z_P, Z_S, np.random.default_rng(0))
    return out.labels


def shannon_entropy(probabilities: Sequence[float]) -> float:
    return 0.0 - sum(p * math.log2(p) for p in probabilities if p > 0)


def leakage_entropy(table: HypothesisTable) -> float:
    """Eve's residual uncertainty, in bits, about (Alice's bits, Bob's bits)."""
    return shannon_entropy(table.probabilities)


@dataclass(frozen=True)
class EfficiencyBreakdown:
    b_s: int
    qubit_terms: tuple[tuple[str, int], ...]
    b_t: int

    @property
    def q_t(self) -> int:
        return sum(n for _, n in self.qubit_terms)

    @property
    def gamma(self) -> float:
        return information_efficiency(self.b_s, self.q_t, self.b_t)

    def to_dict(self) -> dict[str, Any]:
        return {
            "b_s": self.b_s,
            "q_t": self.q_t,
            "b_t": self.b_t,
            "qubit_terms": {name: n for name, n in self.qubit_terms},
            "gamma": self.gamma,
        }


def information_efficiency(b_s: int, q_t: int, b_t: int) -> float:
    """Received private bits per consumed qubit-or-classical-bit."""
    if q_t + b_t <= 0:
        raise ContractViolation("nothing consumed: efficiency undefined")
    return b_s / (q_t + b_t)


def efficiency() -> EfficiencyBreakdown:
    """Per-round accounting, security checks excluded.

    Two bits travel each way. One dual photon counts as 2 qubits and the key
    state as 4; Bob's re-prepared carrier costs another 2; Alice's
    announcement costs 2 classical bits.
    """
    return EfficiencyBreakdown(
        b_s=4,
        qubit_terms=(("carrier photon", 2), ("key state", 4), ("reproduced carrier", 2)),
        b_t=2,
    )


# Earlier dual-DOF dialogue designs, per round, in the same accounting.
COMPARISONS: dict[str, EfficiencyBreakdown] = {
    # one photon carries one bit each way; two announced bits
    "one-bit-each-way": EfficiencyBreakdown(b_s=2, qubit_terms=(("photon", 2),), b_t=2),
    # two adjacent identical photons carry two bits each way; four announced bits
    "adjacent-photon-pair": EfficiencyBreakdown(b_s=4, qubit_terms=(("photon pair", 4),), b_t=4),
}
