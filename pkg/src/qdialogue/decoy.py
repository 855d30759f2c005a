"""Decoy photons: generation, random interleaving, and the check-and-abort step.

Two alphabets are used. The key-distribution blocks carry plain polarization
decoys drawn from {H, V, +, -} (``+``/``-`` are the ``R``/``A`` states); the
spatial qubit rides along as ``b1`` and is never checked. The ciphertext
blocks carry dual decoys drawn from all 16 products {H, V, R, A} x {b1, b2, s, a}.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from qdialogue.dof_core import (
    ALL_PRODUCT_LABELS,
    Basis,
    DualPhoton,
    basis_of,
    measure_dof,
    product_state,
)
from qdialogue.errors import ContractViolation

DEFAULT_THRESHOLD = 0.0

POL_DECOY_LABELS = ("H", "V", "R", "A")
CARRIER_SPATIAL = "b1"


class DecoyMode(enum.Enum):
    POLARIZATION_ONLY = "polarization"
    DUAL_DOF = "dual"

    def alphabet(self) -> tuple[tuple[str, str], ...]:
        if self is DecoyMode.POLARIZATION_ONLY:
            return tuple((p, CARRIER_SPATIAL) for p in POL_DECOY_LABELS)
        return ALL_PRODUCT_LABELS


@dataclass(frozen=True)
class DecoyRecord:
    """Secret bookkeeping for one decoy; ``spa_basis`` is None when the spatial qubit is unchecked."""

    position: int | None
    state_id: tuple[str, str]
    pol_basis: Basis
    spa_basis: Basis | None

    def at(self, position: int) -> DecoyRecord:
        return DecoyRecord(position, self.state_id, self.pol_basis, self.spa_basis)

    def disclosure(self) -> dict[str, Any]:
        """What the sender publishes after receipt: where the decoy sits and how to measure it."""
        return {
            "position": self.position,
            "pol_basis": self.pol_basis.name,
            "spa_basis": None if self.spa_basis is None else self.spa_basis.name,
        }


@dataclass(frozen=True)
class CheckReport:
    tested: int
    mismatches: int
    error_rate: float
    abort: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "tested": self.tested,
            "mismatches": self.mismatches,
            "error_rate": self.error_rate,
            "abort": self.abort,
        }


def generate_decoys(
    n: int, mode: DecoyMode, rng: np.random.Generator
) -> list[tuple[DualPhoton, DecoyRecord]]:
    if n < 0:
        raise ContractViolation(f"decoy count must be >= 0, got {n}")
    alphabet = mode.alphabet()
    picks = rng.integers(len(alphabet), size=n)
    out = []
    for k in picks:
        pol_label, spa_label = alphabet[int(k)]
        spa_basis = basis_of(spa_label) if mode is DecoyMode.DUAL_DOF else None
        record = DecoyRecord(None, (pol_label, spa_label), basis_of(pol_label), spa_basis)
        out.append((product_state(pol_label, spa_label), record))
    return out


def interleave(
    payload: Sequence[Any],
    decoys: Sequence[tuple[DualPhoton, DecoyRecord]],
    rng: np.random.Generator,
) -> tuple[list[Any], list[DecoyRecord], list[int]]:
    """Insert decoys at uniformly random positions, keeping payload order.

    Returns the merged sequence, the decoy records with final positions (in
    increasing order), and the payload positions.
    """
    total = len(payload) + len(decoys)
    slots = rng.permutation(total)
    decoy_positions = sorted(int(x) for x in slots[: len(decoys)])
    is_decoy = np.zeros(total, dtype=bool)
    is_decoy[decoy_positions] = True

    sequence: list[Any] = [None] * total
    records = []
    for pos, (photon, record) in zip(decoy_positions, decoys):
        sequence[pos] = photon
        records.append(record.at(pos))
    payload_positions = [i for i in range(total) if not is_decoy[i]]
    for pos, item in zip(payload_positions, payload):
        sequence[pos] = item
    return sequence, records, payload_positions


def extract(sequence: Sequence[Any], positions: Sequence[int]) -> list[Any]:
    return [sequence[i] for i in positions]


def drop_positions(sequence: Sequence[Any], positions: Sequence[int]) -> list[Any]:
    """The sequence with the given (decoy) positions removed."""
    skip = set(positions)
    return [item for i, item in enumerate(sequence) if i not in skip]


def measure_decoys(
    sequence: Sequence[Any], records: Sequence[DecoyRecord], rng: np.random.Generator
) -> list[tuple[str, str | None]]:
    """Receiver side: measure each disclosed decoy in its preparation bases."""
    results = []
    for rec in records:
        if rec.position is None or not 0 <= rec.position < len(sequence):
            raise ContractViolation(f"decoy position {rec.position} outside sequence of {len(sequence)}")
        photon = sequence[rec.position]
        if not isinstance(photon, DualPhoton):
            raise ContractViolation(f"position {rec.position} does not hold a photon")
        pol_label, _ = measure_dof(photon.pol, rec.pol_basis, rng)
        spa_label = None
        if rec.spa_basis is not None:
            spa_label, _ = measure_dof(photon.spa, rec.spa_basis, rng)
        results.append((pol_label, spa_label))
    return results


def compare_decoys(
    records: Sequence[DecoyRecord],
    results: Sequence[tuple[str, str | None]],
    threshold: float = DEFAULT_THRESHOLD,
) -> CheckReport:
    """Sender side: compare reported outcomes with the prepared states."""
    if len(records) != len(results):
        raise ContractViolation("one result is required per decoy record")
    mismatches = 0
    for rec, (pol_label, spa_label) in zip(records, results):
        bad = pol_label != rec.state_id[0]
        if rec.spa_basis is not None:
            bad = bad or spa_label != rec.state_id[1]
        mismatches += bad
    tested = len(records)
    rate = mismatches / tested if tested else 0.0
    return CheckReport(tested, mismatches, rate, rate > threshold)


def run_check(
    sequence: Sequence[Any],
    records: Sequence[DecoyRecord],
    threshold: float,
    rng: np.random.Generator,
) -> CheckReport:
    return compare_decoys(records, measure_decoys(sequence, records, rng), threshold)
