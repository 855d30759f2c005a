"""State algebra for a single photon with a polarization and a spatial-mode qubit.

A photon is kept as a product of two 2-dim complex vectors. Every state the
protocol prepares is a product state and every operation is local to one
degree of freedom, so the product form never has to be given up.

Phases are tracked exactly on apply; only :func:`measure` and
:func:`equal_up_to_phase` ignore them.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from qdialogue.errors import ContractViolation

NORM_TOL = 1e-12
STATE_TOL = 1e-9

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class DofVector:
    """Amplitudes of one degree of freedom in its computational basis."""

    amp0: complex
    amp1: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "amp0", complex(self.amp0))
        object.__setattr__(self, "amp1", complex(self.amp1))
        if abs(self.norm_squared() - 1.0) > NORM_TOL:
            raise ContractViolation(f"DofVector not normalized: {self!r}")

    def norm_squared(self) -> float:
        return abs(self.amp0) ** 2 + abs(self.amp1) ** 2

    def inner(self, other: DofVector) -> complex:
        """<self|other>."""
        return self.amp0.conjugate() * other.amp0 + self.amp1.conjugate() * other.amp1

    def scaled(self, factor: complex) -> DofVector:
        return DofVector(self.amp0 * factor, self.amp1 * factor)

    def __neg__(self) -> DofVector:
        return self.scaled(-1)

    def as_array(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)


class Dof(enum.Enum):
    POLARIZATION = "p"
    SPATIAL = "s"


class BasisKind(enum.Enum):
    Z = "Z"
    X = "X"


# Named basis states. |R>, |A> double as the |+>, |-> decoys of the key stage.
H = DofVector(1, 0)
V = DofVector(0, 1)
R = DofVector(_SQRT_HALF, _SQRT_HALF)
A = DofVector(_SQRT_HALF, -_SQRT_HALF)
B1 = DofVector(1, 0)
B2 = DofVector(0, 1)
S = DofVector(_SQRT_HALF, _SQRT_HALF)
A_S = DofVector(_SQRT_HALF, -_SQRT_HALF)

POL_STATES: dict[str, DofVector] = {"H": H, "V": V, "R": R, "A": A}
SPA_STATES: dict[str, DofVector] = {"b1": B1, "b2": B2, "s": S, "a": A_S}

_LABELS = {
    (Dof.POLARIZATION, BasisKind.Z): ("H", "V"),
    (Dof.POLARIZATION, BasisKind.X): ("R", "A"),
    (Dof.SPATIAL, BasisKind.Z): ("b1", "b2"),
    (Dof.SPATIAL, BasisKind.X): ("s", "a"),
}


@dataclass(frozen=True)
class Basis:
    dof: Dof
    kind: BasisKind

    @property
    def labels(self) -> tuple[str, str]:
        return _LABELS[(self.dof, self.kind)]

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.dof.value}"

    def states(self) -> tuple[tuple[str, DofVector], tuple[str, DofVector]]:
        table = POL_STATES if self.dof is Dof.POLARIZATION else SPA_STATES
        lo, hi = self.labels
        return (lo, table[lo]), (hi, table[hi])

    def __str__(self) -> str:
        return self.name


Z_P = Basis(Dof.POLARIZATION, BasisKind.Z)
X_P = Basis(Dof.POLARIZATION, BasisKind.X)
Z_S = Basis(Dof.SPATIAL, BasisKind.Z)
X_S = Basis(Dof.SPATIAL, BasisKind.X)
BASES = (Z_P, X_P, Z_S, X_S)
BASES_BY_NAME = {b.name: b for b in BASES}


def basis_of(label: str) -> Basis:
    """The basis in which the named state is an eigenstate."""
    for basis in BASES:
        if label in basis.labels:
            return basis
    raise ContractViolation(f"unknown state label {label!r}")


def dof_state(label: str) -> DofVector:
    if label in POL_STATES:
        return POL_STATES[label]
    if label in SPA_STATES:
        return SPA_STATES[label]
    raise ContractViolation(f"unknown state label {label!r}")


@dataclass(frozen=True)
class DualPhoton:
    pol: DofVector
    spa: DofVector

    def as_array(self) -> np.ndarray:
        """4-dim amplitude vector, polarization as the leading factor."""
        return np.kron(self.pol.as_array(), self.spa.as_array())


def product_state(pol_label: str, spa_label: str) -> DualPhoton:
    if pol_label not in POL_STATES:
        raise ContractViolation(f"{pol_label!r} is not a polarization state")
    if spa_label not in SPA_STATES:
        raise ContractViolation(f"{spa_label!r} is not a spatial-mode state")
    return DualPhoton(POL_STATES[pol_label], SPA_STATES[spa_label])


# Z_p x Z_s products, in the order the protocol enumerates carriers.
ZZ_LABELS: tuple[tuple[str, str], ...] = (("H", "b1"), ("H", "b2"), ("V", "b1"), ("V", "b2"))
ALL_PRODUCT_LABELS: tuple[tuple[str, str], ...] = tuple(
    (p, s) for s in ("b1", "b2", "s", "a") for p in ("H", "V", "R", "A")
)


class SingleDofOp(enum.Enum):
    I = "I"
    U = "U"


_MATRICES = {
    SingleDofOp.I: ((1, 0), (0, 1)),
    # U|0> = |1>, U|1> = -|0>
    SingleDofOp.U: ((0, -1), (1, 0)),
}


def apply_single(op: SingleDofOp, v: DofVector) -> DofVector:
    (m00, m01), (m10, m11) = _MATRICES[op]
    return DofVector(m00 * v.amp0 + m01 * v.amp1, m10 * v.amp0 + m11 * v.amp1)


def single_matrix(op: SingleDofOp) -> np.ndarray:
    return np.array(_MATRICES[op], dtype=complex)


@dataclass(frozen=True)
class BitPair:
    hi: int
    lo: int

    def __post_init__(self) -> None:
        if self.hi not in (0, 1) or self.lo not in (0, 1):
            raise ContractViolation(f"bits must be 0 or 1, got ({self.hi}, {self.lo})")
        # normalize bools and numpy ints so equality and hashing stay simple
        object.__setattr__(self, "hi", int(self.hi))
        object.__setattr__(self, "lo", int(self.lo))

    @classmethod
    def parse(cls, text: str) -> BitPair:
        if len(text) != 2 or any(c not in "01" for c in text):
            raise ContractViolation(f"expected two 0/1 characters, got {text!r}")
        return cls(int(text[0]), int(text[1]))

    def __xor__(self, other: BitPair) -> BitPair:
        return BitPair(self.hi ^ other.hi, self.lo ^ other.lo)

    def __iter__(self) -> Iterator[int]:
        yield self.hi
        yield self.lo

    def __str__(self) -> str:
        return f"{self.hi}{self.lo}"


ALL_BIT_PAIRS: tuple[BitPair, ...] = tuple(BitPair(a, b) for a in (0, 1) for b in (0, 1))


@dataclass(frozen=True)
class CompositeOp:
    pol_op: SingleDofOp
    spa_op: SingleDofOp

    @property
    def name(self) -> str:
        return f"C{int(self.pol_op is SingleDofOp.U)}{int(self.spa_op is SingleDofOp.U)}"

    def __str__(self) -> str:
        return self.name


C00 = CompositeOp(SingleDofOp.I, SingleDofOp.I)
C01 = CompositeOp(SingleDofOp.I, SingleDofOp.U)
C10 = CompositeOp(SingleDofOp.U, SingleDofOp.I)
C11 = CompositeOp(SingleDofOp.U, SingleDofOp.U)
COMPOSITE_OPS = (C00, C01, C10, C11)


def apply_composite(op: CompositeOp, p: DualPhoton) -> DualPhoton:
    return DualPhoton(apply_single(op.pol_op, p.pol), apply_single(op.spa_op, p.spa))


def op_for_bits(b: BitPair) -> CompositeOp:
    return CompositeOp(
        SingleDofOp.U if b.hi else SingleDofOp.I,
        SingleDofOp.U if b.lo else SingleDofOp.I,
    )


def bits_for_op(op: CompositeOp) -> BitPair:
    return BitPair(int(op.pol_op is SingleDofOp.U), int(op.spa_op is SingleDofOp.U))


@dataclass(frozen=True)
class MeasOutcome:
    pol_label: str
    spa_label: str
    collapsed: DualPhoton

    @property
    def labels(self) -> tuple[str, str]:
        return (self.pol_label, self.spa_label)


def measure_dof(v: DofVector, basis: Basis, rng: np.random.Generator) -> tuple[str, DofVector]:
    """Born-rule measurement of one degree of freedom; one uniform draw from ``rng``."""
    (label0, state0), (label1, state1) = basis.states()
    p0 = abs(state0.inner(v)) ** 2
    if rng.random() < p0:
        return label0, state0
    return label1, state1


def measure(
    p: DualPhoton, pol_basis: Basis, spa_basis: Basis, rng: np.random.Generator
) -> MeasOutcome:
    if pol_basis.dof is not Dof.POLARIZATION:
        raise ContractViolation(f"{pol_basis} cannot measure the polarization qubit")
    if spa_basis.dof is not Dof.SPATIAL:
        raise ContractViolation(f"{spa_basis} cannot measure the spatial-mode qubit")
    pol_label, pol = measure_dof(p.pol, pol_basis, rng)
    spa_label, spa = measure_dof(p.spa, spa_basis, rng)
    return MeasOutcome(pol_label, spa_label, DualPhoton(pol, spa))


def _dof_equal_up_to_phase(a: DofVector, b: DofVector) -> bool:
    overlap = a.inner(b)
    if abs(abs(overlap) - 1.0) > STATE_TOL:
        return False
    phase = overlap / abs(overlap)
    shifted = a.scaled(phase)
    return abs(shifted.amp0 - b.amp0) <= STATE_TOL and abs(shifted.amp1 - b.amp1) <= STATE_TOL


def equal_up_to_phase(a: DualPhoton, b: DualPhoton) -> bool:
    """True iff ``a = e^{i theta} b``.

    For product states this holds exactly when each factor agrees up to its
    own phase; the two phases multiply into the global one.
    """
    return _dof_equal_up_to_phase(a.pol, b.pol) and _dof_equal_up_to_phase(a.spa, b.spa)


def global_phase(a: DualPhoton, b: DualPhoton) -> complex | None:
    """The unit factor ``c`` with ``a = c * b``, or None if none exists."""
    if not equal_up_to_phase(a, b):
        return None
    ov = complex(np.vdot(b.as_array(), a.as_array()))
    return cmath.rect(1.0, cmath.phase(ov))
