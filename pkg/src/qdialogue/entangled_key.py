"""Four-particle quantum key: preparation, Z-basis readout, and key -> operation map.

Amplitudes are indexed by the labels of (A1, A2, B1, B2) with H = 0 and V = 1,
A1 the most significant bit. The fresh key state has weight 1/2 on each of
HHHH, HVHV, VHVH and VVVV, so in every term A1 = B1 and A2 = B2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from qdialogue.dof_core import C00, C01, C10, C11, NORM_TOL, CompositeOp, DofVector
from qdialogue.errors import ContractViolation

PARTICLES = ("A1", "A2", "B1", "B2")
Z_LABELS = ("H", "V")


@dataclass(frozen=True, eq=False)
class FourParticleState:
    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=complex).reshape(16)
        if abs(float(np.vdot(amps, amps).real) - 1.0) > NORM_TOL:
            raise ContractViolation("four-particle state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def amp(self, labels: str) -> complex:
        """Amplitude of a term such as ``"HVHV"``."""
        return complex(self.amps[index_of(labels)])

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(2, 2, 2, 2)


def index_of(labels: str) -> int:
    if len(labels) != 4 or any(c not in Z_LABELS for c in labels):
        raise ContractViolation(f"bad four-particle term {labels!r}")
    idx = 0
    for c in labels:
        idx = (idx << 1) | (c == "V")
    return idx


class Pair(enum.Enum):
    ALICE = (0, 1)
    BOB = (2, 3)


@dataclass(frozen=True)
class KeyOutcome:
    first: str
    second: str

    def __post_init__(self) -> None:
        if self.first not in Z_LABELS or self.second not in Z_LABELS:
            raise ContractViolation(f"key outcome labels must be H/V, got {self.first}{self.second}")

    def __str__(self) -> str:
        return self.first + self.second

    @classmethod
    def parse(cls, text: str) -> KeyOutcome:
        if len(text) != 2:
            raise ContractViolation(f"bad key outcome {text!r}")
        return cls(text[0], text[1])


KEY_OUTCOMES = tuple(KeyOutcome(a, b) for a in Z_LABELS for b in Z_LABELS)


def prepare_psi() -> FourParticleState:
    amps = np.zeros(16, dtype=complex)
    for term in ("HHHH", "HVHV", "VHVH", "VVVV"):
        amps[index_of(term)] = 0.5
    return FourParticleState(amps)


def _pair_probabilities(s: FourParticleState, which: Pair) -> np.ndarray:
    i, j = which.value
    others = tuple(k for k in range(4) if k not in (i, j))
    probs = np.sum(np.abs(s.tensor()) ** 2, axis=others)
    return probs.reshape(4)


def project_pair(s: FourParticleState, which: Pair, outcome: KeyOutcome) -> FourParticleState:
    """Post-measurement state for a given Z_p outcome of the named pair."""
    i, j = which.value
    a, b = Z_LABELS.index(outcome.first), Z_LABELS.index(outcome.second)
    t = np.zeros_like(s.tensor())
    sel = [slice(None)] * 4
    sel[i], sel[j] = a, b
    t[tuple(sel)] = s.tensor()[tuple(sel)]
    norm = float(np.sqrt(np.sum(np.abs(t) ** 2)))
    if norm < NORM_TOL:
        raise ContractViolation(f"outcome {outcome} has zero probability for {which.name} pair")
    return FourParticleState(t.reshape(16) / norm)


def measure_pair(
    s: FourParticleState, which: Pair, rng: np.random.Generator
) -> tuple[KeyOutcome, FourParticleState]:
    probs = _pair_probabilities(s, which)
    k = int(rng.choice(4, p=probs / probs.sum()))
    outcome = KEY_OUTCOMES[k]
    return outcome, project_pair(s, which, outcome)


def project_particle(s: FourParticleState, index: int, onto: DofVector) -> tuple[float, FourParticleState | None]:
    """Probability of finding particle ``index`` in ``onto``, and the collapsed state.

    The collapsed state is None when that probability is zero.
    """
    bra = onto.as_array().conj()
    t = np.moveaxis(s.tensor(), index, 0)
    reduced = np.tensordot(bra, t, axes=(0, 0))  # remaining three particles
    prob = float(np.sum(np.abs(reduced) ** 2))
    if prob < NORM_TOL:
        return prob, None
    full = np.multiply.outer(onto.as_array(), reduced / np.sqrt(prob))
    return prob, FourParticleState(np.moveaxis(full, 0, index).reshape(16))


def measure_particle(
    s: FourParticleState,
    index: int,
    basis_states: tuple[tuple[str, DofVector], tuple[str, DofVector]],
    rng: np.random.Generator,
) -> tuple[str, DofVector, FourParticleState]:
    """Measure one particle in an arbitrary orthonormal pair of states."""
    (label0, state0), (label1, state1) = basis_states
    p0, collapsed0 = project_particle(s, index, state0)
    if rng.random() < p0 and collapsed0 is not None:
        return label0, state0, collapsed0
    _, collapsed1 = project_particle(s, index, state1)
    if collapsed1 is None:
        raise ContractViolation("measurement basis does not span the particle state")
    return label1, state1, collapsed1


_KEY_OPS = {
    KeyOutcome("H", "H"): C00,
    KeyOutcome("H", "V"): C01,
    KeyOutcome("V", "H"): C10,
    KeyOutcome("V", "V"): C11,
}


def key_to_op(k: KeyOutcome) -> CompositeOp:
    return _KEY_OPS[k]


class KeyRound:
    """Key material of one round while its particles are spread over both parties.

    A key particle is a shared, mutable physical object: Alice's readout, an
    eavesdropper's measurement, and Bob's readout all act on the same joint
    state. An intercept-resend attack swaps Bob's particle for an unrelated
    qubit; that substitute is kept in ``substitutes`` by particle index.
    """

    def __init__(self, state: FourParticleState | None = None):
        self.state = prepare_psi() if state is None else state
        self.substitutes: dict[int, DofVector] = {}

    def particle(self, name: str) -> KeyParticle:
        return KeyParticle(self, PARTICLES.index(name))

    def measure_alice(self, rng: np.random.Generator) -> KeyOutcome:
        outcome, self.state = measure_pair(self.state, Pair.ALICE, rng)
        return outcome

    def measure_bob(self, rng: np.random.Generator) -> KeyOutcome:
        if not self.substitutes:
            outcome, self.state = measure_pair(self.state, Pair.BOB, rng)
            return outcome
        labels = [self.measure_particle(i, _Z_STATES, rng)[0] for i in Pair.BOB.value]
        return KeyOutcome(*labels)

    def measure_particle(
        self,
        index: int,
        basis_states: tuple[tuple[str, DofVector], tuple[str, DofVector]],
        rng: np.random.Generator,
    ) -> tuple[str, DofVector]:
        if index in self.substitutes:
            (label0, state0), (label1, state1) = basis_states
            p0 = abs(state0.inner(self.substitutes[index])) ** 2
            label, vec = (label0, state0) if rng.random() < p0 else (label1, state1)
            self.substitutes[index] = vec
            return label, vec
        label, vec, self.state = measure_particle(self.state, index, basis_states, rng)
        return label, vec

    def substitute(self, index: int, replacement: DofVector) -> None:
        self.substitutes[index] = replacement


@dataclass(frozen=True, eq=False)
class KeyParticle:
    """Handle to one particle of a :class:`KeyRound` travelling in a block."""

    round: KeyRound
    index: int

    @property
    def name(self) -> str:
        return PARTICLES[self.index]


_Z_STATES = (("H", DofVector(1, 0)), ("V", DofVector(0, 1)))
