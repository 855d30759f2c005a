"""Eavesdropper strategies on quantum blocks and Monte Carlo detection experiments.

Eve cannot tell decoys from payload, so every item in an attacked block gets
the same treatment. Intercept-resend keeps the original and forwards a fresh
state drawn uniformly from the block's decoy alphabet. Measure-resend measures
each qubit in Z or X (fair coin, independently per degree of freedom) and
forwards what it collapsed to.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from qdialogue.decoy import DecoyMode
from qdialogue.dof_core import (
    X_P,
    X_S,
    Z_P,
    Z_S,
    DualPhoton,
    dof_state,
    measure_dof,
    product_state,
)
from qdialogue.entangled_key import KeyParticle


class AttackKind(enum.Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept"
    MEASURE_RESEND = "measure"


class Target(enum.Enum):
    STEP1_B1 = "b1"
    STEP1_B2 = "b2"
    STEP2 = "step2"
    STEP3 = "step3"

    @property
    def decoy_mode(self) -> DecoyMode:
        if self in (Target.STEP1_B1, Target.STEP1_B2):
            return DecoyMode.POLARIZATION_ONLY
        return DecoyMode.DUAL_DOF


@dataclass(frozen=True)
class AttackStrategy:
    """Which attack, on which block, and the seed of Eve's private random stream.

    With ``seed=None`` the session derives Eve's stream from its own seed.
    """

    kind: AttackKind = AttackKind.NONE
    target: Target = Target.STEP2
    seed: int | None = None

    def hits(self, target: Target) -> bool:
        return self.kind is not AttackKind.NONE and self.target is target

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "target": self.target.value, "seed": self.seed}


NO_ATTACK = AttackStrategy()


def _intercept_resend(item: Any, mode: DecoyMode, rng: np.random.Generator) -> Any:
    alphabet = mode.alphabet()
    pol_label, spa_label = alphabet[int(rng.integers(len(alphabet)))]
    fresh = product_state(pol_label, spa_label)
    if isinstance(item, KeyParticle):
        item.round.substitute(item.index, fresh.pol)
        return item
    return fresh


def _measure_resend(item: Any, rng: np.random.Generator, log: list | None) -> Any:
    pol_basis = X_P if rng.random() < 0.5 else Z_P
    if isinstance(item, KeyParticle):
        label, _ = item.round.measure_particle(item.index, pol_basis.states(), rng)
        if log is not None:
            log.append((pol_basis.name, label))
        return item
    spa_basis = X_S if rng.random() < 0.5 else Z_S
    pol_label, pol = measure_dof(item.pol, pol_basis, rng)
    spa_label, spa = measure_dof(item.spa, spa_basis, rng)
    if log is not None:
        log.append((pol_basis.name, pol_label, spa_basis.name, spa_label))
    return DualPhoton(pol, spa)


def attack_block(
    photons: Sequence[Any],
    strategy: AttackStrategy,
    rng: np.random.Generator,
    mode: DecoyMode | None = None,
    log: list | None = None,
) -> list[Any]:
    """Apply ``strategy`` to every item of one transmitted block.

    ``mode`` selects the resend alphabet and defaults to the target's block
    type. ``log`` collects Eve's measurement records under measure-resend.
    """
    if strategy.kind is AttackKind.NONE:
        return list(photons)
    mode = strategy.target.decoy_mode if mode is None else mode
    if strategy.kind is AttackKind.INTERCEPT_RESEND:
        return [_intercept_resend(item, mode, rng) for item in photons]
    return [_measure_resend(item, rng, log) for item in photons]


# Per-decoy probability of passing the correct-basis check.
PASS_PROBABILITY: dict[tuple[AttackKind, DecoyMode], Fraction] = {
    (AttackKind.NONE, DecoyMode.DUAL_DOF): Fraction(1),
    (AttackKind.NONE, DecoyMode.POLARIZATION_ONLY): Fraction(1),
    (AttackKind.INTERCEPT_RESEND, DecoyMode.DUAL_DOF): Fraction(1, 4),
    (AttackKind.INTERCEPT_RESEND, DecoyMode.POLARIZATION_ONLY): Fraction(1, 2),
    (AttackKind.MEASURE_RESEND, DecoyMode.DUAL_DOF): Fraction(9, 16),
    (AttackKind.MEASURE_RESEND, DecoyMode.POLARIZATION_ONLY): Fraction(3, 4),
}


def analytic_detection(kind: AttackKind, mode: DecoyMode, delta: int) -> float:
    """Chance that at least one of ``delta`` decoys fails: 1 - pass**delta."""
    return float(1 - PASS_PROBABILITY[(kind, mode)] ** delta)


@dataclass(frozen=True)
class AttackReport:
    kind: AttackKind
    mode: DecoyMode
    delta: int
    trials: int
    detected: int
    empirical_detection: float
    analytic_detection: float
    per_photon_pass: float

    @property
    def sigma(self) -> float:
        """Binomial standard error of the detection frequency under the analytic rate."""
        p = self.analytic_detection
        return math.sqrt(p * (1 - p) / self.trials)

    def agrees(self, n_sigma: float = 3.0) -> bool:
        return abs(self.empirical_detection - self.analytic_detection) <= n_sigma * self.sigma

    def to_dict(self) -> dict[str, Any]:
        return {
            "attack": self.kind.value,
            "mode": self.mode.value,
            "delta": self.delta,
            "trials": self.trials,
            "detected": self.detected,
            "empirical_detection": self.empirical_detection,
            "analytic_detection": self.analytic_detection,
            "per_photon_pass": self.per_photon_pass,
        }


CHUNK_TRIALS = 8192


def _born_table(labels: tuple[str, str, str, str], bases) -> np.ndarray:
    # table[state, basis, outcome]; states ordered (Z0, Z1, X0, X1), bases (Z, X)
    table = np.empty((4, 2, 2))
    for i, label in enumerate(labels):
        v = dof_state(label)
        for b, basis in enumerate(bases):
            for k, (_, w) in enumerate(basis.states()):
                table[i, b, k] = abs(w.inner(v)) ** 2
    return table


_POL_TABLE = _born_table(("H", "V", "R", "A"), (Z_P, X_P))
_SPA_TABLE = _born_table(("b1", "b2", "s", "a"), (Z_S, X_S))


def _dof_passes(
    prepared: np.ndarray, kind: AttackKind, table: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized channel + check for one degree of freedom of many decoys."""
    shape = prepared.shape
    if kind is AttackKind.NONE:
        forwarded = prepared
    elif kind is AttackKind.INTERCEPT_RESEND:
        forwarded = rng.integers(4, size=shape)
    else:
        eve_basis = rng.integers(2, size=shape)
        p0 = table[prepared, eve_basis, 0]
        forwarded = 2 * eve_basis + (rng.random(shape) >= p0)
    check_basis = prepared // 2
    p0 = table[forwarded, check_basis, 0]
    outcome = 2 * check_basis + (rng.random(shape) >= p0)
    return outcome == prepared


def _run_chunk(kind: AttackKind, mode: DecoyMode, delta: int, m: int, seed: int, chunk: int) -> tuple[int, int]:
    rng = np.random.default_rng([seed, chunk])
    shape = (m, delta)
    passed = _dof_passes(rng.integers(4, size=shape), kind, _POL_TABLE, rng)
    if mode is DecoyMode.DUAL_DOF:
        passed &= _dof_passes(rng.integers(4, size=shape), kind, _SPA_TABLE, rng)
    detected = int(np.count_nonzero(~passed.all(axis=1)))
    return detected, int(np.count_nonzero(passed))


def detection_experiment(
    strategy: AttackStrategy | AttackKind,
    mode: DecoyMode,
    delta: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> AttackReport:
    """Monte Carlo estimate of how often a block of ``delta`` decoys exposes the attack.

    Trials are processed in fixed chunks with streams derived from
    ``(seed, chunk index)``, so the result does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    kind = strategy.kind if isinstance(strategy, AttackStrategy) else strategy
    sizes = [min(CHUNK_TRIALS, trials - start) for start in range(0, trials, CHUNK_TRIALS)]
    jobs = [(kind, mode, delta, m, seed, i) for i, m in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _run_chunk(*job), jobs))
    else:
        results = [_run_chunk(*job) for job in jobs]
    detected = sum(d for d, _ in results)
    passes = sum(p for _, p in results)
    photons = trials * delta
    return AttackReport(
        kind=kind,
        mode=mode,
        delta=delta,
        trials=trials,
        detected=detected,
        empirical_detection=detected / trials,
        analytic_detection=analytic_detection(kind, mode, delta),
        per_photon_pass=passes / photons if photons else 1.0,
    )
