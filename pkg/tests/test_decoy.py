from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdialogue.decoy import (
    CheckReport,
    DecoyMode,
    compare_decoys,
    drop_positions,
    extract,
    generate_decoys,
    interleave,
    run_check,
)
from qdialogue.dof_core import ALL_PRODUCT_LABELS, basis_of, measure, product_state
from qdialogue.errors import ContractViolation
from tests.binomial import within_3sigma


def random_product(rng):
    return product_state(*ALL_PRODUCT_LABELS[int(rng.integers(16))])


class TestGenerate:
    def test_empty(self, rng):
        assert generate_decoys(0, DecoyMode.DUAL_DOF, rng) == []

    def test_negative(self, rng):
        with pytest.raises(ContractViolation):
            generate_decoys(-1, DecoyMode.DUAL_DOF, rng)

    @pytest.mark.parametrize("mode, cells", [(DecoyMode.DUAL_DOF, 16), (DecoyMode.POLARIZATION_ONLY, 4)])
    def test_uniform(self, rng, mode, cells):
        n = 100_000
        counts = Counter(rec.state_id for _, rec in generate_decoys(n, mode, rng))
        assert len(counts) == cells
        for c in counts.values():
            assert within_3sigma(c, n, 1 / cells)

    def test_polarization_only_alphabet(self, rng):
        decoys = generate_decoys(400, DecoyMode.POLARIZATION_ONLY, rng)
        assert {rec.state_id for _, rec in decoys} == {("H", "b1"), ("V", "b1"), ("R", "b1"), ("A", "b1")}
        assert all(rec.spa_basis is None for _, rec in decoys)

    def test_every_decoy_is_an_eigenstate_of_its_bases(self, rng):
        for photon, rec in generate_decoys(400, DecoyMode.DUAL_DOF, rng):
            assert rec.pol_basis == basis_of(rec.state_id[0])
            assert rec.spa_basis == basis_of(rec.state_id[1])
            assert measure(photon, rec.pol_basis, rec.spa_basis, rng).labels == rec.state_id


class TestInterleave:
    def test_no_decoys(self, rng):
        seq, recs, pos = interleave(["a", "b", "c"], [], rng)
        assert seq == ["a", "b", "c"] and recs == [] and pos == [0, 1, 2]

    def test_no_payload(self, rng):
        decoys = generate_decoys(2, DecoyMode.DUAL_DOF, rng)
        seq, recs, pos = interleave([], decoys, rng)
        assert pos == []
        assert [r.position for r in recs] == [0, 1]
        assert seq == [p for p, _ in decoys]

    @settings(max_examples=50)
    @given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 2**32 - 1))
    def test_inverse(self, n_payload, n_decoys, seed):
        rng = np.random.default_rng(seed)
        payload = [f"p{i}" for i in range(n_payload)]
        seq, recs, pos = interleave(payload, generate_decoys(n_decoys, DecoyMode.DUAL_DOF, rng), rng)
        assert len(seq) == n_payload + n_decoys
        assert extract(seq, pos) == payload
        assert drop_positions(seq, [r.position for r in recs]) == payload
        positions = [r.position for r in recs]
        assert positions == sorted(set(positions))

    def test_positions_uniform(self, rng):
        # one decoy among 4 slots: each slot equally likely
        n = 20_000
        counts = Counter()
        for _ in range(n):
            _, recs, _ = interleave(["x"] * 3, generate_decoys(1, DecoyMode.DUAL_DOF, rng), rng)
            counts[recs[0].position] += 1
        assert sorted(counts) == [0, 1, 2, 3]
        assert all(within_3sigma(c, n, 0.25) for c in counts.values())


class TestCheck:
    @pytest.mark.parametrize("mode", list(DecoyMode))
    @pytest.mark.parametrize("n", [0, 1, 17, 200])
    def test_zero_false_alarms(self, rng, mode, n):
        seq, recs, _ = interleave(["payload"] * 5, generate_decoys(n, mode, rng), rng)
        report = run_check(seq, recs, 0.0, rng)
        assert report == CheckReport(n, 0, 0.0, False)

    def test_random_resend_fails_three_quarters(self, rng):
        # per DOF a random state from the 4-state alphabet passes with prob
        # (1 + 0 + 1/2 + 1/2) / 4 = 1/2, so both pass with prob 1/4
        n = 100_000
        decoys = generate_decoys(n, DecoyMode.DUAL_DOF, rng)
        seq = [random_product(rng) for _ in decoys]
        recs = [rec.at(i) for i, (_, rec) in enumerate(decoys)]
        report = run_check(seq, recs, 0.0, rng)
        assert within_3sigma(report.mismatches, n, 0.75)
        assert report.abort

    def test_threshold_zero_one_mismatch_aborts(self):
        rec = generate_decoys(1, DecoyMode.DUAL_DOF, np.random.default_rng(1))[0][1].at(0)
        wrong = {"H": "V", "V": "H", "R": "A", "A": "R"}[rec.state_id[0]]
        report = compare_decoys([rec], [(wrong, rec.state_id[1])], 0.0)
        assert report.mismatches == 1 and report.abort

    def test_threshold_tolerates(self, rng):
        decoys = generate_decoys(10, DecoyMode.DUAL_DOF, rng)
        recs = [rec.at(i) for i, (_, rec) in enumerate(decoys)]
        flip = {"H": "V", "V": "H", "R": "A", "A": "R"}
        results = [rec.state_id for rec in recs]
        results[0] = (flip[results[0][0]], results[0][1])
        assert not compare_decoys(recs, results, 0.1).abort
        assert compare_decoys(recs, results, 0.05).abort
        assert compare_decoys(recs, results, 0.05).error_rate == pytest.approx(0.1)

    def test_position_out_of_range(self, rng):
        rec = generate_decoys(1, DecoyMode.DUAL_DOF, rng)[0][1].at(5)
        with pytest.raises(ContractViolation):
            run_check([product_state("H", "b1")], [rec], 0.0, rng)

    def test_non_decoy_positions_untouched(self, rng):
        payload = [object() for _ in range(6)]
        seq, recs, pos = interleave(payload, generate_decoys(6, DecoyMode.DUAL_DOF, rng), rng)
        before = list(seq)
        run_check(seq, recs, 0.0, rng)
        assert all(seq[i] is before[i] for i in pos)
