import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdialogue.dof_core import (
    ALL_BIT_PAIRS,
    ALL_PRODUCT_LABELS,
    B1,
    B2,
    BASES,
    C00,
    C01,
    C10,
    C11,
    COMPOSITE_OPS,
    X_P,
    X_S,
    Z_P,
    Z_S,
    ZZ_LABELS,
    A,
    BitPair,
    DofVector,
    DualPhoton,
    H,
    R,
    SingleDofOp,
    V,
    apply_composite,
    apply_single,
    basis_of,
    bits_for_op,
    dof_state,
    equal_up_to_phase,
    global_phase,
    measure,
    op_for_bits,
    product_state,
)
from qdialogue.errors import ContractViolation
from tests.binomial import binomial_3sigma

# Independent oracle: the operators written out as outer products, as defined
# for each degree of freedom (|1><0| - |0><1| for U).
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
ORACLE = {
    SingleDofOp.I: np.outer(KET0, KET0) + np.outer(KET1, KET1),
    SingleDofOp.U: np.outer(KET1, KET0) - np.outer(KET0, KET1),
}


def close(v: DofVector, arr) -> bool:
    return np.allclose(v.as_array(), np.asarray(arr, dtype=complex), atol=1e-12)


unit_vectors = st.tuples(
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)
).filter(lambda t: sum(x * x for x in t) > 1e-3).map(
    lambda t: DofVector(
        complex(t[0], t[1]) / math.sqrt(sum(x * x for x in t)),
        complex(t[2], t[3]) / math.sqrt(sum(x * x for x in t)),
    )
)
ops = st.sampled_from(list(SingleDofOp))
composites = st.sampled_from(COMPOSITE_OPS)
product_labels = st.sampled_from(ALL_PRODUCT_LABELS)


class TestDofVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ContractViolation):
            DofVector(1, 1)

    def test_named_states(self):
        assert close(R, [1 / math.sqrt(2), 1 / math.sqrt(2)])
        assert close(A, [1 / math.sqrt(2), -1 / math.sqrt(2)])
        assert abs(R.inner(A)) < 1e-15

    def test_four_bases(self):
        assert [b.name for b in BASES] == ["Z_p", "X_p", "Z_s", "X_s"]
        assert basis_of("a") == X_S
        assert basis_of("V") == Z_P


class TestApplySingle:
    def test_u_on_h_gives_v(self):
        assert apply_single(SingleDofOp.U, H) == V

    def test_identity_on_a(self):
        assert apply_single(SingleDofOp.I, A) == A

    def test_u_twice_gives_minus_h(self):
        assert close(apply_single(SingleDofOp.U, apply_single(SingleDofOp.U, H)), [-1, 0])

    @pytest.mark.parametrize(
        "state, expected",
        [(H, V), (V, -H), (R, -A), (A, R)],
        ids=["H", "V", "R", "A"],
    )
    def test_polarization_table(self, state, expected):
        assert close(apply_single(SingleDofOp.U, state), expected.as_array())

    @given(ops, unit_vectors)
    def test_matches_outer_product_oracle(self, op, v):
        assert np.allclose(apply_single(op, v).as_array(), ORACLE[op] @ v.as_array(), atol=1e-12)

    @given(ops, unit_vectors)
    def test_norm_preserved(self, op, v):
        assert abs(apply_single(op, v).norm_squared() - 1.0) <= 1e-12

    @pytest.mark.parametrize("label", ["R", "A", "s", "a"])
    def test_u_stays_inside_x_basis(self, label):
        out = apply_single(SingleDofOp.U, dof_state(label))
        basis = basis_of(label)
        overlaps = sorted(abs(w.inner(out)) for _, w in basis.states())
        assert overlaps == pytest.approx([0.0, 1.0], abs=1e-12)


class TestComposite:
    def test_c01_on_h_b1(self):
        assert apply_composite(C01, product_state("H", "b1")) == product_state("H", "b2")

    def test_c00_on_h_b2(self):
        assert apply_composite(C00, product_state("H", "b2")) == product_state("H", "b2")

    @pytest.mark.parametrize("label", ZZ_LABELS)
    def test_c11_twice_is_minus_one_per_dof(self, label):
        p = product_state(*label)
        twice = apply_composite(C11, apply_composite(C11, p))
        assert close(twice.pol, -p.pol.as_array())
        assert close(twice.spa, -p.spa.as_array())
        assert global_phase(twice, p) == pytest.approx(1.0)

    @given(composites, product_labels)
    def test_involution_up_to_phase(self, op, label):
        p = product_state(*label)
        assert equal_up_to_phase(apply_composite(op, apply_composite(op, p)), p)

    @given(composites, composites, st.sampled_from(ZZ_LABELS))
    def test_xor_group_table(self, first, second, label):
        p = product_state(*label)
        combined = op_for_bits(bits_for_op(first) ^ bits_for_op(second))
        assert equal_up_to_phase(apply_composite(second, apply_composite(first, p)), apply_composite(combined, p))

    def test_codebook(self):
        assert op_for_bits(BitPair(0, 1)) == C01
        assert op_for_bits(BitPair(0, 0)) == C00
        assert op_for_bits(BitPair(1, 0)) == C10
        assert op_for_bits(BitPair(1, 1)) == C11
        for b in ALL_BIT_PAIRS:
            assert bits_for_op(op_for_bits(b)) == b
        assert C10.name == "C10"


class TestBitPair:
    def test_rejects_non_bits(self):
        with pytest.raises(ContractViolation):
            BitPair(2, 0)

    def test_parse_and_xor(self):
        assert BitPair.parse("10") ^ BitPair.parse("11") == BitPair(0, 1)
        assert str(BitPair(1, 0)) == "10"
        assert tuple(BitPair(0, 1)) == (0, 1)


class TestMeasure:
    def test_eigenstate(self, rng):
        for _ in range(100):
            assert measure(product_state("H", "b2"), Z_P, Z_S, rng).labels == ("H", "b2")

    def test_global_phase_unobservable(self, rng):
        p = DualPhoton(-H, B1)
        for _ in range(100):
            out = measure(p, Z_P, Z_S, rng)
            assert out.labels == ("H", "b1")
            assert out.collapsed == product_state("H", "b1")

    @given(product_labels)
    def test_own_bases_reproduce_labels(self, label):
        p = product_state(*label)
        out = measure(p, basis_of(label[0]), basis_of(label[1]), np.random.default_rng(0))
        assert out.labels == label

    def test_r_splits_evenly(self, rng):
        n = 100_000
        p = product_state("R", "b1")
        hits = sum(measure(p, Z_P, Z_S, rng).pol_label == "H" for _ in range(n))
        assert abs(hits / n - 0.5) <= binomial_3sigma(0.5, n)

    def test_basis_dof_mismatch(self, rng):
        with pytest.raises(ContractViolation):
            measure(product_state("H", "b1"), Z_S, Z_S, rng)
        with pytest.raises(ContractViolation):
            measure(product_state("H", "b1"), Z_P, X_P, rng)

    def test_same_stream_same_outcome(self):
        p = product_state("R", "s")
        a = [measure(p, Z_P, Z_S, np.random.default_rng(5)).labels for _ in range(3)]
        assert len(set(a)) == 1


class TestEqualUpToPhase:
    def test_sign(self):
        assert equal_up_to_phase(product_state("H", "b1"), DualPhoton(-H, B1))

    def test_orthogonal(self):
        assert not equal_up_to_phase(product_state("H", "b1"), product_state("V", "b1"))

    def test_complex_phase(self):
        w = cmath.exp(0.7j)
        assert equal_up_to_phase(DualPhoton(R.scaled(w), B2), product_state("R", "b2"))
        assert not equal_up_to_phase(product_state("R", "b2"), product_state("H", "b2"))

    @pytest.mark.parametrize("label", ZZ_LABELS)
    def test_c10_twice(self, label):
        # by hand: U_p maps H -> V -> -H and V -> -H -> -V, spatial untouched
        p = product_state(*label)
        expected = DualPhoton(-p.pol, p.spa)
        twice = apply_composite(C10, apply_composite(C10, p))
        assert np.allclose(twice.as_array(), expected.as_array())
        assert equal_up_to_phase(twice, p)
