"""Core algebra: contraction, unfolding, adjoint, inner product, storage."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensortail import tensor_core as tc
from tensortail.tensor_core import (
    DenseTensor,
    GuardrailError,
    Shape,
    ShapeMismatchError,
    add,
    conjugate_transpose,
    einstein_product,
    frobenius_norm,
    hadamard_product,
    hermitian,
    identity,
    inner_product,
    load_tensor,
    refold,
    save_tensor,
    scale,
    tensor,
    tensor_from_json,
    tensor_to_json,
    trace,
    unfold,
    zero,
)

from conftest import random_dense


def brute_force_product(a, b):
    """Nested-sum contraction written out longhand; the unit-level oracle."""
    out = np.zeros(a.row_dims + b.col_dims, dtype=np.complex128)
    for i in np.ndindex(a.row_dims):
        for k in np.ndindex(b.col_dims):
            total = 0j
            for j in np.ndindex(a.col_dims):
                total += a.entries[i + j] * b.entries[j + k]
            out[i + k] = total
    return out


def rel_err(got, want):
    return np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-300)


# --- einstein_product ------------------------------------------------------


def test_product_with_identity_is_identity_map(gen):
    x = random_dense(gen, (2, 3), (2, 2))
    out = einstein_product(x, identity((2, 2)))
    np.testing.assert_array_equal(out.entries, x.entries)


def test_single_mode_product_is_matrix_multiplication(gen):
    a = random_dense(gen, (3,), (4,))
    b = random_dense(gen, (4,), (2,))
    out = einstein_product(a, b)
    np.testing.assert_allclose(out.entries, unfold(a) @ unfold(b), rtol=1e-15)


def test_product_matches_nested_sum_oracle(gen):
    x = random_dense(gen, (2, 3), (2, 2))
    y = random_dense(gen, (2, 2), (3, 2))
    got = einstein_product(x, y)
    assert rel_err(got.entries, brute_force_product(x, y)) <= 1e-12
    assert got.row_dims == (2, 3) and got.col_dims == (3, 2)


def test_product_shape_error_names_first_differing_mode(gen):
    a = random_dense(gen, (2,), (2, 3))
    b = random_dense(gen, (2, 4), (2,))
    with pytest.raises(ShapeMismatchError, match="mode 1"):
        einstein_product(a, b)
    with pytest.raises(ShapeMismatchError, match="modes"):
        einstein_product(a, random_dense(gen, (2, 3, 2), (2,)))


def test_product_contracted_modes_argument(gen):
    a = random_dense(gen, (2,), (3,))
    b = random_dense(gen, (3,), (2,))
    einstein_product(a, b, contracted_modes=1)
    with pytest.raises(ShapeMismatchError):
        einstein_product(a, b, contracted_modes=2)


def test_product_associative_and_bilinear(gen):
    for _ in range(20):
        a = random_dense(gen, (2, 2), (3,))
        b = random_dense(gen, (3,), (2, 2))
        c = random_dense(gen, (2, 2), (2,))
        left = einstein_product(einstein_product(a, b), c)
        right = einstein_product(a, einstein_product(b, c))
        assert rel_err(left.entries, right.entries) <= 1e-10
        s = einstein_product(add(a, scale(a, 2.0)), b)
        t = add(einstein_product(a, b), scale(einstein_product(a, b), 2.0))
        assert rel_err(s.entries, t.entries) <= 1e-10


# --- add / scale / trace ---------------------------------------------------


def test_add_zero_and_additive_inverse(gen):
    x = random_dense(gen, (2,), (3,))
    np.testing.assert_array_equal(add(x, zero(x.shape)).entries, x.entries)
    np.testing.assert_array_equal(add(x, scale(x, -1)).entries, np.zeros(x.shape.dims))
    np.testing.assert_array_equal(scale(x, 0).entries, np.zeros(x.shape.dims))


def test_add_shape_mismatch(gen):
    with pytest.raises(ShapeMismatchError):
        add(random_dense(gen, (2,), (3,)), random_dense(gen, (3,), (2,)))


def test_trace_of_identity_is_dim_product():
    assert trace(identity((2, 3))) == pytest.approx(6)
    assert trace(identity((3, 4))) == pytest.approx(12)
    assert trace(zero(Shape((2, 2), (2, 2)))) == 0


def test_trace_matches_unfolded_matrix_trace(gen):
    for _ in range(20):
        x = random_dense(gen, (2, 3), (2, 3))
        assert abs(trace(x) - np.trace(unfold(x))) <= 1e-12 * abs(np.trace(unfold(x)) or 1)


def test_trace_requires_square(gen):
    with pytest.raises(ShapeMismatchError):
        trace(random_dense(gen, (2,), (3,)))


def test_trace_of_hermitian_is_real(gen):
    h = hermitian(add(random_dense(gen, (2, 2), (2, 2)),
                      conjugate_transpose(random_dense(gen, (2, 2), (2, 2)))))
    val = trace(h.base)
    assert abs(val.imag) <= 1e-12 * max(abs(val), 1.0)


# --- inner product / norms -------------------------------------------------


def test_inner_product_with_self_is_squared_norm(gen):
    x = random_dense(gen, (2, 2), (3,))
    val = inner_product(x, x)
    assert val.imag == pytest.approx(0.0, abs=1e-12)
    assert val.real == pytest.approx(frobenius_norm(x) ** 2, rel=1e-12)


def test_frobenius_norm_of_identity():
    assert frobenius_norm(identity((2, 3))) == pytest.approx(np.sqrt(6))


def test_inner_product_conjugate_symmetry_via_entry_sum(gen):
    for _ in range(10):
        a = random_dense(gen, (2,), (3,))
        b = random_dense(gen, (2,), (3,))
        direct = np.sum(np.conj(a.entries) * b.entries)
        assert inner_product(a, b) == pytest.approx(direct, rel=1e-12)
        assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), rel=1e-12)


def test_inner_product_adjoint_relation(gen):
    for _ in range(10):
        a = random_dense(gen, (2, 2), (3,))
        b = random_dense(gen, (3,), (2,))
        c = random_dense(gen, (2, 2), (2,))
        lhs = inner_product(einstein_product(a, b), c)
        rhs = inner_product(b, einstein_product(conjugate_transpose(a), c))
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_norm_equals_entry_sum(gen):
    x = random_dense(gen, (2, 3), (2,))
    assert frobenius_norm(x) ** 2 == pytest.approx(
        float(np.sum(np.abs(x.entries) ** 2)), rel=1e-12
    )


# --- conjugate transpose ---------------------------------------------------


def test_adjoint_of_identity_is_identity():
    i = identity((2, 3))
    np.testing.assert_array_equal(conjugate_transpose(i).entries, i.entries)


def test_adjoint_involution_bit_exact(gen):
    x = random_dense(gen, (2, 3), (4,))
    back = conjugate_transpose(conjugate_transpose(x))
    np.testing.assert_array_equal(back.entries, x.entries)
    assert back.shape == x.shape


def test_adjoint_commutes_with_unfold(gen):
    x = random_dense(gen, (2, 3), (2, 2))
    np.testing.assert_allclose(
        unfold(conjugate_transpose(x)), unfold(x).conj().T, rtol=0, atol=0
    )


# --- identity / zero / unfold ---------------------------------------------


def test_identity_entries_by_index():
    i = identity((2, 2))
    assert i.entries[0, 0, 0, 0] == 1
    assert i.entries[0, 1, 0, 0] == 0
    assert i.entries[1, 1, 1, 1] == 1


def test_identity_is_product_idempotent():
    i = identity((2, 2))
    np.testing.assert_array_equal(einstein_product(i, i).entries, i.entries)


def test_unfold_of_identity_is_eye():
    np.testing.assert_array_equal(unfold(identity((2, 3))), np.eye(6))


def test_refold_unfold_roundtrip_bit_exact(gen):
    x = random_dense(gen, (2, 3), (2, 2))
    back = refold(unfold(x), x.shape)
    np.testing.assert_array_equal(back.entries, x.entries)


def test_refold_dimension_mismatch():
    with pytest.raises(ShapeMismatchError):
        refold(np.zeros((2, 3)), Shape((2,), (2,)))


def test_unfold_homomorphism_against_bruteforce(gen):
    for _ in range(10):
        a = random_dense(gen, (2, 3), (2, 3))
        b = random_dense(gen, (2, 3), (2, 3))
        via_matrix = unfold(a) @ unfold(b)
        direct = brute_force_product(a, b).reshape(6, 6)
        assert rel_err(via_matrix, direct) <= 1e-12


# --- hadamard ---------------------------------------------------------------


def test_hadamard_with_ones_and_zero(gen):
    x = random_dense(gen, (2,), (3,))
    ones = DenseTensor(x.shape, np.ones(x.shape.dims))
    np.testing.assert_array_equal(hadamard_product(x, ones).entries, x.entries)
    np.testing.assert_array_equal(
        hadamard_product(x, zero(x.shape)).entries, np.zeros(x.shape.dims)
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_hadamard_commutative(seed):
    g = np.random.default_rng(seed)
    a = random_dense(g, (2,), (2, 2))
    b = random_dense(g, (2,), (2, 2))
    np.testing.assert_array_equal(
        hadamard_product(a, b).entries, hadamard_product(b, a).entries
    )


# --- validation and guardrails ---------------------------------------------


def test_shape_rejects_nonpositive_modes():
    with pytest.raises(ValueError):
        Shape((0,), (2,))
    with pytest.raises(ValueError):
        Shape((), ())


def test_guardrail_on_unfolded_size():
    with pytest.raises(GuardrailError):
        Shape((4097,), (1,))
    Shape((4096,), (1,))  # at the limit is fine


def test_entries_must_be_finite():
    arr = np.ones((2, 2), dtype=np.complex128)
    arr[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        DenseTensor(Shape((2,), (2,)), arr)


def test_tensor_entries_are_immutable(gen):
    x = random_dense(gen, (2,), (2,))
    with pytest.raises(ValueError):
        x.entries[0, 0] = 1.0


def test_hermitian_symmetrizes_and_rejects(gen):
    m = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    h = hermitian(tensor(0.5 * (m + m.conj().T) + 1e-13 * m, 1))
    u = h.unfold()
    np.testing.assert_allclose(u, u.conj().T, atol=0)
    with pytest.raises(ValueError, match="Hermitian"):
        hermitian(tensor(m, 1))
    with pytest.raises(ShapeMismatchError):
        hermitian(random_dense(gen, (2,), (3,)))


# --- serialization -----------------------------------------------------------


def test_binary_pair_roundtrip(tmp_path, gen):
    x = random_dense(gen, (2, 3), (2,))
    path = tmp_path / "t.json"
    save_tensor(x, path)
    header = json.loads(path.read_text())
    assert header == {"row_dims": [2, 3], "col_dims": [2], "dtype": "c128"}
    back = load_tensor(path)
    np.testing.assert_array_equal(back.entries, x.entries)
    assert back.shape == x.shape


def test_binary_payload_is_interleaved_little_endian(tmp_path):
    x = tensor(np.array([[1.0 + 2.0j, 3.0 - 4.0j]]), 1)
    path = tmp_path / "t.json"
    save_tensor(x, path)
    raw = np.frombuffer((tmp_path / "t.json.bin").read_bytes(), dtype="<f8")
    np.testing.assert_array_equal(raw, [1.0, 2.0, 3.0, -4.0])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_json_form_roundtrip(seed):
    g = np.random.default_rng(seed)
    x = random_dense(g, (2,), (2, 2))
    back = tensor_from_json(tensor_to_json(x))
    np.testing.assert_array_equal(back.entries, x.entries)


def test_json_form_shape_check():
    obj = tensor_to_json(identity((2,)))
    obj["entries"] = [[0.0, 0.0]]
    with pytest.raises(ValueError):
        tensor_from_json(obj)
