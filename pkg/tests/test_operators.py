import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcclab import operators as op


def random_hermitian(d, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (x + x.conj().T) / 2


def random_psd(d, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return x @ x.conj().T


def test_check_hermitian_rejects_nonhermitian():
    with pytest.raises(op.OperatorError):
        op.check_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigh_descending_and_reconstruct():
    h = random_hermitian(5, 0)
    spec = op.eigh(h)
    assert np.all(np.diff(spec.eigenvalues) <= 1e-12)
    assert np.abs(spec.reconstruct() - h).max() < 1e-10


def test_positive_part():
    h = np.diag([2.0, -3.0, 0.5])
    assert np.allclose(op.positive_part(h), np.diag([2.0, 0.0, 0.5]))


def test_pseudo_inverse_on_support():
    p = np.diag([2.0, 0.0]).astype(complex)
    pinv = op.pseudo_inverse(p)
    assert np.allclose(pinv, np.diag([0.5, 0.0]))


def test_frac_power_roundtrip():
    x = random_psd(4, 1)
    sq = op.frac_power(x, 0.5)
    assert np.abs(sq @ sq - x).max() < 1e-9


def test_frac_power_negative_exponent_is_mp():
    x = np.diag([4.0, 0.0]).astype(complex)
    inv_sq = op.frac_power(x, -0.5)
    assert np.allclose(inv_sq, np.diag([0.5, 0.0]))


def test_frac_power_rejects_indefinite():
    with pytest.raises(op.OperatorError):
        op.frac_power(np.diag([1.0, -1.0]), 0.5)


def test_partial_trace_product():
    a = random_hermitian(2, 2)
    b = random_hermitian(3, 3)
    x = np.kron(a, b)
    assert np.abs(op.partial_trace(x, (2, 3), [0]) - np.trace(b) * a).max() < 1e-10
    assert np.abs(op.partial_trace(x, (2, 3), [1]) - np.trace(a) * b).max() < 1e-10


def test_pinching_trace_preserving_and_order():
    sigma = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho = random_psd(3, 5)
    pinched, v = op.pinching(sigma, rho)
    assert v == 3
    assert abs(np.trace(pinched) - np.trace(rho)) < 1e-10
    # pinching inequality: rho <= v * pinched
    assert op.psd_order_leq(rho, v * pinched, tol=1e-8)


def test_pinching_degenerate_blocks():
    sigma = np.diag([0.5, 0.5, 0.1]).astype(complex)
    rho = random_psd(3, 6)
    pinched, v = op.pinching(sigma, rho)
    assert v == 2
    assert op.psd_order_leq(rho, v * pinched, tol=1e-8)


def test_operator_norm_matches_numpy():
    h = random_hermitian(4, 7)
    assert abs(op.operator_norm(h) - np.linalg.norm(h, 2)) < 1e-10


def test_permute_systems_swap():
    a = random_hermitian(2, 8)
    b = random_hermitian(3, 9)
    x = np.kron(a, b)
    swapped = op.permute_systems(x, (2, 3), [1, 0])
    assert np.abs(swapped - np.kron(b, a)).max() < 1e-10


def test_matrix_literal_roundtrip(tmp_path):
    h = random_hermitian(3, 10)
    path = tmp_path / "m.json"
    op.save_matrix(path, h)
    back = op.load_matrix(path)
    assert np.abs(back - h).max() < 1e-15


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_positive_part_is_psd_and_dominates(seed):
    h = random_hermitian(4, seed)
    pos = op.positive_part(h)
    assert op.min_eigenvalue(pos) >= -1e-10
    assert op.psd_order_leq(h, pos, tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_partial_trace_preserves_trace(seed):
    x = random_psd(6, seed)
    pt = op.partial_trace(x, (2, 3), [0])
    assert abs(np.trace(pt) - np.trace(x)) < 1e-9
