import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qcclab.channels as ch
from qcclab import operators as op


def test_identity_choi_is_max_entangled():
    j = ch.choi_of(ch.identity_channel(2)).operator
    omega = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for k in range(2):
            omega[i * 2 + i, k * 2 + k] = 1.0
    assert np.abs(j - omega).max() < 1e-12


def test_choi_trace_equals_input_dim():
    n = ch.random_cptp(3, 2, seed=0)
    j = ch.choi_of(n).operator
    assert abs(np.trace(j).real - 3.0) < 1e-10


def test_apply_matches_choi_contraction():
    n = ch.random_cptp(2, 3, seed=1)
    rho = ch.random_state(2, seed=2)
    direct = ch.apply(n, rho)
    via_choi = ch.apply_via_choi(ch.choi_of(n), rho)
    assert np.abs(direct - via_choi).max() < 1e-10


def test_validate_cptp_accepts_and_rejects():
    ok, _ = ch.validate_cptp(ch.depolarizing(2, 0.5))
    assert ok
    bad = ch.KrausChannel(kraus=(np.eye(2) * 0.5,), name="bad")
    ok, diag = ch.validate_cptp(bad)
    assert not ok
    assert diag["tp_residual"] > 0.1


def test_depolarizing_action():
    n = ch.depolarizing(2, 1.0)
    rho = ch.random_state(2, seed=3)
    out = ch.apply(n, rho)
    assert np.abs(out - np.eye(2) / 2).max() < 1e-10


def test_replacer_action():
    sigma = np.diag([0.7, 0.3]).astype(complex)
    n = ch.replacer(sigma, 2)
    rho = ch.random_state(2, seed=4)
    assert np.abs(ch.apply(n, rho) - sigma).max() < 1e-10


def test_replacer_choi_is_product():
    sigma = np.diag([0.7, 0.3]).astype(complex)
    j = ch.choi_of(ch.replacer(sigma, 2)).operator
    assert np.abs(j - np.kron(np.eye(2), sigma)).max() < 1e-10


def test_measurement_channel_is_cptp_and_classical():
    n = ch.measurement_channel(ch.trine_povm())
    ok, _ = ch.validate_cptp(n)
    assert ok
    rho = ch.random_state(2, seed=5)
    out = ch.apply(n, rho)
    off = out - np.diag(np.diag(out))
    assert np.abs(off).max() < 1e-10


def test_measurement_channel_statistics():
    qc = ch.trine_povm()
    n = ch.measurement_channel(qc)
    rho = ch.random_state(2, seed=6)
    out = ch.apply(n, rho)
    for x, effect in enumerate(qc.povm):
        assert abs(out[x, x].real - np.trace(effect @ rho).real) < 1e-10


def test_tensor_choi_matches_interleaved_kron():
    a = ch.random_cptp(2, 2, seed=7)
    b = ch.random_cptp(2, 2, seed=8)
    j_ab = ch.choi_of(ch.tensor(a, b)).operator
    j_ref = ch.interleaved_choi_kron(ch.choi_of(a), ch.choi_of(b))
    assert np.abs(j_ab - j_ref).max() < 1e-10


def test_power_guard():
    n = ch.identity_channel(2)
    with pytest.raises(ch.ChannelError):
        ch.power(n, 4)


def test_classical_channel_stochastic():
    t = np.array([[0.9, 0.2], [0.1, 0.8]])
    n = ch.classical(t)
    rho = np.diag([1.0, 0.0]).astype(complex)
    out = ch.apply(n, rho)
    assert np.abs(np.diag(out).real - t[:, 0]).max() < 1e-10


def test_random_cptp_deterministic():
    a = ch.random_cptp(2, 3, seed=42)
    b = ch.random_cptp(2, 3, seed=42)
    for ka, kb in zip(a.kraus, b.kraus):
        assert np.abs(ka - kb).max() == 0.0


def test_channel_json_roundtrip(tmp_path):
    n = ch.random_cptp(2, 2, seed=9)
    path = tmp_path / "chan.json"
    ch.save_channel(path, n)
    back = ch.load_channel(path)
    assert np.abs(ch.choi_of(back).operator - ch.choi_of(n).operator).max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_random_cptp_is_cptp(seed):
    n = ch.random_cptp(2, 2, seed=seed)
    ok, diag = ch.validate_cptp(n)
    assert ok, diag


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_choi_psd_and_marginal(seed):
    n = ch.random_cptp(3, 2, seed=seed)
    j = ch.choi_of(n).operator
    assert op.min_eigenvalue(j) >= -1e-9
    # trace-preservation: Tr_B J = I_R
    marg = op.partial_trace(j, (3, 2), [0])
    assert np.abs(marg - np.eye(3)).max() < 1e-9
