import math

import numpy as np
import pytest

import qcclab.channels as ch
from qcclab import operators as op
from qcclab import sdp


def test_trace_maximization_toy():
    """max Tr X subject to 0 <= X <= I at dim 2 has optimum 2."""
    prog = sdp.HermitianSdp()
    prog.add_block("X", 2)
    prog.set_objective("X", np.eye(2, dtype=complex))
    prog.add_psd([("X", sdp.identity_map(2))], const=None, dim=2)
    prog.add_psd([("X", -sdp.identity_map(2))], const=np.eye(2, dtype=complex), dim=2)
    sol = sdp.solve(prog)
    assert sol.status == "optimal"
    assert abs(sol.primal - 2.0) < 1e-7
    assert abs(sol.primal - sol.dual) < 1e-7


def test_max_eigenvalue_variational():
    """max Tr[H X] over states X equals the top eigenvalue of H."""
    rng = np.random.default_rng(0)
    h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = (h + h.conj().T) / 2
    prog = sdp.HermitianSdp()
    prog.add_block("X", 3)
    prog.set_objective("X", h)
    prog.add_eq([("X", sdp.trace_map(3))], const=np.array([[-1.0 + 0j]]), dim=1)
    prog.add_psd([("X", sdp.identity_map(3))], const=None, dim=3)
    sol = sdp.solve(prog)
    assert abs(sol.primal - op.eigh(h).eigenvalues[0]) < 1e-7


def test_ns_replacer_closed_form():
    n = ch.replacer(np.eye(2) / 2, 2)
    for m in (1, 2, 4, 8):
        assert abs(sdp.ns_success(n, m).value - 1.0 / m) < 1e-7


def test_mc_identity_one_message():
    assert abs(sdp.mc_success(ch.identity_channel(2), 1).value - 1.0) < 1e-7


def test_ns_identity_perfect_up_to_dim():
    # a qubit identity channel carries one of M <= 2 messages perfectly
    assert abs(sdp.ns_success(ch.identity_channel(2), 2).value - 1.0) < 1e-6


def test_ns_marginal_repaired_exactly():
    n = ch.random_cptp(2, 2, seed=1)
    ns = sdp.ns_success(n, 4)
    marg = op.partial_trace(ns.lam, ns.dims, [1])
    assert np.abs(marg - np.eye(2) / 4).max() < 1e-12
    assert op.min_eigenvalue(ns.lam) > -1e-8
    assert op.min_eigenvalue(np.kron(ns.rho, np.eye(2)) - ns.lam) > -1e-8


def test_gap_certificate_small():
    for seed in range(3):
        n = ch.random_cptp(2, 2, seed=seed)
        assert sdp.ns_success(n, 3).gap <= 1e-7
        assert sdp.mc_success(n, 3).gap <= 1e-7


def test_ns_fixed_never_beats_free():
    n = ch.random_cptp(2, 2, seed=2)
    free = sdp.ns_success(n, 3).value
    fixed = sdp.ns_success_fixed(n, 3, np.eye(2) / 2).value
    assert fixed <= free + 1e-6


def test_mc_fixed_duality():
    for seed in range(4):
        n = ch.random_cptp(2, 2, seed=seed + 10)
        rho = ch.random_state(2, seed=seed)
        primal = sdp.mc_success_fixed(n, 3, rho).value
        dual = sdp.mc_success_dual_fixed(n, 3, rho)
        assert abs(primal - dual) < 1e-5


def test_hypothesis_test_oracle_pair():
    rho = np.diag([0.75, 0.25]).astype(complex)
    sigma = np.eye(2) / 2
    val = sdp.hypothesis_test_value(rho, sigma, 0.25)
    assert abs(val - math.log(2)) < 1e-6


def test_hypothesis_test_neyman_pearson_oracle():
    """Commuting pairs reduce to a classical threshold test."""
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = rng.dirichlet(np.ones(3))
        q = rng.dirichlet(np.ones(3))
        eps = 0.2
        val = sdp.hypothesis_test_value(np.diag(p).astype(complex),
                                        np.diag(q).astype(complex), eps)
        # classical Neyman-Pearson by likelihood-ratio ordering
        order = np.argsort(-p / np.maximum(q, 1e-15))
        mass, beta = 0.0, 0.0
        budget = 1 - eps
        for i in order:
            take = min(1.0, (budget - mass) / p[i]) if p[i] > 0 else 1.0
            take = max(0.0, take)
            mass += take * p[i]
            beta += take * q[i]
            if mass >= budget - 1e-12:
                break
        assert abs(val - (-math.log(beta))) < 1e-6


def test_hypothesis_test_infinite_on_disjoint_support():
    rho = np.diag([1.0, 0.0]).astype(complex)
    sigma = np.diag([0.0, 1.0]).astype(complex)
    assert sdp.hypothesis_test_value(rho, sigma, 0.1) == float("inf")


def test_symmetrize_check_two_copies():
    rep = sdp.symmetrize_check(ch.depolarizing(2, 0.4), 2)
    assert rep["pass"], rep


def test_super_multiplicativity_two_fold():
    n = ch.random_cptp(2, 2, seed=3)
    one = sdp.ns_success(n, 2).value
    two = sdp.ns_success(ch.power(n, 2), 4).value
    assert two >= one * one - 1e-6


def test_block_dim_guard():
    prog = sdp.HermitianSdp()
    with pytest.raises(sdp.SolverError):
        prog.add_block("big", 81)


def test_invalid_message_count():
    with pytest.raises(ValueError):
        sdp.ns_success(ch.identity_channel(2), 0)
