"""Rounding protocols: entanglement-assisted strategies built from NS/MC
solutions, with exact dense verification of their guarantees.

Four constructions are implemented: the marginal-relaxation lift (MC to
NS), the sequential decoder for channels with classical output, the
square-root (Hayashi-Nagaoka) decoder for position-based coding, and the
flattening / unitary-1-design decoder with its multiplicative guarantee.
A matrix Chernoff tail checker validates the concentration step used by
the last one.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import operators as op
from .channels import KrausChannel, apply, choi_of
from .sdp import NsSolution

DENSE_DIM_GUARD = 4096
EXACT_TOL = 1e-9
CROSS_CHECK_LIMIT = 16


class ProtocolError(RuntimeError):
    """Raised when a protocol precondition or proven guarantee fails."""


@dataclass
class ProtocolReport:
    protocol: str
    m_size: int
    m_prime: int
    per_message: list
    average_success: float
    average_error: float
    bound: float
    hypothesis_ok: bool
    samples: int = 0
    seed: int = 0
    max_residual: float = 0.0
    channel: str = ""

    def __post_init__(self):
        if self.per_message:
            mean = float(np.mean(self.per_message))
            if abs(mean - self.average_success) > 1e-12:
                raise ProtocolError("per-message mean disagrees with average")
        if abs(self.average_success + self.average_error - 1.0) > 1e-12:
            raise ProtocolError("success and error do not sum to one")

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["per_message"] = [float(x) for x in self.per_message]
        return out

    def csv_row(self) -> dict:
        return {
            "protocol": self.protocol,
            "channel": self.channel,
            "M": self.m_size,
            "M_prime": self.m_prime,
            "samples": self.samples,
            "seed": self.seed,
            "avg_success": self.average_success,
            "bound": self.bound,
            "hypothesis_ok": self.hypothesis_ok,
            "max_residual": self.max_residual,
        }


CSV_FIELDS = ["protocol", "channel", "M", "M_prime", "samples", "seed",
              "avg_success", "bound", "hypothesis_ok", "max_residual"]


def write_reports_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.csv_row())


def write_report_json(path, report: ProtocolReport) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- MC -> NS lift --------------------------------------------------------


def mc_to_ns_lift(mc: NsSolution, m_size: int, tol: float = 1e-7) -> NsSolution:
    """Turn a feasible size M-1 marginal-relaxed pair into a size-M NS pair.

    In the unrescaled picture the lift adds rho (x) (I - Lambda_B), which
    completes the output marginal to the identity without decreasing the
    objective; the resulting value is at least (M-1)/M times the input's.
    """
    if m_size < 2:
        raise ValueError("lift needs a target size of at least 2")
    if mc.size != m_size - 1:
        raise ValueError("input pair must have size M - 1")
    d_r, d_b = mc.dims
    prev = mc.size
    marg = op.partial_trace(mc.lam, (d_r, d_b), keep=[1])
    res_marg = -op.min_eigenvalue(np.eye(d_b) / prev - marg)
    res_psd = -op.min_eigenvalue(mc.lam)
    res_dom = -op.min_eigenvalue(np.kron(mc.rho, np.eye(d_b)) - mc.lam)
    worst = max(res_marg, res_psd, res_dom, 0.0)
    if worst > tol:
        raise ProtocolError(
            "input pair is infeasible: residuals "
            f"marginal={res_marg:.3e} psd={res_psd:.3e} order={res_dom:.3e}"
        )
    lam = (prev * mc.lam + np.kron(mc.rho, np.eye(d_b) - prev * marg)) / m_size
    lam = (lam + lam.conj().T) / 2.0
    value = float(np.trace(lam @ mc.choi_op).real)
    return NsSolution(rho=mc.rho, lam=lam, value=value, size=m_size, tag="NS",
                      dims=mc.dims, channel=mc.channel, gap=mc.gap,
                      iterations=mc.iterations, choi_op=mc.choi_op)


# --- position-based scaffolding -------------------------------------------


def _decoder_operator(ns: NsSolution) -> np.ndarray:
    """O = rho^{-1/2} Lambda rho^{-1/2} with the support-restricted inverse."""
    d_r, d_b = ns.dims
    inv_sq = op.frac_power(ns.rho, -0.5)
    lift = np.kron(inv_sq, np.eye(d_b))
    out = lift @ ns.lam @ lift
    return (out + out.conj().T) / 2.0


def _signal_state(ns: NsSolution) -> np.ndarray:
    """rho^{1/2} J rho^{1/2}: the joint state of one shared pair after use."""
    d_r, d_b = ns.dims
    sq = op.frac_power(ns.rho, 0.5)
    lift = np.kron(sq, np.eye(d_b))
    out = lift @ ns.choi_op @ lift
    return (out + out.conj().T) / 2.0


def _embed_pair(x: np.ndarray, d_r: int, d_b: int, m_prime: int, slot: int) -> np.ndarray:
    """Place an operator on (R_slot, B) into R_1..R_{M'} B (identity elsewhere)."""
    big = np.kron(np.eye(d_r ** (m_prime - 1)), x)
    # current order: R registers 1..M'-1, then (R_slot, B) at the end
    dims = [d_r] * m_prime + [d_b]
    perm = []
    others = list(range(m_prime - 1))
    k = 0
    for pos in range(m_prime):
        if pos == slot:
            perm.append(m_prime - 1)
        else:
            perm.append(others[k])
            k += 1
    perm.append(m_prime)
    return op.permute_systems(big, dims_from_perm(dims, perm), perm)


def dims_from_perm(dims_new, perm):
    """Old-order dimension list consistent with a permutation spec."""
    old = [0] * len(dims_new)
    for new_pos, old_pos in enumerate(perm):
        old[old_pos] = dims_new[new_pos]
    return old


def _position_state(ns: NsSolution, m_prime: int, slot: int) -> np.ndarray:
    """Global state on R_1..R_{M'} B when the slot-th pair goes through."""
    d_r, d_b = ns.dims
    tau = _signal_state(ns)
    big = tau
    for _ in range(m_prime - 1):
        big = np.kron(big, ns.rho)
    # current order: (R_sent, B, R_others...); move to R_1..R_{M'} B
    perm = []
    others = list(range(2, m_prime + 1))
    k = 0
    for pos in range(m_prime):
        if pos == slot:
            perm.append(0)
        else:
            perm.append(others[k])
            k += 1
    perm.append(1)
    dims_new = [d_r] * m_prime + [d_b]
    return op.permute_systems(big, dims_from_perm(dims_new, perm), perm)


def _guard_dense(d_r: int, d_b: int, m_prime: int) -> None:
    if d_r ** m_prime * d_b > DENSE_DIM_GUARD:
        raise ProtocolError(
            f"dense simulation dimension {d_r ** m_prime * d_b} exceeds "
            f"the guard {DENSE_DIM_GUARD}"
        )


# --- sequential decoder (classical output) ---------------------------------


def _pinch_output(x: np.ndarray, d_r: int, d_b: int) -> np.ndarray:
    """Zero the off-diagonal output blocks (pinching in the output basis)."""
    out = np.zeros_like(x).reshape(d_r, d_b, d_r, d_b)
    full = x.reshape(d_r, d_b, d_r, d_b)
    for b in range(d_b):
        out[:, b, :, b] = full[:, b, :, b]
    return out.reshape(d_r * d_b, d_r * d_b)


def qc_sequential_protocol(qc: KrausChannel, ns: NsSolution, m_prime: int) -> ProtocolReport:
    """Sequential decoder over M' position-based candidates.

    Requires a channel with classical output so that the candidate
    operators commute; per-message success then telescopes exactly to
    (1 - 1/M)^{m-1} times the NS value.
    """
    d_r, d_b = ns.dims
    m_size = ns.size
    if m_prime < 1:
        raise ValueError("need at least one candidate position")
    _guard_dense(d_r, d_b, m_prime)
    choi = ns.choi_op
    if float(np.abs(choi - _pinch_output(choi, d_r, d_b)).max()) > 1e-8:
        raise ProtocolError("channel output is not classical in the "
                            "computational basis; sequential operators "
                            "would not commute")
    # pinching Lambda in the output basis keeps it feasible and, because
    # the Choi operator is block diagonal, leaves the objective unchanged
    ns = NsSolution(rho=ns.rho, lam=_pinch_output(ns.lam, d_r, d_b),
                    value=ns.value, size=ns.size, tag=ns.tag, dims=ns.dims,
                    channel=ns.channel, gap=ns.gap, iterations=ns.iterations,
                    choi_op=choi)
    o_small = _decoder_operator(ns)
    dim = d_r ** m_prime * d_b
    o_ops = [_embed_pair(o_small, d_r, d_b, m_prime, slot) for slot in range(m_prime)]
    if m_prime >= 2:
        comm = o_ops[0] @ o_ops[1] - o_ops[1] @ o_ops[0]
        norm = op.operator_norm(comm)
        if norm > 1e-8:
            raise ProtocolError(f"candidate operators do not commute: {norm:.3e}")

    # POVM elements: detect-first products of commuting operators
    eye = np.eye(dim)
    povm = []
    prefix = eye.copy()
    for slot in range(m_prime):
        povm.append(prefix @ o_ops[slot])
        prefix = prefix @ (eye - o_ops[slot])
    closure = np.abs(sum(povm) + prefix - eye).max()
    min_eig = min(op.min_eigenvalue((p + p.conj().T) / 2.0) for p in povm)
    if closure > EXACT_TOL or min_eig < -EXACT_TOL:
        raise ProtocolError(
            f"POVM validity failed: closure {closure:.3e}, min eig {min_eig:.3e}"
        )

    per_message = []
    max_residual = 0.0
    for slot in range(m_prime):
        zeta = _position_state(ns, m_prime, slot)
        suc = float(np.trace(zeta @ povm[slot]).real)
        target = (1.0 - 1.0 / m_size) ** slot * ns.value
        max_residual = max(max_residual, abs(suc - target))
        per_message.append(suc)
    if max_residual > EXACT_TOL:
        raise ProtocolError(
            f"sequential closed form violated by {max_residual:.3e}"
        )
    average = float(np.mean(per_message))
    target_avg = (m_size / m_prime) * (1 - (1 - 1 / m_size) ** m_prime) * ns.value
    if abs(average - target_avg) > EXACT_TOL:
        raise ProtocolError("average success deviates from the closed form")
    return ProtocolReport(
        protocol="sequential", m_size=m_size, m_prime=m_prime,
        per_message=per_message, average_success=average,
        average_error=1.0 - average, bound=target_avg, hypothesis_ok=True,
        max_residual=max_residual, channel=ns.channel,
    )


# --- square-root decoder ----------------------------------------------------


def hn_protocol(channel: KrausChannel, ns: NsSolution, m_prime: int,
                c: float = 1.0) -> ProtocolReport:
    """Square-root decoder over M' position-based candidates.

    Exact dense evaluation; enforces the operator-inequality error bound
    (1+c) eps_NS + (2+c+1/c)(M'-1)/M and the success floor
    ns - 5 sqrt(M'/M).
    """
    if c <= 0:
        raise ValueError("the inequality parameter c must be positive")
    if m_prime < 1:
        raise ValueError("need at least one candidate position")
    d_r, d_b = ns.dims
    m_size = ns.size
    _guard_dense(d_r, d_b, m_prime)
    o_small = _decoder_operator(ns)
    o_ops = [_embed_pair(o_small, d_r, d_b, m_prime, slot) for slot in range(m_prime)]
    total = sum(o_ops)
    total = (total + total.conj().T) / 2.0
    inv_sq = op.frac_power(op.positive_part(total), -0.5)

    per_message = []
    for slot in range(m_prime):
        xi = inv_sq @ o_ops[slot] @ inv_sq
        zeta = _position_state(ns, m_prime, slot)
        per_message.append(float(np.trace(zeta @ xi).real))
    average = float(np.mean(per_message))
    avg_error = 1.0 - average

    eps_ns = 1.0 - ns.value
    bound = (1 + c) * eps_ns + (2 + c + 1.0 / c) * (m_prime - 1) / m_size
    if avg_error > bound + 1e-8:
        raise ProtocolError(
            f"error {avg_error:.6f} exceeds the operator bound {bound:.6f}"
        )
    floor = ns.value - 5.0 * math.sqrt(m_prime / m_size)
    if average < floor - 1e-8:
        raise ProtocolError(
            f"success {average:.6f} fell below the floor {floor:.6f}"
        )
    return ProtocolReport(
        protocol="square-root", m_size=m_size, m_prime=m_prime,
        per_message=per_message, average_success=average,
        average_error=avg_error, bound=bound, hypothesis_ok=True,
        channel=ns.channel,
    )


def hn_inequality_check(a, b, c: float, tol: float = 1e-9) -> bool:
    """Operator inequality behind the square-root decoder analysis:

    I - (A+B)^{-1/2} A (A+B)^{-1/2}  <=  (1+c)(I - A) + (2 + c + 1/c) B
    for 0 <= A <= I, B >= 0, c > 0.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    a = op.check_hermitian(a)
    b = op.check_hermitian(b)
    d = a.shape[0]
    s = op.positive_part(a + b)
    inv_sq = op.frac_power(s, -0.5)
    lhs = np.eye(d) - inv_sq @ a @ inv_sq
    rhs = (1 + c) * (np.eye(d) - a) + (2 + c + 1.0 / c) * b
    return op.min_eigenvalue(rhs - lhs) >= -tol


# --- flattening and the multiplicative decoder ------------------------------


@dataclass
class FlatteningDecomposition:
    """Eigenspace blocks on which a state is maximally mixed."""

    count: int  # number of distinct eigenvalues v
    weights: list  # p_j = |R_j| * lambda_j
    block_dims: list  # |R_j|
    projectors: list  # orthogonal eigenprojectors

    def reconstruct(self) -> np.ndarray:
        out = np.zeros_like(self.projectors[0])
        for p, d, proj in zip(self.weights, self.block_dims, self.projectors):
            out = out + (p / d) * proj
        return out


def flattening(rho) -> FlatteningDecomposition:
    """Block decomposition rho = sum_j p_j (Pi_j / |R_j|)."""
    rho = op.check_hermitian(rho)
    spec = op.eigh(rho)
    groups = op.group_eigenvalues(spec.eigenvalues, scale=1.0)
    weights, dims, projectors = [], [], []
    for grp in groups:
        lam = float(np.mean(spec.eigenvalues[grp]))
        vecs = spec.eigenvectors[:, grp]
        proj = vecs @ vecs.conj().T
        projectors.append((proj + proj.conj().T) / 2.0)
        dims.append(len(grp))
        weights.append(lam * len(grp))
    decomp = FlatteningDecomposition(count=len(groups), weights=weights,
                                     block_dims=dims, projectors=projectors)
    if abs(sum(weights) - 1.0) > 1e-10:
        raise ProtocolError("flattening weights do not sum to one")
    if float(np.abs(decomp.reconstruct() - rho).max()) > 1e-9:
        raise ProtocolError("flattening does not reconstruct the state")
    return decomp


def pauli_one_design(d: int) -> list:
    """The d^2 clock-and-shift (Weyl) unitaries: a unitary 1-design."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    omega = np.exp(2j * np.pi / d)
    shift = np.zeros((d, d), dtype=complex)
    for i in range(d):
        shift[(i + 1) % d, i] = 1.0
    clock = np.diag(omega ** np.arange(d))
    out = []
    for a in range(d):
        for b in range(d):
            out.append(np.linalg.matrix_power(shift, a)
                       @ np.linalg.matrix_power(clock, b))
    return out


@dataclass
class DesignSample:
    """One shared-randomness draw: block indices and design unitaries."""

    indices: list  # j_1 .. j_M (0-based block labels)
    unitaries: list  # full-space embeddings, one per message
    seed: int

    def __post_init__(self):
        for u in self.unitaries:
            d = u.shape[0]
            if float(np.abs(u @ u.conj().T - np.eye(d)).max()) > 1e-10:
                raise ProtocolError("design sample contains a non-unitary")


def _rotate_to_eigenframe(channel: KrausChannel, ns: NsSolution):
    """Re-express channel, state, and decoder in the eigenbasis of rho.

    The flattening construction entangles in the eigenbasis of the input
    state; rotating once up front makes every block projector diagonal
    and keeps all later algebra in the computational basis.
    """
    d_r, d_b = ns.dims
    spec = op.eigh(ns.rho)
    w = spec.eigenvectors
    rho_t = np.diag(spec.eigenvalues).astype(complex)
    lift = np.kron(w.conj().T, np.eye(d_b))
    lam_t = lift @ ns.lam @ lift.conj().T
    lam_t = (lam_t + lam_t.conj().T) / 2.0
    kraus_t = tuple(k @ w for k in channel.kraus)
    chan_t = KrausChannel(kraus=kraus_t, name=channel.name + "-rotated")
    return chan_t, rho_t, lam_t


def _block_unitary(u_small: np.ndarray, idx, d: int) -> np.ndarray:
    out = np.eye(d, dtype=complex)
    out[np.ix_(idx, idx)] = u_small
    return out


def multiplicative_protocol(channel: KrausChannel, ns_fixed: NsSolution,
                            samples: int, seed: int = 0) -> ProtocolReport:
    """Flattening + 1-design decoder with the multiplicative guarantee.

    Each Monte Carlo sample draws block indices and design unitaries,
    builds the padded candidate operators on the v shared registers plus
    the channel output, and evaluates the per-message success through the
    closed-form trace identity.  The identity itself is verified against
    a full density-matrix simulation on a subsample, and the exact
    design-average bound E[O(m)] <= (v/M) I is checked by enumeration.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    d_r, d_b = ns_fixed.dims
    m_size = ns_fixed.size
    chan, rho_t, lam_t = _rotate_to_eigenframe(channel, ns_fixed)
    choi_t = choi_of(chan).operator
    decomp = flattening(rho_t)
    active = [j for j in range(decomp.count) if decomp.weights[j] > 1e-12]
    v = len(active)
    if v * d_r ** v * d_b > DENSE_DIM_GUARD:
        raise ProtocolError("flattening block count exceeds the dense guard")
    ns_value = float(np.trace(lam_t @ choi_t).real)

    # per-block data in the eigenframe: index sets and pinched blocks
    block_idx = []
    pinched = []  # Pi_j Lambda Pi_j, each on R (x) B
    for j in active:
        idx = [i for i in range(d_r)
               if decomp.projectors[j][i, i].real > 0.5]
        block_idx.append(idx)
        proj = np.kron(decomp.projectors[j], np.eye(d_b))
        blk = proj @ lam_t @ proj
        pinched.append((blk + blk.conj().T) / 2.0)
    probs = np.array([decomp.weights[j] for j in active])
    probs = probs / probs.sum()
    block_values = [float(np.trace(blk @ choi_t).real) for blk in pinched]
    designs = {len(idx): pauli_one_design(len(idx)) for idx in block_idx}

    dim_total = d_r ** v * d_b

    def padded_operator(pos, u_full, base):
        """Lift (|R_j|/p_j) U Pi Lambda Pi U^dag from (R, B) onto the
        v-register space, acting on register pos and the output."""
        lifted = np.kron(u_full, np.eye(d_b)) @ base @ np.kron(u_full, np.eye(d_b)).conj().T
        big = np.kron(np.eye(d_r ** (v - 1)), lifted)
        dims_new = [d_r] * v + [d_b]
        perm = []
        others = list(range(v - 1))
        k = 0
        for q in range(v):
            if q == pos:
                perm.append(v - 1)
            else:
                perm.append(others[k])
                k += 1
        perm.append(v)
        return op.permute_systems(big, dims_from_perm(dims_new, perm), perm)

    def simulate_state(pos, j_pos, u_full):
        """Full density-matrix state seen by the decoder for one message."""
        idx = block_idx[j_pos]
        d_j = len(idx)
        psi = np.zeros(d_r * d_r, dtype=complex)
        for i in idx:
            psi[i * d_r + i] = 1.0 / math.sqrt(d_j)
        ent = np.outer(psi, psi.conj())  # on (B^pos, A)
        rotated = np.kron(u_full, np.eye(d_r)) @ ent @ np.kron(u_full, np.eye(d_r)).conj().T
        t = rotated.reshape(d_r, d_r, d_r, d_r)
        # apply the channel to the A half, block by block
        sent = np.zeros((d_r * d_b, d_r * d_b), dtype=complex)
        for a in range(d_r):
            for b in range(d_r):
                blk = t[a, :, b, :]  # operator on A for fixed (a, b)
                out_b = apply(chan, blk)
                sent += np.kron(np.outer(_basis(d_r, a), _basis(d_r, b).conj()), out_b)
        factors = []
        for q in range(v):
            if q == pos:
                continue
            idx_q = block_idx[q]
            mix = np.zeros((d_r, d_r), dtype=complex)
            for i in idx_q:
                mix[i, i] = 1.0 / len(idx_q)
            factors.append(mix)
        big = sent
        for f in factors:
            big = np.kron(big, f)
        dims_new = [d_r] * v + [d_b]
        perm = []
        others = list(range(2, v + 1))
        k = 0
        for q in range(v):
            if q == pos:
                perm.append(0)
            else:
                perm.append(others[k])
                k += 1
        perm.append(1)
        return op.permute_systems(big, dims_from_perm(dims_new, perm), perm)

    rng = np.random.default_rng(seed)
    per_sample_success = []
    max_residual = 0.0
    checked = 0
    hypothesis_ok = math.log(d_r) >= math.e ** 2
    for _ in range(samples):
        draws = rng.choice(len(active), size=m_size, p=probs)
        unitaries = []
        for m in range(m_size):
            idx = block_idx[draws[m]]
            pool = designs[len(idx)]
            u_small = pool[rng.integers(len(pool))]
            unitaries.append(_block_unitary(u_small, idx, d_r))
        sample = DesignSample(indices=list(map(int, draws)),
                              unitaries=unitaries, seed=seed)
        ops = []
        for m in range(m_size):
            j = sample.indices[m]
            base = (len(block_idx[j]) / probs[j]) * pinched[j]
            ops.append(padded_operator(j, sample.unitaries[m], base))
        total = sum(ops)
        total = (total + total.conj().T) / 2.0
        z = op.operator_norm(total)
        if z <= 0:
            raise ProtocolError("degenerate normalization Z = 0")
        if op.min_eigenvalue(np.eye(dim_total) - total / z) < -EXACT_TOL:
            raise ProtocolError("POVM normalization violated")
        sucs = []
        for m in range(m_size):
            j = sample.indices[m]
            closed = block_values[j] / (z * probs[j])
            sucs.append(closed)
            if checked < CROSS_CHECK_LIMIT:
                zeta = simulate_state(j, j, sample.unitaries[m])
                simulated = float(np.trace(zeta @ (ops[m] / z)).real)
                max_residual = max(max_residual, abs(simulated - closed))
                if abs(simulated - closed) > EXACT_TOL:
                    raise ProtocolError(
                        "closed-form success disagrees with full simulation "
                        f"by {abs(simulated - closed):.3e}"
                    )
                checked += 1
        per_sample_success.append(float(np.mean(sucs)))

    # exact design-average bound: E[O(m)] <= (v/M) I
    mean_op = np.zeros((dim_total, dim_total), dtype=complex)
    for j in range(len(active)):
        idx = block_idx[j]
        pool = designs[len(idx)]
        base = (len(idx) / probs[j]) * pinched[j]
        for u_small in pool:
            u_full = _block_unitary(u_small, idx, d_r)
            mean_op += (probs[j] / len(pool)) * padded_operator(j, u_full, base)
    slack = op.min_eigenvalue((v / m_size) * np.eye(dim_total) - mean_op)
    if slack < -1e-8:
        raise ProtocolError(f"design-average bound violated: {slack:.3e}")

    prefactor = 1.0 / (2.0 * v * math.log(2.0 * v * m_size * math.e ** v
                                          * d_r ** v * d_b))
    average = float(np.mean(per_sample_success))
    return ProtocolReport(
        protocol="multiplicative", m_size=m_size, m_prime=m_size,
        per_message=per_sample_success, average_success=average,
        average_error=1.0 - average, bound=prefactor * ns_value,
        hypothesis_ok=hypothesis_ok, samples=samples, seed=seed,
        max_residual=max_residual, channel=ns_fixed.channel,
    )


def _basis(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e


def multiplicative_prefactor(v: int, m_size: int, d_in: int, d_out: int) -> float:
    """1 / (2 v log(2 v M e^v |A|^v |B|))."""
    return 1.0 / (2.0 * v * math.log(2.0 * v * m_size * math.e ** v
                                     * d_in ** v * d_out))


# --- matrix Chernoff tail ----------------------------------------------------


@dataclass
class MatrixSampler:
    """An iid family of PSD matrices with eigenvalues in [0, level].

    ``draw(rng)`` returns the ``count`` summands of one trial;
    ``mean_sum`` is the exact expectation of their sum.
    """

    dim: int
    count: int
    level: float
    mean_sum: np.ndarray
    draw: object  # callable rng -> ndarray (count, dim, dim)
    name: str = "sampler"


def deterministic_sampler(x, count: int) -> MatrixSampler:
    x = op.check_hermitian(x)
    level = max(op.operator_norm(x), 1e-15)

    def draw(rng):
        return np.array([x] * count)

    return MatrixSampler(dim=x.shape[0], count=count, level=level,
                         mean_sum=count * x, draw=draw, name="deterministic")


def design_operator_sampler(channel: KrausChannel, ns_fixed: NsSolution) -> MatrixSampler:
    """The padded-candidate family of the multiplicative decoder (v blocks)."""
    d_r, d_b = ns_fixed.dims
    m_size = ns_fixed.size
    chan, rho_t, lam_t = _rotate_to_eigenframe(channel, ns_fixed)
    decomp = flattening(rho_t)
    active = [j for j in range(decomp.count) if decomp.weights[j] > 1e-12]
    v = len(active)
    block_idx = [[i for i in range(d_r) if decomp.projectors[j][i, i].real > 0.5]
                 for j in active]
    probs = np.array([decomp.weights[j] for j in active])
    probs = probs / probs.sum()
    pinched = []
    for j, idx in zip(active, block_idx):
        proj = np.kron(decomp.projectors[j], np.eye(d_b))
        blk = proj @ lam_t @ proj
        pinched.append((blk + blk.conj().T) / 2.0)
    designs = {len(idx): pauli_one_design(len(idx)) for idx in block_idx}
    dim_total = d_r ** v * d_b

    def one_operator(rng):
        j = rng.choice(len(active), p=probs)
        idx = block_idx[j]
        pool = designs[len(idx)]
        u_full = _block_unitary(pool[rng.integers(len(pool))], idx, d_r)
        base = (len(idx) / probs[j]) * pinched[j]
        lifted = np.kron(u_full, np.eye(d_b)) @ base \
            @ np.kron(u_full, np.eye(d_b)).conj().T
        big = np.kron(np.eye(d_r ** (v - 1)), lifted)
        dims_new = [d_r] * v + [d_b]
        perm = []
        others = list(range(v - 1))
        k = 0
        for q in range(v):
            if q == j:
                perm.append(v - 1)
            else:
                perm.append(others[k])
                k += 1
        perm.append(v)
        return op.permute_systems(big, dims_from_perm(dims_new, perm), perm)

    def draw(rng):
        return np.array([one_operator(rng) for _ in range(m_size)])

    # exact per-summand mean by enumeration over blocks and the design
    mean = np.zeros((dim_total, dim_total), dtype=complex)
    for j in range(len(active)):
        idx = block_idx[j]
        pool = designs[len(idx)]
        base = (len(idx) / probs[j]) * pinched[j]
        for u_small in pool:
            u_full = _block_unitary(u_small, idx, d_r)
            lifted = np.kron(u_full, np.eye(d_b)) @ base \
                @ np.kron(u_full, np.eye(d_b)).conj().T
            big = np.kron(np.eye(d_r ** (v - 1)), lifted)
            dims_new = [d_r] * v + [d_b]
            perm = []
            others = list(range(v - 1))
            k = 0
            for q in range(v):
                if q == j:
                    perm.append(v - 1)
                else:
                    perm.append(others[k])
                    k += 1
            perm.append(v)
            mean += (probs[j] / len(pool)) * op.permute_systems(
                big, dims_from_perm(dims_new, perm), perm)
    return MatrixSampler(dim=dim_total, count=m_size, level=1.0,
                         mean_sum=m_size * mean, draw=draw,
                         name=f"design-{ns_fixed.channel}")


def matrix_chernoff_check(sampler: MatrixSampler, delta: float,
                          trials: int, seed: int = 0) -> dict:
    """Empirical check of the matrix Chernoff upper tail.

    P[lmax(sum X_k) >= (1+delta) mu_max] <= d (e^delta/(1+delta)^(1+delta))^(mu_max/L),
    with mu_max the largest eigenvalue of the exact mean of the sum.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    mu_max = float(op.eigh(op.check_hermitian(sampler.mean_sum)).eigenvalues[0])
    threshold = (1.0 + delta) * mu_max
    hits = 0
    for t in range(trials):
        draws = sampler.draw(rng)
        for x in draws:
            x = op.check_hermitian(x)
            low = op.min_eigenvalue(x)
            high = op.eigh(x).eigenvalues[0]
            if low < -1e-9 or high > sampler.level + 1e-9:
                raise ProtocolError(
                    f"sampler violates its eigenvalue bounds: [{low:.3e}, {high:.3e}]"
                )
        total = op.check_hermitian(draws.sum(axis=0))
        if op.eigh(total).eigenvalues[0] >= threshold:
            hits += 1
    freq = hits / trials
    if delta == 0:
        bound = float(sampler.dim)
    else:
        ratio = math.exp(delta) / (1.0 + delta) ** (1.0 + delta)
        bound = sampler.dim * ratio ** (mu_max / sampler.level)
    se = math.sqrt(max(freq * (1 - freq), 1e-12) / trials)
    ok = freq <= min(bound, 1.0) + 3.0 * se
    return {
        "pass": ok,
        "frequency": freq,
        "bound": bound,
        "mu_max": mu_max,
        "threshold": threshold,
        "trials": trials,
        "seed": seed,
        "standard_error": se,
    }
