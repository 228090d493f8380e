"""Hermitian semidefinite programs for one-shot coding quantities.

Programs are modeled over named Hermitian variable blocks with linear
equality and operator-order constraints, then compiled to a real cone LP:
each Hermitian block is coordinatized by an orthonormal real basis and each
PSD constraint passes through the real-symmetric embedding
H -> [[Re H, -Im H], [Im H, Re H]] (which doubles eigenvalue multiplicity
but preserves feasibility and objective).  cvxopt's primal-dual
path-following solver provides the primal/dual values and gap certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers

from . import operators as op
from .channels import ChoiMatrix, KrausChannel, choi_of, power

DEFAULT_TOL = 1e-7
FEAS_TOL = 1e-8
MAX_ITER = 200
#: largest Hermitian block a dense solve will accept
MAX_BLOCK_DIM = 40


class SolverError(RuntimeError):
    """Raised when a program cannot be solved to the requested accuracy."""


# --- block coordinates --------------------------------------------------------


def hermitian_basis_map(d: int) -> np.ndarray:
    """Columns are vec's of an orthonormal Hermitian basis (d*d params)."""
    cols = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        cols.append(e.reshape(-1))
    s = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = s
            e[j, i] = s
            cols.append(e.reshape(-1))
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1j * s
            e[j, i] = -1j * s
            cols.append(e.reshape(-1))
    return np.array(cols).T  # (d^2, d^2)


def map_from(f: Callable[[np.ndarray], np.ndarray], d_in: int, d_out: int) -> np.ndarray:
    """Matrix of a linear operator map, acting on row-major vec's."""
    cols = np.empty((d_out * d_out, d_in * d_in), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1.0
            cols[:, i * d_in + j] = f(e).reshape(-1)
    return cols


def identity_map(d: int) -> np.ndarray:
    return np.eye(d * d, dtype=complex)


def trace_map(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex).reshape(1, -1)


def kron_identity_map(d: int, m: int) -> np.ndarray:
    """X -> X (x) I_m."""
    return map_from(lambda x: np.kron(x, np.eye(m)), d, d * m)


def ptrace_map(dims, keep) -> np.ndarray:
    d = int(np.prod(dims))
    d_keep = int(np.prod([dims[k] for k in keep]))
    return map_from(lambda x: op.partial_trace(x, dims, keep), d, d_keep)


# --- program container --------------------------------------------------------


@dataclass
class _Constraint:
    terms: list  # [(block, map matrix)]
    const: np.ndarray
    dim: int


@dataclass
class HermitianSdp:
    """A maximization over Hermitian blocks with linear/PSD constraints.

    Expressions are ``const + sum_b map_b(X_b)``; ``add_eq`` pins them to
    zero and ``add_psd`` requires them PSD.
    """

    blocks: dict = field(default_factory=dict)  # name -> dim
    objective: dict = field(default_factory=dict)  # name -> Hermitian C
    obj_const: float = 0.0
    eqs: list = field(default_factory=list)
    psds: list = field(default_factory=list)

    def add_block(self, name: str, dim: int) -> None:
        if dim > MAX_BLOCK_DIM:
            raise SolverError(
                f"block {name!r} dim {dim} exceeds the dense-solve guard {MAX_BLOCK_DIM}"
            )
        self.blocks[name] = dim

    def set_objective(self, name: str, coeff) -> None:
        self.objective[name] = op.check_hermitian(coeff)

    def _expr(self, terms, const, dim) -> _Constraint:
        checked = []
        for name, mat in terms:
            if name not in self.blocks:
                raise SolverError(f"unknown block {name!r}")
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (dim * dim, self.blocks[name] ** 2):
                raise SolverError("constraint map has inconsistent shape")
            checked.append((name, mat))
        const = np.zeros((dim, dim), dtype=complex) if const is None else np.asarray(
            const, dtype=complex
        )
        return _Constraint(terms=checked, const=const, dim=dim)

    def add_eq(self, terms, const, dim) -> None:
        """Require const + sum map_b(X_b) = 0 (Hermitian-valued)."""
        self.eqs.append(self._expr(terms, const, dim))

    def add_psd(self, terms, const, dim) -> None:
        """Require const + sum map_b(X_b) >= 0 in operator order."""
        self.psds.append(self._expr(terms, const, dim))


@dataclass
class SdpSolution:
    values: dict  # name -> Hermitian optimum
    primal: float
    dual: float
    gap: float
    status: str  # optimal | infeasible | max-iter
    iterations: int
    residuals: dict


def _stack_complex(sdp: HermitianSdp, con: _Constraint, offsets, bases, n) -> np.ndarray:
    rows = np.zeros((con.dim * con.dim, n), dtype=complex)
    for name, mat in con.terms:
        lo = offsets[name]
        d = sdp.blocks[name]
        rows[:, lo : lo + d * d] += mat @ bases[name]
    return rows


def _embed_rows(fc: np.ndarray, d: int) -> np.ndarray:
    """Real-symmetric embedding of a complex vectorized map (rows (2d)^2)."""
    n = fc.shape[1]
    f3 = fc.reshape(d, d, n)
    out = np.zeros((2 * d, 2 * d, n))
    out[:d, :d] = f3.real
    out[:d, d:] = -f3.imag
    out[d:, :d] = f3.imag
    out[d:, d:] = f3.real
    return out.reshape(4 * d * d, n)


def _embed_const(k: np.ndarray) -> np.ndarray:
    d = k.shape[0]
    out = np.zeros((2 * d, 2 * d))
    out[:d, :d] = k.real
    out[:d, d:] = -k.imag
    out[d:, :d] = k.imag
    out[d:, d:] = k.real
    return out.reshape(-1)

def _real_rows(fc: np.ndarray, const: np.ndarray, d: int):
    """Independent real equations of a Hermitian-valued equality."""
    n = fc.shape[1]
    f3 = fc.reshape(d, d, n)
    c2 = const.reshape(d, d)
    rows, rhs = [], []
    for i in range(d):
        rows.append(f3[i, i].real)
        rhs.append(-c2[i, i].real)
        for j in range(i + 1, d):
            rows.append(f3[i, j].real)
            rhs.append(-c2[i, j].real)
            rows.append(f3[i, j].imag)
            rhs.append(-c2[i, j].imag)
    return np.array(rows).reshape(-1, n), np.array(rhs)


def solve(sdp: HermitianSdp, tol: float = DEFAULT_TOL) -> SdpSolution:
    """Solve to a target duality gap; raises SolverError on infeasibility."""
    names = list(sdp.blocks)
    offsets, bases = {}, {}
    n = 0
    for name in names:
        d = sdp.blocks[name]
        offsets[name] = n
        bases[name] = hermitian_basis_map(d)
        n += d * d

    # objective: maximize sum Tr[C_b X_b]  ->  conelp minimizes c.x
    c = np.zeros(n)
    for name, coeff in sdp.objective.items():
        d = sdp.blocks[name]
        row = coeff.T.reshape(1, -1) @ bases[name]  # Tr[C X] = vec(C^T).vec(X)
        c[offsets[name] : offsets[name] + d * d] = -row.real.ravel()

    a_rows, b_vals = [], []
    for con in sdp.eqs:
        fc = _stack_complex(sdp, con, offsets, bases, n)
        rows, rhs = _real_rows(fc, con.const, con.dim)
        a_rows.append(rows)
        b_vals.append(rhs)

    g_blocks, h_blocks, cone_dims = [], [], []
    for con in sdp.psds:
        fc = _stack_complex(sdp, con, offsets, bases, n)
        g_blocks.append(-_embed_rows(fc, con.dim))
        h_blocks.append(_embed_const(con.const))
        cone_dims.append(2 * con.dim)

    g = np.vstack(g_blocks)
    h = np.concatenate(h_blocks)
    kwargs = {}
    if a_rows:
        kwargs["A"] = cvx_matrix(np.vstack(a_rows))
        kwargs["b"] = cvx_matrix(np.concatenate(b_vals))
    options = {
        "show_progress": False,
        "abstol": min(tol * 1e-2, 1e-9),
        "reltol": min(tol * 1e-2, 1e-9),
        "feastol": FEAS_TOL,
        "maxiters": MAX_ITER,
    }
    sol = cvx_solvers.conelp(
        cvx_matrix(c),
        cvx_matrix(g),
        cvx_matrix(h),
        dims={"l": 0, "q": [], "s": cone_dims},
        options=options,
        **kwargs,
    )
    status = sol["status"]
    if status in ("primal infeasible", "dual infeasible"):
        raise SolverError(f"program reported {status}")

    x = np.array(sol["x"]).ravel()
    values = {}
    for name in names:
        d = sdp.blocks[name]
        vec = bases[name] @ x[offsets[name] : offsets[name] + d * d]
        m = vec.reshape(d, d)
        values[name] = (m + m.conj().T) / 2.0

    gap = abs(sol["gap"])
    primal = -sol["primal objective"] + sdp.obj_const
    dual = -sol["dual objective"] + sdp.obj_const
    residuals = _constraint_residuals(sdp, values)
    if status == "optimal" and gap <= tol:
        out_status = "optimal"
    elif gap <= tol and residuals["max_residual"] <= 10 * tol:
        out_status = "optimal"
    else:
        out_status = "max-iter"
    return SdpSolution(
        values=values,
        primal=primal,
        dual=dual,
        gap=gap,
        status=out_status,
        iterations=sol["iterations"],
        residuals=residuals,
    )


def _constraint_residuals(sdp: HermitianSdp, values: dict) -> dict:
    def ev(con):
        out = con.const.reshape(con.dim, con.dim).copy()
        for name, mat in con.terms:
            out += (mat @ values[name].reshape(-1)).reshape(con.dim, con.dim)
        return out

    eq_res = max((float(np.abs(ev(c)).max()) for c in sdp.eqs), default=0.0)
    psd_res = max((max(0.0, -op.min_eigenvalue(ev(c))) for c in sdp.psds), default=0.0)
    return {
        "eq_residual": eq_res,
        "psd_residual": psd_res,
        "max_residual": max(eq_res, psd_res),
    }


# --- one-shot coding programs -------------------------------------------------


@dataclass
class NsSolution:
    """A feasible pair for an NS / MC / fixed-input program."""

    rho: np.ndarray
    lam: np.ndarray
    value: float
    size: int
    tag: str  # NS | MC | NS-fixed | MC-fixed
    dims: tuple  # (|R|, |B|)
    channel: str
    gap: float
    iterations: int
    choi_op: np.ndarray = None

    def record(self) -> dict:
        return {
            "program": self.tag,
            "channel": self.channel,
            "M": self.size,
            "value": self.value,
            "gap": self.gap,
            "iterations": self.iterations,
        }


def _choi(channel) -> ChoiMatrix:
    if isinstance(channel, ChoiMatrix):
        return channel
    return choi_of(channel)


def _marginal_b(lam: np.ndarray, dims) -> np.ndarray:
    return op.partial_trace(lam, dims, keep=[1])


def _repair_ns(rho: np.ndarray, lam: np.ndarray, dims, m_size: int):
    """Restrict lam to supp(rho) (x) B and pin its B-marginal to I/M exactly.

    Feasibility allows mass only on the support, so the projection and the
    in-support marginal correction move the solution by at most the solver
    residual; downstream protocol identities then hold to machine precision.
    """
    d_r, d_b = dims
    proj = op.support_projector(rho)
    rank = int(round(np.trace(proj).real))
    big = np.kron(proj, np.eye(d_b))
    lam = big @ lam @ big
    lam = (lam + lam.conj().T) / 2.0
    delta = np.eye(d_b) / m_size - _marginal_b(lam, dims)
    lam = lam + np.kron(proj / rank, delta)
    return (lam + lam.conj().T) / 2.0


def ns_success(channel, m_size: int, tol: float = DEFAULT_TOL) -> NsSolution:
    """Non-signaling success probability (rescaled program)."""
    if m_size < 1:
        raise ValueError("message count must be >= 1")
    choi = _choi(channel)
    d_r, d_b = choi.dims
    sdp = _coding_program(choi, m_size, marginal="eq")
    sol = solve(sdp, tol)
    rho, lam = sol.values["rho"], sol.values["lam"]
    lam = _repair_ns(rho, lam, (d_r, d_b), m_size)
    value = float(np.trace(lam @ choi.operator).real)
    return NsSolution(rho=rho, lam=lam, value=value, size=m_size, tag="NS",
                      dims=(d_r, d_b), channel=choi.source, gap=sol.gap,
                      iterations=sol.iterations, choi_op=choi.operator)


def mc_success(channel, m_size: int, tol: float = DEFAULT_TOL) -> NsSolution:
    """Meta-converse success probability (marginal relaxed to an order)."""
    if m_size < 1:
        raise ValueError("message count must be >= 1")
    choi = _choi(channel)
    d_r, d_b = choi.dims
    sdp = _coding_program(choi, m_size, marginal="leq")
    sol = solve(sdp, tol)
    rho, lam = sol.values["rho"], sol.values["lam"]
    value = float(np.trace(lam @ choi.operator).real)
    return NsSolution(rho=rho, lam=lam, value=value, size=m_size, tag="MC",
                      dims=(d_r, d_b), channel=choi.source, gap=sol.gap,
                      iterations=sol.iterations, choi_op=choi.operator)


def _coding_program(choi: ChoiMatrix, m_size: int, marginal: str) -> HermitianSdp:
    d_r, d_b = choi.dims
    d = d_r * d_b
    sdp = HermitianSdp()
    sdp.add_block("rho", d_r)
    sdp.add_block("lam", d)
    sdp.set_objective("lam", choi.operator)
    # Tr rho = 1
    sdp.add_eq([("rho", trace_map(d_r))], const=np.array([[-1.0 + 0j]]), dim=1)
    marg = ptrace_map((d_r, d_b), keep=[1])
    target = -np.eye(d_b, dtype=complex) / m_size
    if marginal == "eq":
        sdp.add_eq([("lam", marg)], const=target, dim=d_b)
    else:
        sdp.add_psd([("lam", -marg)], const=-target, dim=d_b)
    sdp.add_psd([("rho", identity_map(d_r))], const=None, dim=d_r)
    sdp.add_psd([("lam", identity_map(d))], const=None, dim=d)
    lift = kron_identity_map(d_r, d_b)
    sdp.add_psd([("rho", lift), ("lam", -identity_map(d))], const=None, dim=d)
    return sdp


def _fixed_rho_program(choi: ChoiMatrix, m_size: int, rho, marginal: str) -> HermitianSdp:
    d_r, d_b = choi.dims
    d = d_r * d_b
    rho = op.check_hermitian(rho)
    sdp = HermitianSdp()
    sdp.add_block("lam", d)
    sdp.set_objective("lam", choi.operator)
    marg = ptrace_map((d_r, d_b), keep=[1])
    target = -np.eye(d_b, dtype=complex) / m_size
    if marginal == "eq":
        sdp.add_eq([("lam", marg)], const=target, dim=d_b)
    else:
        sdp.add_psd([("lam", -marg)], const=-target, dim=d_b)
    sdp.add_psd([("lam", identity_map(d))], const=None, dim=d)
    sdp.add_psd([("lam", -identity_map(d))], const=np.kron(rho, np.eye(d_b)), dim=d)
    return sdp


def ns_success_fixed(channel, m_size: int, rho, tol: float = DEFAULT_TOL) -> NsSolution:
    """NS success probability with the reference state held fixed."""
    choi = _choi(channel)
    d_r, d_b = choi.dims
    sdp = _fixed_rho_program(choi, m_size, rho, marginal="eq")
    sol = solve(sdp, tol)
    lam = _repair_ns(np.asarray(rho, dtype=complex), sol.values["lam"], (d_r, d_b), m_size)
    value = float(np.trace(lam @ choi.operator).real)
    return NsSolution(rho=np.asarray(rho, dtype=complex), lam=lam, value=value,
                      size=m_size, tag="NS-fixed", dims=(d_r, d_b),
                      channel=choi.source, gap=sol.gap, iterations=sol.iterations,
                      choi_op=choi.operator)


def mc_success_fixed(channel, m_size: int, rho, tol: float = DEFAULT_TOL) -> NsSolution:
    """Primal fixed-state meta-converse value (oracle side of the dual check)."""
    choi = _choi(channel)
    d_r, d_b = choi.dims
    sdp = _fixed_rho_program(choi, m_size, rho, marginal="leq")
    sol = solve(sdp, tol)
    lam = sol.values["lam"]
    value = float(np.trace(lam @ choi.operator).real)
    return NsSolution(rho=np.asarray(rho, dtype=complex), lam=lam, value=value,
                      size=m_size, tag="MC-fixed", dims=(d_r, d_b),
                      channel=choi.source, gap=sol.gap, iterations=sol.iterations,
                      choi_op=choi.operator)


def mc_success_dual_fixed(channel, m_size: int, rho, tol: float = DEFAULT_TOL) -> float:
    """Fixed-state dual meta-converse value.

    inf over Z >= 0 of Tr[(rho^{1/2} J rho^{1/2} - M rho (x) Z)_+] + Tr Z,
    solved through the epigraph form: minimize Tr T + Tr Z subject to
    T >= 0 and T >= rho^{1/2} J rho^{1/2} - M rho (x) Z.
    """
    choi = _choi(channel)
    d_r, d_b = choi.dims
    d = d_r * d_b
    rho = op.check_hermitian(rho)
    sq = op.frac_power(rho, 0.5)
    k = np.kron(sq, np.eye(d_b)) @ choi.operator @ np.kron(sq, np.eye(d_b))
    k = (k + k.conj().T) / 2.0

    sdp = HermitianSdp()
    sdp.add_block("T", d)
    sdp.add_block("Z", d_b)
    # maximize -(Tr T + Tr Z)
    sdp.set_objective("T", -np.eye(d, dtype=complex))
    sdp.set_objective("Z", -np.eye(d_b, dtype=complex))
    sdp.add_psd([("T", identity_map(d))], const=None, dim=d)
    sdp.add_psd([("Z", identity_map(d_b))], const=None, dim=d_b)
    # T + M rho (x) Z - K >= 0
    lift_z = map_from(lambda z: m_size * np.kron(rho, z), d_b, d)
    sdp.add_psd([("T", identity_map(d)), ("Z", lift_z)], const=-k, dim=d)
    sol = solve(sdp, tol)
    return -sol.primal


def hypothesis_test_value(rho, sigma, eps: float, tol: float = DEFAULT_TOL) -> float:
    """Hypothesis-testing divergence D_H^eps in nats; +inf for an optimum of 0."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("type-I budget must lie in [0, 1)")
    rho = op.check_hermitian(rho)
    sigma = op.check_hermitian(sigma)
    d = rho.shape[0]
    sdp = HermitianSdp()
    sdp.add_block("O", d)
    sdp.set_objective("O", -sigma)  # maximize -Tr[sigma O]
    sdp.add_psd([("O", identity_map(d))], const=None, dim=d)
    sdp.add_psd([("O", -identity_map(d))], const=np.eye(d, dtype=complex), dim=d)
    test_row = rho.T.reshape(1, -1)  # Tr[rho O] as 1x1 expression
    sdp.add_psd([("O", test_row)], const=np.array([[-(1.0 - eps) + 0j]]), dim=1)
    sol = solve(sdp, tol)
    opt = -sol.primal
    if opt < 1e-12:
        return float("inf")
    return -float(np.log(opt))


def symmetrize_check(channel: KrausChannel, m_size: int, tol: float = 1e-6) -> dict:
    """Swap-symmetrize the optimal two-copy NS pair and verify that it stays
    feasible with the same objective value."""
    ch2 = power(channel, 2)
    choi2 = choi_of(ch2)
    ns = ns_success(choi2, m_size)
    d_r, d_b = channel.dim_in, channel.dim_out
    dims_r = (d_r, d_r)
    dims_all = (d_r, d_r, d_b, d_b)

    def swap(mat, dims, perm):
        return op.permute_systems(mat, dims, perm)

    rho_sym = (ns.rho + swap(ns.rho, dims_r, [1, 0])) / 2.0
    lam_sym = (ns.lam + swap(ns.lam, dims_all, [1, 0, 3, 2])) / 2.0

    marg = _marginal_b(lam_sym, (d_r * d_r, d_b * d_b))
    marg_residual = float(np.abs(marg - np.eye(d_b * d_b) / m_size).max())
    lam_min = op.min_eigenvalue(lam_sym)
    dom_min = op.min_eigenvalue(np.kron(rho_sym, np.eye(d_b * d_b)) - lam_sym)
    value_sym = float(np.trace(lam_sym @ choi2.operator).real)
    ok = (
        marg_residual <= tol
        and lam_min >= -tol
        and dom_min >= -tol
        and abs(value_sym - ns.value) <= tol
    )
    return {
        "pass": ok,
        "value": ns.value,
        "value_symmetrized": value_sym,
        "marginal_residual": marg_residual,
        "lam_min_eigenvalue": lam_min,
        "order_min_eigenvalue": dom_min,
    }
