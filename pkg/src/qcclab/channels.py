"""Quantum channels as Kraus lists with cached Choi matrices.

Conventions: the Choi matrix is unnormalized, J = sum_ij |i><j| (x) N(|i><j|),
with trace dim_in.  Bipartite operators order the reference system R before
the output B; tensor powers interleave as (R1 R2 ...)(B1 B2 ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import operators as op

TP_TOL = 1e-10
#: hard cap on tensor powers (dimension guard)
MAX_POWER = 3


class ChannelError(ValueError):
    """Raised for invalid channel data or dimension mismatches."""


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by its Kraus operators (dim_out x dim_in each)."""

    kraus: tuple
    name: str = "channel"

    def __post_init__(self):
        mats = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not mats:
            raise ChannelError("a channel needs at least one Kraus operator")
        shape = mats[0].shape
        if any(k.shape != shape for k in mats):
            raise ChannelError("Kraus operators must share a common shape")
        object.__setattr__(self, "kraus", mats)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __repr__(self):
        return f"KrausChannel({self.name!r}, {self.dim_in}->{self.dim_out})"


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi operator on R (x) B together with the factor split."""

    operator: np.ndarray
    dim_in: int
    dim_out: int
    source: str = "channel"

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_in, self.dim_out)


@dataclass(frozen=True)
class QCChannel:
    """A POVM viewed as a quantum-classical channel."""

    povm: tuple
    name: str = "qc"

    def __post_init__(self):
        mats = tuple(op.check_hermitian(m) for m in self.povm)
        if not mats:
            raise ChannelError("POVM needs at least one element")
        d = mats[0].shape[0]
        if any(m.shape[0] != d for m in mats):
            raise ChannelError("POVM elements must share a dimension")
        total = sum(mats)
        if np.abs(total - np.eye(d)).max() > TP_TOL:
            raise ChannelError("POVM elements must sum to the identity")
        for m in mats:
            if not op.is_psd(m, tol=TP_TOL):
                raise ChannelError("POVM elements must be PSD")
        object.__setattr__(self, "povm", mats)

    @property
    def dim_in(self) -> int:
        return self.povm[0].shape[0]

    @property
    def outcomes(self) -> int:
        return len(self.povm)


def apply(channel: KrausChannel, rho) -> np.ndarray:
    """Evaluate N(rho) = sum_k K rho K^dag."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.dim_in, channel.dim_in):
        raise ChannelError(
            f"state dim {rho.shape[0]} does not match channel input {channel.dim_in}"
        )
    out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    for k in channel.kraus:
        out += k @ rho @ k.conj().T
    return out


def choi_of(channel: KrausChannel) -> ChoiMatrix:
    """Unnormalized Choi matrix J = sum_ij |i><j| (x) N(|i><j|)."""
    d_in, d_out = channel.dim_in, channel.dim_out
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in channel.kraus:
        # vec of K under |w> = sum_i |i>|i>: (I (x) K)|w> has entries K[b, i]
        v = k.T.reshape(-1)  # index (i, b) row-major over R,B
        j += np.outer(v, v.conj())
    return ChoiMatrix(operator=(j + j.conj().T) / 2.0, dim_in=d_in, dim_out=d_out,
                      source=channel.name)


def apply_via_choi(choi: ChoiMatrix, rho) -> np.ndarray:
    """Contraction Tr_R[(rho^T (x) I) J]; oracle counterpart of apply()."""
    d_in, d_out = choi.dims
    lift = np.kron(np.asarray(rho, dtype=complex).T, np.eye(d_out))
    return op.partial_trace(lift @ choi.operator, (d_in, d_out), keep=[1])


def validate_cptp(channel: KrausChannel, tol: float = 1e-9) -> tuple[bool, dict]:
    """Check trace preservation and complete positivity; report residuals."""
    d_in = channel.dim_in
    tp = sum(k.conj().T @ k for k in channel.kraus)
    tp_residual = float(np.abs(tp - np.eye(d_in)).max())
    j = choi_of(channel).operator
    min_eig = op.min_eigenvalue(j)
    ok = tp_residual <= tol and min_eig >= -tol
    return ok, {"tp_residual": tp_residual, "choi_min_eigenvalue": min_eig}


def measurement_channel(qc: QCChannel) -> KrausChannel:
    """Kraus form of the measurement channel rho -> sum_x Tr[rho M_x] |x><x|."""
    kraus = []
    n = qc.outcomes
    for x, m in enumerate(qc.povm):
        spec = op.eigh(m)
        for lam, vec in zip(spec.eigenvalues, spec.eigenvectors.T):
            if lam <= 1e-14:
                continue
            k = np.zeros((n, qc.dim_in), dtype=complex)
            k[x, :] = np.sqrt(lam) * vec.conj()
            kraus.append(k)
    return KrausChannel(kraus=tuple(kraus), name=f"measure({qc.name})")


def tensor(a: KrausChannel, b: KrausChannel, name: str | None = None) -> KrausChannel:
    """Tensor product channel; Kraus list is all pairwise Kronecker products."""
    kraus = tuple(np.kron(ka, kb) for ka in a.kraus for kb in b.kraus)
    return KrausChannel(kraus=kraus, name=name or f"{a.name}(x){b.name}")


def power(a: KrausChannel, n: int) -> KrausChannel:
    """n-fold tensor power, n in {1, 2, 3}."""
    if n not in (1, 2, MAX_POWER):
        raise ChannelError(f"tensor power limited to n <= {MAX_POWER}, got {n}")
    out = a
    for _ in range(n - 1):
        out = tensor(out, a)
    return KrausChannel(kraus=out.kraus, name=f"{a.name}^{n}")


def interleaved_choi_kron(a: ChoiMatrix, b: ChoiMatrix) -> np.ndarray:
    """Kron of two Choi matrices reordered from (Ra Ba Rb Bb) to
    (Ra Rb Ba Bb); equals choi_of(tensor(a, b))."""
    j = np.kron(a.operator, b.operator)
    dims = (a.dim_in, a.dim_out, b.dim_in, b.dim_out)
    return op.permute_systems(j, dims, perm=[0, 2, 1, 3])


# --- channel zoo --------------------------------------------------------------


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(kraus=(np.eye(d, dtype=complex),), name=f"identity{d}")


def depolarizing(d: int, p: float) -> KrausChannel:
    """rho -> (1-p) rho + p I/d via a Kraus set of scaled matrix units."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError("depolarizing probability must lie in [0, 1]")
    kraus = [np.sqrt(1.0 - p) * np.eye(d, dtype=complex)]
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = np.sqrt(p / d)
            kraus.append(e)
    return KrausChannel(kraus=tuple(kraus), name=f"depolarizing{d}(p={p})")


def dephasing(p: float) -> KrausChannel:
    """Qubit phase flip with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ChannelError("dephasing probability must lie in [0, 1]")
    z = np.diag([1.0, -1.0]).astype(complex)
    return KrausChannel(
        kraus=(np.sqrt(1 - p) * np.eye(2, dtype=complex), np.sqrt(p) * z),
        name=f"dephasing(p={p})",
    )


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ChannelError("damping rate must lie in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel(kraus=(k0, k1), name=f"amp_damp(g={gamma})")


def replacer(sigma, dim_in: int | None = None, name: str | None = None) -> KrausChannel:
    """Constant channel rho -> Tr[rho] sigma."""
    sigma = op.check_hermitian(sigma)
    if not op.is_psd(sigma, tol=1e-10) or abs(np.trace(sigma).real - 1.0) > 1e-10:
        raise ChannelError("replacer target must be a state")
    d_out = sigma.shape[0]
    d_in = dim_in or d_out
    spec = op.eigh(sigma)
    kraus = []
    for lam, vec in zip(spec.eigenvalues, spec.eigenvectors.T):
        if lam <= 1e-14:
            continue
        for i in range(d_in):
            k = np.sqrt(lam) * np.outer(vec, np.eye(d_in)[i])
            kraus.append(k)
    return KrausChannel(kraus=tuple(kraus), name=name or f"replacer{d_in}->{d_out}")


def classical(stochastic, name: str | None = None) -> KrausChannel:
    """Classical channel from a column-stochastic matrix P[y, x]."""
    p = np.asarray(stochastic, dtype=float)
    if p.ndim != 2 or np.any(p < -1e-12) or np.abs(p.sum(axis=0) - 1.0).max() > 1e-10:
        raise ChannelError("expected a column-stochastic matrix")
    d_out, d_in = p.shape
    kraus = []
    for y in range(d_out):
        for x in range(d_in):
            if p[y, x] <= 0:
                continue
            k = np.zeros((d_out, d_in), dtype=complex)
            k[y, x] = np.sqrt(p[y, x])
            kraus.append(k)
    return KrausChannel(kraus=tuple(kraus), name=name or f"classical{d_in}->{d_out}")


def random_cptp(dim_in: int, dim_out: int, seed: int) -> KrausChannel:
    """Random channel from a Haar-ish isometry (Gaussian QR), environment
    dimension dim_in * dim_out."""
    rng = np.random.default_rng(seed)
    d_env = dim_in * dim_out
    g = rng.standard_normal((dim_out * d_env, dim_in)) + 1j * rng.standard_normal(
        (dim_out * d_env, dim_in)
    )
    q, r = np.linalg.qr(g)
    # fix the gauge so the isometry is deterministic in the seed
    q = q * np.sign(np.diag(r))[None, :]
    iso = q.reshape(dim_out, d_env, dim_in)
    kraus = tuple(iso[:, e, :] for e in range(d_env))
    return KrausChannel(kraus=kraus, name=f"random{dim_in}->{dim_out}(seed={seed})")


def random_state(dim: int, seed: int) -> np.ndarray:
    """Random full-rank state from a Wishart draw."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    w = g @ g.conj().T + 1e-6 * np.eye(dim)
    return w / np.trace(w).real


def trine_povm() -> QCChannel:
    """Three symmetric qubit effects (2/3) |psi_k><psi_k|."""
    effects = []
    for k in range(3):
        theta = 2.0 * np.pi * k / 3.0
        v = np.array([np.cos(theta / 2.0), np.sin(theta / 2.0)], dtype=complex)
        effects.append(2.0 / 3.0 * np.outer(v, v.conj()))
    return QCChannel(povm=tuple(effects), name="trine")


def computational_povm(d: int) -> QCChannel:
    effects = tuple(np.diag(np.eye(d)[x]).astype(complex) for x in range(d))
    return QCChannel(povm=effects, name=f"computational{d}")


# --- JSON round trip ----------------------------------------------------------


def channel_to_dict(channel: KrausChannel) -> dict:
    return {
        "name": channel.name,
        "dim_in": channel.dim_in,
        "dim_out": channel.dim_out,
        "kraus": [op.matrix_to_literal(k) for k in channel.kraus],
    }


def channel_from_dict(data: dict) -> KrausChannel:
    kraus = tuple(op.matrix_from_literal(k) for k in data["kraus"])
    ch = KrausChannel(kraus=kraus, name=data.get("name", "channel"))
    if ch.dim_in != data["dim_in"] or ch.dim_out != data["dim_out"]:
        raise ChannelError("declared dimensions disagree with Kraus shapes")
    return ch


def qc_to_dict(qc: QCChannel) -> dict:
    return {
        "name": qc.name,
        "dim_in": qc.dim_in,
        "povm": [op.matrix_to_literal(m) for m in qc.povm],
    }


def qc_from_dict(data: dict) -> QCChannel:
    povm = tuple(op.matrix_from_literal(m) for m in data["povm"])
    return QCChannel(povm=povm, name=data.get("name", "qc"))


def save_channel(path, channel: KrausChannel) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(channel), fh)


def load_channel(path) -> KrausChannel:
    with open(path) as fh:
        return channel_from_dict(json.load(fh))
