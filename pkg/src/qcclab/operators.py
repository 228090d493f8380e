"""Dense Hermitian linear algebra kernels.

All operators are numpy complex arrays.  Functions validate hermiticity on
entry and guarantee it on exit, so downstream code can chain calls without
re-checking.  Composite systems are described by a tuple of factor
dimensions (row-major tensor ordering).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
#: relative eigenvalue-grouping tolerance for pinching / flattening
GROUP_RTOL = 1e-8
#: relative spectral cutoff for pseudo-inverse and support projections
RANK_RTOL = 1e-10


class OperatorError(ValueError):
    """Raised when an operator violates a structural precondition."""


def as_operator(x) -> np.ndarray:
    """Coerce to a square complex matrix."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def check_hermitian(x, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Return ``x`` as an array after validating Hermitian symmetry."""
    arr = as_operator(x)
    scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
    if np.abs(arr - arr.conj().T).max(initial=0.0) > tol * scale:
        raise OperatorError("matrix is not Hermitian within tolerance")
    # symmetrize away the representation noise so eigh sees an exact input
    return (arr + arr.conj().T) / 2.0


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # unitary, columns match eigenvalues

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigh(h) -> Spectrum:
    """Spectral decomposition of a Hermitian operator (descending order)."""
    h = check_hermitian(h)
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(-vals, kind="stable")
    return Spectrum(eigenvalues=vals[order], eigenvectors=vecs[:, order])


def _apply_spectral(h, fn) -> np.ndarray:
    spec = eigh(h)
    v = spec.eigenvectors
    return (v * fn(spec.eigenvalues)) @ v.conj().T


def positive_part(h) -> np.ndarray:
    """Positive part: eigenvalues clipped at zero."""
    return _apply_spectral(h, lambda lam: np.maximum(lam, 0.0))


def pseudo_inverse(h) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian operator (spectral cutoff)."""
    spec = eigh(h)
    cut = RANK_RTOL * max(np.abs(spec.eigenvalues).max(initial=0.0), 0.0)

    def inv(lam):
        out = np.zeros_like(lam)
        keep = np.abs(lam) > cut
        out[keep] = 1.0 / lam[keep]
        return out

    v = spec.eigenvectors
    return (v * inv(spec.eigenvalues)) @ v.conj().T


def frac_power(p, t: float) -> np.ndarray:
    """Fractional power of a PSD operator on its support.

    Negative powers follow the Moore-Penrose convention: zero eigenvalues
    stay zero.
    """
    spec = eigh(p)
    lam = spec.eigenvalues
    cut = RANK_RTOL * max(lam.max(initial=0.0), 0.0)
    if lam.min(initial=0.0) < -max(cut, 1e-10):
        raise OperatorError("frac_power requires a PSD operator")
    lam = np.maximum(lam, 0.0)
    out = np.zeros_like(lam)
    on_support = lam > cut
    out[on_support] = lam[on_support] ** t
    v = spec.eigenvectors
    return (v * out) @ v.conj().T


def support_projector(h) -> np.ndarray:
    """Projector onto the support (non-null eigenspaces) of a Hermitian h."""
    spec = eigh(h)
    cut = RANK_RTOL * max(np.abs(spec.eigenvalues).max(initial=0.0), 0.0)
    keep = np.abs(spec.eigenvalues) > cut
    v = spec.eigenvectors[:, keep]
    return v @ v.conj().T


def partial_trace(x, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    ``dims`` gives the factor dimensions in row-major order; ``keep`` lists
    the factor indices retained (in their original order).
    """
    x = as_operator(x)
    dims = list(int(d) for d in dims)
    if int(np.prod(dims)) != x.shape[0]:
        raise OperatorError(
            f"factor dimensions {dims} inconsistent with operator dim {x.shape[0]}"
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise OperatorError("keep index out of range")
    n = len(dims)
    tensor = x.reshape(dims + dims)
    # contract row/col axes of every traced factor
    traced = [i for i in range(n) if i not in keep]
    for offset, i in enumerate(traced):
        ax = i - offset  # axes shift as we contract
        tensor = np.trace(tensor, axis1=ax, axis2=ax + tensor.ndim // 2)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(d_keep, d_keep)


def group_eigenvalues(eigenvalues: np.ndarray, scale: float) -> list[np.ndarray]:
    """Group (descending) eigenvalues whose gaps fall below the relative
    tolerance; returns index arrays, one per distinct eigenvalue."""
    tol = GROUP_RTOL * max(scale, 1.0e-300)
    groups: list[list[int]] = []
    for i, lam in enumerate(eigenvalues):
        if groups and abs(eigenvalues[groups[-1][-1]] - lam) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def spectral_projectors(sigma) -> list[np.ndarray]:
    """Projectors onto the distinct eigenspaces of a Hermitian operator."""
    spec = eigh(sigma)
    scale = np.abs(spec.eigenvalues).max(initial=0.0)
    projs = []
    for idx in group_eigenvalues(spec.eigenvalues, scale):
        v = spec.eigenvectors[:, idx]
        projs.append(v @ v.conj().T)
    return projs


def pinching(sigma, rho) -> tuple[np.ndarray, int]:
    """Pinch ``rho`` by the eigenspaces of ``sigma``.

    Returns the pinched operator and the number of distinct eigenvalues v;
    v * pinched - rho is PSD whenever rho is.
    """
    rho = check_hermitian(rho)
    projs = spectral_projectors(sigma)
    out = sum(p @ rho @ p for p in projs)
    return (out + out.conj().T) / 2.0, len(projs)


def operator_norm(x) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    spec = eigh(x)
    return float(np.abs(spec.eigenvalues).max(initial=0.0))


def min_eigenvalue(x) -> float:
    return float(eigh(x).eigenvalues[-1])


def psd_order_leq(x, y, tol: float = 1e-9) -> bool:
    """True iff x ≼ y within the given eigenvalue tolerance."""
    x = check_hermitian(x)
    y = check_hermitian(y)
    if x.shape != y.shape:
        raise OperatorError("psd_order_leq requires equal dimensions")
    return min_eigenvalue(y - x) >= -tol


def is_psd(x, tol: float = 1e-9) -> bool:
    x = check_hermitian(x)
    return min_eigenvalue(x) >= -tol


def kron_all(*ops) -> np.ndarray:
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def permute_systems(x, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a (possibly non-Hermitian) square matrix.

    ``perm[k]`` is the old position of the factor that lands at position k.
    """
    x = as_operator(x)
    dims = [int(d) for d in dims]
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise OperatorError("perm must be a permutation of factor indices")
    if int(np.prod(dims)) != x.shape[0]:
        raise OperatorError("dims inconsistent with operator dimension")
    tensor = x.reshape(dims + dims)
    axes = list(perm) + [p + n for p in perm]
    tensor = tensor.transpose(axes)
    d = x.shape[0]
    return tensor.reshape(d, d)


def embed_at(op, dims: Sequence[int], position: int) -> np.ndarray:
    """Place ``op`` on tensor factor ``position`` of a composite space,
    identity elsewhere."""
    mats = [np.eye(int(d), dtype=complex) for d in dims]
    op = as_operator(op)
    if op.shape[0] != dims[position]:
        raise OperatorError("operator does not match the target factor dim")
    mats[position] = op
    return kron_all(*mats)


# --- matrix literal I/O (shared file format) ---------------------------------


def matrix_to_literal(x) -> list:
    """JSON-friendly nested list of [re, im] pairs."""
    arr = np.asarray(x, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in arr]


def matrix_from_literal(rows) -> np.ndarray:
    try:
        data = [[complex(c[0], c[1]) for c in row] for row in rows]
    except (TypeError, IndexError) as exc:
        raise OperatorError(f"malformed matrix literal: {exc}") from exc
    arr = np.array(data, dtype=complex)
    if arr.ndim != 2:
        raise OperatorError("matrix literal must be a rectangular array")
    return arr


def save_matrix(path, x) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_literal(x), fh)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_literal(json.load(fh))
