"""Sandwiched Renyi quantities and strong converse exponents.

All divergences and rates are in nats.  The channel quantity optimized
here is the sandwiched Renyi mutual information of a channel,

    I_alpha(N) = sup_rho inf_sigma D_alpha(rho^{1/2} J rho^{1/2} || rho (x) sigma),

with rho on the reference copy of the input and sigma on the output; the
strong converse exponent at rate r is
sup_{alpha >= 0} alpha/(1+alpha) (r - I_{1+alpha}(N)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import operators as op
from .channels import ChoiMatrix, choi_of

FIXED_POINT_TOL = 1e-9
FIXED_POINT_ITERS = 200
ALPHA_MAX = 50.0
SUPPORT_LEAK_TOL = 1e-10


def _normalize_state(rho) -> np.ndarray:
    rho = op.check_hermitian(rho)
    tr = float(np.trace(rho).real)
    if tr <= 0 or op.min_eigenvalue(rho) < -1e-10:
        raise ValueError("state must be PSD with positive trace")
    return rho / tr


def _support_leak(rho: np.ndarray, sigma: np.ndarray) -> float:
    proj = op.support_projector(sigma)
    return float(np.trace(rho @ (np.eye(rho.shape[0]) - proj)).real)


def sandwiched(rho, sigma, alpha: float) -> float:
    """Sandwiched Renyi divergence D_alpha(rho || sigma) in nats.

    alpha = 1 falls back to the Umegaki relative entropy; the value is
    +inf when supp(rho) is not contained in supp(sigma).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rho = _normalize_state(np.asarray(rho, dtype=complex))
    sigma = op.check_hermitian(sigma)
    if abs(alpha - 1.0) < 1e-12:
        return umegaki(rho, sigma)
    if _support_leak(rho, sigma) > SUPPORT_LEAK_TOL:
        return float("inf")
    expo = (1.0 - alpha) / (2.0 * alpha)
    s_pow = op.frac_power(sigma, expo)
    inner = s_pow @ rho @ s_pow
    inner = (inner + inner.conj().T) / 2.0
    q = float(np.trace(op.frac_power(op.positive_part(inner), alpha)).real)
    if q <= 0:
        return float("inf")
    return math.log(q) / (alpha - 1.0)


def umegaki(rho, sigma) -> float:
    """Relative entropy Tr[rho (log rho - log sigma)] in nats."""
    rho = _normalize_state(np.asarray(rho, dtype=complex))
    sigma = op.check_hermitian(sigma)
    if _support_leak(rho, sigma) > SUPPORT_LEAK_TOL:
        return float("inf")

    def log_on_support(x):
        ev = op.eigh(x)
        out = np.zeros_like(x)
        for i, lam in enumerate(ev.eigenvalues):
            if lam > 1e-14:
                v = ev.eigenvectors[:, i]
                out += math.log(lam) * np.outer(v, v.conj())
        return out

    val = np.trace(rho @ (log_on_support(rho) - log_on_support(sigma))).real
    return float(val)


# --- channel mutual information -----------------------------------------------


@dataclass
class MutualInfoResult:
    value: float
    rho: np.ndarray
    sigma: np.ndarray
    converged: bool
    residual: float


def _sandwiched_fixed_rho(choi: ChoiMatrix, rho: np.ndarray, alpha: float,
                          init_sigma=None):
    """inf_sigma D_alpha(rho^{1/2} J rho^{1/2} || rho (x) sigma), in nats.

    Damped fixed-point iteration on the stationarity condition: sigma is
    proportional to the B-marginal of the alpha-th power of the sandwiched
    operator.  Returns (value, sigma, residual).
    """
    d_r, d_b = choi.dims
    rho = _normalize_state(rho)
    sq = op.frac_power(rho, 0.5)
    lift = np.kron(sq, np.eye(d_b))
    rho_rb = lift @ choi.operator @ lift.conj().T
    rho_rb = (rho_rb + rho_rb.conj().T) / 2.0

    if abs(alpha - 1.0) < 1e-9:
        sigma = op.partial_trace(rho_rb, (d_r, d_b), keep=[1])
        sigma = sigma / np.trace(sigma).real
        return umegaki(rho_rb, np.kron(rho, sigma)), sigma, 0.0

    expo = (1.0 - alpha) / (2.0 * alpha)
    r_pow = np.kron(op.frac_power(rho, expo), np.eye(d_b))
    tilted = r_pow @ rho_rb @ r_pow
    tilted = (tilted + tilted.conj().T) / 2.0

    if init_sigma is not None:
        # blend with the mixed state so the iterate stays full rank
        sigma = 0.9 * np.asarray(init_sigma, dtype=complex) \
            + 0.1 * np.eye(d_b) / d_b
        sigma = (sigma + sigma.conj().T) / 2.0
        sigma = sigma / np.trace(sigma).real
    else:
        sigma = np.eye(d_b, dtype=complex) / d_b
    residual = np.inf
    for _ in range(FIXED_POINT_ITERS):
        s_pow = np.kron(np.eye(d_r), op.frac_power(sigma, expo))
        inner = s_pow @ tilted @ s_pow
        inner = (inner + inner.conj().T) / 2.0
        powered = op.frac_power(op.positive_part(inner), alpha)
        new = op.partial_trace(powered, (d_r, d_b), keep=[1])
        tr = float(np.trace(new).real)
        if tr <= 0:
            break
        new = new / tr
        residual = float(np.abs(new - sigma).max())
        # damping keeps sigma full rank so the sandwich power stays defined
        sigma = 0.5 * sigma + 0.5 * new
        if residual < FIXED_POINT_TOL:
            break
    return sandwiched(rho_rb, np.kron(rho, sigma), alpha), sigma, residual


def _cholesky_state(params: np.ndarray, d: int) -> np.ndarray:
    """Map unconstrained reals to a full-rank density matrix."""
    low = np.zeros((d, d), dtype=complex)
    k = 0
    for i in range(d):
        low[i, i] = params[k]
        k += 1
        for j in range(i):
            low[i, j] = params[k] + 1j * params[k + 1]
            k += 2
    rho = low @ low.conj().T + 1e-12 * np.eye(d)
    return rho / np.trace(rho).real


def _state_to_params(rho: np.ndarray, d: int) -> np.ndarray:
    low = np.linalg.cholesky(rho + 1e-10 * np.eye(d))
    params = []
    for i in range(d):
        params.append(low[i, i].real)
        for j in range(i):
            params.extend([low[i, j].real, low[i, j].imag])
    return np.array(params)


def channel_mutual_info(channel, alpha: float, tol: float = 1e-8,
                        restarts: int = 4, seed: int = 7,
                        init_rho=None) -> MutualInfoResult:
    """Sandwiched Renyi mutual information of a channel, in nats.

    Multi-start simplex search over a Cholesky chart of the input state;
    the inner sigma minimization runs the fixed-point map.  The value is
    the best stationary point found; global optimality of the outer sup
    is not guaranteed.
    """
    if alpha < 1.0:
        raise ValueError("order must satisfy alpha >= 1")
    choi = channel if isinstance(channel, ChoiMatrix) else choi_of(channel)
    d_r = choi.dims[0]
    n_par = d_r * d_r

    def objective(params):
        rho = _cholesky_state(params, d_r)
        val = _sandwiched_fixed_rho(choi, rho, alpha)[0]
        return -val if np.isfinite(val) else 1e6

    rng = np.random.default_rng(seed)
    starts = [_state_to_params(np.eye(d_r) / d_r, d_r)]  # maximally mixed
    if init_rho is not None:
        starts.append(_state_to_params(np.asarray(init_rho, dtype=complex), d_r))
    for _ in range(restarts):
        starts.append(rng.normal(size=n_par))

    best_val, best_x = -np.inf, starts[0]
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": min(tol, 1e-10),
                                "maxiter": 80 * n_par, "maxfev": 120 * n_par})
        if -res.fun > best_val:
            best_val, best_x = -res.fun, res.x
    rho = _cholesky_state(best_x, d_r)
    value, sigma, residual = _sandwiched_fixed_rho(choi, rho, alpha)
    return MutualInfoResult(value=value, rho=rho, sigma=sigma,
                            converged=residual < 1e-8, residual=residual)


# --- strong converse exponent ---------------------------------------------


DEFAULT_ALPHA_GRID = np.concatenate([
    np.linspace(0.05, 1.0, 8),
    np.linspace(1.5, 5.0, 6),
    np.array([8.0, 15.0, 30.0, ALPHA_MAX]),
])


@dataclass
class MutualInfoCurve:
    """Cached values of I_{1+alpha}(N) over an alpha grid."""

    alphas: np.ndarray
    values: np.ndarray

    def exponent(self, rate: float) -> float:
        """sup over the grid plus the alpha -> infinity limit candidate."""
        cands = self.alphas / (1.0 + self.alphas) * (rate - self.values)
        limit = rate - self.values[-1]
        return float(max(0.0, cands.max(), limit))


def mutual_info_curve(channel, alphas=None, restarts: int = 1,
                      seed: int = 7) -> MutualInfoCurve:
    """Evaluate I_{1+alpha}(N) over a grid, warm-starting each point."""
    alphas = DEFAULT_ALPHA_GRID if alphas is None else np.asarray(alphas, dtype=float)
    values = np.empty_like(alphas)
    warm = None
    for i, a in enumerate(alphas):
        res = channel_mutual_info(channel, 1.0 + a, restarts=restarts,
                                  seed=seed, init_rho=warm)
        values[i] = res.value
        warm = res.rho
    return MutualInfoCurve(alphas=alphas, values=values)


def sc_exponent(channel, rate: float, curve: MutualInfoCurve = None,
                restarts: int = 1, seed: int = 7) -> float:
    """Strong converse exponent at a rate r (nats per channel use)."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if curve is None:
        curve = mutual_info_curve(channel, restarts=restarts, seed=seed)
    return curve.exponent(rate)


def converse_bound_check(channel, m_size: int, alphas,
                         mc_value: float = None, tol: float = 1e-5) -> dict:
    """Check the Renyi upper bound on the meta-converse success value.

    For each alpha > 0 the bound reads
    mc_success(N, M) <= exp(-(alpha/(1+alpha)) [log M - I_{1+alpha}(N)]).
    """
    from .sdp import mc_success

    if mc_value is None:
        mc_value = mc_success(channel, m_size).value
    rows = []
    all_ok = True
    for alpha in alphas:
        if alpha <= 0:
            raise ValueError("alphas must be positive")
        info = channel_mutual_info(channel, 1.0 + alpha, restarts=2).value
        exponent = alpha / (1.0 + alpha) * (math.log(m_size) - info)
        bound = math.exp(-exponent)
        ok = mc_value <= bound + tol
        all_ok = all_ok and ok
        rows.append({
            "alpha": alpha,
            "mutual_info": info,
            "bound": bound,
            "slack": bound - mc_value,
            "pass": ok,
        })
    return {"pass": all_ok, "mc_value": mc_value, "M": m_size, "rows": rows}
