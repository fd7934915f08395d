"""Closed-loop integration kernels.

Two interchangeable backends implement the same step math: a numba-jitted
loop kernel (default when numba imports) and a vectorized pure-numpy
fallback. Set FORMATION_PPC_FORCE_NUMPY=1 before import to force the
fallback; benchmarks/bench_kernels.py compares both.

The integrated dynamics, in node space with p of shape (n, d):

    xbar_k = p[head_k] - p[tail_k] - pdes_k
    pdot   = -D xbar + B u,  u = -D_L diag(gain * jac) eps

where eps is the clamped log-ratio transform of xbar / rho(t). Clamping the
normalized error to |xhat| <= clamp keeps the right-hand side finite after a
funnel violation so failing runs stay plottable.

Funnel crossings (|xbar| >= rho) are scanned after every step inside the
loop, so detection does not depend on how sparsely the caller records
samples. The integrators report the first crossing per (edge, dim) of the
current call; the "halt" policy reuses the same scan.

Status codes returned by the integrators: 0 completed, 1 halted at the first
violating step, 2 aborted on a non-finite state.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "default_backend",
    "integrate",
    "rhs_numpy",
]

STATUS_DONE = 0
STATUS_HALTED = 1
STATUS_NONFINITE = 2


def _numpy_forced() -> bool:
    value = os.environ.get("FORMATION_PPC_FORCE_NUMPY", "")
    return value.strip().lower() in {"1", "true", "yes"}


HAS_NUMBA = False
if not _numpy_forced():
    try:
        import numba

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False


def default_backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


# -- pure numpy backend ------------------------------------------------------


def rhs_numpy(
    t: float,
    p: np.ndarray,
    head: np.ndarray,
    tail: np.ndarray,
    head_leader: np.ndarray,
    tail_leader: np.ndarray,
    pdes: np.ndarray,
    rho0: np.ndarray,
    rho_inf: np.ndarray,
    rate: np.ndarray,
    gain: np.ndarray,
    clamp: float,
) -> np.ndarray:
    xbar = p[head] - p[tail] - pdes
    rho = (rho0 - rho_inf) * np.exp(-rate * t) + rho_inf
    xhat = np.clip(xbar / rho[:, None], -clamp, clamp)
    eps = np.log1p(xhat) - np.log1p(-xhat)
    jac = 2.0 / ((1.0 - xhat * xhat) * rho[:, None])
    weighted = gain[:, None] * jac * eps
    dp = np.zeros_like(p)
    np.subtract.at(dp, head, xbar)
    np.add.at(dp, tail, xbar)
    np.subtract.at(dp, head[head_leader], weighted[head_leader])
    np.add.at(dp, tail[tail_leader], weighted[tail_leader])
    return dp


def integrate_numpy(
    p0: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    head: np.ndarray,
    tail: np.ndarray,
    head_leader: np.ndarray,
    tail_leader: np.ndarray,
    pdes: np.ndarray,
    rho0: np.ndarray,
    rho_inf: np.ndarray,
    rate: np.ndarray,
    gain: np.ndarray,
    clamp: float,
    use_rk4: bool,
    halt_on_violation: bool,
) -> tuple[np.ndarray, int, int, np.ndarray, np.ndarray]:
    args = (head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
    m = head.shape[0]
    d = p0.shape[1]
    samples = np.empty((n_steps + 1,) + p0.shape, dtype=np.float64)
    samples[0] = p0
    cross_step = np.full((m, d), -1, dtype=np.int64)
    cross_value = np.zeros((m, d), dtype=np.float64)
    p = p0.copy()
    status = STATUS_DONE
    done = 0
    for step in range(n_steps):
        t = t0 + step * dt
        if use_rk4:
            k1 = rhs_numpy(t, p, *args)
            k2 = rhs_numpy(t + 0.5 * dt, p + 0.5 * dt * k1, *args)
            k3 = rhs_numpy(t + 0.5 * dt, p + 0.5 * dt * k2, *args)
            k4 = rhs_numpy(t + dt, p + dt * k3, *args)
            p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            p = p + dt * rhs_numpy(t, p, *args)
        samples[step + 1] = p
        done = step + 1
        if not np.all(np.isfinite(p)):
            status = STATUS_NONFINITE
            break
        xbar = p[head] - p[tail] - pdes
        rho = (rho0 - rho_inf) * np.exp(-rate * (t0 + done * dt)) + rho_inf
        outside = np.abs(xbar) >= rho[:, None]
        if outside.any():
            fresh = outside & (cross_step < 0)
            cross_step[fresh] = done
            cross_value[fresh] = xbar[fresh]
            if halt_on_violation:
                status = STATUS_HALTED
                break
    return samples, done, status, cross_step, cross_value


# -- numba backend -------------------------------------------------------------

if HAS_NUMBA:

    @numba.njit(cache=True)
    def _rhs_nb(t, p, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp):
        n, d = p.shape
        m = head.shape[0]
        dp = np.zeros((n, d))
        for k in range(m):
            rho = (rho0[k] - rho_inf[k]) * np.exp(-rate[k] * t) + rho_inf[k]
            hk = head[k]
            tk = tail[k]
            for c in range(d):
                xbar = p[hk, c] - p[tk, c] - pdes[k, c]
                dp[hk, c] -= xbar
                dp[tk, c] += xbar
                xhat = xbar / rho
                if xhat > clamp:
                    xhat = clamp
                elif xhat < -clamp:
                    xhat = -clamp
                if head_leader[k] or tail_leader[k]:
                    eps = np.log1p(xhat) - np.log1p(-xhat)
                    jac = 2.0 / ((1.0 - xhat * xhat) * rho)
                    w = gain[k] * jac * eps
                    if head_leader[k]:
                        dp[hk, c] -= w
                    if tail_leader[k]:
                        dp[tk, c] += w
        return dp

    @numba.njit(cache=True)
    def _integrate_nb(
        p0,
        t0,
        dt,
        n_steps,
        head,
        tail,
        head_leader,
        tail_leader,
        pdes,
        rho0,
        rho_inf,
        rate,
        gain,
        clamp,
        use_rk4,
        halt_on_violation,
    ):
        n, d = p0.shape
        m = head.shape[0]
        samples = np.empty((n_steps + 1, n, d))
        samples[0] = p0
        cross_step = -np.ones((m, d), dtype=np.int64)
        cross_value = np.zeros((m, d))
        p = p0.copy()
        status = 0
        done = 0
        for step in range(n_steps):
            t = t0 + step * dt
            if use_rk4:
                k1 = _rhs_nb(t, p, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
                k2 = _rhs_nb(t + 0.5 * dt, p + 0.5 * dt * k1, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
                k3 = _rhs_nb(t + 0.5 * dt, p + 0.5 * dt * k2, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
                k4 = _rhs_nb(t + dt, p + dt * k3, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
                p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                p = p + dt * _rhs_nb(t, p, head, tail, head_leader, tail_leader, pdes, rho0, rho_inf, rate, gain, clamp)
            samples[step + 1] = p
            done = step + 1
            finite = True
            for i in range(n):
                for c in range(d):
                    if not np.isfinite(p[i, c]):
                        finite = False
            if not finite:
                status = 2
                break
            t_new = t0 + done * dt
            violated = False
            for k in range(m):
                rho = (rho0[k] - rho_inf[k]) * np.exp(-rate[k] * t_new) + rho_inf[k]
                for c in range(d):
                    xbar = p[head[k], c] - p[tail[k], c] - pdes[k, c]
                    if abs(xbar) >= rho:
                        violated = True
                        if cross_step[k, c] < 0:
                            cross_step[k, c] = done
                            cross_value[k, c] = xbar
            if violated and halt_on_violation:
                status = 1
                break
        return samples, done, status, cross_step, cross_value


def integrate(
    p0: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    head: np.ndarray,
    tail: np.ndarray,
    head_leader: np.ndarray,
    tail_leader: np.ndarray,
    pdes: np.ndarray,
    rho0: np.ndarray,
    rho_inf: np.ndarray,
    rate: np.ndarray,
    gain: np.ndarray,
    clamp: float,
    use_rk4: bool,
    halt_on_violation: bool,
    backend: str | None = None,
) -> tuple[np.ndarray, int, int, np.ndarray, np.ndarray]:
    """Integrate n_steps from (t0, p0).

    Returns (samples, steps_done, status, cross_step, cross_value). samples
    has n_steps+1 rows; only rows [0, steps_done] are meaningful when the run
    stops early. cross_step[k, c] is the step index (relative to this call,
    in [1, steps_done]) of the first sample with |xbar_kc| >= rho, or -1 when
    that component never crossed; cross_value holds xbar at that sample.
    """
    if backend is None:
        backend = default_backend()
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(
                "numba backend requested but numba is unavailable or disabled"
            )
        return _integrate_nb(
            p0, t0, dt, n_steps, head, tail, head_leader, tail_leader,
            pdes, rho0, rho_inf, rate, gain, clamp, use_rk4, halt_on_violation,
        )
    if backend == "numpy":
        return integrate_numpy(
            p0, t0, dt, n_steps, head, tail, head_leader, tail_leader,
            pdes, rho0, rho_inf, rate, gain, clamp, use_rk4, halt_on_violation,
        )
    raise ValueError(f"unknown backend {backend!r}")
