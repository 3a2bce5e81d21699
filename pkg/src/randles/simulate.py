"""Time-domain simulation of the Randles state-space model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .circuit import CircuitParams, StateSpaceModel
from .errors import DesignWarning
from .excitation import MultiSineSpec, sample
from .timeseries import TimeSeries, read_csv, write_csv

__all__ = [
    "NoiseSpec", "TimeSeries", "simulate_response", "simulate_multisine", "add_noise",
    "detrend", "design_diagnostics", "write_csv", "read_csv",
]


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


def _initial_state(ss: StateSpaceModel, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(ss.order)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (ss.order,):
        raise ValueError(f"x0 must have length {ss.order}")
    return x0


def simulate_response(ss: StateSpaceModel, u: TimeSeries, x0=None) -> TimeSeries:
    """Exact response to a zero-order-hold input.

    A is diagonal, so each state obeys a scalar recursion
    x[k+1] = alpha x[k] + beta u[k] with alpha = exp(-a dt) and
    beta = (b/a)(1 - alpha); the integrator has alpha = 1, beta = b_w dt.
    """
    x0 = _initial_state(ss, x0)
    dt = u.dt
    uv = u.values
    y = ss.d_scalar * uv
    for lam, b, c, xi0 in zip(ss.a_diag, ss.b_vec, ss.c_vec, x0):
        if lam == 0.0:
            alpha, beta = 1.0, b * dt
        else:
            alpha = np.exp(lam * dt)
            beta = -b / lam * (1.0 - alpha)
        x, _ = lfilter([0.0, beta], [1.0, -alpha], uv, zi=[xi0])
        y = y + c * x
    return TimeSeries(u.t0, dt, y, "voltage")


def simulate_multisine(ss: StateSpaceModel, spec: MultiSineSpec, fs: float, duration: float,
                       x0=None) -> tuple[TimeSeries, TimeSeries]:
    """Sampled input and exact response to the continuous multisine.

    Unlike :func:`simulate_response` the input is not held between samples,
    so the tone response equals T(j omega) at every frequency.
    """
    u = sample(spec, fs, duration)
    x0 = _initial_state(ss, x0)
    t = u.times - u.t0
    ph = spec.phasors()
    w = spec.omegas
    # (tones x samples) complex exponentials, shared by all states
    E = np.exp(1j * np.outer(w, t))
    u0 = spec.dc_offset
    y = ss.d_scalar * u.values
    for lam, b, c, xi0 in zip(ss.a_diag, ss.b_vec, ss.c_vec, x0):
        if lam == 0.0:
            # integral of the tones, plus a ramp from any DC offset
            g = b * ph / (1j * w)
            x = xi0 + (g @ (E - 1.0)).real + b * u0 * t
        else:
            a = -lam
            g = b * ph / (1j * w + a)
            steady0 = g.sum().real + b * u0 / a
            x = (g @ E).real + b * u0 / a + (xi0 - steady0) * np.exp(-a * t)
        y = y + c * x
    return u, TimeSeries(u.t0, u.dt, y, "voltage")


def add_noise(y: TimeSeries, noise: NoiseSpec) -> TimeSeries:
    if noise.sigma == 0:
        return y
    rng = np.random.default_rng(noise.seed)
    return y.replace(values=y.values + rng.normal(0.0, noise.sigma, len(y)))


def detrend(x: TimeSeries) -> TimeSeries:
    """Remove the sample mean."""
    v = x.values - np.mean(x.values)
    # a second pass removes the rounding residue of the first
    v = v - np.mean(v)
    return x.replace(values=v)


def design_diagnostics(p: CircuitParams, fs: float, duration: float,
                       warn: bool = True) -> list[str]:
    """Check the usual sampling-rate and record-length rules of thumb.

    fs should be at least 5/tau_min and the record at least 6 tau_max, where
    tau_max also includes R_inf * C_w.
    """
    msgs = []
    taus = list(p.time_constants)
    if taus and fs < 5.0 / min(taus):
        msgs.append(f"fs={fs} Hz is below 5/tau_min={5.0 / min(taus):.4g}")
    if p.c_w is not None:
        taus.append(p.r_inf * p.c_w)
    if taus and duration < 6.0 * max(taus):
        msgs.append(f"duration={duration} s is below 6*tau_max={6.0 * max(taus):.4g}")
    if warn:
        for m in msgs:
            warnings.warn(m, DesignWarning, stacklevel=2)
    return msgs
