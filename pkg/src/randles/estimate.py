"""Continuous-time transfer-function fitting and circuit-parameter recovery.

The fitter works in the frequency domain at the excitation tones.  From the
sampled input and output it forms the empirical response H(j w_q), then
fits a monic transfer function of order (n+1, n+1) whose constant
denominator coefficient is held at zero (the integrator pole).  The cost is

    sum_q |T(j w_q) - H_q|^2 / |H_q|^2.

Circuit parameters are then read off the fitted coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .circuit import POLE_TIE_RTOL, CircuitParams, RationalTF, partial_fraction_to_poly
from .errors import RankDeficient, Rejected, TooShortRecord
from .excitation import required_pe_order
from .identifiability import REAL_ROOT_TOL, residue_system
from .lm import levenberg_marquardt
from .timeseries import TimeSeries

TOPOLOGIES = ("R_RC", "R_RC_C", "R_RC_RC", "R_RC_RC_C")


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_tf`.

    ``init_log_range`` bounds the decade exponents of the random pole rates,
    ``residue_log_range`` those of the random residues and feedthrough.
    ``settle_time`` seconds are dropped from the start of the record before
    tone extraction; ``None`` drops the first 5 %.  ``hold`` selects the
    model's intersample assumption: ``"continuous"`` compares T(j w) with
    the data, ``"zoh"`` its zero-order-hold discretisation.
    """

    order_n: int = 2
    max_iter: int = 200
    init_seed: int = 0
    init_log_range: tuple[float, float] = (-2.0, 3.0)
    residue_log_range: tuple[float, float] = (-4.0, 2.0)
    convergence_tol: float = 1e-12
    freqs: tuple[float, ...] | None = None
    settle_time: float | None = None
    method: str = "varpro"
    hold: str = "continuous"
    init_tf: RationalTF | None = None
    lm_damping: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for lo, hi in (self.init_log_range, self.residue_log_range):
            if not lo < hi:
                raise ValueError("log ranges need lower < upper")
        if self.method not in ("varpro", "full"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.hold not in ("continuous", "zoh"):
            raise ValueError(f"unknown hold {self.hold!r}")
        if self.order_n < 0:
            raise ValueError("order must be non-negative")


@dataclass(frozen=True)
class OutlierPolicy:
    c_w_max: float = 1000.0
    c_i_max: float = 10.0
    require_real_positive_poles: bool = True

    def __post_init__(self):
        if not (self.c_w_max > 0 and self.c_i_max > 0):
            raise ValueError("bounds must be positive")


@dataclass
class TfFit:
    tf: RationalTF
    residual: float
    converged: bool
    iterations: int
    init: dict
    response: np.ndarray = field(repr=False)
    message: str = ""


@dataclass
class TrialResult:
    accepted: bool
    params: CircuitParams | None
    tf: RationalTF | None
    residual: float
    init: dict
    seed: int | None = None
    reject_reason: str | None = None
    index: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "accepted": self.accepted,
            "reject_reason": self.reject_reason,
            "params": None if self.params is None else self.params.to_dict(),
            "tf": None if self.tf is None else self.tf.to_dict(),
            "residual": self.residual,
            "seed": self.seed,
            "init": self.init,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialResult":
        return cls(accepted=d["accepted"],
                   params=None if d["params"] is None else CircuitParams.from_dict(d["params"]),
                   tf=None if d["tf"] is None else RationalTF.from_dict(d["tf"]),
                   residual=d["residual"], init=d.get("init", {}), seed=d.get("seed"),
                   reject_reason=d.get("reject_reason"), index=d.get("index", 0))


# -- frequency-domain data ---------------------------------------------------

def _check_record(x: TimeSeries, freqs: np.ndarray) -> None:
    span = len(x) * x.dt
    if span < 2 * (2 * math.pi / np.min(freqs)):
        raise TooShortRecord(f"{span:.4g} s covers fewer than 2 periods of the slowest tone")


def dft_at_tones(x: TimeSeries, freqs) -> np.ndarray:
    """Single-frequency correlation (2/N) sum_k x[k] exp(-j w t_k) per tone."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    _check_record(x, freqs)
    t = x.times
    return np.array([2.0 / len(x) * np.sum(x.values * np.exp(-1j * w * t)) for w in freqs])


def tone_phasors(x: TimeSeries, freqs, skip: int = 0) -> np.ndarray:
    """Joint least-squares fit of a line plus every tone.

    Returns complex amplitudes A_q with
    x(t) ~ c0 + c1 t + sum_q Re(A_q exp(j w_q t)); the trend term absorbs the
    integrator ramp caused by any DC current.
    Fitting all tones together removes the mutual and self leakage that the
    single-bin correlation suffers on records that are not whole periods.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    t = x.times[skip:]
    v = x.values[skip:]
    if v.size == 0:
        raise TooShortRecord("nothing left after the settle window")
    _check_record(TimeSeries(t[0], x.dt, v, x.channel), freqs)
    wt = np.outer(t, freqs)
    tc = t - t.mean()
    X = np.column_stack([np.ones_like(t), tc / max(np.abs(tc).max(), x.dt),
                         np.cos(wt), -np.sin(wt)])
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    q = freqs.size
    return coef[2:q + 2] + 1j * coef[q + 2:]


def empirical_response(u: TimeSeries, y: TimeSeries, freqs, settle_time: float | None = None
                       ) -> np.ndarray:
    if len(u) != len(y) or u.dt != y.dt:
        raise ValueError("u and y must share a time grid")
    if settle_time is None:
        settle_time = 0.05 * len(u) * u.dt
    skip = int(round(settle_time / u.dt))
    return tone_phasors(y, freqs, skip) / tone_phasors(u, freqs, skip)


# -- model response ----------------------------------------------------------

def _den_full(g_free: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], g_free, [1.0]])


def numerator_basis(g_free, omegas, hold: str = "continuous", dt: float | None = None
                    ) -> np.ndarray:
    """Matrix B with model response B @ num for the given denominator.

    The response is linear in the numerator for either hold: column k is the
    response of s^k / den(s).
    """
    den = _den_full(np.asarray(g_free, dtype=float))
    K = den.size - 1
    w = np.asarray(omegas, dtype=float)
    if hold == "continuous":
        s = 1j * w
        D = np.polynomial.polynomial.polyval(s, den)
        return np.column_stack([s ** k / D for k in range(K + 1)])
    if dt is None:
        raise ValueError("zoh basis needs dt")
    # controllable canonical form of the strictly proper remainder
    A = np.zeros((K, K))
    A[:-1, 1:] = np.eye(K - 1)
    A[-1, :] = -den[:-1]
    M = np.zeros((K + 1, K + 1))
    M[:K, :K] = A
    M[K - 1, K] = 1.0
    E = expm(M * dt)
    Ad, Bd = E[:K, :K], E[:K, K]
    z = np.exp(1j * w * dt)
    V = np.array([np.linalg.solve(zq * np.eye(K) - Ad, Bd) for zq in z])  # (Q, K)
    last = 1.0 - V @ den[:-1]
    return np.column_stack([V, last])


def model_response(tf: RationalTF, omegas, hold: str = "continuous", dt: float | None = None
                   ) -> np.ndarray:
    """Frequency response of ``tf`` (integrator pinned) at the tones."""
    if not tf.integrator_fixed:
        raise ValueError("model_response expects d_0 == 0")
    B = numerator_basis(np.array(tf.den[1:]), omegas, hold, dt)
    return B @ np.array(tf.num)


def _stack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def _varpro_numerator(g, H, W, omegas, hold, dt):
    B = numerator_basis(g, omegas, hold, dt) * W[:, None]
    A = np.vstack([B.real, B.imag])
    rhs = _stack(H * W)
    f, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return f, A @ f - rhs


def _full_jacobian(f, g, W, omegas):
    """Analytic Jacobian of the weighted continuous-model residual.

    Columns are d/df_k = s^k / D and d/dg_k = -N s^k / D^2 for the free
    denominator terms k = 1..n; rows are stacked real then imaginary parts.
    """
    P = np.polynomial.polynomial
    s = 1j * np.asarray(omegas, dtype=float)
    den = _den_full(g)
    D = P.polyval(s, den)
    N = P.polyval(s, f)
    cols = [s ** k / D for k in range(f.size)]
    cols += [-N * s ** k / D ** 2 for k in range(1, g.size + 1)]
    J = np.column_stack(cols) * W[:, None]
    return np.vstack([J.real, J.imag])


def _kaufman_jacobian(g, H, W, omegas):
    """Kaufman's approximation to the variable-projection Jacobian.

    The denominator block of the full Jacobian, projected onto the
    orthogonal complement of the numerator block.
    """
    f, _ = _varpro_numerator(g, H, W, omegas, "continuous", None)
    J = _full_jacobian(f, g, W, omegas)
    Jf, Jg = J[:, :f.size], J[:, f.size:]
    Q, _ = np.linalg.qr(Jf)
    return Jg - Q @ (Q.T @ Jg)


def draw_init(n: int, cfg: FitConfig, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    lo, hi = cfg.init_log_range
    rlo, rhi = cfg.residue_log_range
    a = 10.0 ** rng.uniform(lo, hi, n)
    b = 10.0 ** rng.uniform(rlo, rhi, n)
    b_w, d = 10.0 ** rng.uniform(rlo, rhi, 2)
    return {"a": a.tolist(), "b": b.tolist(), "b_w": float(b_w), "d": float(d)}


def init_tf_from_modal(init: dict) -> RationalTF:
    num, den = partial_fraction_to_poly(list(init["a"]) + [0.0], list(init["b"]) + [init["b_w"]],
                                        init["d"])
    return RationalTF(num=tuple(num), den=tuple(den[:-1]))


def fit_tf(u: TimeSeries, y: TimeSeries, cfg: FitConfig, seed: int | None = None) -> TfFit:
    """Fit the integrator-pinned monic transfer function to sampled data.

    The random start comes from ``seed`` (default ``cfg.init_seed``) unless
    ``cfg.init_tf`` supplies one.  With ``method="varpro"`` only the
    denominator is iterated and the numerator is the weighted linear
    least-squares optimum for it; ``"full"`` iterates all coefficients.
    """
    n = cfg.order_n
    if cfg.freqs is None:
        raise ValueError("FitConfig.freqs must list the excitation tones")
    freqs = np.asarray(cfg.freqs, dtype=float)
    if 2 * freqs.size < required_pe_order(n):
        raise RankDeficient(f"{2 * freqs.size} spectral lines for {required_pe_order(n)} "
                            f"coefficients")
    H = empirical_response(u, y, freqs, cfg.settle_time)
    W = 1.0 / np.abs(H)
    dt = u.dt
    seed = cfg.init_seed if seed is None else seed

    if cfg.init_tf is not None:
        start = cfg.init_tf
        if start.k1 != n + 1 or start.k2 != n + 1 or not start.integrator_fixed:
            raise ValueError("init_tf must be an integrator-pinned TF of matching order")
        init = {"tf": start.to_dict()}
    else:
        init = draw_init(n, cfg, seed)
        start = init_tf_from_modal(init)

    g0 = np.array(start.den[1:])
    analytic = cfg.hold == "continuous"
    if cfg.method == "varpro":
        def fun(g):
            return _varpro_numerator(g, H, W, freqs, cfg.hold, dt)[1]
        jac = (lambda g: _kaufman_jacobian(g, H, W, freqs)) if analytic else None
        x0 = g0
    else:
        def fun(p):
            B = numerator_basis(p[n + 2:], freqs, cfg.hold, dt)
            return _stack((B @ p[: n + 2] - H) * W)
        jac = (lambda p: _full_jacobian(p[: n + 2], p[n + 2:], W, freqs)) if analytic else None
        x0 = np.concatenate([start.num, g0])

    if n == 0 and cfg.method == "varpro":
        res_x, cost, conv, iters, msg = x0, float(fun(x0) @ fun(x0)), True, 0, "no free poles"
    else:
        out = levenberg_marquardt(fun, x0, jac, max_iter=cfg.max_iter,
                                  ftol=cfg.convergence_tol, lam0=cfg.lm_damping)
        res_x, cost, conv, iters, msg = out.x, out.cost, out.converged, out.iterations, out.message

    if cfg.method == "varpro":
        num, _ = _varpro_numerator(res_x, H, W, freqs, cfg.hold, dt)
        g = res_x
    else:
        num, g = res_x[: n + 2], res_x[n + 2:]
    tf = RationalTF(num=tuple(num), den=(0.0, *g))
    return TfFit(tf=tf, residual=float(cost), converged=bool(conv), iterations=iters,
                 init=init, response=H, message=msg)


# -- parameter recovery --------------------------------------------------------

def _pole_rates(den_full_without_zero: np.ndarray, policy: OutlierPolicy) -> np.ndarray:
    """Rates a = -roots, sorted so that a_1 > a_2 > ... > a_n."""
    c = den_full_without_zero
    if c.size <= 1:
        return np.array([])
    roots = np.roots(c[::-1])
    cplx = np.abs(roots.imag) >= REAL_ROOT_TOL * (1 + np.abs(roots.real))
    if np.any(cplx) and policy.require_real_positive_poles:
        raise Rejected("ComplexPoles", f"roots {roots}")
    rates = -roots.real
    if np.any(rates <= 0):
        raise Rejected("NegativePoles", f"rates {rates}")
    rates = np.sort(rates)[::-1]
    if rates.size > 1 and np.min(-np.diff(rates)) < POLE_TIE_RTOL * rates[0]:
        raise Rejected("SingularSystem", "coincident poles")
    return rates


def _apply_bounds(p: CircuitParams, policy: OutlierPolicy) -> CircuitParams:
    if p.c_w is not None and p.c_w > policy.c_w_max:
        raise Rejected("CwBound", f"C_w = {p.c_w:.6g}")
    if any(ci > policy.c_i_max for ci in p.c):
        raise Rejected("CiBound", f"C_i = {p.c}")
    return p


def _build_params(r_inf, rates, b, b_w) -> CircuitParams:
    vals = [r_inf, *b] + ([] if b_w is None else [b_w])
    if not all(math.isfinite(v) and v > 0 for v in vals):
        raise Rejected("NonPhysical", f"R_inf={r_inf}, b={list(b)}, b_w={b_w}")
    return CircuitParams(r_inf=r_inf, r=tuple(bi / ai for ai, bi in zip(rates, b)),
                         c=tuple(1.0 / bi for bi in b),
                         c_w=None if b_w is None else 1.0 / b_w)


def recover_params(tf: RationalTF, n: int, policy: OutlierPolicy = OutlierPolicy()
                   ) -> CircuitParams:
    """Circuit parameters from an integrator-pinned order-n transfer function.

    R_inf is the leading numerator coefficient; the nonzero denominator roots
    give the pole rates in decreasing order; the residues solve the square
    system obtained by matching numerator coefficients.  Raises
    :class:`Rejected` when the outlier policy discards the estimate.
    """
    if tf.k1 != n + 1 or tf.k2 != n + 1:
        raise ValueError(f"TF orders ({tf.k1}, {tf.k2}) do not match n={n}")
    if not tf.integrator_fixed:
        raise ValueError("recover_params needs d_0 == 0")
    num = np.array(tf.num)
    r_inf = num[-1]
    rates = _pole_rates(tf.den_full()[1:], policy)
    A, rhs = residue_system(list(rates) + [0.0], num, r_inf)
    if np.linalg.cond(A) > 1e14:
        raise Rejected("SingularSystem", "residue system is singular")
    x = np.linalg.solve(A, rhs)
    p = _build_params(r_inf, rates, x[:-1], x[-1])
    return _apply_bounds(p, policy)


def recover_params_topology(tf: RationalTF, topology: str,
                            policy: OutlierPolicy = OutlierPolicy()) -> CircuitParams:
    """Closed-form recoveries for the four common Randles topologies."""
    f = np.array(tf.num)
    g = np.array(tf.den)
    if topology == "R_RC":
        if len(f) != 2 or len(g) != 1:
            raise ValueError("R_RC expects (f1 s + f0)/(s + g0)")
        r_inf = f[1]
        a1 = g[0]
        if a1 <= 0:
            raise Rejected("NegativePoles", f"a1={a1}")
        b1 = f[0] - a1 * f[1]
        p = _build_params(r_inf, [a1], [b1], None)
    elif topology == "R_RC_C":
        if len(f) != 3 or len(g) != 2 or g[0] != 0.0:
            raise ValueError("R_RC_C expects a second-order TF with g0 = 0")
        r_inf = f[2]
        (a1,) = _pole_rates(np.array([g[1], 1.0]), policy)
        A = np.array([[1.0, 1.0], [0.0, a1]])
        B = np.array([f[1] - a1 * f[2], f[0]])
        b1, b_w = np.linalg.solve(A, B)
        p = _build_params(r_inf, [a1], [b1], b_w)
    elif topology == "R_RC_RC":
        if len(f) != 3 or len(g) != 2:
            raise ValueError("R_RC_RC expects a second-order TF")
        r_inf = f[2]
        a1, a2 = _pole_rates(np.array([g[0], g[1], 1.0]), policy)  # a2 < a1
        A = np.array([[1.0, 1.0], [a2, a1]])
        B = np.array([f[1] - (a1 + a2) * f[2], f[0] - a1 * a2 * f[2]])
        b1, b2 = np.linalg.solve(A, B)
        p = _build_params(r_inf, [a1, a2], [b1, b2], None)
    elif topology == "R_RC_RC_C":
        if len(f) != 4 or len(g) != 3 or g[0] != 0.0:
            raise ValueError("R_RC_RC_C expects a third-order TF with g0 = 0")
        r_inf = f[3]
        a1, a2 = _pole_rates(np.array([g[1], g[2], 1.0]), policy)
        A = np.array([[1.0, 1.0, 1.0], [a2, a1, a1 + a2], [0.0, 0.0, a1 * a2]])
        B = np.array([f[2] - (a1 + a2) * f[3], f[1] - a1 * a2 * f[3], f[0]])
        b1, b2, b_w = np.linalg.solve(A, B)
        p = _build_params(r_inf, [a1, a2], [b1, b2], b_w)
    else:
        raise ValueError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES}")
    return _apply_bounds(p, policy)


def run_trial(u: TimeSeries, y: TimeSeries, cfg: FitConfig,
              policy: OutlierPolicy = OutlierPolicy(), seed: int | None = None,
              index: int = 0) -> TrialResult:
    """Fit, recover and screen one estimate; failures become rejections."""
    seed = cfg.init_seed if seed is None else seed
    fit = fit_tf(u, y, cfg, seed)
    base = dict(tf=fit.tf, residual=fit.residual, init=fit.init, seed=seed, index=index)
    if not fit.converged:
        return TrialResult(accepted=False, params=None, reject_reason="NoConvergence", **base)
    try:
        p = recover_params(fit.tf, cfg.order_n, policy)
    except Rejected as exc:
        return TrialResult(accepted=False, params=None, reject_reason=exc.reason, **base)
    return TrialResult(accepted=True, params=p, **base)
