"""Generalised Randles circuit: parameter types and model constructors.

The circuit is a series resistor ``r_inf``, ``n`` parallel RC pairs and a
series capacitor ``c_w``.  Its impedance is

    T(s) = sum_i b_i / (s + a_i) + b_w / s + d

with ``a_i = 1/(R_i C_i)``, ``b_i = 1/C_i``, ``b_w = 1/C_w`` and ``d = R_inf``.
Polynomials are stored as coefficient tuples in ascending powers of ``s``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DuplicatePolesWarning, PoleOnAxis

MAX_ORDER = 10
POLE_TIE_RTOL = 1e-9


def _check_positive(name: str, values: Sequence[float]) -> None:
    for v in values:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} entries must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class CircuitParams:
    """Physical parameters (ohm, farad).

    ``c_w=None`` denotes a topology without the series capacitor; only the
    closed-form recoveries of the R-RC and R-RC-RC circuits produce it.
    """

    r_inf: float
    r: tuple[float, ...] = ()
    c: tuple[float, ...] = ()
    c_w: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(float(x) for x in self.r))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        object.__setattr__(self, "r_inf", float(self.r_inf))
        if len(self.r) != len(self.c):
            raise ValueError("r and c must have equal length")
        _check_positive("r_inf", [self.r_inf])
        _check_positive("r", self.r)
        _check_positive("c", self.c)
        if self.c_w is not None:
            object.__setattr__(self, "c_w", float(self.c_w))
            _check_positive("c_w", [self.c_w])

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def time_constants(self) -> tuple[float, ...]:
        return tuple(ri * ci for ri, ci in zip(self.r, self.c))

    def as_vector(self) -> np.ndarray:
        """theta = (R_inf, R_1..R_n, C_1..C_n, C_w)."""
        cw = [] if self.c_w is None else [self.c_w]
        return np.array([self.r_inf, *self.r, *self.c, *cw])

    def names(self) -> list[str]:
        cw = [] if self.c_w is None else ["c_w"]
        return (["r_inf"] + [f"r{i + 1}" for i in range(self.n)]
                + [f"c{i + 1}" for i in range(self.n)] + cw)

    def to_dict(self) -> dict:
        return {"r_inf": self.r_inf, "r": list(self.r), "c": list(self.c), "c_w": self.c_w}

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitParams":
        return cls(r_inf=d["r_inf"], r=tuple(d.get("r", ())), c=tuple(d.get("c", ())),
                   c_w=d.get("c_w"))


@dataclass(frozen=True)
class ModalParams:
    """Pole rates ``a`` (1/s), residues ``b`` and ``b_w`` (1/F), feedthrough ``d`` (ohm)."""

    a: tuple[float, ...]
    b: tuple[float, ...]
    b_w: float
    d: float

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        object.__setattr__(self, "b_w", float(self.b_w))
        object.__setattr__(self, "d", float(self.d))
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have equal length")
        _check_positive("a", self.a)
        _check_positive("b", self.b)
        _check_positive("b_w", [self.b_w])
        _check_positive("d", [self.d])

    @property
    def n(self) -> int:
        return len(self.a)

    def permuted(self, perm: Sequence[int]) -> "ModalParams":
        return ModalParams(a=tuple(self.a[i] for i in perm), b=tuple(self.b[i] for i in perm),
                           b_w=self.b_w, d=self.d)


@dataclass(frozen=True)
class StateSpaceModel:
    """Diagonal realisation: A = diag(a_diag), B = b_vec, C = c_vec, D = d_scalar."""

    a_diag: tuple[float, ...]
    b_vec: tuple[float, ...]
    c_vec: tuple[float, ...]
    d_scalar: float

    def __post_init__(self):
        if not (len(self.a_diag) == len(self.b_vec) == len(self.c_vec)):
            raise ValueError("state dimensions disagree")
        if self.a_diag[-1] != 0.0:
            raise ValueError("last diagonal entry of A must be exactly 0 (integrator)")

    @property
    def order(self) -> int:
        return len(self.a_diag)

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        k = self.order
        return (np.diag(self.a_diag), np.asarray(self.b_vec).reshape(k, 1),
                np.asarray(self.c_vec).reshape(1, k), self.d_scalar)


@dataclass(frozen=True)
class RationalTF:
    """Monic rational function num(s) / (s^k2 + den(s)).

    ``num`` holds c_0..c_k1 and ``den`` holds d_0..d_{k2-1}; the leading
    denominator coefficient 1 is implicit.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(float(x) for x in self.num))
        object.__setattr__(self, "den", tuple(float(x) for x in self.den))
        if not self.num:
            raise ValueError("empty numerator")

    @property
    def integrator_fixed(self) -> bool:
        return bool(self.den) and self.den[0] == 0.0

    @property
    def k1(self) -> int:
        return len(self.num) - 1

    @property
    def k2(self) -> int:
        return len(self.den)

    def den_full(self) -> np.ndarray:
        """Ascending denominator including the leading 1."""
        return np.array([*self.den, 1.0])

    def to_dict(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}

    @classmethod
    def from_dict(cls, d: dict) -> "RationalTF":
        return cls(num=tuple(d["num"]), den=tuple(d["den"]))


def to_modal(p: CircuitParams) -> ModalParams:
    if p.c_w is None:
        raise ValueError("to_modal needs a series capacitor c_w")
    return ModalParams(a=tuple(1.0 / (ri * ci) for ri, ci in zip(p.r, p.c)),
                       b=tuple(1.0 / ci for ci in p.c),
                       b_w=1.0 / p.c_w, d=p.r_inf)


def from_modal(m: ModalParams) -> CircuitParams:
    return CircuitParams(r_inf=m.d,
                         r=tuple(bi / ai for ai, bi in zip(m.a, m.b)),
                         c=tuple(1.0 / bi for bi in m.b),
                         c_w=1.0 / m.b_w)


def to_state_space(m: ModalParams) -> StateSpaceModel:
    return StateSpaceModel(a_diag=tuple(-ai for ai in m.a) + (0.0,),
                           b_vec=tuple(m.b) + (m.b_w,),
                           c_vec=(1.0,) * (m.n + 1),
                           d_scalar=m.d)


def poly_from_rates(rates: Sequence[float]) -> np.ndarray:
    """prod_i (s + rates[i]) in ascending coefficients, by repeated monomial products."""
    out = np.array([1.0])
    for r in rates:
        out = np.convolve(out, [float(r), 1.0])
    return out


def partial_fraction_to_poly(rates: Sequence[float], residues: Sequence[float],
                             d: float) -> tuple[np.ndarray, np.ndarray]:
    """Expand sum_i residues[i]/(s + rates[i]) + d over the common denominator.

    Returns ``(num, den)`` ascending, ``den`` monic and including its leading 1.
    ``num`` always has ``len(rates) + 1`` entries.
    """
    k = len(rates)
    den = poly_from_rates(rates)
    num = np.zeros(k + 1)
    num += d * den
    for i, bi in enumerate(residues):
        others = poly_from_rates([r for j, r in enumerate(rates) if j != i])
        num[: k] += bi * others
    return num, den


def _warn_close_poles(a: Sequence[float]) -> None:
    if len(a) < 2:
        return
    arr = np.sort(np.asarray(a))
    gap = np.min(np.diff(arr))
    if gap < POLE_TIE_RTOL * arr[-1]:
        warnings.warn(f"near-coincident poles (min gap {gap:.3g})", DuplicatePolesWarning,
                      stacklevel=3)


def to_tf(m: ModalParams) -> RationalTF:
    if m.n > MAX_ORDER:
        raise ValueError(f"order {m.n} exceeds supported maximum {MAX_ORDER}")
    _warn_close_poles(m.a)
    # the integrator enters as a rate of exactly 0, so d_0 comes out exactly 0
    num, den = partial_fraction_to_poly(list(m.a) + [0.0], list(m.b) + [m.b_w], m.d)
    return RationalTF(num=tuple(num), den=tuple(den[:-1]))


def eval_tf(tf: RationalTF, omega) -> complex | np.ndarray:
    """T(j omega) for scalar or array ``omega`` (rad/s)."""
    s = 1j * np.asarray(omega, dtype=float)
    den = P.polyval(s, tf.den_full())
    if np.any(np.abs(den) < 1e-300):
        raise PoleOnAxis(f"denominator vanishes at omega={omega}")
    val = P.polyval(s, np.asarray(tf.num)) / den
    return complex(val) if np.ndim(val) == 0 else val


def eval_modal(m: ModalParams, omega) -> complex | np.ndarray:
    """Sum-form impedance, independent of the expanded polynomial route."""
    s = 1j * np.asarray(omega, dtype=float)
    val = m.d + m.b_w / s
    for ai, bi in zip(m.a, m.b):
        val = val + bi / (s + ai)
    return complex(val) if np.ndim(val) == 0 else val


# Operating point of the six-element study circuit
REFERENCE_CIRCUIT = CircuitParams(r_inf=0.05, r=(0.2, 0.4), c=(0.3, 0.6), c_w=300.0)
