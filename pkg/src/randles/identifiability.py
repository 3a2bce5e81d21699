"""Coefficient map, solution enumeration and identifiability classification.

Two parameter vectors are indistinguishable from input-output data exactly
when their monic transfer functions share every coefficient.  For the Randles
circuit the denominator fixes the set of pole rates but not which RC slot
carries which rate, so each distinct rate assignment with its matching
residues is another solution.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (POLE_TIE_RTOL, ModalParams, RationalTF, partial_fraction_to_poly,
                      poly_from_rates, to_tf)
from .errors import DuplicateRoots, NotInImage

MAX_ENUMERATION_ORDER = 6
REAL_ROOT_TOL = 1e-7
REMAP_RTOL = 1e-8


class Identifiability(str, enum.Enum):
    GLOBAL = "GloballyIdentifiable"
    LOCAL = "LocallyIdentifiable"
    NONE = "Unidentifiable"


@dataclass(frozen=True)
class CoefficientVector:
    """(c_0..c_k1, d_0..d_{k2-1}) of a monic transfer function."""

    values: tuple[float, ...]
    k1: int
    k2: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != self.k1 + self.k2 + 1:
            raise ValueError("length must equal k1 + k2 + 1")

    @classmethod
    def from_tf(cls, tf: RationalTF) -> "CoefficientVector":
        return cls(values=tf.num + tf.den, k1=tf.k1, k2=tf.k2)

    def to_tf(self) -> RationalTF:
        return RationalTF(num=self.values[: self.k1 + 1], den=self.values[self.k1 + 1:])

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    classification: Identifiability
    solution_count: int | float  # math.inf when unidentifiable
    witnesses: tuple[ModalParams, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "solution_count": ("infinite" if math.isinf(self.solution_count)
                               else int(self.solution_count)),
            "witnesses": [{"a": list(w.a), "b": list(w.b), "b_w": w.b_w, "d": w.d}
                          for w in self.witnesses],
        }


def coefficient_map(m: ModalParams) -> CoefficientVector:
    return CoefficientVector.from_tf(to_tf(m))


def pole_residue_coefficients(a, b, d) -> np.ndarray:
    """Coefficients of sum_i b_i/(s + a_i) + d without the integrator.

    Real rates of either sign are allowed.  Layout as in
    :class:`CoefficientVector` with k1 = k2 = len(a).
    """
    num, den = partial_fraction_to_poly(list(a), list(b), float(d))
    return np.concatenate([num, den[:-1]])


def relative_distance(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.linalg.norm(x - y) / max(np.linalg.norm(y), np.finfo(float).tiny))


def residue_system(rates, num, d) -> tuple[np.ndarray, np.ndarray]:
    """Linear system for the residues given ordered pole rates.

    ``rates`` lists a_1..a_n followed by the integrator rate 0.  Matching
    coefficients of num(s) - d*den(s) against
    sum_i b_i prod_{k != i}(s + a_k) gives a square system whose unknowns
    are (b_1..b_n, b_w).  Rows are ordered from s^n down to s^0.
    """
    m = len(rates)
    cols = [poly_from_rates([r for j, r in enumerate(rates) if j != i]) for i in range(m)]
    A = np.column_stack([c[::-1] for c in cols])
    den = poly_from_rates(rates)
    rhs = (np.asarray(num, dtype=float) - d * den)[:m][::-1]
    return A, rhs


def _den_roots(den_full: np.ndarray) -> np.ndarray:
    """Roots of an ascending monic polynomial via companion-matrix eigenvalues."""
    k = len(den_full) - 1
    if k == 0:
        return np.array([], dtype=complex)
    comp = np.zeros((k, k))
    comp[1:, :-1] = np.eye(k - 1)
    comp[:, -1] = -den_full[:-1]
    return np.linalg.eigvals(comp)


def _modal_from_assignment(rates, num, d) -> ModalParams | None:
    A, rhs = residue_system(rates, num, d)
    try:
        res = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    if np.any(res <= 0) or d <= 0:
        return None
    return ModalParams(a=tuple(rates[:-1]), b=tuple(res[:-1]), b_w=res[-1], d=d)


def enumerate_solutions(target: CoefficientVector, n: int) -> list[ModalParams]:
    """All modal parameter vectors of order ``n`` that reproduce ``target``.

    The zero root is fixed to the integrator slot and every ordering of the
    remaining roots over the n RC slots is tried; each ordering fixes the
    residues uniquely, and it counts when they are positive and re-map onto
    the target.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if n > MAX_ENUMERATION_ORDER:
        raise ValueError(f"enumeration is factorial; order capped at {MAX_ENUMERATION_ORDER}")
    if target.k1 != n + 1 or target.k2 != n + 1:
        raise NotInImage(f"orders ({target.k1}, {target.k2}) do not match n={n}")
    tf = target.to_tf()
    roots = _den_roots(tf.den_full())
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    if np.any(np.abs(roots.imag) >= REAL_ROOT_TOL * (1 + np.abs(roots.real))):
        raise NotInImage("denominator has complex roots")
    rates = -roots.real
    near_zero = np.abs(rates) <= REAL_ROOT_TOL * scale
    if near_zero.sum() != 1:
        raise NotInImage("denominator must have exactly one root at s=0")
    rates[near_zero] = 0.0
    if np.any(rates[~near_zero] <= 0):
        raise NotInImage("denominator has roots in the right half plane")
    srt = np.sort(rates)
    if srt.size > 1 and np.min(np.diff(srt)) < POLE_TIE_RTOL * max(srt[-1], 1.0):
        raise DuplicateRoots("denominator roots coincide")

    num = np.array(tf.num)
    d = num[-1]
    # the integrator slot must carry the zero root; the others take any order
    nonzero = rates[~near_zero]
    solutions = []
    for perm in itertools.permutations(range(n)):
        m = _modal_from_assignment(list(nonzero[list(perm)]) + [0.0], num, d)
        if m is None:
            continue
        if relative_distance(coefficient_map(m).values, target.values) > REMAP_RTOL:
            continue
        solutions.append(m)
    if not solutions:
        raise NotInImage("no valid assignment reproduces the coefficients")
    return solutions


def classify(n: int, ordered: bool = False) -> IdentifiabilityVerdict:
    if n < 1:
        raise ValueError("order must be at least 1")
    if n == 1 or ordered:
        return IdentifiabilityVerdict(Identifiability.GLOBAL, 1)
    return IdentifiabilityVerdict(Identifiability.LOCAL, math.factorial(n))


def classify_instance(m: ModalParams, ordered: bool = False) -> IdentifiabilityVerdict:
    """Verdict backed by explicit enumeration for one parameter point."""
    sols = enumerate_solutions(coefficient_map(m), m.n)
    if ordered:
        sols = [s for s in sols if is_canonical(s)]
    count = len(sols)
    cls = Identifiability.GLOBAL if count == 1 else Identifiability.LOCAL
    return IdentifiabilityVerdict(cls, count, tuple(sols))


def is_canonical(m: ModalParams) -> bool:
    return all(x > y for x, y in zip(m.a, m.a[1:]))


def canonical_ordering(m: ModalParams) -> ModalParams:
    """Sort the (a_i, b_i) pairs so that a_1 > a_2 > ... > a_n."""
    order = sorted(range(m.n), key=lambda i: -m.a[i])
    out = m.permuted(order)
    for x, y in zip(out.a, out.a[1:]):
        if x - y <= POLE_TIE_RTOL * out.a[0]:
            raise DuplicateRoots(f"tied pole rates {x} and {y}")
    return out
