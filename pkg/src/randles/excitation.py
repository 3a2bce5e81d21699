"""Multi-sine excitation: Schroeder phases, sampling, crest factor, PE order."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBand, NyquistViolation, ZeroSignal
from .timeseries import TimeSeries

TWO_PI = 2.0 * math.pi


def wrap_phase(phi):
    """Map angles into [-pi, pi)."""
    out = np.mod(np.asarray(phi, dtype=float) + math.pi, TWO_PI) - math.pi
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Tone:
    magnitude: float
    omega: float  # rad/s
    phase: float  # rad


@dataclass(frozen=True)
class MultiSineSpec:
    """u(t) = dc_offset + sum_j m_j cos(omega_j t + phi_j)."""

    components: tuple[Tone, ...]
    dc_offset: float = 0.0

    def __post_init__(self):
        comps = tuple(Tone(float(c.magnitude), float(c.omega), wrap_phase(c.phase))
                      for c in self.components)
        if not comps:
            raise ValueError("a multisine needs at least one tone")
        if any(c.magnitude <= 0 for c in comps):
            raise ValueError("magnitudes must be positive")
        w = [c.omega for c in comps]
        if any(x <= 0 for x in w) or any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("frequencies must be positive and strictly increasing")
        object.__setattr__(self, "components", comps)

    @property
    def l(self) -> int:
        return len(self.components)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([c.omega for c in self.components])

    @property
    def magnitudes(self) -> np.ndarray:
        return np.array([c.magnitude for c in self.components])

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.phase for c in self.components])

    def phasors(self) -> np.ndarray:
        """Complex amplitudes m_j exp(i phi_j)."""
        return self.magnitudes * np.exp(1j * self.phases)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = np.full(t.shape, self.dc_offset)
        for c in self.components:
            u += c.magnitude * np.cos(c.omega * t + c.phase)
        return u

    def to_dict(self) -> dict:
        return {
            "components": [{"magnitude": c.magnitude, "omega": c.omega, "phase": c.phase}
                           for c in self.components],
            "dc_offset": self.dc_offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MultiSineSpec":
        return cls(tuple(Tone(c["magnitude"], c["omega"], c["phase"]) for c in d["components"]),
                   d.get("dc_offset", 0.0))


@dataclass(frozen=True)
class ExcitationReport:
    pe_order: int
    required_order: int
    crest_factor: float | None
    spectral_lines: tuple[tuple[float, float], ...]

    @property
    def passed(self) -> bool:
        return self.pe_order >= self.required_order

    def to_dict(self) -> dict:
        return {
            "pe_order": self.pe_order,
            "required_order": self.required_order,
            "passed": self.passed,
            "crest_factor": self.crest_factor,
            "spectral_lines": [list(x) for x in self.spectral_lines],
        }


def schroeder_phases(l: int, phi1: float = 0.0) -> np.ndarray:
    """phi_j = phi_1 - pi j (j - 1) / l for equal-power tones, wrapped."""
    if l < 1:
        raise ValueError("l must be >= 1")
    j = np.arange(1, l + 1)
    return wrap_phase(phi1 - math.pi * j * (j - 1) / l)


def tone_grid(l: int, f_min: float, f_max: float, spacing: str = "log") -> np.ndarray:
    if not (0 < f_min < f_max):
        raise InvalidBand(f"need 0 < f_min < f_max, got [{f_min}, {f_max}]")
    if spacing == "log":
        return np.geomspace(f_min, f_max, l)
    if spacing == "linear":
        return np.linspace(f_min, f_max, l)
    raise ValueError(f"unknown spacing {spacing!r}")


def build_multisine(l: int, magnitude: float, f_min: float, f_max: float,
                    spacing: str = "log", phi1: float = 0.0, *, unit: str = "Hz",
                    dc_offset: float = 0.0) -> MultiSineSpec:
    """Equal-magnitude multisine with Schroeder phases over a band.

    Band edges are in Hz unless ``unit="rad/s"``; both edges are excited.
    """
    if unit not in ("Hz", "rad/s"):
        raise ValueError(f"unknown unit {unit!r}")
    if l == 1:
        if not (0 < f_min):
            raise InvalidBand("f_min must be positive")
        f = np.array([f_min])
    else:
        f = tone_grid(l, f_min, f_max, spacing)
    w = TWO_PI * f if unit == "Hz" else f
    ph = np.atleast_1d(schroeder_phases(l, phi1))
    return MultiSineSpec(tuple(Tone(magnitude, wj, pj) for wj, pj in zip(w, ph)), dc_offset)


def reference_excitation(spacing: str = "log") -> MultiSineSpec:
    """Four 1 mA Schroeder tones between 0.2 and 500 rad/s, phi_1 = 1.9775."""
    return build_multisine(4, 1e-3, 0.2, 500.0, spacing, 1.9775, unit="rad/s")


def sample(spec: MultiSineSpec, fs: float, duration: float, t0: float = 0.0) -> TimeSeries:
    if duration <= 0 or fs <= 0:
        raise ValueError("fs and duration must be positive")
    f_max = spec.omegas.max() / TWO_PI
    if fs <= 2.0 * f_max:
        raise NyquistViolation(f"fs={fs} Hz does not exceed twice the top tone {f_max:.6g} Hz")
    # round first so that e.g. 100 s at 500 Hz gives exactly 50000 samples
    n = int(math.floor(round(duration * fs, 9)))
    if n < 1:
        raise ValueError("record shorter than one sample")
    t = t0 + np.arange(n) / fs
    return TimeSeries(t0, 1.0 / fs, spec.evaluate(t), "current")


def crest_factor(x: TimeSeries | np.ndarray) -> float:
    v = np.asarray(x.values if isinstance(x, TimeSeries) else x, dtype=float)
    if v.size == 0:
        raise ZeroSignal("empty signal")
    rms = math.sqrt(float(np.mean(v * v)))
    if rms == 0.0:
        raise ZeroSignal("signal has zero RMS")
    return float(np.max(np.abs(v)) / rms)


def spectrum_lines(spec: MultiSineSpec) -> list[tuple[float, float]]:
    """Two-sided line spectrum: weight 2*pi*m^2/4 at each of +-omega_j."""
    lines = []
    for c in spec.components:
        w = TWO_PI * c.magnitude ** 2 / 4.0
        lines += [(-c.omega, w), (c.omega, w)]
    return sorted(lines)


def required_pe_order(n: int) -> int:
    """Number of coefficients in the monic transfer function of an order-n circuit.

    (n + 2) numerator plus (n + 1) non-leading denominator coefficients; the
    pinned d_0 still counts, which gives 7 for the six-element circuit.
    """
    return 2 * n + 3


def check_pe_order(spec: MultiSineSpec, n: int,
                   sampled: TimeSeries | None = None) -> ExcitationReport:
    lines = spectrum_lines(spec)
    return ExcitationReport(pe_order=len(lines), required_order=required_pe_order(n),
                            crest_factor=None if sampled is None else crest_factor(sampled),
                            spectral_lines=tuple(lines))
