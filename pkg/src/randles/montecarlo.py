"""Repeated-trial estimation studies with summary statistics and histograms."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .circuit import CircuitParams, to_modal, to_state_space
from .errors import NoAcceptedTrials, RankDeficient
from .estimate import FitConfig, OutlierPolicy, TrialResult, run_trial
from .excitation import MultiSineSpec, check_pe_order, sample
from .simulate import NoiseSpec, add_noise, detrend, simulate_multisine, simulate_response
from .timeseries import TimeSeries


@dataclass(frozen=True)
class StudyConfig:
    """One Monte Carlo experiment.

    ``seed`` is the master seed: trial ``i`` draws its noise and its initial
    guess from generators seeded with ``seed + i``.  ``data_hold`` picks how
    the record is synthesised: ``"continuous"`` drives the circuit with the
    true multisine, ``"zoh"`` with its sample-and-hold version.
    """

    truth: CircuitParams
    excitation: MultiSineSpec
    fs: float
    duration: float
    noise: NoiseSpec | None = None
    trials: int = 100
    fit: FitConfig = field(default_factory=FitConfig)
    outliers: OutlierPolicy = field(default_factory=OutlierPolicy)
    seed: int = 0
    data_hold: str = "continuous"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fs <= 0 or self.duration <= 0:
            raise ValueError("fs and duration must be positive")
        if self.data_hold not in ("continuous", "zoh"):
            raise ValueError(f"unknown data_hold {self.data_hold!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.truth.c_w is None:
            raise ValueError("studies need a circuit with the series capacitor")


@dataclass(frozen=True)
class StudyStats:
    names: tuple[str, ...]
    truth: tuple[float, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    e_r: tuple[float, ...]
    accepted_count: int
    outlier_count: int
    outlier_reasons: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return self.accepted_count + self.outlier_count

    def to_dict(self) -> dict:
        per = {name: {"truth": t, "mean": m, "std": s, "e_r": e}
               for name, t, m, s, e in zip(self.names, self.truth, self.mean, self.std, self.e_r)}
        return {
            "trials": self.trials,
            "accepted_count": self.accepted_count,
            "outlier_count": self.outlier_count,
            "outlier_reasons": dict(sorted(self.outlier_reasons.items())),
            "parameters": per,
        }


def relative_mean_error(true_value: float, mean: float) -> float:
    """100 |true - mean| / |true|, in percent."""
    return 100.0 * abs(true_value - mean) / abs(true_value)


def _accepted_matrix(results: list[TrialResult]) -> tuple[tuple[str, ...], np.ndarray]:
    acc = [r.params for r in results if r.accepted and r.params is not None]
    if not acc:
        raise NoAcceptedTrials(f"none of {len(results)} trials was accepted")
    names = acc[0].names()
    return names, np.array([p.as_vector() for p in acc])


def summarize(results: list[TrialResult], truth: CircuitParams) -> StudyStats:
    """Mean, sample std (N - 1 divisor) and e_r over the accepted trials."""
    names, X = _accepted_matrix(results)
    tv = truth.as_vector()
    if tv.size != X.shape[1]:
        raise ValueError("truth and estimates describe different circuits")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    reasons: dict[str, int] = {}
    for r in results:
        if not r.accepted:
            reasons[r.reject_reason] = reasons.get(r.reject_reason, 0) + 1
    return StudyStats(
        names=tuple(names), truth=tuple(float(v) for v in tv),
        mean=tuple(float(v) for v in mean), std=tuple(float(v) for v in std),
        e_r=tuple(relative_mean_error(t, m) for t, m in zip(tv, mean)),
        accepted_count=X.shape[0], outlier_count=len(results) - X.shape[0],
        outlier_reasons=reasons,
    )


def histogram_export(results: list[TrialResult], bins: int = 20
                     ) -> dict[str, list[tuple[float, float, int]]]:
    """Equal-width histograms over [min, max] of each parameter's estimates.

    When every estimate is identical the whole sample sits in one bin.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    names, X = _accepted_matrix(results)
    out = {}
    for j, name in enumerate(names):
        col = X[:, j]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            out[name] = [(lo, hi, int(col.size))]
            continue
        counts, edges = np.histogram(col, bins=bins, range=(lo, hi))
        out[name] = [(float(a), float(b), int(c)) for a, b, c in zip(edges, edges[1:], counts)]
    return out


def simulate_record(cfg: StudyConfig) -> tuple[TimeSeries, TimeSeries]:
    """Noise-free input and output records shared by every trial."""
    ss = to_state_space(to_modal(cfg.truth))
    if cfg.data_hold == "continuous":
        return simulate_multisine(ss, cfg.excitation, cfg.fs, cfg.duration)
    u = sample(cfg.excitation, cfg.fs, cfg.duration)
    return u, simulate_response(ss, u)


def _fit_config(cfg: StudyConfig) -> FitConfig:
    fit = cfg.fit
    if fit.freqs is None:
        fit = replace(fit, freqs=tuple(float(w) for w in cfg.excitation.omegas))
    if fit.order_n != cfg.truth.n:
        fit = replace(fit, order_n=cfg.truth.n)
    return fit


def _trial(args) -> TrialResult:
    u, y_clean, fit, policy, sigma, seed, index = args
    y = y_clean if sigma is None else add_noise(y_clean, NoiseSpec(sigma, seed))
    return run_trial(detrend(u), detrend(y), fit, policy, seed=seed, index=index)


def run_study(cfg: StudyConfig) -> tuple[StudyStats, list[TrialResult]]:
    """Simulate once, then fit ``cfg.trials`` noisy copies from random starts.

    Individual trial failures are recorded as rejections; the study only
    raises when the configuration is unusable or nothing is accepted.
    """
    report = check_pe_order(cfg.excitation, cfg.truth.n)
    if not report.passed:
        raise RankDeficient(f"excitation provides order {report.pe_order}, "
                            f"{report.required_order} required")
    fit = _fit_config(cfg)
    u, y = simulate_record(cfg)
    sigma = None if cfg.noise is None or cfg.noise.sigma == 0 else cfg.noise.sigma
    jobs = [(u, y, fit, cfg.outliers, sigma, cfg.seed + i, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_trial(j) for j in jobs]
    results.sort(key=lambda r: r.index)
    return summarize(results, cfg.truth), results


def _json_float(x):
    return x if math.isfinite(x) else None


def write_study(out_dir: str | Path, stats: StudyStats, results: list[TrialResult],
                bins: int = 20) -> list[Path]:
    """Write ``stats.json``, ``trials.json`` and one ``hist_<param>.csv`` per parameter."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "stats.json"
    p.write_text(json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8")
    written.append(p)
    trials = []
    for r in results:
        d = r.to_dict()
        d["residual"] = _json_float(d["residual"])
        trials.append(d)
    p = out / "trials.json"
    p.write_text(json.dumps(trials, indent=2) + "\n", encoding="utf-8")
    written.append(p)
    for name, rows in histogram_export(results, bins).items():
        p = out / f"hist_{name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_low", "bin_high", "count"])
            for lo, hi, c in rows:
                w.writerow([f"{lo:.17g}", f"{hi:.17g}", c])
        written.append(p)
    return written
