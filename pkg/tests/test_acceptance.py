"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a verdict line that the terminal summary prints, so a
plain ``pytest -v`` run shows a PASS/FAIL line per criterion.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from randles.circuit import (REFERENCE_CIRCUIT, CircuitParams, eval_tf, from_modal, to_modal,
                             to_state_space, to_tf)
from randles.cli import load_config, study_config
from randles.estimate import TrialResult, recover_params
from randles.excitation import check_pe_order, crest_factor, reference_excitation, sample
from randles.identifiability import (canonical_ordering, coefficient_map, enumerate_solutions,
                                     is_canonical, pole_residue_coefficients, relative_distance)
from randles.montecarlo import run_study, summarize
from randles.simulate import TimeSeries, simulate_multisine, simulate_response

from conftest import random_params, record_criterion, rk4_zoh, tone_amplitudes

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
PARAMS = ("r1", "c1", "r2", "c2", "c_w")


def _study(name: str):
    cfg = study_config(load_config(CONFIGS / name), load_config(CONFIGS / name)["seed"])
    t0 = time.perf_counter()
    stats, results = run_study(cfg)
    return stats, results, time.perf_counter() - t0


@pytest.fixture(scope="module")
def noise_free_study():
    return _study("study_noise_free.json")


@pytest.fixture(scope="module")
def noisy_study():
    return _study("study_noisy.json")


def _by_name(stats, field):
    return dict(zip(stats.names, getattr(stats, field)))


def test_criterion_1_constructive_identifiability():
    t0 = time.perf_counter()
    worst = 0.0
    failures = []
    for n in (1, 2, 3, 4):
        rng = np.random.default_rng(100 + n)
        for k in range(200):
            m = to_modal(random_params(rng, n))
            sols = enumerate_solutions(coefficient_map(m), n)
            if len(sols) != math.factorial(n) or sum(map(is_canonical, sols)) != 1:
                failures.append((n, k, len(sols)))
            ref = from_modal(canonical_ordering(m)).as_vector()
            got = recover_params(to_tf(m), n).as_vector()
            worst = max(worst, float(np.max(np.abs(got - ref) / ref)))
    elapsed = time.perf_counter() - t0
    ok = not failures and worst < 1e-9 and elapsed < 10.0
    record_criterion(1, ok, f"n=1..4 x 200 sets, count/canonical failures={len(failures)}, "
                            f"worst round-trip rel err={worst:.2e}, {elapsed:.1f} s")
    assert not failures
    assert worst < 1e-9
    assert elapsed < 10.0


def test_criterion_2_permutation_oracle():
    t0 = time.perf_counter()
    worst_perm = 0.0
    min_residual = math.inf
    for m in (2, 3):
        rng = np.random.default_rng(200 + m)
        a = rng.uniform(-5, 5, m)
        b = rng.uniform(-5, 5, m)
        d = rng.uniform(-2, 2)
        base = pole_residue_coefficients(a, b, d)
        perms = []
        for perm in itertools.permutations(range(m)):
            p = list(perm)
            worst_perm = max(worst_perm, relative_distance(pole_residue_coefficients(a[p], b[p], d),
                                                           base))
            perms.append(np.r_[a[p], b[p], d])
        for _ in range(10_000):
            src = perms[rng.integers(len(perms))]
            # every entry moved by at least 0.1 %, so no candidate is a permutation
            delta = rng.choice([-1.0, 1.0], src.size) * 10.0 ** rng.uniform(-3, math.log10(0.5),
                                                                           src.size)
            cand = src * (1.0 + delta)
            res = relative_distance(pole_residue_coefficients(cand[:m], cand[m:2 * m], cand[-1]),
                                    base)
            min_residual = min(min_residual, res)
    elapsed = time.perf_counter() - t0
    ok = worst_perm <= 1e-12 and min_residual > 1e-6 and elapsed < 30.0
    record_criterion(2, ok, f"m=2,3: permutation spread={worst_perm:.1e}, min residual of "
                            f"2x10^4 perturbed candidates={min_residual:.2e}, {elapsed:.1f} s")
    assert worst_perm <= 1e-12
    assert min_residual > 1e-6
    assert elapsed < 30.0


@pytest.mark.slow
def test_criterion_3_noise_free_study(noise_free_study):
    stats, _, elapsed = noise_free_study
    e_r = _by_name(stats, "e_r")
    ok = (all(e_r[k] < 10.0 for k in PARAMS) and e_r["r_inf"] < 20.0
          and stats.outlier_count <= 20 and elapsed < 300.0)
    shown = ", ".join(f"{k}={e_r[k]:.2g}%" for k in ("r_inf",) + PARAMS)
    record_criterion(3, ok, f"e_r: {shown}; outliers={stats.outlier_count} "
                            f"{stats.outlier_reasons}; {elapsed:.1f} s")
    assert all(e_r[k] < 10.0 for k in PARAMS)
    assert e_r["r_inf"] < 20.0
    assert stats.outlier_count <= 20
    assert elapsed < 300.0


@pytest.mark.slow
def test_criterion_4_noisy_study(noise_free_study, noisy_study):
    clean, _, _ = noise_free_study
    stats, _, elapsed = noisy_study
    std_c, std_n = _by_name(clean, "std"), _by_name(stats, "std")
    mean, truth = _by_name(stats, "mean"), _by_name(stats, "truth")
    std_ok = all(std_n[k] >= std_c[k] for k in PARAMS)
    mean_dev = {k: abs(mean[k] - truth[k]) / truth[k] for k in stats.names}
    ok = std_ok and max(mean_dev.values()) < 0.15 and stats.outlier_count <= 25 and elapsed < 300
    shown = ", ".join(f"{k}={mean[k]:.4g}" for k in stats.names)
    record_criterion(4, ok, f"std ordering {'holds' if std_ok else 'violated'}; means {shown} "
                            f"(max dev {100 * max(mean_dev.values()):.2g}%); "
                            f"outliers={stats.outlier_count} {stats.outlier_reasons}; "
                            f"{elapsed:.1f} s")
    assert std_ok
    assert max(mean_dev.values()) < 0.15
    assert stats.outlier_count <= 25
    assert elapsed < 300.0


def test_criterion_5_crest_factor():
    cf = crest_factor(sample(reference_excitation("linear"), 500.0, 100.0))
    cf_log = crest_factor(sample(reference_excitation("log"), 500.0, 100.0))
    ok = 1.95 <= cf <= 2.05
    record_criterion(5, ok, f"linearly spaced tones: {cf:.4f} (log-spaced study signal: "
                            f"{cf_log:.4f}, informational)")
    assert 1.95 <= cf <= 2.05


def test_criterion_6_pe_order():
    rep = check_pe_order(reference_excitation(), 2)
    ok = rep.required_order == 7 and rep.pe_order == 8 and rep.passed
    record_criterion(6, ok, f"required {rep.required_order}, provided {rep.pe_order}, "
                            f"{'pass' if rep.passed else 'fail'}")
    assert (rep.required_order, rep.pe_order, rep.passed) == (7, 8, True)


def test_criterion_7_simulation():
    ss = to_state_space(to_modal(REFERENCE_CIRCUIT))
    spec = reference_excitation()
    # (a) exact ZOH recursion against RK4 on a 20x finer grid
    u = sample(spec, 500.0, 5.0)
    A, B, C, D = ss.matrices()
    ref = rk4_zoh(A, B, C, D, u.values, u.dt, substeps=20)
    y = simulate_response(ss, u).values
    rms = float(np.sqrt(np.mean((y - ref) ** 2)) / np.sqrt(np.mean(ref ** 2)))
    # (b) steady-state tone amplitudes against |T(j w)| m
    expected = np.abs(eval_tf(to_tf(to_modal(REFERENCE_CIRCUIT)), spec.omegas)) * spec.magnitudes
    _, yc = simulate_multisine(ss, spec, 500.0, 100.0)
    keep = yc.times > 10.0
    amp_c = np.abs(tone_amplitudes(yc.times[keep], yc.values[keep], spec.omegas))
    # the held input shifts the state response by half a sample against the
    # feedthrough, a first-order effect in dt, so this check needs a fine grid
    uz = sample(spec, 20000.0, 70.0)
    yz = simulate_response(ss, uz)
    keep = yz.times > 10.0
    amp_z = np.abs(tone_amplitudes(yz.times[keep], yz.values[keep], spec.omegas))
    dev_c = float(np.max(np.abs(amp_c / expected - 1)))
    dev_z = float(np.max(np.abs(amp_z / expected - 1)))
    ok = rms < 1e-6 and dev_c < 0.01 and dev_z < 0.01
    record_criterion(7, ok, f"ZOH vs RK4 rel RMS={rms:.1e}; tone amplitude dev: continuous "
                            f"input {100 * dev_c:.1e}%, held input at 20 kHz {100 * dev_z:.2f}%")
    assert rms < 1e-6
    assert dev_c < 0.01
    assert dev_z < 0.01


def test_criterion_8_properties():
    checks = {}
    ss = to_state_space(to_modal(REFERENCE_CIRCUIT))
    rng = np.random.default_rng(8)

    # superposition of the sampled-input simulator
    u1, u2 = rng.normal(size=2000), rng.normal(size=2000)

    def sim(v):
        return simulate_response(ss, TimeSeries(0.0, 0.002, v)).values

    lhs, rhs = sim(1.7 * u1 - 0.4 * u2), 1.7 * sim(u1) - 0.4 * sim(u2)
    checks["superposition"] = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))) < 1e-12

    # permutation invariance of the coefficient map
    worst = 0.0
    for n in (2, 3, 4):
        m = to_modal(random_params(rng, n))
        ref = coefficient_map(m).values
        for perm in itertools.permutations(range(n)):
            worst = max(worst, relative_distance(coefficient_map(m.permuted(perm)).values, ref))
    checks["permutation"] = worst <= 1e-12

    # determinism of run_study
    cfg_doc = load_config(CONFIGS / "study_noisy.json")
    cfg_doc["trials"] = 10
    cfg = study_config(cfg_doc, cfg_doc["seed"])
    a, ra = run_study(cfg)
    b, rb = run_study(cfg)
    checks["determinism"] = a == b and json.dumps([r.to_dict() for r in ra]) == json.dumps(
        [r.to_dict() for r in rb])

    # relative mean error on synthetic inputs
    vals = 10.0 ** rng.uniform(-2, 2, (9, 6))
    res = [TrialResult(True, CircuitParams(v[0], (v[1], v[2]), (v[3], v[4]), v[5]), None, 0.0,
                       {}, index=i) for i, v in enumerate(vals)]
    s = summarize(res, REFERENCE_CIRCUIT)
    tv = REFERENCE_CIRCUIT.as_vector()
    mean = vals.mean(axis=0)
    checks["e_r formula"] = all(s.e_r[j] == 100.0 * abs(tv[j] - mean[j]) / abs(tv[j])
                                for j in range(6))

    ok = all(checks.values())
    record_criterion(8, ok, ", ".join(f"{k}: {'ok' if v else 'FAILED'}"
                                      for k, v in checks.items())
                     + f" (permutation spread {worst:.1e})")
    assert checks == {k: True for k in checks}
