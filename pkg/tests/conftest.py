from __future__ import annotations

import numpy as np
import pytest

from randles.circuit import REFERENCE_CIRCUIT, CircuitParams, to_modal, to_state_space
from randles.excitation import reference_excitation
from randles.simulate import simulate_multisine

FS = 500.0
DURATION = 100.0


def random_params(rng: np.random.Generator, n: int, min_gap: float = 0.05) -> CircuitParams:
    """Random circuit whose pole rates differ pairwise by at least ``min_gap`` relative."""
    while True:
        r = 10.0 ** rng.uniform(-2, 0, n)
        c = 10.0 ** rng.uniform(-1, 1, n)
        a = np.sort(1.0 / (r * c))
        if n < 2 or np.min(np.diff(a) / a[1:]) > min_gap:
            break
    return CircuitParams(10.0 ** rng.uniform(-3, -1), tuple(r), tuple(c), 10.0 ** rng.uniform(1, 3))


@pytest.fixture(scope="session")
def truth() -> CircuitParams:
    return REFERENCE_CIRCUIT


@pytest.fixture(scope="session")
def truth_ss(truth):
    return to_state_space(to_modal(truth))


@pytest.fixture(scope="session")
def spec():
    return reference_excitation()


@pytest.fixture(scope="session")
def record(truth_ss, spec):
    """Noise-free input and output of the operating-point circuit."""
    return simulate_multisine(truth_ss, spec, FS, DURATION)


def rk4_zoh(A, B, C, D, u, dt, substeps=20, x0=None):
    """Reference solution: classical RK4 on a grid ``substeps`` times finer,
    input held constant over each sample interval, full (non-diagonal) matrices."""
    k = A.shape[0]
    x = np.zeros(k) if x0 is None else np.array(x0, dtype=float)
    b = B[:, 0]
    c = C[0]
    h = dt / substeps
    y = np.empty(len(u))
    for i, ui in enumerate(u):
        y[i] = c @ x + D * ui
        for _ in range(substeps):
            k1 = A @ x + b * ui
            k2 = A @ (x + 0.5 * h * k1) + b * ui
            k3 = A @ (x + 0.5 * h * k2) + b * ui
            k4 = A @ (x + h * k3) + b * ui
            x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def tone_amplitudes(t, v, omegas):
    """Least-squares complex amplitudes of the given tones plus an offset and a ramp."""
    X = np.column_stack([np.ones_like(t), t - t.mean(), np.cos(np.outer(t, omegas)),
                         -np.sin(np.outer(t, omegas))])
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    q = len(omegas)
    return coef[2:2 + q] + 1j * coef[2 + q:]


# Acceptance verdicts, printed as one line per criterion at the end of the run.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
