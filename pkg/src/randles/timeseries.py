from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled record; ``channel`` is ``"current"`` or ``"voltage"``."""

    t0: float
    dt: float
    values: np.ndarray
    channel: str = "current"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.channel not in ("current", "voltage"):
            raise ValueError(f"unknown channel {self.channel!r}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def fs(self) -> float:
        return 1.0 / self.dt

    def replace(self, values=None, channel=None) -> "TimeSeries":
        return TimeSeries(self.t0, self.dt, self.values if values is None else values,
                          self.channel if channel is None else channel)


def write_csv(path: str | Path, u: TimeSeries, y: TimeSeries | None = None) -> None:
    """Write ``t,u[,y]`` with 17 significant digits so doubles round-trip."""
    if y is not None and (len(y) != len(u) or y.dt != u.dt or y.t0 != u.t0):
        raise ValueError("u and y must share a time grid")
    cols = [u.times, u.values] + ([] if y is None else [y.values])
    header = ["t", "u"] + ([] if y is None else ["y"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{x:.17g}" for x in row])


def read_csv(path: str | Path) -> tuple[TimeSeries, TimeSeries | None]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    t = body[:, header.index("t")]
    dt = float((t[-1] - t[0]) / (len(t) - 1)) if len(t) > 1 else 1.0
    u = TimeSeries(float(t[0]), dt, body[:, header.index("u")], "current")
    y = None
    if "y" in header:
        y = TimeSeries(float(t[0]), dt, body[:, header.index("y")], "voltage")
    return u, y
