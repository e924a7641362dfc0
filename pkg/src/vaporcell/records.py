"""Container types for swept spectra and sampled time series, plus file I/O.

Two CSV dialects are used throughout the package:

* spectrum files: one header row ``<x_unit>,<y_unit>`` followed by
  ``x,y`` data rows.
* time-series files: a leading ``# fs=<Hz>`` comment, a header row
  ``<t_unit>,<y_unit>``, then ``t,y`` data rows.

All floats are written with the ``%.12g`` format so that repeated runs
with identical inputs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, NonUniformSamplingError

FLOAT_FMT = ".12g"


def fmt(value) -> str:
    """Render one float the way every summary writer in the package does."""
    return format(float(value), FLOAT_FMT)


def fmt_exact(value) -> str:
    """Render one float losslessly: shortest repr that parses back equal."""
    return repr(float(value))


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass
class Spectrum:
    """A swept measurement: y sampled on a strictly increasing x axis."""

    x: np.ndarray
    y: np.ndarray
    x_unit: str = "GHz"
    y_unit: str = "arb"

    def __post_init__(self):
        self.x = _as_float_array(self.x, "x")
        self.y = _as_float_array(self.y, "y")
        if self.x.size != self.y.size:
            raise ValueError(
                f"x and y lengths differ: {self.x.size} vs {self.y.size}"
            )
        if self.x.size >= 2 and not np.all(np.diff(self.x) > 0):
            raise ValueError("x axis must be strictly increasing")

    def __len__(self) -> int:
        return int(self.x.size)

    def to_csv(self, path) -> None:
        lines = [f"{self.x_unit},{self.y_unit}"]
        lines.extend(
            f"{fmt_exact(a)},{fmt_exact(b)}" for a, b in zip(self.x, self.y)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Spectrum":
        with open(path, "r", encoding="utf-8") as fh:
            rows = [ln.strip() for ln in fh if ln.strip()]
        if not rows:
            raise InsufficientDataError(f"{path}: empty spectrum file")
        header = rows[0].split(",")
        if len(header) != 2:
            raise ValueError(f"{path}: expected two-column header, got {rows[0]!r}")
        xs, ys = [], []
        for ln in rows[1:]:
            a, b = ln.split(",")
            xs.append(float(a))
            ys.append(float(b))
        return cls(np.array(xs), np.array(ys), header[0], header[1])


# Relative tolerance used to decide whether a time axis is uniform.
UNIFORM_RTOL = 1e-6


@dataclass
class TimeSeries:
    """A uniformly sampled record: y at sample_rate, starting at t0."""

    y: np.ndarray
    sample_rate: float
    t0: float = 0.0
    y_unit: str = "arb"
    t_unit: str = "s"

    def __post_init__(self):
        self.y = _as_float_array(self.y, "y")
        self.sample_rate = float(self.sample_rate)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.y.size < 2:
            raise InsufficientDataError("time series needs at least 2 samples")

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(self.y.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return (self.y.size - 1) / self.sample_rate

    def __len__(self) -> int:
        return int(self.y.size)

    def to_csv(self, path) -> None:
        lines = [
            f"# fs={fmt_exact(self.sample_rate)}",
            f"{self.t_unit},{self.y_unit}",
        ]
        lines.extend(
            f"{fmt_exact(a)},{fmt_exact(b)}" for a, b in zip(self.t, self.y)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, "r", encoding="utf-8") as fh:
            rows = [ln.strip() for ln in fh if ln.strip()]
        fs = None
        data_rows = []
        header = None
        for ln in rows:
            if ln.startswith("#"):
                body = ln.lstrip("#").strip()
                if body.startswith("fs="):
                    fs = float(body[3:])
                continue
            if header is None:
                header = ln.split(",")
                continue
            data_rows.append(ln)
        if fs is None:
            raise ValueError(f"{path}: missing '# fs=<Hz>' comment")
        if header is None or len(header) != 2:
            raise ValueError(f"{path}: missing or malformed header row")
        ts, ys = [], []
        for ln in data_rows:
            a, b = ln.split(",")
            ts.append(float(a))
            ys.append(float(b))
        t = np.array(ts)
        y = np.array(ys)
        if t.size < 2:
            raise InsufficientDataError(f"{path}: fewer than 2 samples")
        expected = t[0] + np.arange(t.size) / fs
        dt = 1.0 / fs
        if np.max(np.abs(t - expected)) > UNIFORM_RTOL * dt * max(1.0, t.size):
            raise NonUniformSamplingError(
                f"{path}: time column inconsistent with fs={fs}"
            )
        return cls(y, fs, t0=t[0], t_unit=header[0], y_unit=header[1])

    @classmethod
    def from_samples(cls, t, y, y_unit="arb") -> "TimeSeries":
        """Build from explicit (t, y) arrays, checking uniformity."""
        t = _as_float_array(t, "t")
        y = _as_float_array(y, "y")
        if t.size != y.size:
            raise ValueError("t and y lengths differ")
        if t.size < 2:
            raise InsufficientDataError("need at least 2 samples")
        steps = np.diff(t)
        dt = float(np.mean(steps))
        if dt <= 0 or np.max(np.abs(steps - dt)) > UNIFORM_RTOL * abs(dt):
            raise NonUniformSamplingError("time axis is not uniformly sampled")
        return cls(y, 1.0 / dt, t0=float(t[0]), y_unit=y_unit)


def write_summary(path, entries: dict) -> None:
    """Write a flat ``key = value`` summary file.

    Floats go through the shared %.12g formatter; everything else is
    rendered with str().
    """
    lines = []
    for key, value in entries.items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, (int, np.integer)):
            text = str(int(value))
        elif isinstance(value, (float, np.floating)):
            text = fmt(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_summary(path) -> dict:
    """Read a ``key = value`` summary file back into a dict of strings."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            key, _, value = ln.partition("=")
            out[key.strip()] = value.strip()
    return out
