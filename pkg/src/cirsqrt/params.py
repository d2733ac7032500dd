"""Core data model: CIR coefficients, time grids and sample paths.

All containers are frozen dataclasses holding read-only numpy arrays, so
they can be shared freely between workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigInvalid,
    GridMismatch,
    NegativeValue,
    NegativeX0,
    NonPositiveA,
    NonPositiveSigma,
    NonUniformGrid,
)

__all__ = [
    "ModelParams",
    "TimeGrid",
    "SamplePath",
    "ReflectionDecomposition",
    "validate_params",
    "sqrt_path",
]


def _readonly(a) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelParams:
    """CIR coefficients dX = (a - b X) dt + sigma sqrt(X) dW, X(0) = x0.

    Derived quantities: dimension k = 4a/sigma^2 and defect
    delta = a - sigma^2/4.  The low-dimensional regime is k < 1,
    equivalently delta < 0.
    """

    a: float
    b: float
    sigma: float
    x0: float

    def __post_init__(self):
        for name in ("a", "b", "sigma", "x0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def k(self) -> float:
        return 4.0 * self.a / (self.sigma * self.sigma)

    @property
    def delta(self) -> float:
        return self.a - self.sigma * self.sigma / 4.0

    @property
    def low_dimensional(self) -> bool:
        return self.k < 1.0

    def to_json(self) -> str:
        return json.dumps({"a": self.a, "b": self.b, "sigma": self.sigma, "x0": self.x0})

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        raw = json.loads(text)
        keys = {"a", "b", "sigma", "x0"}
        if set(raw) != keys:
            raise ConfigInvalid(f"params object must have exactly keys {sorted(keys)}, got {sorted(raw)}")
        return validate_params(cls(**raw))


def validate_params(p: ModelParams) -> ModelParams:
    """Check the standing constraints a > 0, sigma > 0, x0 >= 0."""
    if not (p.a > 0.0) or not math.isfinite(p.a):
        raise NonPositiveA(f"a must be > 0, got {p.a}")
    if not (p.sigma > 0.0) or not math.isfinite(p.sigma):
        raise NonPositiveSigma(f"sigma must be > 0, got {p.sigma}")
    if p.x0 < 0.0 or not math.isfinite(p.x0):
        raise NegativeX0(f"x0 must be >= 0, got {p.x0}")
    if not math.isfinite(p.b):
        raise ConfigInvalid(f"b must be finite, got {p.b}")
    return p


@dataclass(frozen=True)
class TimeGrid:
    """Node times t_0 = 0 < t_1 < ... < t_N = horizon.

    Uniform by default; non-uniform grids are legal containers (the
    transform module produces them) but are rejected by estimators.
    """

    times: np.ndarray

    def __post_init__(self):
        t = _readonly(self.times)
        if t.ndim != 1 or t.size < 3:
            raise ConfigInvalid("grid needs at least 3 nodes (N >= 2)")
        if t[0] != 0.0:
            raise ConfigInvalid("grid must start at t=0")
        if not np.all(np.diff(t) > 0.0):
            raise ConfigInvalid("grid times must be strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        if not (horizon > 0.0):
            raise ConfigInvalid(f"horizon must be > 0, got {horizon}")
        if steps < 2:
            raise ConfigInvalid(f"need at least 2 steps, got {steps}")
        return cls(np.linspace(0.0, float(horizon), int(steps) + 1))

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.times)
        return bool(np.all(np.abs(d - d[0]) <= 1e-12 * d[0]))

    @property
    def dt(self) -> float:
        """Step of the uniform grid; estimators call this."""
        if not self.is_uniform:
            raise NonUniformGrid("operation requires the uniform default grid")
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class SamplePath:
    """A path sampled on a grid, plus the Brownian increments that drove it.

    ``values[i]`` sits at ``grid.times[i]``; ``increments[i]`` is the
    Brownian increment over ``(times[i], times[i+1])`` when present.
    ``seed`` is the 64-bit reproducibility token of the generating stream.
    ``clamp_count``/``clamp_mass`` record how much the positivity clamp of
    the Euler scheme actually removed (scheme-bias diagnostic).
    """

    grid: TimeGrid
    values: np.ndarray
    increments: np.ndarray | None = None
    seed: int | None = None
    clamp_count: int = 0
    clamp_mass: float = 0.0

    def __post_init__(self):
        v = _readonly(self.values)
        if v.size != self.grid.times.size:
            raise GridMismatch(f"values length {v.size} != node count {self.grid.times.size}")
        object.__setattr__(self, "values", v)
        if self.increments is not None:
            w = _readonly(self.increments)
            if w.size != self.grid.steps:
                raise GridMismatch(f"increments length {w.size} != step count {self.grid.steps}")
            object.__setattr__(self, "increments", w)

    @property
    def horizon(self) -> float:
        return self.grid.horizon

    def brownian(self) -> np.ndarray:
        """Cumulative Brownian path W(t_i) built from the stored increments."""
        if self.increments is None:
            raise GridMismatch("path carries no Brownian increments")
        w = np.empty(self.values.size)
        w[0] = 0.0
        np.cumsum(self.increments, out=w[1:])
        return w

    def to_csv(self, fh) -> None:
        """Write columns t,value,dW (dW blank on the first row)."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value", "dW"])
        inc = self.increments
        for i, (t, v) in enumerate(zip(self.grid.times, self.values)):
            dw = "" if i == 0 or inc is None else repr(float(inc[i - 1]))
            writer.writerow([repr(float(t)), repr(float(v)), dw])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, fh, seed: int | None = None) -> "SamplePath":
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "value", "dW"]:
            raise ConfigInvalid(f"unexpected path CSV header {header}")
        ts, vs, dws = [], [], []
        for row in reader:
            ts.append(float(row[0]))
            vs.append(float(row[1]))
            if row[2] != "":
                dws.append(float(row[2]))
        inc = np.asarray(dws) if len(dws) == len(ts) - 1 else None
        return cls(TimeGrid(np.asarray(ts)), np.asarray(vs), inc, seed)

    def with_values(self, values: np.ndarray) -> "SamplePath":
        return replace(self, values=values)


@dataclass(frozen=True)
class ReflectionDecomposition:
    """A reflected path Y and its regulator L (nondecreasing, grows at Y=0)."""

    y: SamplePath
    regulator: SamplePath

    def __post_init__(self):
        if self.y.grid.times.size != self.regulator.grid.times.size:
            raise GridMismatch("Y and regulator must share one grid")


def sqrt_path(x: SamplePath) -> SamplePath:
    """Pointwise square root; grid, increments and seed are carried over."""
    if np.any(x.values < 0.0):
        raise NegativeValue("negative value in path passed to sqrt_path")
    return x.with_values(np.sqrt(x.values))
