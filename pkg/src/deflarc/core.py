"""Shared value types and solver configuration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TANGENT_NORM_TOL = 1e-10


def as_state(values, size: int | None = None) -> np.ndarray:
    """Return a read-only float copy of ``values`` after checking it is finite."""
    arr = np.array(values, dtype=float).reshape(-1)
    if size is not None and arr.size != size:
        raise ValueError(f"expected {size} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries in state vector")
    arr.flags.writeable = False
    return arr


def norm(v) -> float:
    """Euclidean norm used everywhere (tangents, arclength constraint, deflation)."""
    return float(np.sqrt(np.dot(v, v)))


@dataclass(frozen=True, eq=False)
class ParamVec:
    """Parameter vector with named components, addressable by index or name."""

    values: np.ndarray
    names: tuple[str, ...]

    def __init__(self, values, names: Sequence[str] | None = None):
        vals = as_state(values)
        if vals.size < 1:
            raise ValueError("need at least one parameter")
        if names is None:
            names = tuple(f"lambda_{i + 1}" for i in range(vals.size))
        names = tuple(names)
        if len(names) != vals.size:
            raise ValueError("names and values differ in length")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, key) -> float:
        if isinstance(key, str):
            key = self.names.index(key)
        return float(self.values[key])

    def __iter__(self):
        return iter(self.values.tolist())

    def replace(self, values) -> "ParamVec":
        return ParamVec(values, self.names)

    def with_value(self, key, value: float) -> "ParamVec":
        idx = self.names.index(key) if isinstance(key, str) else key
        vals = self.values.copy()
        vals[idx] = value
        return ParamVec(vals, self.names)

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}={v:.6g}" for n, v in zip(self.names, self.values))
        return f"ParamVec({inner})"


@dataclass(frozen=True, eq=False)
class Point:
    u: np.ndarray
    lam: ParamVec
    s: float = 0.0


@dataclass(frozen=True, eq=False)
class Tangent:
    """Unit tangent (du, dlam) to a solution path; always stored normalized."""

    du: np.ndarray
    dlam: np.ndarray

    def __init__(self, du, dlam):
        du = np.asarray(du, dtype=float).reshape(-1)
        dlam = np.asarray(dlam, dtype=float).reshape(-1)
        scale = np.sqrt(np.dot(du, du) + np.dot(dlam, dlam))
        if not np.isfinite(scale) or scale == 0.0:
            raise ValueError("tangent must be finite and nonzero")
        object.__setattr__(self, "du", as_state(du / scale))
        object.__setattr__(self, "dlam", as_state(dlam / scale))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.du, self.dlam])

    def dot(self, other: "Tangent") -> float:
        return float(np.dot(self.du, other.du) + np.dot(self.dlam, other.dlam))

    def __neg__(self) -> "Tangent":
        return Tangent(-self.du, -self.dlam)


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class DeflationConfig:
    # power/shift are the exponent and shift of the deflation operator
    power: float = 2.0
    shift: float = 1.0
    max_solutions: int = 16

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError("power must be positive")
        if self.shift < 0:
            raise ValueError("shift must be nonnegative")
        if self.max_solutions < 1:
            raise ValueError("max_solutions must be >= 1")


@dataclass(frozen=True)
class ContinuationConfig:
    ds: float = 0.1
    ds_min: float | None = None  # defaults to ds / 16
    direction: int = 1
    max_steps: int = 5000

    def __post_init__(self):
        if self.ds_min is None:
            object.__setattr__(self, "ds_min", self.ds / 16)
        if not 0 < self.ds_min <= self.ds:
            raise ValueError("need 0 < ds_min <= ds")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Bounds:
    """Closed intervals per parameter component, plus an optional output cap."""

    intervals: tuple[tuple[float, float], ...]
    q_max: float | None = None

    def contains(self, lam: ParamVec, q: float | None = None, slack: float = 1e-12) -> bool:
        for v, (lo, hi) in zip(lam.values, self.intervals):
            if v < lo - slack or v > hi + slack:
                return False
        if self.q_max is not None and q is not None and abs(q) > self.q_max:
            return False
        return True
