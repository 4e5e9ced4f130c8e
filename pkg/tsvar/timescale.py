"""
Time Scales

Isolated, unbounded-above time scales with jump operators, graininess,
grid enumeration and condition (H) detection.

Points are identified by an integer index counted from the anchor, so all
forward/backward jumps are index arithmetic; floats are only produced when a
point value is requested.
"""

import bisect
import logging
import math
import threading
from enum import Enum
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import ArgumentError, DomainError, HorizonError, ScaleError

logger = logging.getLogger(__name__)

MEMBERSHIP_RTOL = 1e-9


class ScaleKind(Enum):
    """Supported time scale families."""
    INTEGER = "integer"
    H_STEP = "h"
    Q_SCALE = "q"
    AFFINE = "affine"
    POINT_SEQUENCE = "points"


class ConditionHFit(NamedTuple):
    """Least-squares affine fit of the forward jump, sigma(t) ~ a1*t + a0."""
    a1: float
    a0: float
    max_residual: float


class TimeScale:
    """
    A time scale [anchor, +inf[ made of isolated points.

    Instances are immutable; the only internal state that changes is the
    memo of a point sequence, which is guarded by a lock.
    """

    __slots__ = ("_kind", "_anchor", "_params", "_base", "_points", "_source", "_lock")

    def __init__(self, kind: ScaleKind, anchor: float = 0.0, **params: Any):
        self._kind = ScaleKind(kind)
        self._params: Dict[str, float] = {}
        self._points: List[float] = []
        self._source = None
        self._lock = threading.Lock()

        if self._kind is ScaleKind.INTEGER:
            base = round(anchor)
            if abs(anchor - base) > MEMBERSHIP_RTOL * max(1.0, abs(anchor)):
                raise ScaleError(f"Anchor {anchor} is not an integer")
            self._base = int(base)
        elif self._kind is ScaleKind.H_STEP:
            h = float(params.get("h", 0.0))
            if not h > 0:
                raise ScaleError("h must be positive")
            self._params["h"] = h
            base = round(anchor / h)
            if abs(anchor - base * h) > MEMBERSHIP_RTOL * max(abs(anchor), h):
                raise ScaleError(f"Anchor {anchor} is not a multiple of h={h}")
            self._base = int(base)
        elif self._kind is ScaleKind.Q_SCALE:
            q = float(params.get("q", 0.0))
            if not q > 1:
                raise ScaleError("q must be greater than 1")
            if not anchor > 0:
                raise ScaleError("Anchor of a q-scale must be positive")
            self._params["q"] = q
            base = round(math.log(anchor) / math.log(q))
            if abs(anchor - q ** base) > MEMBERSHIP_RTOL * anchor:
                raise ScaleError(f"Anchor {anchor} is not a power of q={q}")
            self._base = int(base)
        elif self._kind is ScaleKind.AFFINE:
            a1 = float(params.get("a1", 0.0))
            a0 = float(params.get("a0", 0.0))
            if a1 < 1:
                # a1 < 1 accumulates at a0/(1-a1): sup would be finite
                raise ScaleError("Affine scales need a1 >= 1 to be unbounded above")
            if a1 == 1 and not a0 > 0:
                raise ScaleError("Affine scales with a1 = 1 need a0 > 0")
            if a1 > 1 and not anchor > a0 / (1 - a1):
                raise ScaleError("Anchor must lie above the fixed point a0/(1-a1)")
            self._params.update(a1=a1, a0=a0)
            self._base = 0
        else:
            source = params.get("points")
            if source is None:
                raise ScaleError("A point sequence scale needs points")
            self._source = iter(source)
            self._base = 0
            self._extend(0)
            anchor = self._points[0]

        self._anchor = float(anchor) if self._kind is not ScaleKind.INTEGER else float(self._base)

    # -- constructors ---------------------------------------------------

    @classmethod
    def integers(cls, anchor: int = 0) -> "TimeScale":
        return cls(ScaleKind.INTEGER, anchor)

    @classmethod
    def h_step(cls, h: float, anchor: float = 0.0) -> "TimeScale":
        return cls(ScaleKind.H_STEP, anchor, h=h)

    @classmethod
    def q_scale(cls, q: float, anchor: float = 1.0) -> "TimeScale":
        return cls(ScaleKind.Q_SCALE, anchor, q=q)

    @classmethod
    def affine(cls, a1: float, a0: float, anchor: float = 0.0) -> "TimeScale":
        return cls(ScaleKind.AFFINE, anchor, a1=a1, a0=a0)

    @classmethod
    def from_points(cls, points: Iterable[float]) -> "TimeScale":
        """Scale backed by a strictly increasing sequence; its first point is the anchor."""
        return cls(ScaleKind.POINT_SEQUENCE, points=points)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TimeScale":
        """Build a scale from its config form, e.g. {"kind": "q", "q": 2.0, "anchor": 1.0}."""
        kind = ScaleKind(data["kind"])
        if kind is ScaleKind.POINT_SEQUENCE:
            return cls.from_points(data["points"])
        anchor = data.get("anchor", 1.0 if kind is ScaleKind.Q_SCALE else 0.0)
        params = {k: data[k] for k in ("h", "q", "a1", "a0") if k in data}
        return cls(kind, anchor, **params)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self._kind.value}
        if self._kind is ScaleKind.POINT_SEQUENCE:
            data["points"] = list(self._points)
            return data
        data.update(self._params)
        data["anchor"] = self._anchor
        return data

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self._params.items())
        return f"TimeScale({self._kind.value}, anchor={self._anchor}{', ' + params if params else ''})"

    # -- properties -----------------------------------------------------

    @property
    def kind(self) -> ScaleKind:
        return self._kind

    @property
    def anchor(self) -> float:
        return self._anchor

    @property
    def affine_params(self) -> Optional[Tuple[float, float]]:
        """(a1, a0) with sigma(t) = a1*t + a0, or None for point sequences."""
        if self._kind is ScaleKind.INTEGER:
            return (1.0, 1.0)
        if self._kind is ScaleKind.H_STEP:
            return (1.0, self._params["h"])
        if self._kind is ScaleKind.Q_SCALE:
            return (self._params["q"], 0.0)
        if self._kind is ScaleKind.AFFINE:
            return (self._params["a1"], self._params["a0"])
        return None

    @property
    def is_affine(self) -> bool:
        return self.affine_params is not None

    @property
    def is_geometric(self) -> bool:
        """True when the graininess grows with t (a1 > 1)."""
        params = self.affine_params
        return params is None or params[0] > 1

    # -- index <-> value ------------------------------------------------

    def _extend(self, index: int) -> None:
        with self._lock:
            while len(self._points) <= index:
                try:
                    value = float(next(self._source))
                except StopIteration:
                    raise HorizonError(
                        f"Point sequence exhausted after {len(self._points)} points "
                        f"(index {index} requested)"
                    )
                if self._points and not value > self._points[-1]:
                    raise ScaleError(
                        f"Point sequence not strictly increasing at index {len(self._points)}: "
                        f"{value} after {self._points[-1]}"
                    )
                self._points.append(value)

    def point(self, index: int) -> float:
        """Value of the index-th point counted from the anchor (index 0)."""
        if index < 0:
            raise DomainError(f"Index {index} lies below the anchor")
        n = self._base + index
        if self._kind is ScaleKind.INTEGER:
            return float(n)
        if self._kind is ScaleKind.H_STEP:
            return n * self._params["h"]
        if self._kind is ScaleKind.Q_SCALE:
            return self._params["q"] ** n
        if self._kind is ScaleKind.AFFINE:
            a1, a0 = self._params["a1"], self._params["a0"]
            if a1 == 1:
                return self._anchor + index * a0
            fixed = a0 / (1 - a1)
            return fixed + (self._anchor - fixed) * a1 ** index
        if index >= len(self._points):
            self._extend(index)
        return self._points[index]

    def index_of(self, t: float) -> int:
        """Index of the scale point t; DomainError when t is not on the scale."""
        t = float(t)
        if self._kind is ScaleKind.INTEGER:
            guess = round(t) - self._base
        elif self._kind is ScaleKind.H_STEP:
            guess = round(t / self._params["h"]) - self._base
        elif self._kind is ScaleKind.Q_SCALE:
            if t <= 0:
                raise DomainError(f"{t} is not on {self!r}")
            guess = round(math.log(t) / math.log(self._params["q"])) - self._base
        elif self._kind is ScaleKind.AFFINE:
            a1, a0 = self._params["a1"], self._params["a0"]
            if a1 == 1:
                guess = round((t - self._anchor) / a0)
            else:
                fixed = a0 / (1 - a1)
                ratio = (t - fixed) / (self._anchor - fixed)
                if ratio <= 0:
                    raise DomainError(f"{t} is not on {self!r}")
                guess = round(math.log(ratio) / math.log(a1))
        else:
            while self._points[-1] < t * (1 - MEMBERSHIP_RTOL) - MEMBERSHIP_RTOL:
                self._extend(len(self._points))
            pos = bisect.bisect_left(self._points, t)
            candidates = [i for i in (pos - 1, pos) if 0 <= i < len(self._points)]
            guess = min(candidates, key=lambda i: abs(self._points[i] - t))

        if guess < 0:
            raise DomainError(f"{t} lies below the anchor {self._anchor} of {self!r}")
        value = self.point(guess)
        try:
            spacing = self.point(guess + 1) - value
        except HorizonError:
            spacing = value - self.point(guess - 1) if guess > 0 else abs(value)
        if abs(t - value) > MEMBERSHIP_RTOL * max(abs(value), spacing):
            raise DomainError(f"{t} is not on {self!r}")
        return guess

    def contains(self, t: float) -> bool:
        try:
            self.index_of(t)
        except DomainError:
            return False
        return True

    # -- jump operators -------------------------------------------------

    def sigma(self, t: float) -> float:
        """Forward jump: the next scale point after t."""
        return self.point(self.index_of(t) + 1)

    def rho(self, t: float) -> float:
        """Backward jump; the anchor is its own predecessor."""
        index = self.index_of(t)
        return self.point(index - 1) if index > 0 else self.point(0)

    def mu(self, t: float) -> float:
        """Graininess sigma(t) - t."""
        index = self.index_of(t)
        return self.point(index + 1) - self.point(index)

    def sigma_k(self, t: float, k: int) -> float:
        """k-fold forward jump, sigma^0 being the identity."""
        if k < 0:
            raise ArgumentError(f"k must be nonnegative, got {k}")
        return self.point(self.index_of(t) + k)

    def grid(self, start: float, count: int) -> List[float]:
        """The first count points of the scale that are >= start, start included."""
        if count < 0:
            raise ArgumentError(f"count must be nonnegative, got {count}")
        first = self.index_of(start)
        return [self.point(first + i) for i in range(count)]

    def index_grid(self, first: int, count: int) -> List[float]:
        return [self.point(first + i) for i in range(count)]


def fit_condition_H(points: Sequence[float]) -> ConditionHFit:
    """
    Fit sigma(t_i) = t_{i+1} ~ a1*t_i + a0 by least squares.

    Each row is divided by max(1, |t_i|), so max_residual is relative row by
    row and the intercept is not swamped by the far points of a geometric
    grid. A caller treats max_residual <= tol as condition (H) holding on
    the sample.
    """
    t = np.asarray(points, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise ArgumentError("fit_condition_H needs at least 3 points")
    if np.all(t == t[0]):
        raise ArgumentError("Degenerate sample: all points are equal")
    if np.any(np.diff(t) <= 0):
        raise ArgumentError("Points must be strictly increasing")

    weight = 1.0 / np.maximum(1.0, np.abs(t[:-1]))
    design = np.column_stack([t[:-1] * weight, weight])
    target = t[1:] * weight
    (a1, a0), *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(target - design @ np.array([a1, a0]))))
    return ConditionHFit(a1=float(a1), a0=float(a0), max_residual=residual)


def default_horizon(ts: TimeScale) -> Tuple[int, int]:
    """Default (T_max_index, T_grid_stride) for a scale."""
    if ts.is_geometric:
        return 40, 2
    return 200, 10
