"""Continuous piecewise-linear functions on [0, 1].

Nodes are stored as exact rationals so that breakpoint unions never create
near-duplicate abscissae; ordinates are doubles.  Because two such functions
are both linear between the nodes of their union, the sup-norm distance is
attained at a union node and can be computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import ConstructionError, DomainError, InvariantError, ParameterError

__all__ = [
    "PwlFunction",
    "UnitBallSpec",
    "as_fraction",
    "evaluate",
    "interpolate",
    "subtract",
    "add",
    "scale",
    "sup_dist",
    "sup_norm",
    "lipschitz_constant",
    "union_nodes",
    "make_unit_ball_function",
]

Evaluatable = Union["PwlFunction", Callable[[float], float]]


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``; floats convert to their binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, (Real, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise InvariantError(f"non-finite node {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a real number")


_INT64_LIMIT = 2 ** 62


def _grid_array(values) -> np.ndarray:
    """Integer array, int64 when every entry is small enough, else Python ints."""
    vals = [int(v) for v in values]
    if all(-_INT64_LIMIT < v < _INT64_LIMIT for v in vals):
        return np.array(vals, dtype=np.int64)
    return np.array(vals, dtype=object)


def _rescale(num: np.ndarray, den: int, new_den: int) -> np.ndarray:
    factor = new_den // den
    if factor == 1:
        return num
    if num.dtype != object and new_den < _INT64_LIMIT:
        return num * np.int64(factor)
    return np.array([int(v) * factor for v in num], dtype=object)


class PwlFunction:
    """Continuous piecewise-linear function given by nodes and node values.

    Nodes are held exactly as integer numerators over one shared
    denominator.  Instances are immutable.  ``f(x)`` evaluates on floats or
    numpy arrays (vectorized, via float copies of the nodes); :meth:`at`
    evaluates exactly at a rational point.
    """

    __slots__ = ("_num", "_den", "_values", "_xf", "_fractions")

    def __init__(self, nodes: Iterable, values: Iterable[float]):
        fr = [as_fraction(x) for x in nodes]
        den = math.lcm(*(x.denominator for x in fr)) if fr else 1
        num = _grid_array(x.numerator * (den // x.denominator) for x in fr)
        self._setup(num, den, values)

    @classmethod
    def on_grid(cls, num, den: int, values) -> "PwlFunction":
        """Build from numerators ``num`` over the common denominator ``den``."""
        self = cls.__new__(cls)
        num = np.asarray(num)
        if num.dtype != object:
            num = num.astype(np.int64)
        self._setup(num, int(den), values)
        return self

    def _setup(self, num: np.ndarray, den: int, values) -> None:
        values = np.array(values, dtype=float).reshape(-1)
        if len(num) < 2:
            raise InvariantError("a PwlFunction needs at least two nodes")
        if len(values) != len(num):
            raise InvariantError(f"{len(num)} nodes but {len(values)} values")
        if den < 1 or num[0] != 0 or num[-1] != den:
            raise InvariantError("nodes must start at 0 and end at 1")
        if np.any(np.diff(num) <= 0):
            raise InvariantError("nodes must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvariantError("values must be finite")
        # Reduce the shared denominator when all numerators allow it.
        g = math.gcd(den, *(int(v) for v in num[1:-1])) if len(num) > 2 else den
        if g > 1:
            num = num // g if num.dtype != object else np.array([int(v) // g for v in num], dtype=object)
            den //= g
        if num.dtype == object and den < _INT64_LIMIT:
            num = num.astype(np.int64)
        values.setflags(write=False)
        num.setflags(write=False)
        xf = num.astype(float) / den if num.dtype != object else \
            np.array([float(Fraction(int(v), den)) for v in num])
        xf[-1] = 1.0
        xf.setflags(write=False)
        self._num, self._den, self._values, self._xf = num, den, values, xf
        self._fractions = None

    @property
    def nodes(self) -> tuple[Fraction, ...]:
        if self._fractions is None:
            self._fractions = tuple(Fraction(int(v), self._den) for v in self._num)
        return self._fractions

    @property
    def num(self) -> np.ndarray:
        return self._num

    @property
    def den(self) -> int:
        return self._den

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def float_nodes(self) -> np.ndarray:
        return self._xf

    def __len__(self) -> int:
        return len(self._num)

    def __repr__(self) -> str:
        return f"PwlFunction(<{len(self)} nodes>)"

    def __call__(self, x):
        if np.ndim(x) == 0 and isinstance(x, (Fraction, int, np.integer)):
            return self.at(x)
        xa = np.asarray(x, dtype=float)
        if np.any((xa < 0) | (xa > 1)):
            raise DomainError("evaluation point outside [0, 1]")
        out = np.interp(xa, self._xf, self._values)
        return float(out) if out.ndim == 0 else out

    def at(self, x) -> float:
        """Exact-position evaluation at a single rational point."""
        xq = as_fraction(x)
        if xq < 0 or xq > 1:
            raise DomainError(f"evaluation point {x} outside [0, 1]")
        p, q = xq.numerator, xq.denominator
        num, den = self._num, self._den
        # Float search, then exact correction against the neighbours.
        k = int(np.searchsorted(self._xf, float(xq), side="right")) - 1
        k = min(max(k, 0), len(num) - 2)
        while k > 0 and int(num[k]) * q > p * den:
            k -= 1
        while k < len(num) - 2 and int(num[k + 1]) * q <= p * den:
            k += 1
        lo, hi = int(num[k]), int(num[k + 1])
        if lo * q == p * den:
            return float(self._values[k])
        if hi * q == p * den:
            return float(self._values[k + 1])
        lam = float(Fraction(p * den - lo * q, (hi - lo) * q))
        v0, v1 = self._values[k], self._values[k + 1]
        return float(v0 + lam * (v1 - v0))

    def slopes(self) -> np.ndarray:
        dx = np.diff(self._num)
        dx = dx.astype(float) / self._den if dx.dtype != object else \
            np.array([float(Fraction(int(v), self._den)) for v in dx])
        return np.diff(self._values) / dx

    def values_on_grid(self, num: np.ndarray, den: int) -> np.ndarray:
        """Exact-position values at the sorted points ``num / den``."""
        num = np.asarray(num)
        if len(num) and (num[0] < 0 or num[-1] > den):
            raise DomainError("evaluation point outside [0, 1]")
        D = math.lcm(self._den, int(den))
        keys = _rescale(self._num, self._den, D)
        pts = _rescale(num if num.dtype == object else num.astype(np.int64), int(den), D)
        k = np.searchsorted(keys, pts, side="right") - 1
        k = np.clip(k, 0, len(keys) - 2).astype(np.intp)
        lo, hi = keys[k], keys[k + 1]
        if keys.dtype == object or pts.dtype == object:
            lam = np.array([float(Fraction(int(a) - int(b), int(c) - int(b)))
                            for a, b, c in zip(pts, lo, hi)])
        else:
            lam = (pts - lo).astype(float) / (hi - lo).astype(float)
        v0, v1 = self._values[k], self._values[k + 1]
        out = v0 + lam * (v1 - v0)
        out = np.where(pts == lo, v0, out)
        return np.where(pts == hi, v1, out)

    def values_at(self, points: Sequence) -> np.ndarray:
        """Exact-position values at sorted rational points."""
        fr = [as_fraction(p) for p in points]
        if not fr:
            return np.empty(0)
        den = math.lcm(*(x.denominator for x in fr))
        num = _grid_array(x.numerator * (den // x.denominator) for x in fr)
        if np.any(np.diff(num) < 0):
            raise ParameterError("values_at expects sorted points")
        return self.values_on_grid(num, den)

    def to_dict(self) -> dict:
        return {
            "nodes": [str(x) for x in self.nodes],
            "values": [float(v) for v in self._values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PwlFunction":
        return cls([Fraction(s) for s in data["nodes"]], data["values"])


def evaluate(f: PwlFunction, x):
    """Value of ``f`` at ``x``; arrays are evaluated elementwise."""
    if np.ndim(x) == 0:
        return f.at(x)
    return f(x)


def interpolate(target: Evaluatable, T: int) -> PwlFunction:
    """Interpolant of ``target`` with the uniform breakpoints t/T."""
    if not isinstance(T, (int, np.integer)) or isinstance(T, bool) or T < 1:
        raise ParameterError(f"T must be a positive integer, got {T!r}")
    T = int(T)
    num = np.arange(T + 1, dtype=np.int64)
    if isinstance(target, PwlFunction):
        values = target.values_on_grid(num, T)
    else:
        values = [float(target(t / T)) for t in range(T + 1)]
    return PwlFunction.on_grid(num, T, values)


def union_nodes(f: PwlFunction, g: PwlFunction) -> tuple[np.ndarray, int]:
    """Sorted union of the nodes of f and g as (numerators, denominator)."""
    D = math.lcm(f.den, g.den)
    a, b = _rescale(f.num, f.den, D), _rescale(g.num, g.den, D)
    if a.dtype == object or b.dtype == object:
        return np.array(sorted(set(a.tolist()) | set(b.tolist())), dtype=object), D
    return np.union1d(a, b), D


def _binary(f: PwlFunction, g: PwlFunction):
    num, den = union_nodes(f, g)
    return num, den, f.values_on_grid(num, den), g.values_on_grid(num, den)


def subtract(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    num, den, a, b = _binary(f, g)
    return PwlFunction.on_grid(num, den, a - b)


def add(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    num, den, a, b = _binary(f, g)
    return PwlFunction.on_grid(num, den, a + b)


def scale(f: PwlFunction, c: float) -> PwlFunction:
    return PwlFunction.on_grid(f.num, f.den, c * f.values)


def sup_dist(f: PwlFunction, g: PwlFunction) -> float:
    """Exact sup-norm distance on [0, 1]."""
    _, _, a, b = _binary(f, g)
    return float(np.max(np.abs(a - b)))


def sup_norm(f: PwlFunction) -> float:
    return float(np.max(np.abs(f.values)))


def lipschitz_constant(f: PwlFunction) -> float:
    return float(np.max(np.abs(f.slopes())))


# ---------------------------------------------------------------------------
# Corpus of functions in the unit ball of W^{1,inf}([0, 1])

_FAMILIES = ("zero", "abs", "parabola", "sine", "sawtooth")
_TOL = 1e-12


@dataclass(frozen=True)
class UnitBallSpec:
    """Recipe for a function with Lipschitz constant and sup-norm at most 1.

    ``pwl-random`` uses ``pieces`` and ``seed``; ``named-analytic`` uses
    ``family`` and ``scale`` (``pieces`` sets the sampling resolution, or the
    number of teeth for ``sawtooth``).
    """

    kind: str
    pieces: int | None = None
    seed: int | None = None
    family: str | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "pwl-random":
            if self.pieces is None or self.pieces < 1:
                raise ParameterError("pwl-random needs pieces >= 1")
            if self.seed is None:
                raise ParameterError("pwl-random needs a seed")
        elif self.kind == "named-analytic":
            if self.family not in _FAMILIES:
                raise ParameterError(
                    f"unknown family {self.family!r}; choose from {_FAMILIES}")
            if self.pieces is not None and self.pieces < 1:
                raise ParameterError("pieces must be >= 1")
        else:
            raise ParameterError(f"unknown corpus kind {self.kind!r}")

    @property
    def id(self) -> str:
        if self.kind == "pwl-random":
            return f"pwl-random:K={self.pieces}:seed={self.seed}"
        parts = [self.kind, self.family]
        if self.pieces is not None:
            parts.append(f"pieces={self.pieces}")
        if self.scale != 1.0:
            parts.append(f"scale={self.scale!r}")
        return ":".join(parts)

    def __str__(self) -> str:
        return self.id

    @classmethod
    def parse(cls, text: str) -> "UnitBallSpec":
        """Parse ``pwl-random:K=37:seed=3`` or ``named-analytic:sine:scale=0.5``."""
        parts = [p.strip() for p in text.strip().split(":") if p.strip()]
        if not parts:
            raise ParameterError("empty corpus spec")
        kind, rest = parts[0], parts[1:]
        family = None
        if kind == "named-analytic":
            if not rest or "=" in rest[0]:
                raise ParameterError(f"missing family in {text!r}")
            family, rest = rest[0], rest[1:]
        kw = {}
        for item in rest:
            key, sep, val = item.partition("=")
            if not sep:
                raise ParameterError(f"bad corpus field {item!r} in {text!r}")
            kw[key.strip()] = val.strip()
        try:
            pieces = kw.pop("K", kw.pop("pieces", None))
            seed = kw.pop("seed", None)
            sc = kw.pop("scale", None)
            spec = cls(
                kind=kind,
                pieces=int(pieces) if pieces is not None else None,
                seed=int(seed) if seed is not None else None,
                family=family,
                scale=float(sc) if sc is not None else 1.0,
            )
        except ValueError as exc:
            raise ParameterError(f"bad corpus spec {text!r}: {exc}") from None
        if kw:
            raise ParameterError(f"unknown corpus fields {sorted(kw)} in {text!r}")
        return spec


def _random_walk(pieces: int, seed: int) -> list[float]:
    # Slopes uniform in [-1, 1]; a step that would leave [-1, 1] is reflected.
    rng = np.random.default_rng(seed)
    v = float(rng.uniform(-1.0, 1.0))
    slopes = rng.uniform(-1.0, 1.0, size=pieces)
    values = [v]
    for s in slopes:
        step = float(s) / pieces
        if abs(v + step) > 1.0:
            step = -step
        v = v + step
        values.append(v)
    return values


def _named(family: str, scale: float, pieces: int | None) -> PwlFunction:
    if family == "zero":
        return PwlFunction([0, 1], [0.0, 0.0])
    if family == "abs":
        return PwlFunction([0, Fraction(1, 2), 1],
                           [scale * 0.25, -scale * 0.25, scale * 0.25])
    if family == "sawtooth":
        P = pieces or 8
        nodes = [Fraction(j, 2 * P) for j in range(2 * P + 1)]
        vals = [scale / (2 * P) if (j % 2 == 1 and (j // 2) % 2 == 0) else 0.0
                for j in range(2 * P + 1)]
        return PwlFunction(nodes, vals)
    P = pieces or 512
    nodes = [Fraction(k, P) for k in range(P + 1)]
    xs = np.arange(P + 1) / P
    if family == "sine":
        vals = scale * np.sin(2 * np.pi * xs) / (2 * np.pi)
    else:  # parabola
        vals = scale * xs * (1.0 - xs)
    return PwlFunction(nodes, vals)


def make_unit_ball_function(spec: UnitBallSpec) -> PwlFunction:
    """Realize ``spec`` as a PwlFunction, refusing anything outside the ball."""
    if spec.kind == "pwl-random":
        K = spec.pieces
        f = PwlFunction([Fraction(k, K) for k in range(K + 1)],
                        _random_walk(K, spec.seed))
    else:
        f = _named(spec.family, spec.scale, spec.pieces)
    lip, sup = lipschitz_constant(f), sup_norm(f)
    if lip > 1 + _TOL or sup > 1 + _TOL:
        raise ConstructionError(
            f"{spec.id} is outside the unit ball: Lipschitz {lip:.6g}, sup {sup:.6g}")
    return f
