"""Cached profile functions and their assignment to subintervals.

A cached profile is a piecewise-linear ``gamma`` on [0, 1] with breakpoints
r/m, vanishing at both ends, whose node increments are -2/m, 0 or 2/m.  It is
stored as its sequence of increments in units of 2/m (a signed digit string
such as ``"+-0"``).  Each subinterval [t/T, (t+1)/T) of the residual
``f - interpolant`` is matched to one profile, and many subintervals may
share the same profile.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AssignmentError, InvariantError, ParameterError
from .pwl import PwlFunction, subtract

__all__ = [
    "GammaCode",
    "GammaCoeffs",
    "CacheAssignment",
    "ALPHA",
    "relu",
    "tooth",
    "tooth_relu",
    "realize_gamma",
    "enumerate_gamma",
    "central_trinomial",
    "quantize",
    "relu_coeffs",
    "theta",
    "assign_cache",
]

# Tooth function as a ReLU combination: phi(x) = sum_q ALPHA[q] * relu(x - q).
ALPHA = {-1: 1.0, 0: -2.0, 1: 1.0}

_DIGITS = {1: "+", 0: "0", -1: "-"}
_PARSE = {"+": 1, "0": 0, "-": -1}


def relu(x):
    return np.maximum(x, 0.0)


def tooth(x):
    """Hat function: 1 - |x| on [-1, 1], zero elsewhere."""
    return np.maximum(1.0 - np.abs(x), 0.0)


def tooth_relu(x):
    return sum(a * relu(np.asarray(x, dtype=float) - q) for q, a in ALPHA.items())


@dataclass(frozen=True)
class GammaCode:
    """Profile in the cache, identified by its increments in {-1, 0, +1}."""

    steps: tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise InvariantError("a GammaCode needs m >= 1 steps")
        if any(s not in (-1, 0, 1) for s in steps):
            raise InvariantError(f"steps must lie in {{-1, 0, 1}}: {steps}")
        if sum(steps) != 0:
            raise InvariantError(f"steps must sum to 0 (gamma(1) = 0): {steps}")

    @property
    def m(self) -> int:
        return len(self.steps)

    @property
    def is_zero(self) -> bool:
        return not any(self.steps)

    def node_values(self) -> np.ndarray:
        """gamma(r/m) for r = 0..m."""
        return (2.0 / self.m) * np.concatenate(([0], np.cumsum(self.steps)))

    def __str__(self) -> str:
        return "".join(_DIGITS[s] for s in self.steps)

    @classmethod
    def parse(cls, text: str) -> "GammaCode":
        try:
            return cls(tuple(_PARSE[ch] for ch in text.strip()))
        except KeyError as exc:
            raise InvariantError(f"bad digit {exc.args[0]!r} in {text!r}") from None


@dataclass(frozen=True)
class GammaCoeffs:
    """Coefficients c_r with gamma(x) = sum_r c_r relu(x - r/m) on [0, 1]."""

    m: int
    c: tuple[float, ...]

    def __post_init__(self):
        if len(self.c) != self.m:
            raise InvariantError(f"expected {self.m} coefficients, got {len(self.c)}")

    def endpoint_residual(self) -> float:
        """sum_r c_r (1 - r/m); zero for a profile with gamma(1) = 0."""
        return float(sum(c * (1 - r / self.m) for r, c in enumerate(self.c)))

    def reconstruct(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c * relu(x - r / self.m) for r, c in enumerate(self.c))


def realize_gamma(code: GammaCode) -> PwlFunction:
    m = code.m
    return PwlFunction([Fraction(r, m) for r in range(m + 1)], code.node_values())


def central_trinomial(m: int) -> int:
    """Number of length-m sequences over {-1, 0, 1} summing to zero."""
    return sum(math.comb(m, 2 * k) * math.comb(2 * k, k) for k in range(m // 2 + 1))


def enumerate_gamma(m: int) -> list[GammaCode]:
    """The whole cache for breakpoint count ``m`` (exhaustive, 3**m candidates)."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    return [GammaCode(s) for s in itertools.product((0, 1, -1), repeat=m)
            if sum(s) == 0]


_SNAP = 1e-9


def quantize(g_nodes: Sequence[float], m: int, rule: str = "floor") -> GammaCode:
    """Profile whose node values are g(r/m) rounded to the lattice (2/m)Z.

    ``rule="floor"`` rounds down; ``rule="nearest"`` rounds to the nearest
    lattice point.  Either keeps node increments in {-1, 0, 1} for samples
    of a 2-Lipschitz function.  Values within 1e-9 quanta of a lattice point
    are treated as lying on it.
    """
    g = np.asarray(g_nodes, dtype=float)
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    if g.shape != (m + 1,):
        raise ParameterError(f"expected {m + 1} node samples, got {g.shape}")
    if abs(g[0]) > _SNAP or abs(g[-1]) > _SNAP:
        raise ParameterError("samples must vanish at both endpoints")
    u = g * (m / 2.0)
    if np.any(np.abs(np.diff(u)) > 1 + _SNAP):
        r = int(np.argmax(np.abs(np.diff(u)))) + 1
        raise ParameterError(
            f"node increment at r={r} exceeds 2/m; samples are not 2-Lipschitz")
    if rule == "floor":
        k = np.floor(u + _SNAP)
    elif rule == "nearest":
        k = np.floor(u + 0.5)
    else:
        raise ParameterError(f"unknown rounding rule {rule!r}")
    k[0] = k[-1] = 0
    # Roundoff on increments of exactly one quantum can produce a jump of 2.
    for r in range(1, m + 1):
        k[r] = min(max(k[r], k[r - 1] - 1), k[r - 1] + 1)
    if k[-1] != 0:
        raise ParameterError("rounded profile does not return to 0")
    return GammaCode(tuple(int(s) for s in np.diff(k)))


def relu_coeffs(code: GammaCode) -> GammaCoeffs:
    # Slope of gamma on segment r is (2/m) * steps[r] / (1/m) = 2 * steps[r].
    slopes = [2.0 * s for s in code.steps]
    c = [slopes[0]] + [b - a for a, b in zip(slopes, slopes[1:])]
    return GammaCoeffs(code.m, tuple(c))


def theta(coeffs: GammaCoeffs, a, b):
    """sum_r c_r relu(((m - r)/m) a - (r/m) b); broadcasts over arrays."""
    m = coeffs.m
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = sum(c * relu((m - r) / m * a - r / m * b)
              for r, c in enumerate(coeffs.c) if c != 0.0)
    if isinstance(out, int):
        out = np.zeros(np.broadcast(a, b).shape)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CacheAssignment:
    """Map t -> gamma_t for the T subintervals, plus the per-interval errors.

    ``interval_errors[t]`` is the exact sup over I_t of
    |f2(x) - gamma_t(Tx - t)/T|.
    """

    T: int
    m: int
    gamma_of_t: tuple[GammaCode, ...]
    gamma_set: tuple[GammaCode, ...] = field(default=())
    interval_errors: tuple[float, ...] = field(default=(), compare=False)
    rule: str = "nearest"

    def __post_init__(self):
        if len(self.gamma_of_t) != self.T:
            raise InvariantError(f"expected {self.T} codes, got {len(self.gamma_of_t)}")
        if any(g.m != self.m for g in self.gamma_of_t):
            raise InvariantError("all codes must have m steps")
        if not self.gamma_set:
            object.__setattr__(self, "gamma_set",
                               tuple(dict.fromkeys(self.gamma_of_t)))
        if set(self.gamma_set) != set(self.gamma_of_t):
            raise InvariantError("gamma_set must equal the set of assigned codes")

    @property
    def bound(self) -> float:
        return 2.0 / (self.T * self.m)

    def groups(self) -> dict[tuple[GammaCode, int], list[int]]:
        """Nonempty groups {t : gamma_t = gamma, t = i mod 3}, in cache order."""
        out: dict[tuple[GammaCode, int], list[int]] = {}
        for g in self.gamma_set:
            for i in range(3):
                ts = [t for t in range(i, self.T, 3) if self.gamma_of_t[t] == g]
                if ts:
                    out[(g, i)] = ts
        return out

    def residual_approximation(self) -> PwlFunction:
        """The function x -> gamma_t(Tx - t)/T on each I_t, as a PwlFunction."""
        T, m = self.T, self.m
        vals = np.zeros(T * m + 1)
        for t, g in enumerate(self.gamma_of_t):
            vals[t * m:(t + 1) * m + 1] = g.node_values() / T
        return PwlFunction.on_grid(np.arange(T * m + 1), T * m, vals)

    def to_dict(self) -> dict:
        return {"T": self.T, "m": self.m, "rule": self.rule,
                "gamma_of_t": [str(g) for g in self.gamma_of_t]}

    @classmethod
    def from_dict(cls, data: dict) -> "CacheAssignment":
        return cls(T=int(data["T"]), m=int(data["m"]),
                   gamma_of_t=tuple(GammaCode.parse(s) for s in data["gamma_of_t"]),
                   rule=data.get("rule", "nearest"))


def _interval_maxima(d: PwlFunction, T: int) -> np.ndarray:
    # d has every t/T among its nodes, so each interval is a run of nodes;
    # a node at t/T closes interval t-1 and opens interval t.
    num = np.array([int(v) * T for v in d.num], dtype=object) \
        if d.num.dtype == object else None
    if num is None and d.den % T == 0:
        step = d.den // T
        t, on_edge = d.num // step, d.num % step == 0
    else:
        num = num if num is not None else np.array([int(v) * T for v in d.num], dtype=object)
        t = np.array([v // d.den for v in num], dtype=np.int64)
        on_edge = np.array([v % d.den == 0 for v in num])
    vals = np.abs(d.values)
    out = np.zeros(T)
    np.maximum.at(out, np.minimum(t, T - 1).astype(np.intp), vals)
    closing = on_edge & (t > 0)
    np.maximum.at(out, (t[closing] - 1).astype(np.intp), vals[closing])
    return out


def assign_cache(f2: PwlFunction, T: int, m: int, rule: str = "nearest",
                 check: bool = True, tol: float = 1e-9) -> CacheAssignment:
    """Match each rescaled residual piece g(y) = T f2((t + y)/T) to a profile.

    With ``check`` the certificate sup_{I_t} |f2 - gamma_t(T. - t)/T| <= 2/(Tm)
    is verified exactly on every interval.
    """
    if T < 1 or m < 1:
        raise ParameterError(f"T and m must be >= 1, got T={T}, m={m}")
    samples = f2.values_on_grid(np.arange(T * m + 1), T * m)
    codes = []
    for t in range(T):
        g = T * samples[t * m:(t + 1) * m + 1]
        if abs(g[0]) > _SNAP or abs(g[-1]) > _SNAP:
            raise AssignmentError(
                f"residual does not vanish at the ends of interval t={t}", t)
        g[0] = g[-1] = 0.0
        try:
            codes.append(quantize(g, m, rule))
        except ParameterError as exc:
            raise AssignmentError(f"interval t={t}: {exc}", t) from None
    partial = CacheAssignment(T, m, tuple(codes), rule=rule)
    errors = _interval_maxima(subtract(f2, partial.residual_approximation()), T)
    if check:
        bad = np.nonzero(errors > partial.bound + tol)[0]
        if len(bad):
            t = int(bad[0])
            raise AssignmentError(
                f"interval t={t}: error {errors[t]:.6g} exceeds 2/(Tm) = "
                f"{partial.bound:.6g}", t)
    return CacheAssignment(T, m, partial.gamma_of_t, partial.gamma_set,
                           tuple(float(e) for e in errors), rule)
