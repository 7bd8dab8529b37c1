"""The f-dependent shallow network and its closed-form reference.

The approximant is ``f1 + f2_hat`` where ``f1`` interpolates f at t/T and
``f2_hat`` equals gamma_t(Tx - t)/T on each [t/T, (t+1)/T).  The network
computes ``f1`` with one ReLU per breakpoint, and ``f2_hat`` with shared
subnetworks: for each profile gamma and residue class i = t mod 3, the
tooth functions of all intervals using gamma are summed before they enter
a single copy of the theta gadget.

Unit naming follows the layered description of the network: ``P2[t]``,
``Q2[t, j, q]``, ``Q3[gamma, i, j]``, ``Q4[gamma, i, r]``, with outputs
``P3`` and ``Q5`` summed into ``Z``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .cache import (ALPHA, CacheAssignment, GammaCode, GammaCoeffs, assign_cache,
                    relu, relu_coeffs, theta, tooth)
from .errors import DomainError, ParameterError
from .pwl import (PwlFunction, add, interpolate, lipschitz_constant, subtract,
                  sup_norm)

__all__ = [
    "Approximant",
    "AdaptiveNet",
    "approximate",
    "build_adaptive",
    "eval_adaptive",
    "eval_formula",
    "mod3_forms",
    "check_mod3_identity",
]

_BALL_TOL = 1e-9
# Callable targets are snapshotted on a grid this much finer than 1/(Tm).
SNAPSHOT_REFINE = 8


@dataclass(frozen=True, eq=False)
class Approximant:
    """The cache-based approximation of f, before any network is built."""

    f: PwlFunction
    T: int
    m: int
    f1: PwlFunction
    f2: PwlFunction
    assignment: CacheAssignment

    @property
    def bound(self) -> float:
        return 2.0 / (self.T * self.m)

    def as_pwl(self) -> PwlFunction:
        """f1 + f2_hat as an exact PwlFunction (continuous since gamma(0) = gamma(1) = 0)."""
        return add(self.f1, self.assignment.residual_approximation())


def _check_ball(f: PwlFunction) -> None:
    lip, sup = lipschitz_constant(f), sup_norm(f)
    if lip > 1 + _BALL_TOL or sup > 1 + _BALL_TOL:
        raise ParameterError(
            f"target is not in the unit ball: Lipschitz constant {lip:.6g}, "
            f"sup norm {sup:.6g}")


def approximate(f: Union[PwlFunction, Callable[[float], float]], T: int, m: int,
                rule: str = "nearest", check: bool = True) -> Approximant:
    if T < 1 or m < 1:
        raise ParameterError(f"T and m must be >= 1, got T={T}, m={m}")
    if not isinstance(f, PwlFunction):
        f = interpolate(f, T * m * SNAPSHOT_REFINE)
    _check_ball(f)
    f1 = interpolate(f, T)
    f2 = subtract(f, f1)
    assignment = assign_cache(f2, T, m, rule=rule, check=check)
    return Approximant(f, T, m, f1, f2, assignment)


@dataclass(frozen=True, eq=False)
class AdaptiveNet:
    """Weights of the f-dependent network.

    ``w`` and ``h`` define the interpolant as sum_t w_t relu(x - t/T) + h;
    ``coeffs_of_gamma`` holds the ReLU expansion of every profile in use.
    """

    T: int
    m: int
    h: float
    w: tuple[float, ...]
    assignment: CacheAssignment
    coeffs_of_gamma: dict[GammaCode, GammaCoeffs]
    approximant: Approximant | None = field(default=None, compare=False)

    alpha = ALPHA

    @property
    def gamma_used(self) -> tuple[GammaCode, ...]:
        return self.assignment.gamma_set

    def groups(self) -> dict[tuple[GammaCode, int], list[int]]:
        return self.assignment.groups()

    def to_dict(self) -> dict:
        return {
            "format": "relucache-adaptive/1",
            "T": self.T,
            "m": self.m,
            "h": self.h,
            "w": list(self.w),
            "assignment": self.assignment.to_dict(),
            "coefficients": {str(g): list(c.c) for g, c in self.coeffs_of_gamma.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AdaptiveNet":
        if data.get("format") != "relucache-adaptive/1":
            raise ParameterError("not a relucache-adaptive/1 document")
        assignment = CacheAssignment.from_dict(data["assignment"])
        m = int(data["m"])
        coeffs = {GammaCode.parse(k): GammaCoeffs(m, tuple(float(c) for c in v))
                  for k, v in data["coefficients"].items()}
        missing = set(assignment.gamma_set) - set(coeffs)
        if missing:
            raise ParameterError(f"no coefficients for codes {sorted(map(str, missing))}")
        return cls(int(data["T"]), m, float(data["h"]),
                   tuple(float(x) for x in data["w"]), assignment, coeffs)


def build_adaptive(f, T: int, m: int, rule: str = "nearest") -> AdaptiveNet:
    approx = approximate(f, T, m, rule=rule)
    vals = approx.f1.values
    slopes = np.diff(vals) * T
    w = np.concatenate(([slopes[0]], np.diff(slopes)))
    coeffs = {g: relu_coeffs(g) for g in approx.assignment.gamma_set}
    return AdaptiveNet(T, m, float(vals[0]), tuple(float(x) for x in w),
                       approx.assignment, coeffs, approx)


def _as_points(x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > 1)):
        raise DomainError("evaluation point outside [0, 1]")
    return xa


def eval_adaptive(net: AdaptiveNet, x):
    """Evaluate the network unit by unit (vectorized over the points)."""
    xa = _as_points(x)
    T, m = net.T, net.m
    R = xa  # input unit shared by both subnetworks

    P3 = np.full(xa.shape, net.h)
    for t in range(T):
        P2_t = relu(R - t / T)
        P3 = P3 + net.w[t] * P2_t

    Q5 = np.zeros(xa.shape)
    for (g, i), ts in net.groups().items():
        Q3 = {0: np.zeros(xa.shape), 1: np.zeros(xa.shape)}
        for t in ts:
            for j in (0, 1):
                for q in (-1, 0, 1):
                    Q2 = relu(T * R - t - q - j)
                    Q3[j] = Q3[j] + net.alpha[q] * Q2
        c = net.coeffs_of_gamma[g].c
        for r in range(m):
            Q4 = relu((m - r) / m * Q3[1] - r / m * Q3[0])
            Q5 = Q5 + (c[r] / T) * Q4
    Z = P3 + Q5
    return float(Z) if Z.ndim == 0 else Z


def eval_formula(approx: Approximant, x):
    """f1(x) + gamma_t(Tx - t)/T with t = floor(Tx), x = 1 taken in the last interval."""
    xa = _as_points(x)
    T, m = approx.T, approx.m
    table = np.array([g.node_values() for g in approx.assignment.gamma_of_t])
    t = np.minimum(np.floor(T * xa), T - 1).astype(int)
    y = T * xa - t
    r = np.minimum(np.floor(y * m), m - 1).astype(int)
    lam = y * m - r
    gamma = table[t, r] * (1 - lam) + table[t, r + 1] * lam
    out = approx.f1(xa) + gamma / T
    return float(out) if np.ndim(out) == 0 else out


def _case(g: GammaCode, i: int, t0: int, net: AdaptiveNet) -> int:
    if i != t0 % 3:
        return 1
    return 3 if net.assignment.gamma_of_t[t0] == g else 2


def mod3_forms(net: AdaptiveNet, x: float) -> list[tuple[GammaCode, int, float, float, int]]:
    """Both forms of each partial sum f2_{gamma,i} at x.

    Returns ``(gamma, i, terms_summed_outside, teeth_summed_inside, case)``
    for every gamma in use and i in {0, 1, 2}; ``case`` labels the branch of
    the argument (1: wrong residue, 2: other profile, 3: the active term).
    """
    x = float(_as_points(x))
    T = net.T
    t0 = min(math.floor(T * x), T - 1)
    out = []
    for g in net.gamma_used:
        coeffs = net.coeffs_of_gamma[g]
        for i in range(3):
            ts = [t for t in range(i, T, 3) if net.assignment.gamma_of_t[t] == g]
            a = [float(tooth(T * x - t - 1)) for t in ts]
            b = [float(tooth(T * x - t)) for t in ts]
            outside = sum(theta(coeffs, ai, bi) for ai, bi in zip(a, b))
            inside = theta(coeffs, sum(a), sum(b))
            out.append((g, i, float(outside), float(inside), _case(g, i, t0, net)))
    return out


def check_mod3_identity(net: AdaptiveNet, x: float, tol: float = 1e-10,
                        cases: Counter | None = None) -> bool:
    """True when the two forms agree for every (gamma, i) at x.

    If ``cases`` is given, it counts the case-analysis branches visited.
    """
    ok = True
    for _, _, outside, inside, case in mod3_forms(net, x):
        if cases is not None:
            cases[case] += 1
        ok = ok and abs(outside - inside) <= tol
    return ok
