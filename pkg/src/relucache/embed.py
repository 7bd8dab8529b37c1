"""Compile an adaptive network into the standard width-5 deep architecture.

The subnetworks are laid out one after another along the depth.  Row roles
in every layer:

    row 0  input pass-through (identity of x)
    row 1  the unit currently being computed (a P2, Q2 or Q4 unit)
    row 2  accumulation line for Q3[gamma, i, 0]
    row 3  accumulation line for Q3[gamma, i, 1]
    row 4  running sum of the final output

Each segment has an entry layer, a body of one layer per computed unit, and
an exit layer that flushes the last contribution.  Hence the spans
T + 2 (interpolant), 6 N_{gamma,i} + 2 (first stage of a residual
subnetwork) and m + 2 (second stage).

Linear units are either kept as linear-mode units (``exact-linear``) or
realized by ReLU units whose intercept keeps them in the identity regime
(``strict-relu``).  The intercepts come from a sound interval bound on every
pre-activation over x in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .adaptive_net import AdaptiveNet
from .errors import ConstructionError, InfeasibleBudget, ParameterError
from .relu_net import Layer, Network

__all__ = [
    "WIDTH",
    "EXACT_LINEAR",
    "STRICT_RELU",
    "Segment",
    "EmbedPlan",
    "BoundCertificate",
    "Embedding",
    "depth_bound",
    "param_formula",
    "choose_params",
    "n_min",
    "embed_standard",
]

WIDTH = 5
PASS, WORK, LINE0, LINE1, ACC = range(WIDTH)
ROWS = {"pass": PASS, "work": WORK, "lines": (LINE0, LINE1), "acc": ACC}
EXACT_LINEAR = "exact-linear"
STRICT_RELU = "strict-relu"
MODES = (EXACT_LINEAR, STRICT_RELU)


def depth_bound(T: int, m: int, gamma_count: int) -> int:
    """Hidden layers used by the layout when every (gamma, i) group is present."""
    return 7 * T + 3 * (m + 4) * gamma_count + 2


def _m_for(N: int) -> int:
    # floor(log_3(N) / 2) without floating point: largest m with 9**m <= N.
    m = 0
    while 9 ** (m + 1) <= N:
        m += 1
    return m


def param_formula(N: int) -> tuple[int, int]:
    """T = floor(N/8) and m = floor(log_3(N)/2); requires both >= 1."""
    if N < 1:
        raise ParameterError(f"depth budget must be positive, got {N}")
    T, m = N // 8, _m_for(N)
    if T < 1 or m < 1:
        raise InfeasibleBudget(
            f"N={N} gives T={T}, m={m}; both must be >= 1", n_min=n_min(1))
    return T, m


def n_min(gamma_count: int | None = None) -> int:
    """Smallest N from which every larger budget fits the layout.

    ``gamma_count=None`` uses the worst case |Gamma| = 3**m for each N;
    otherwise the given count of profiles in use.
    """
    last_bad = 8  # N <= 8 gives m = 0
    for m in range(1, 64):
        lo, hi = 9 ** m, 9 ** (m + 1) - 1
        count = 3 ** m if gamma_count is None else gamma_count
        need = 3 * (m + 4) * count + 2
        # N = 8k + s fits iff N - 7k = k + s >= need; the largest failure is 8(need - 1).
        bad = min(8 * (need - 1), hi)
        if bad >= lo:
            last_bad = bad
    return last_bad + 1


def choose_params(N: int, gamma_count: int | None = None) -> tuple[int, int]:
    """(T, m) for budget N, checked against the depth bound.

    The check uses |Gamma| = 3**m unless ``gamma_count`` is given.
    """
    T, m = param_formula(N)
    count = 3 ** m if gamma_count is None else gamma_count
    need = depth_bound(T, m, count)
    if need > N:
        req = n_min(gamma_count)
        raise InfeasibleBudget(
            f"N={N}: T={T}, m={m}, |Gamma|={count} needs {need} layers; "
            f"budgets from N_min={req} fit", n_min=req)
    return T, m


@dataclass(frozen=True)
class Segment:
    kind: str  # "f1", "f2-stage1" or "f2-stage2"
    start: int
    span: int
    gamma: str | None = None
    i: int | None = None
    terms: int | None = None  # N_{gamma,i}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "start": self.start, "span": self.span,
                "gamma": self.gamma, "i": self.i, "terms": self.terms,
                "rows": "pass=0 work=1 lines=2,3 acc=4"}


@dataclass
class EmbedPlan:
    segments: list[Segment]
    mode: str
    T: int
    m: int
    gamma_count: int

    @property
    def depth(self) -> int:
        return sum(s.span for s in self.segments)

    @property
    def bound(self) -> int:
        return depth_bound(self.T, self.m, self.gamma_count)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "T": self.T, "m": self.m,
                "gamma_count": self.gamma_count, "depth": self.depth,
                "segments": [s.to_dict() for s in self.segments]}

    def table(self) -> str:
        lines = ["kind        start  span  gamma      i  terms"]
        for s in self.segments:
            lines.append(f"{s.kind:<11} {s.start:>5} {s.span:>5}  "
                         f"{s.gamma or '-':<9} {'-' if s.i is None else s.i:>2} "
                         f"{'-' if s.terms is None else s.terms:>5}")
        return "\n".join(lines)


@dataclass
class BoundCertificate:
    """Sound pre-activation ranges over x in [0, 1] and the chosen intercepts.

    ``lo``/``hi`` bound the pre-activation of each unit as computed by the
    logical (linear-mode) net; ``intercept`` is the shift added to units in
    ``identity`` so that their ReLU never clips.
    """

    lo: np.ndarray
    hi: np.ndarray
    intercept: np.ndarray
    identity: np.ndarray

    def check(self, net: Network, xs) -> bool:
        """Verify on sample points that identity-regime units never clip."""
        W, b, r, _ = net.packed
        pre = kernels.min_preactivation(W, b, r, np.asarray(xs, dtype=float))
        return bool(np.all(pre[self.identity] >= 0.0))

    def min_margin(self, net: Network, xs) -> float:
        W, b, r, _ = net.packed
        pre = kernels.min_preactivation(W, b, r, np.asarray(xs, dtype=float))
        return float(pre[self.identity].min()) if self.identity.any() else math.inf


class Embedding(NamedTuple):
    network: Network
    plan: EmbedPlan
    certificate: BoundCertificate | None


class _Builder:
    """Logical width-5 layers: weights, biases and relu flags."""

    def __init__(self):
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        self.relu: list[np.ndarray] = []

    def layer(self):
        first = not self.W
        W, b = np.zeros((WIDTH, WIDTH)), np.zeros(WIDTH)
        relu = np.ones(WIDTH, dtype=bool)  # unused units stay inert relu
        W[PASS, PASS] = 1.0  # in the first layer slot 0 holds x
        relu[PASS] = False
        if not first:
            W[ACC, ACC] = 1.0
        relu[ACC] = False
        self.W.append(W)
        self.b.append(b)
        self.relu.append(relu)
        return W, b, relu

    def arrays(self):
        return np.array(self.W), np.array(self.b), np.array(self.relu)


def _embed_f1(B: _Builder, net: AdaptiveNet) -> Segment:
    start, T = len(B.W), net.T
    for s in range(T + 2):
        W, b, relu = B.layer()
        if s == 0:
            b[ACC] += net.h
        if 1 <= s <= T:
            W[WORK, PASS] = 1.0
            b[WORK] = -(s - 1) / T
        if s >= 2:
            W[ACC, WORK] = net.w[s - 2]
    return Segment("f1", start, T + 2)


def _embed_stage1(B: _Builder, net: AdaptiveNet, ts: list[int], label: str, i: int) -> Segment:
    start, T = len(B.W), net.T
    units = [(t, j, q) for t in ts for j in (0, 1) for q in (-1, 0, 1)]
    n = len(units)
    for s in range(n + 2):
        W, b, relu = B.layer()
        relu[LINE0] = relu[LINE1] = False
        if s >= 1:
            W[LINE0, LINE0] = W[LINE1, LINE1] = 1.0
        if 1 <= s <= n:
            t, j, q = units[s - 1]
            W[WORK, PASS] = float(T)
            b[WORK] = -float(t + q + j)
        if s >= 2:
            _, j, q = units[s - 2]
            W[LINE0 + j, WORK] = net.alpha[q]
    return Segment("f2-stage1", start, n + 2, label, i, len(ts))


def _embed_stage2(B: _Builder, net: AdaptiveNet, c: tuple[float, ...], label: str, i: int) -> Segment:
    start, T, m = len(B.W), net.T, net.m
    for s in range(m + 2):
        W, b, relu = B.layer()
        if s <= m - 1:
            relu[LINE0] = relu[LINE1] = False
            W[LINE0, LINE0] = W[LINE1, LINE1] = 1.0
        if 1 <= s <= m:
            r = s - 1
            W[WORK, LINE1] = (m - r) / m
            W[WORK, LINE0] = -r / m
        if s >= 2:
            W[ACC, WORK] = c[s - 2] / T
    return Segment("f2-stage2", start, m + 2, label, i)


_EPS = np.finfo(float).eps


def _intervals(W, b, relu):
    """Outward-rounded interval bounds on logical pre-activations."""
    L = W.shape[0]
    lo_out, hi_out = np.zeros((L, WIDTH)), np.zeros((L, WIDTH))
    vlo, vhi = np.zeros(WIDTH), np.zeros(WIDTH)
    vhi[0] = 1.0  # x in [0, 1]
    for l in range(L):
        Wp, Wn = np.maximum(W[l], 0.0), np.minimum(W[l], 0.0)
        lo = Wp @ vlo + Wn @ vhi + b[l]
        hi = Wp @ vhi + Wn @ vlo + b[l]
        mag = np.abs(W[l]) @ np.maximum(np.abs(vlo), np.abs(vhi)) + np.abs(b[l])
        slack = (WIDTH + 2) * 2 * _EPS * mag + np.finfo(float).tiny
        lo, hi = lo - slack, hi + slack
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConstructionError(f"unbounded pre-activation interval in layer {l}")
        lo_out[l], hi_out[l] = lo, hi
        vlo = np.where(relu[l], np.maximum(lo, 0.0), lo)
        vhi = np.where(relu[l], np.maximum(hi, 0.0), hi)
    return lo_out, hi_out


def _to_network(W, b, relu, w_out, b_out, identity_regime, meta) -> Network:
    layers = [Layer(W[l] if l else W[l][:, :1], b[l], relu[l]) for l in range(W.shape[0])]
    return Network(layers, w_out, b_out, identity_regime=identity_regime, meta=meta)


def embed_standard(net: AdaptiveNet, mode: str = EXACT_LINEAR,
                   prune_zero: bool = False) -> Embedding:
    """Width-5 standard network computing the same function as ``net``.

    ``prune_zero`` drops the subnetworks of the zero profile, whose output
    weights all vanish.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    B = _Builder()
    segments = [_embed_f1(B, net)]
    for (g, i), ts in net.groups().items():
        if prune_zero and g.is_zero:
            continue
        label = str(g)
        segments.append(_embed_stage1(B, net, ts, label, i))
        segments.append(_embed_stage2(B, net, net.coeffs_of_gamma[g].c, label, i))
    W, b, relu = B.arrays()
    w_out = np.zeros(WIDTH)
    w_out[ACC] = 1.0
    plan = EmbedPlan(segments, mode, net.T, net.m, len(net.gamma_used))
    meta = {"T": net.T, "m": net.m, "mode": mode, "prune_zero": prune_zero,
            "depth_convention": "hidden layers only"}

    if mode == EXACT_LINEAR:
        network = _to_network(W, b, relu, w_out, 0.0, True, meta)
        return Embedding(network, plan, None)

    lo, hi = _intervals(W, b, relu)
    identity = ~relu
    shift = np.where(identity, np.ceil(np.maximum(-lo, 0.0)) + 1.0, 0.0)
    b_real = b + shift
    b_real[1:] -= np.einsum("lkj,lj->lk", W[1:], shift[:-1])
    b_out = -float(w_out @ shift[-1])
    network = _to_network(W, b_real, np.ones_like(relu), w_out, b_out, False, meta)
    return Embedding(network, plan, BoundCertificate(lo, hi, shift, identity))
