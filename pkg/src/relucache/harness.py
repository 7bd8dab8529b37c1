"""Experiment engine: build, embed, measure and compare against interpolation.

For every (function, depth budget) pair the construction is built with
T = floor(N/8), m = floor(log_3(N)/2), embedded into a width-5 network, and
measured three ways (closed form, adaptive network, embedded network).  The
baseline is plain interpolation granted as many nodes as the embedded
network has weights.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .adaptive_net import AdaptiveNet, build_adaptive, eval_adaptive, eval_formula
from .embed import (MODES, STRICT_RELU, depth_bound, embed_standard,
                    n_min, param_formula)
from .errors import InfeasibleBudget, ParameterError
from .pwl import (PwlFunction, UnitBallSpec, interpolate, make_unit_ball_function,
                  sup_dist)
from .relu_net import forward, weight_count

__all__ = [
    "SCHEMA",
    "ExperimentConfig",
    "RunRecord",
    "RateFit",
    "parse_corpus",
    "load_config",
    "grid_points",
    "run_params",
    "run_single",
    "run_baseline",
    "sweep",
    "write_csv",
    "fit_rate",
]

SCHEMA = "relucache-sweep/1"
FEASIBILITY = ("used", "worst-case")


@dataclass
class ExperimentConfig:
    depths: list[int]
    corpus: list[UnitBallSpec]
    grid: int = 10_000
    mode: str = STRICT_RELU
    prune_zero: bool = True
    out: str | None = None
    seed: int = 0
    feasibility: str = "used"
    rule: str = "nearest"
    timing: bool = False

    def __post_init__(self):
        if not self.depths or any(int(n) < 1 for n in self.depths):
            raise ParameterError("depths must be a nonempty list of positive integers")
        self.depths = [int(n) for n in self.depths]
        if not self.corpus:
            raise ParameterError("corpus is empty")
        if self.grid < 1000:
            raise ParameterError(f"grid resolution must be >= 1000, got {self.grid}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.feasibility not in FEASIBILITY:
            raise ParameterError(f"feasibility must be one of {FEASIBILITY}")
        if self.rule not in ("nearest", "floor"):
            raise ParameterError("quantizer must be 'nearest' or 'floor'")


def parse_corpus(text: str, seed: int = 0) -> list[UnitBallSpec]:
    """Comma-separated corpus specs.

    ``pwl-random:K=37:count=5`` expands to five specs with seeds
    ``seed, seed+1, ...``; ``pwl-random:K=37`` without a seed uses ``seed``.
    """
    specs: list[UnitBallSpec] = []
    for item in (s.strip() for s in text.replace(";", ",").split(",")):
        if not item:
            continue
        parts = item.split(":")
        count = None
        kept = []
        for p in parts:
            if p.startswith("count="):
                count = int(p[len("count="):])
            else:
                kept.append(p)
        base = ":".join(kept)
        if base.startswith("pwl-random") and "seed=" not in base:
            n = count or 1
            specs.extend(UnitBallSpec.parse(f"{base}:seed={seed + k}") for k in range(n))
        else:
            if count is not None:
                raise ParameterError(f"count= only applies to pwl-random without a seed: {item!r}")
            specs.append(UnitBallSpec.parse(base))
    if not specs:
        raise ParameterError("corpus is empty")
    return specs


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a ``key = value`` config file (``#`` starts a comment)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        raw[key.strip().replace("-", "_")] = val.strip()
    known = {"depths", "corpus", "grid", "mode", "prune_zero", "out", "seed",
             "feasibility", "quantizer", "timing"}
    unknown = set(raw) - known
    if unknown:
        raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    if "depths" not in raw or "corpus" not in raw:
        raise ParameterError("config needs 'depths' and 'corpus'")

    def flag(key: str, default: bool) -> bool:
        if key not in raw:
            return default
        try:
            return _BOOL[raw[key].lower()]
        except KeyError:
            raise ParameterError(f"{key} must be true or false") from None

    try:
        seed = int(raw.get("seed", 0))
        depths = [int(x) for x in raw["depths"].replace(";", ",").split(",") if x.strip()]
        grid = int(raw.get("grid", 10_000))
    except ValueError as exc:
        raise ParameterError(f"bad numeric value in {path}: {exc}") from None
    return ExperimentConfig(
        depths=depths,
        corpus=parse_corpus(raw["corpus"], seed),
        grid=grid,
        mode=raw.get("mode", STRICT_RELU),
        prune_zero=flag("prune_zero", True),
        out=raw.get("out"),
        seed=seed,
        feasibility=raw.get("feasibility", "used"),
        rule=raw.get("quantizer", "nearest"),
        timing=flag("timing", False),
    )


@dataclass
class RunRecord:
    function_id: str
    N: int | None
    T: int
    m: int
    gamma_used: int = 0
    depth: int = 0
    depth_bound: int = 0
    weights: int = 0
    error: float = math.nan
    bound: float = math.nan
    error_tm: float = math.nan
    baseline_nodes: int = 0
    baseline_error: float = math.nan
    ratio: float = math.nan
    max_deviation: float = math.nan
    status: str = "ok"
    n_min: int | None = None
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def summary(self) -> str:
        return "\n".join(f"{f.name}: {getattr(self, f.name)}" for f in fields(self))


def grid_points(T: int, m: int, n: int) -> np.ndarray:
    """Uniform n-point grid on [0, 1] plus every breakpoint k/(Tm)."""
    pts = np.concatenate((np.linspace(0.0, 1.0, n), np.arange(T * m + 1) / (T * m)))
    return np.unique(pts)


def run_baseline(f: PwlFunction, weight_budget: int) -> float:
    """Sup error of interpolation at ``weight_budget`` equispaced nodes."""
    if weight_budget < 2:
        raise ParameterError(f"baseline needs at least 2 nodes, got {weight_budget}")
    return sup_dist(f, interpolate(f, int(weight_budget) - 1))


def _measure(f: PwlFunction, net: AdaptiveNet, config: ExperimentConfig,
             function_id: str, N: int | None) -> RunRecord:
    T, m = net.T, net.m
    emb = embed_standard(net, config.mode, config.prune_zero)
    X = grid_points(T, m, config.grid)
    by_formula = eval_formula(net.approximant, X)
    by_adaptive = eval_adaptive(net, X)
    by_network = forward(emb.network, X)
    dev = max(np.max(np.abs(by_formula - by_adaptive)),
              np.max(np.abs(by_adaptive - by_network)),
              np.max(np.abs(by_formula - by_network)))
    exact = sup_dist(f, net.approximant.as_pwl())
    measured = float(np.max(np.abs(f(X) - by_network)))
    error = max(exact, measured)
    nu = weight_count(emb.network)
    base = run_baseline(f, nu)
    bound = 2.0 / (T * m)
    return RunRecord(
        function_id=function_id, N=N, T=T, m=m,
        gamma_used=len(net.gamma_used),
        depth=emb.network.depth,
        depth_bound=depth_bound(T, m, len(net.gamma_used)),
        weights=nu,
        error=error,
        bound=bound,
        error_tm=error * T * m,
        baseline_nodes=nu,
        baseline_error=base,
        ratio=error / base if base > 0 else math.inf,
        max_deviation=float(dev),
    )


def run_params(spec: UnitBallSpec, T: int, m: int, config: ExperimentConfig) -> RunRecord:
    """One run at explicit (T, m), bypassing the depth-budget rule."""
    t0 = time.perf_counter()
    f = make_unit_ball_function(spec)
    net = build_adaptive(f, T, m, rule=config.rule)
    rec = _measure(f, net, config, spec.id, None)
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_single(spec: UnitBallSpec, N: int, config: ExperimentConfig) -> RunRecord:
    """One run at depth budget N; infeasible budgets come back as skipped."""
    t0 = time.perf_counter()
    f = make_unit_ball_function(spec)
    try:
        T, m = param_formula(N)
    except InfeasibleBudget as exc:
        return RunRecord(spec.id, N, N // 8, 0, status="skipped", n_min=exc.n_min)
    if config.feasibility == "worst-case" and depth_bound(T, m, 3 ** m) > N:
        return RunRecord(spec.id, N, T, m, depth_bound=depth_bound(T, m, 3 ** m),
                         status="skipped", n_min=n_min(None))
    net = build_adaptive(f, T, m, rule=config.rule)
    count = len(net.gamma_used)
    if depth_bound(T, m, count) > N:
        return RunRecord(spec.id, N, T, m, gamma_used=count,
                         depth_bound=depth_bound(T, m, count),
                         status="skipped", n_min=n_min(count))
    rec = _measure(f, net, config, spec.id, N)
    rec.wall_time = time.perf_counter() - t0
    return rec


_COLUMNS = ["row_type", "function_id", "N", "T", "m", "gamma_used", "depth",
            "depth_bound", "weights", "error", "bound", "error_tm",
            "baseline_nodes", "baseline_error", "ratio", "max_deviation",
            "status", "n_min"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def _summaries(records: list[RunRecord]) -> list[dict]:
    rows = []
    for N in sorted({r.N for r in records}):
        ok = [r for r in records if r.N == N and r.ok]
        if not ok:
            continue
        err = max(r.error for r in ok)
        base = max(r.baseline_error for r in ok)
        T, m = ok[0].T, ok[0].m
        rows.append({
            "row_type": "summary", "function_id": f"corpus-max({len(ok)})",
            "N": N, "T": T, "m": m,
            "gamma_used": max(r.gamma_used for r in ok),
            "depth": max(r.depth for r in ok),
            "depth_bound": max(r.depth_bound for r in ok),
            "weights": max(r.weights for r in ok),
            "error": err, "bound": 2.0 / (T * m), "error_tm": err * T * m,
            "baseline_nodes": min(r.baseline_nodes for r in ok),
            "baseline_error": base,
            "ratio": err / base if base > 0 else math.inf,
            "max_deviation": max(r.max_deviation for r in ok),
            "status": "ok", "n_min": None,
        })
    return rows


def write_csv(records: list[RunRecord], stream, timing: bool = False) -> None:
    cols = _COLUMNS + (["wall_time"] if timing else [])
    stream.write(f"# schema: {SCHEMA}\n")
    stream.write("# ratio = error / baseline_error; the interpolation baseline only "
                 "bounds the continuous-selection rate from above, so the ratio is a "
                 "conservative proxy\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(cols)
    for r in records:
        row = {"row_type": "run", **asdict(r)}
        writer.writerow([_fmt(row[c]) for c in cols])
    for s in _summaries(records):
        writer.writerow([_fmt(s.get(c)) for c in cols])


def sweep(config: ExperimentConfig) -> list[RunRecord]:
    """Run every (function, N) pair and write the CSV report if ``config.out`` is set."""
    handle = open(config.out, "w", newline="") if config.out else None
    try:
        records = [run_single(spec, N, config)
                   for spec in config.corpus for N in config.depths]
        records.sort(key=lambda r: (r.function_id, r.N))
        if handle is not None:
            buf = io.StringIO()
            write_csv(records, buf, config.timing)
            handle.write(buf.getvalue())
    finally:
        if handle is not None:
            handle.close()
    return records


@dataclass
class RateFit:
    """Intercepts of log(error) under two fixed-slope models."""

    c_tm: float  # error ~ c / (T m)
    c_nlnn: float  # error ~ c / (N ln N)
    residuals_tm: np.ndarray
    residuals_nlnn: np.ndarray

    @property
    def spread_tm(self) -> float:
        return float(np.ptp(self.residuals_tm))

    @property
    def spread_nlnn(self) -> float:
        return float(np.ptp(self.residuals_nlnn))


def fit_rate(records: Iterable[RunRecord]) -> RateFit:
    recs = [r for r in records if r.ok and r.error > 0 and r.N]
    if len({r.N for r in recs}) < 3:
        raise ParameterError("rate fit needs records at three or more distinct N")
    log_err = np.log([r.error for r in recs])
    log_tm = np.log([r.T * r.m for r in recs])
    log_nlnn = np.log([r.N * math.log(r.N) for r in recs])
    a_tm = log_err + log_tm
    a_nl = log_err + log_nlnn
    return RateFit(float(np.exp(a_tm.mean())), float(np.exp(a_nl.mean())),
                   a_tm - a_tm.mean(), a_nl - a_nl.mean())
