"""Experiment harness: problem generation, solver runs, CSV traces, curves.

The CSV trace is the single persisted artifact.  Its column contract is::

    solver,k,n_grad_g,n_grad_h,n_Ay,n_ATx,dist_sq_x,dist_sq_y,bound_value,eps_k,delta_k

with empty cells where a column does not apply, one ``# params: {json}``
comment line before the header carrying the solver's scalar parameter echo,
``# aux <name>: [json array]`` comment lines after the rows for the
solver-specific certification series, and a ``# totals: a b c d`` footer.
Reading the file back reconstructs a trace that certifies bit-identically
to the in-memory one.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .catalyst import CatalystAcceleratedPrimalDual, CatalystSplitProximalPoint
from .certify import monitor_bound, monitors_for
from .errors import ConfigError
from .problem import (
    PROBLEM_SPEC_KEYS,
    OracleTally,
    problem_from_spec,
    reference_saddle,
    rescale_to_equal_smoothness,
)
from .solvers import (
    AcceleratedGradient,
    AcceleratedPrimalDual,
    InexactAcceleratedPrimalDual,
    InexactSplitProximalPoint,
    RunTrace,
    SplitProximalPoint,
)

SOLVER_TOKENS = (
    "agd",
    "apfb",
    "dppa",
    "dippa",
    "aipfb",
    "catalyst-dippa",
    "catalyst-aipfb",
)

TRACE_COLUMNS = (
    "solver", "k", "n_grad_g", "n_grad_h", "n_Ay", "n_ATx",
    "dist_sq_x", "dist_sq_y", "bound_value", "eps_k", "delta_k",
)

CONFIG_FIELDS = (
    "seed", "dx", "dy", "Lx", "Ly", "mux", "muy", "normA",
    "solver", "eps", "max_outer", "out_path",
)


@dataclass
class ExperimentConfig:
    """Knobs of one benchmark run."""

    seed: int
    dx: int
    dy: int
    Lx: float
    Ly: float
    mux: float
    muy: float
    normA: float
    solver: str
    eps: float
    max_outer: int
    out_path: str

    def validate(self):
        if int(self.seed) != self.seed:
            raise ConfigError("seed: must be an integer")
        for field in ("dx", "dy", "max_outer"):
            value = getattr(self, field)
            if int(value) != value or value < 1:
                raise ConfigError(f"{field}: must be a positive integer, got {value}")
        if not (0 < self.mux <= self.Lx):
            raise ConfigError(f"mux/Lx: need 0 < mux <= Lx, got {self.mux}, {self.Lx}")
        if not (0 < self.muy <= self.Ly):
            raise ConfigError(f"muy/Ly: need 0 < muy <= Ly, got {self.muy}, {self.Ly}")
        if self.normA < 0:
            raise ConfigError(f"normA: must be nonnegative, got {self.normA}")
        if self.solver not in SOLVER_TOKENS:
            raise ConfigError(f"solver: unknown token {self.solver!r}")
        if not self.eps > 0:
            raise ConfigError(f"eps: must be positive, got {self.eps}")
        if not self.out_path:
            raise ConfigError("out_path: must be a nonempty path")
        return self

    def problem_spec(self):
        return {key: getattr(self, key) for key in PROBLEM_SPEC_KEYS}


def config_from_dict(data):
    unknown = set(data) - set(CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = set(CONFIG_FIELDS) - set(data)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    return ExperimentConfig(**data).validate()


def load_config(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def generate_problem(cfg):
    """Instantiate the configured problem and its exact saddle point."""
    if isinstance(cfg, ExperimentConfig):
        spec = cfg.problem_spec()
    else:
        spec = {key: cfg[key] for key in PROBLEM_SPEC_KEYS}
    problem = problem_from_spec(spec)
    return problem, reference_saddle(problem)


def initial_point(cfg, problem):
    """Seed-deterministic starting iterates for a run."""
    seed = cfg.seed if isinstance(cfg, ExperimentConfig) else cfg["seed"]
    child = int(np.random.SeedSequence(int(seed)).generate_state(6)[5])
    rng = np.random.default_rng(child)
    return rng.standard_normal(problem.dx), rng.standard_normal(problem.dy)


_ESTIMATORS = {
    "apfb": AcceleratedPrimalDual,
    "dppa": SplitProximalPoint,
    "dippa": InexactSplitProximalPoint,
    "aipfb": InexactAcceleratedPrimalDual,
    "catalyst-dippa": CatalystSplitProximalPoint,
    "catalyst-aipfb": CatalystAcceleratedPrimalDual,
}

_NEEDS_EQUAL_SMOOTHNESS = {"dppa", "dippa", "catalyst-dippa", "catalyst-aipfb"}


def _run_agd_embedding(cfg, problem, reference):
    # pure-minimization embedding: with no coupling the saddle decouples,
    # the y block is pinned at its own minimizer and momentum descent
    # handles the x block
    if cfg.normA != 0:
        raise ConfigError("solver: agd requires normA = 0 (decoupled embedding)")
    x0, _ = initial_point(cfg, problem)
    est = AcceleratedGradient(max_iter=cfg.max_outer)
    est.fit(problem.g, x0=x0, target_eps=cfg.eps)
    return est.x_, reference.y_star, est.trace_, est.tally_


def run_experiment(cfg, write=True):
    """Run the configured solver and persist its trace.

    Returns ``(trace, reports)``; callers decide what a failed report
    means (the CLI exits nonzero).
    """
    cfg.validate()
    problem, reference = generate_problem(cfg)
    if cfg.solver == "agd":
        x, y, trace, tally = _run_agd_embedding(cfg, problem, reference)
    else:
        x0, y0 = initial_point(cfg, problem)
        pre_scale = 1.0
        if cfg.solver in _NEEDS_EQUAL_SMOOTHNESS and cfg.Lx != cfg.Ly:
            problem, pre_scale = rescale_to_equal_smoothness(problem)
            reference = reference_saddle(problem)
            y0 = y0 / pre_scale
        est = _ESTIMATORS[cfg.solver](max_iter=cfg.max_outer)
        tally = OracleTally()
        est.fit(problem, x0=x0, y0=y0, reference=reference,
                target_eps=cfg.eps, tally=tally)
        x, y = est.x_, est.y_
        trace = est.trace_
        if pre_scale != 1.0:
            trace.params["pre_scale"] = pre_scale
    trace.params.setdefault("seed", int(cfg.seed))
    trace.params.setdefault("eps", float(cfg.eps))
    if write:
        write_trace_csv(trace, cfg.out_path)
    reports = [monitor_bound(trace, name) for name in monitors_for(cfg.solver)]
    return trace, reports


def _cell(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(trace, path):
    """Serialize a trace; the write is whole-file atomic (write then rename)."""
    lines = [f"# params: {json.dumps(trace.params, sort_keys=True)}"]
    lines.append(",".join(TRACE_COLUMNS))
    for i in range(len(trace)):
        tally = trace.tallies[i]
        row = (
            trace.solver, str(trace.k[i]),
            str(tally[0]), str(tally[1]), str(tally[2]), str(tally[3]),
            _cell(trace.dist_sq_x[i]), _cell(trace.dist_sq_y[i]),
            _cell(trace.bound[i]), _cell(trace.eps[i]), _cell(trace.delta[i]),
        )
        lines.append(",".join(row))
    for name in trace.aux:
        lines.append(f"# aux {name}: {json.dumps(trace.aux[name])}")
    totals = trace.totals
    lines.append(f"# totals: {totals[0]} {totals[1]} {totals[2]} {totals[3]}")
    payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _TallyView:
    """Adapts stored snapshots to the RunTrace.append interface."""

    def __init__(self, snapshot):
        self._snapshot = snapshot

    def snapshot(self):
        return self._snapshot


def _parse_cell(text):
    return math.nan if text == "" else float(text)


def read_trace_csv(path):
    """Reconstruct a RunTrace from its CSV serialization."""
    params = {}
    aux = {}
    totals = None
    rows = []
    header_seen = False
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("# params:"):
                params = json.loads(line[len("# params:"):])
            elif line.startswith("# aux "):
                name, _, payload = line[len("# aux "):].partition(": ")
                aux[name] = [float(v) for v in json.loads(payload)]
            elif line.startswith("# totals:"):
                totals = tuple(int(v) for v in line[len("# totals:"):].split())
            elif line.startswith("#"):
                continue
            elif not header_seen:
                if line != ",".join(TRACE_COLUMNS):
                    raise ConfigError(f"unexpected trace header: {line!r}")
                header_seen = True
            else:
                rows.append(line.split(","))
    if not header_seen:
        raise ConfigError("trace file has no header row")
    solver = rows[0][0] if rows else params.get("solver", "")
    trace = RunTrace(solver, params)
    for row in rows:
        if len(row) != len(TRACE_COLUMNS):
            raise ConfigError(f"malformed trace row: {row!r}")
        snapshot = tuple(int(v) for v in row[2:6])
        trace.append(
            int(row[1]),
            _parse_cell(row[6]),
            _parse_cell(row[7]),
            _TallyView(snapshot),
            bound=_parse_cell(row[8]),
            eps=_parse_cell(row[9]),
            delta=_parse_cell(row[10]),
        )
    trace.aux = aux
    if totals is not None and trace.tallies and totals != trace.tallies[-1]:
        raise ConfigError(
            f"totals footer {totals} disagrees with final row {trace.tallies[-1]}"
        )
    return trace


@dataclass
class BoundCurvePoint:
    """Oracle-call orders at one coupling norm, unit constants, logs dropped."""

    normA: float
    this_paper: float
    wang: float
    lin: float
    nesterov: float
    lower: float


def complexity_curves(Lx, Ly, mux, muy, normA_grid):
    """Theoretical oracle-complexity orders across a coupling-norm grid.

    Five rows per grid point: the double-resolvent method's order
    ``|A|/sqrt(mux muy) + (kx ky (kx+ky))^(1/4)``, the inexact primal-dual
    order ``sqrt(|A| L / (mux muy)) + sqrt(kx+ky)`` with
    ``L = max(|A|, Lx)``, the proximal-best order
    ``|A|/sqrt(mux muy) + sqrt(kx ky)``, the plain extragradient-style
    order ``|A|/mux + |A|/muy + kx + ky``, and the lower bound
    ``|A|/sqrt(mux muy) + sqrt(kx+ky)``.
    """
    if len(normA_grid) == 0:
        raise ConfigError("normA_grid: must be nonempty")
    kx, ky = Lx / mux, Ly / muy
    root = math.sqrt(mux * muy)
    points = []
    for a in normA_grid:
        a = float(a)
        coupling = a / root
        points.append(BoundCurvePoint(
            normA=a,
            this_paper=coupling + (kx * ky * (kx + ky)) ** 0.25,
            wang=math.sqrt(a * max(a, Lx) / (mux * muy)) + math.sqrt(kx + ky),
            lin=coupling + math.sqrt(kx * ky),
            nesterov=a / mux + a / muy + kx + ky,
            lower=coupling + math.sqrt(kx + ky),
        ))
    return points


CURVES_COLUMNS = ("normA", "this_paper", "wang", "lin", "nesterov", "lower")


def curves_csv_text(points):
    lines = [",".join(CURVES_COLUMNS)]
    for pt in points:
        lines.append(",".join(
            repr(getattr(pt, col)) for col in CURVES_COLUMNS
        ))
    return "\n".join(lines) + "\n"


def write_curves_csv(points, path):
    payload = curves_csv_text(points)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_grid(spec):
    """Parse ``start:stop:log50`` / ``start:stop:lin20`` grid descriptions."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid: expected start:stop:scaleN, got {spec!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"grid: bad endpoints in {spec!r}") from exc
    tail = parts[2]
    if tail.startswith("log"):
        scale, count = "log", tail[3:]
    elif tail.startswith("lin"):
        scale, count = "lin", tail[3:]
    else:
        raise ConfigError(f"grid: scale must be log or lin, got {tail!r}")
    try:
        n = int(count)
    except ValueError as exc:
        raise ConfigError(f"grid: bad point count in {spec!r}") from exc
    if n < 1:
        raise ConfigError("grid: need at least one point")
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError("grid: log scale needs positive endpoints")
        return np.geomspace(start, stop, n)
    return np.linspace(start, stop, n)
