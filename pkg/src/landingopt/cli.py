"""Batch front-end: parse flat key-value configs, run solves, emit trace
CSVs and summary JSONs, and expose the equivalence suite.

Subcommands: `run <config>`, `verify [--seed S] [--profile small|medium]`,
`bench <config-dir> --jobs N`.  The LANDING_LOG environment variable
(error|info|debug) controls verbosity.
"""

import argparse
import concurrent.futures
import json
import logging
import os
import sys
import time

import numpy as np

from . import metrics, solvers
from .exceptions import PropertyViolatedError
from .oracles import equivalence_suite
from .problems import make_sphere_problem, make_stiefel_problem

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_MAX_ITER = 2
EXIT_STALLED = 3
EXIT_INPUT = 4
EXIT_PROPERTY = 5

_STATUS_EXIT = {
    solvers.CONVERGED: EXIT_OK,
    solvers.MAX_ITERATIONS: EXIT_MAX_ITER,
    solvers.LINE_SEARCH_STALLED: EXIT_STALLED,
    solvers.RANK_DEFICIENT: EXIT_RUNTIME,
    solvers.DIVERGED: EXIT_RUNTIME,
}


class ConfigError(ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        where = f" (line {lineno})" if lineno is not None else ""
        super().__init__(f"{message}{where}")


def parse_config_text(text):
    """Parse `key = value` lines with dotted keys; '#' starts a comment."""
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        values[key] = value
        lines[key] = lineno
    return values, lines


_KNOWN_KEYS = {
    "problem.kind", "problem.n", "problem.p", "problem.seed", "problem.cost",
    "metric.kind", "metric.beta", "normal_op", "solver",
    "ls.eta", "ls.beta_bt", "ls.rho", "ls.mu0", "ls.grad_tol", "ls.feas_tol",
    "ls.max_iter", "ls.max_backtracks",
    "fixed.alpha", "fixed.region_bound",
    "init.seed", "out",
}

_PROBLEM_KINDS = ("sphere", "brockett", "procrustes")
_METRIC_KINDS = ("euclidean", "canonical", "beta")
_SOLVERS = ("landing_ls", "landing_fixed", "newton_landing", "sqp_ref")


class RunConfig:
    """Validated run description built from a flat config mapping."""

    def __init__(self, values, lines=None):
        lines = lines or {}

        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}", lines.get(key))

        def get(key, default=None, required=False):
            if key in values:
                return values[key]
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default

        for key in values:
            if key not in _KNOWN_KEYS:
                raise ConfigError(f"unknown key {key!r}", lines.get(key))

        self.problem_kind = get("problem.kind", required=True)
        if self.problem_kind not in _PROBLEM_KINDS:
            fail("problem.kind", f"must be one of {_PROBLEM_KINDS}")
        self.n = _to_int(get("problem.n", required=True), "problem.n", lines)
        self.p = _to_int(get("problem.p", "1"), "problem.p", lines)
        self.seed = _to_int(get("problem.seed", "0"), "problem.seed", lines)
        cost = get("problem.cost")
        self.cost = None
        if cost is not None:
            if self.problem_kind != "sphere":
                fail("problem.cost", "only valid for the sphere problem")
            try:
                self.cost = np.array([float(v) for v in cost.split(",")])
            except ValueError:
                fail("problem.cost", "must be comma-separated floats")

        self.metric_kind = get("metric.kind", "euclidean")
        if self.metric_kind not in _METRIC_KINDS:
            fail("metric.kind", f"must be one of {_METRIC_KINDS}")
        beta = get("metric.beta")
        if self.metric_kind == "beta":
            if beta is None:
                fail("metric.kind", "metric.beta required for the beta metric")
            self.beta = _to_float(beta, "metric.beta", lines)
            if self.beta <= 0:
                fail("metric.beta", "must be positive")
        elif beta is not None:
            fail("metric.beta", "only valid when metric.kind = beta")
        else:
            self.beta = None
        if self.metric_kind in ("canonical", "beta") and self.problem_kind == "sphere":
            fail("metric.kind", "Stiefel metrics need a matrix problem")

        normal_op = get("normal_op", "identity")
        if normal_op not in metrics.NormalOperatorChoice.KINDS:
            fail("normal_op", f"must be one of {metrics.NormalOperatorChoice.KINDS}")
        self.normal_op = metrics.NormalOperatorChoice(normal_op)

        self.solver = get("solver", "landing_ls")
        if self.solver not in _SOLVERS:
            fail("solver", f"must be one of {_SOLVERS}")
        alpha = get("fixed.alpha")
        if self.solver == "landing_fixed":
            if alpha is None:
                fail("solver", "fixed.alpha required for landing_fixed")
            self.alpha = _to_float(alpha, "fixed.alpha", lines)
        elif alpha is not None:
            fail("fixed.alpha", "only valid when solver = landing_fixed")
        else:
            self.alpha = None
        self.region_bound = _to_float(get("fixed.region_bound", "10.0"),
                                      "fixed.region_bound", lines)

        self.ls = solvers.LandingConfig(
            eta=_to_float(get("ls.eta", "1e-4"), "ls.eta", lines),
            beta_bt=_to_float(get("ls.beta_bt", "0.5"), "ls.beta_bt", lines),
            rho=_to_float(get("ls.rho", "0.1"), "ls.rho", lines),
            mu0=_to_float(get("ls.mu0", "1.0"), "ls.mu0", lines),
            grad_tol=_to_float(get("ls.grad_tol", "1e-6"), "ls.grad_tol", lines),
            feas_tol=_to_float(get("ls.feas_tol", "1e-8"), "ls.feas_tol", lines),
            max_iter=_to_int(get("ls.max_iter", "2000"), "ls.max_iter", lines),
            max_backtracks=_to_int(get("ls.max_backtracks", "60"),
                                   "ls.max_backtracks", lines),
        )
        self.init_seed = _to_int(get("init.seed", str(self.seed + 1)),
                                 "init.seed", lines)
        self.out = get("out", "runs/out")

    @classmethod
    def from_path(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            values, lines = parse_config_text(fh.read())
        return cls(values, lines)

    def build_problem(self):
        if self.problem_kind == "sphere":
            cost = self.cost
            if cost is None:
                cost = np.zeros(self.n)
                cost[0] = 1.0
            return make_sphere_problem(self.n, cost)
        return make_stiefel_problem(self.problem_kind, self.n, self.p, self.seed)

    def build_metric(self):
        if self.metric_kind == "euclidean":
            return metrics.EuclideanMetric()
        if self.metric_kind == "canonical":
            return metrics.stiefel_canonical_metric()
        return metrics.stiefel_beta_metric(self.beta)

    def initial_point(self, prob):
        rng = np.random.Generator(np.random.PCG64(self.init_seed))
        if self.problem_kind == "sphere":
            x0 = rng.standard_normal(self.n)
            return x0 / np.linalg.norm(x0) * 1.3
        q, _ = np.linalg.qr(rng.standard_normal((self.n, self.p)))
        return prob.vec(q)


def _to_int(value, key, lines):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected an integer, got {value!r}",
                          lines.get(key)) from None


def _to_float(value, key, lines):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}",
                          lines.get(key)) from None


def format_trace_csv(trace):
    """Trace rows with floats at 17 significant digits (round-trip exact)."""
    out = ["k,f,feas,grad_norm_g,mu,alpha,merit,backtracks"]
    for row in trace:
        out.append(",".join([
            str(row.k),
            format(row.f, ".17g"),
            format(row.feas, ".17g"),
            format(row.grad_norm_g, ".17g"),
            format(row.mu, ".17g"),
            format(row.alpha, ".17g"),
            format(row.merit, ".17g"),
            str(row.backtracks),
        ]))
    return "\n".join(out) + "\n"


def execute_run(config):
    """Run a validated config; returns (SolveResult, wall_ms)."""
    prob = config.build_problem()
    metric = config.build_metric()
    x0 = config.initial_point(prob)
    start = time.perf_counter()
    if config.solver == "landing_ls":
        result = solvers.landing_linesearch_solve(prob, metric, config.normal_op,
                                                  config.ls, x0)
    elif config.solver == "landing_fixed":
        result = solvers.landing_fixed_step_solve(
            prob, metric, config.normal_op, config.alpha, config.ls.max_iter,
            x0, region_bound=config.region_bound,
            grad_tol=config.ls.grad_tol, feas_tol=config.ls.feas_tol)
    elif config.solver == "newton_landing":
        result = solvers.newton_landing_solve(
            prob, x0, max_iter=config.ls.max_iter,
            grad_tol=config.ls.grad_tol, feas_tol=config.ls.feas_tol)
    else:
        result = solvers.sqp_reference_solve(
            prob, x0, max_iter=config.ls.max_iter,
            grad_tol=config.ls.grad_tol, feas_tol=config.ls.feas_tol)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return result, wall_ms


def write_outputs(out_dir, result, wall_ms):
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    with open(trace_path, "wb") as fh:
        fh.write(format_trace_csv(result.trace).encode("utf-8"))
    last = result.trace[-1]
    summary = {
        "status": result.status,
        "iterations": last.k,
        "final_f": last.f,
        "final_feas": last.feas,
        "final_grad_norm": last.grad_norm_g,
        "mu_final": result.mu_final,
        "wall_ms": wall_ms,
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return trace_path


def cmd_run(config_path):
    try:
        config = RunConfig.from_path(config_path)
    except (ConfigError, OSError) as exc:
        print(f"{config_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    result, wall_ms = execute_run(config)
    write_outputs(config.out, result, wall_ms)
    logger.info("run %s: status=%s iterations=%d", config_path, result.status,
                result.trace[-1].k)
    return _STATUS_EXIT[result.status]


def cmd_verify(seed, profile, inject_fault=False):
    try:
        report = equivalence_suite(seed=seed, size_profile=profile,
                                   fault="wrong_adjoint" if inject_fault else None)
    except PropertyViolatedError as exc:
        print(f"property violated: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    print(report.table())
    print(f"all equivalence properties within {report.tol:g} "
          f"over {report.n_instances} instances")
    return EXIT_OK


def cmd_bench(config_dir, jobs):
    try:
        names = sorted(f for f in os.listdir(config_dir) if f.endswith(".cfg"))
    except OSError as exc:
        print(f"{config_dir}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not names:
        print(f"{config_dir}: no .cfg files found", file=sys.stderr)
        return EXIT_INPUT
    paths = [os.path.join(config_dir, name) for name in names]
    codes = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(cmd_run, path): path for path in paths}
        for fut in concurrent.futures.as_completed(futures):
            codes[futures[fut]] = fut.result()
    for path in paths:
        print(f"{path}: exit {codes[path]}")
    return EXIT_OK if all(code == EXIT_OK for code in codes.values()) else EXIT_RUNTIME


def main(argv=None):
    level = os.environ.get("LANDING_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level))

    parser = argparse.ArgumentParser(prog="landing-opt",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one config, write trace and summary")
    p_run.add_argument("config")

    p_verify = sub.add_parser("verify", help="run the equivalence suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--profile", choices=("small", "medium"),
                          default="small")
    p_verify.add_argument("--inject-fault", action="store_true",
                          help="corrupt an adjoint to demonstrate detection")

    p_bench = sub.add_parser("bench", help="run every .cfg in a directory")
    p_bench.add_argument("config_dir")
    p_bench.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "verify":
        return cmd_verify(args.seed, args.profile, args.inject_fault)
    return cmd_bench(args.config_dir, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
