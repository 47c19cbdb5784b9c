"""Config-driven experiment runner.

Configs are flat INI-style files with [problem], [solver], [diagnostics] and
[output] sections. Runs are deterministic given the config: all randomness
is seeded, and the emitted trace.csv zeroes the elapsed_s column so reruns
are byte-identical (measured times stay on the in-memory trace).

Exit codes: 0 all checks pass, 1 check failure, 2 usage/config error,
3 runtime error.
"""

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from .errors import ConfigError, ProxboundError
from .penalties import parse_spec_string, penalty_from_spec
from .proxgrad import (AdditiveProblem, ProxGradConfig, run_prox_gradient,
                       run_proximal_point)
from .proxlinear import CompositeProblem, ProxLinearConfig, run_prox_linear
from .smooth import load_dense_vector, map_from_spec, smooth_from_spec
from .vectors import as_vector

_KNOWN_KEYS = {
    "problem": {"kind", "penalty", "smooth", "h", "map", "f_convex",
                "beta_override", "x0", "seed"},
    "solver": {"method", "t0", "q", "eps", "max_iter", "inner_tol",
               "sigma_policy"},
    "diagnostics": {"constants", "samples", "nu", "seed", "sandwich",
                    "sandwich_points", "sandwich_t", "tail_rate",
                    "tail_fraction"},
    "output": {"dir"},
}

_FILE_PARAMS = ("file", "rhs", "labels", "path")


@dataclass
class ExperimentConfig:
    kind: str = "additive"
    penalty_spec: str = ""
    smooth_spec: str = ""
    h_spec: str = ""
    map_spec: str = ""
    f_convex: bool = True
    beta_override: float = None
    x0_spec: str = "zeros"
    seed: int = 0
    method: str = "proxgrad"
    t0: float = None
    q: float = 0.5
    eps: float = 1e-10
    max_iter: int = 20000
    inner_tol: float = 1e-10
    sigma: float = None
    constants: bool = False
    samples: int = 10000
    nu_spec: str = "gap0"
    diag_seed: int = None
    sandwich: bool = False
    sandwich_points: int = 100
    sandwich_t: float = None
    tail_rate: bool = False
    tail_fraction: float = 0.5
    out_dir: str = "out"
    echo: dict = field(default_factory=dict)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _check_spec_files(spec, where, violations):
    try:
        _, params = parse_spec_string(spec)
    except ValueError as exc:
        violations.append(f"{where}: {exc}")
        return
    for key in _FILE_PARAMS:
        if key in params and not os.path.isfile(params[key]):
            violations.append(f"{where}: missing file {params[key]!r}")


def parse_config(path):
    """Read and fully validate an experiment config.

    Collects every violation found (unknown keys, missing keys, bad values,
    missing referenced files) before raising.
    """
    if not os.path.isfile(path):
        raise ConfigError([f"config file not found: {path}"])
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError([f"config parse error: {exc}"]) from exc

    violations = []
    cfg = ExperimentConfig()

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            violations.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                violations.append(f"unknown key {key!r} in [{section}]")
            else:
                cfg.echo[f"{section}.{key}"] = parser[section][key]

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key).strip()
        return default

    def get_typed(section, key, conv, default, desc):
        raw = get(section, key)
        if raw is None:
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            violations.append(f"[{section}] {key}: {exc}")
            return default

    if not parser.has_section("problem"):
        violations.append("missing required section [problem]")
    if not parser.has_section("solver"):
        violations.append("missing required section [solver]")

    cfg.kind = (get("problem", "kind") or "").lower()
    if cfg.kind not in ("additive", "composite"):
        violations.append("[problem] kind must be 'additive' or 'composite'")
    cfg.penalty_spec = get("problem", "penalty") or ""
    if not cfg.penalty_spec:
        violations.append("[problem] penalty is required")
    else:
        try:
            penalty_from_spec(cfg.penalty_spec)
        except ValueError as exc:
            violations.append(f"[problem] penalty: {exc}")
    if cfg.kind == "additive":
        cfg.smooth_spec = get("problem", "smooth") or ""
        if not cfg.smooth_spec:
            violations.append("[problem] smooth is required for additive")
        else:
            _check_spec_files(cfg.smooth_spec, "[problem] smooth", violations)
    elif cfg.kind == "composite":
        cfg.h_spec = get("problem", "h") or ""
        cfg.map_spec = get("problem", "map") or ""
        if not cfg.h_spec:
            violations.append("[problem] h is required for composite")
        if not cfg.map_spec:
            violations.append("[problem] map is required for composite")
        else:
            _check_spec_files(cfg.map_spec, "[problem] map", violations)
    cfg.f_convex = get_typed("problem", "f_convex", _parse_bool, True, "bool")
    cfg.beta_override = get_typed("problem", "beta_override", float, None, "float")
    cfg.x0_spec = get("problem", "x0", "zeros")
    if cfg.x0_spec not in ("zeros",):
        try:
            name, params = parse_spec_string(cfg.x0_spec)
        except ValueError as exc:
            violations.append(f"[problem] x0: {exc}")
        else:
            if name == "file":
                if "path" not in params:
                    violations.append("[problem] x0 file(...) needs path=")
                elif not os.path.isfile(params["path"]):
                    violations.append(
                        f"[problem] x0: missing file {params['path']!r}")
            elif name == "const":
                if "value" not in params:
                    violations.append("[problem] x0 const(...) needs value=")
            else:
                violations.append(f"[problem] x0: unknown form {name!r}")
    cfg.seed = get_typed("problem", "seed", int, 0, "int")
    if cfg.seed is not None and cfg.seed < 0:
        violations.append("[problem] seed must be a nonnegative integer")

    cfg.method = (get("solver", "method") or "").lower()
    if cfg.method not in ("proxgrad", "proxlinear", "proxpoint-oracle"):
        violations.append(
            "[solver] method must be proxgrad|proxlinear|proxpoint-oracle")
    cfg.t0 = get_typed("solver", "t0", float, None, "float")
    if cfg.t0 is not None and cfg.t0 <= 0:
        violations.append("[solver] t0 must be positive")
    cfg.q = get_typed("solver", "q", float, 0.5, "float")
    if not 0.0 < cfg.q < 1.0:
        violations.append("q must lie in (0,1)")
    cfg.eps = get_typed("solver", "eps", float, 1e-10, "float")
    if cfg.eps <= 0:
        violations.append("[solver] eps must be positive")
    cfg.max_iter = get_typed("solver", "max_iter", int, 20000, "int")
    if cfg.max_iter <= 0:
        violations.append("[solver] max_iter must be positive")
    cfg.inner_tol = get_typed("solver", "inner_tol", float, 1e-10, "float")
    if cfg.inner_tol <= 0:
        violations.append("[solver] inner_tol must be positive")
    sigma_policy = get("solver", "sigma_policy", "adaptive")
    if sigma_policy != "adaptive":
        name, params = parse_spec_string(sigma_policy)
        if name == "fixed" and "sigma" in params:
            try:
                cfg.sigma = float(params["sigma"])
                if cfg.sigma <= 0:
                    violations.append("[solver] fixed sigma must be positive")
            except ValueError:
                violations.append("[solver] sigma_policy: bad sigma value")
        else:
            violations.append(
                "[solver] sigma_policy must be 'adaptive' or 'fixed(sigma=V)'")

    cfg.constants = get_typed("diagnostics", "constants", _parse_bool, False, "bool")
    cfg.samples = get_typed("diagnostics", "samples", int, 10000, "int")
    if cfg.samples <= 0:
        violations.append("[diagnostics] samples must be positive")
    cfg.nu_spec = get("diagnostics", "nu", "gap0")
    if cfg.nu_spec not in ("gap0", "inf"):
        try:
            float(cfg.nu_spec)
        except ValueError:
            violations.append("[diagnostics] nu must be gap0|inf|<float>")
    cfg.diag_seed = get_typed("diagnostics", "seed", int, None, "int")
    cfg.sandwich = get_typed("diagnostics", "sandwich", _parse_bool, False, "bool")
    cfg.sandwich_points = get_typed("diagnostics", "sandwich_points", int, 100, "int")
    cfg.sandwich_t = get_typed("diagnostics", "sandwich_t", float, None, "float")
    cfg.tail_rate = get_typed("diagnostics", "tail_rate", _parse_bool, False, "bool")
    cfg.tail_fraction = get_typed("diagnostics", "tail_fraction", float, 0.5, "float")
    if not 0.0 < cfg.tail_fraction <= 1.0:
        violations.append("[diagnostics] tail_fraction must lie in (0,1]")

    cfg.out_dir = get("output", "dir", "out")

    env_seed = os.environ.get("PROXBOUND_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
            cfg.echo["problem.seed"] = env_seed
        except ValueError:
            violations.append(f"PROXBOUND_SEED is not an integer: {env_seed!r}")

    if violations:
        raise ConfigError(violations)
    return cfg


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------

@dataclass
class CheckLine:
    name: str
    passed: bool
    slack: float

    def render(self):
        word = "PASS" if self.passed else "FAIL"
        return f"CHECK {self.name}: {word} slack={self.slack:.17g}"


@dataclass
class RunReport:
    config_echo: dict
    status: str
    iterations: int
    final_gnorm: float
    final_certificate: float
    trace: object
    constants: object = None
    checks: list = field(default_factory=list)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def summary_lines(self):
        lines = [f"status={self.status}",
                 f"iterations={self.iterations}",
                 f"final_gnorm={self.final_gnorm:.17g}",
                 f"final_certificate={self.final_certificate:.17g}"]
        for key in sorted(self.config_echo):
            lines.append(f"config {key}={self.config_echo[key]}")
        return lines


def _build_problem(cfg):
    g = penalty_from_spec(cfg.penalty_spec)
    if cfg.kind == "additive":
        f = smooth_from_spec(cfg.smooth_spec)
        if cfg.beta_override is not None:
            f.beta = cfg.beta_override
        return AdditiveProblem(f=f, g=g, f_convex=cfg.f_convex)
    h = penalty_from_spec(cfg.h_spec)
    c = map_from_spec(cfg.map_spec)
    beta = cfg.beta_override if cfg.beta_override is not None else None
    return CompositeProblem(g=g, h=h, c=c, beta=beta)


def _build_x0(cfg, dim):
    if cfg.x0_spec == "zeros":
        return np.zeros(dim)
    name, params = parse_spec_string(cfg.x0_spec)
    if name == "const":
        return np.full(dim, float(params["value"]))
    return as_vector(load_dense_vector(params["path"]), dim, "x0")


def _tolerance_slack(values, floor):
    """Smallest margin of values >= -floor (pass when nonnegative)."""
    return float(np.min(np.asarray(values) + floor)) if len(values) else 0.0


def run_experiment(cfg):
    """Build the instance, run the solver, evaluate every enabled check."""
    problem = _build_problem(cfg)
    x0 = _build_x0(cfg, problem.dim)
    checks = []

    if cfg.method == "proxgrad":
        solver_cfg = ProxGradConfig(t=cfg.t0, max_iter=cfg.max_iter, eps=cfg.eps)
        trace = run_prox_gradient(problem, x0, solver_cfg)
        t_used = trace.meta["t"]
        beta = problem.f.beta
    elif cfg.method == "proxpoint-oracle":
        solver_cfg = ProxGradConfig(t=cfg.t0, max_iter=cfg.max_iter, eps=cfg.eps)
        trace = run_proximal_point(problem, x0, solver_cfg)
        t_used = trace.meta["t"]
        beta = problem.f.beta
    else:
        solver_cfg = ProxLinearConfig(t0=cfg.t0, q=cfg.q, eps=cfg.eps,
                                      max_iter=cfg.max_iter,
                                      inner_tol=cfg.inner_tol, sigma=cfg.sigma)
        trace = run_prox_linear(problem, x0, solver_cfg)
        t_used = trace.column("t_accepted")[-1]
        beta = problem.beta

    phis = trace.column("phi")
    gnorms = trace.column("gnorm")
    phi_scale = 1.0 + float(np.max(np.abs(phis)))

    checks.append(CheckLine("converged", trace.status == "Converged",
                            cfg.eps - float(gnorms[-1])))
    drops = phis[:-1] - phis[1:]
    checks.append(CheckLine("monotone_values",
                            bool(np.all(drops >= -1e-12 * phi_scale)),
                            _tolerance_slack(drops, 1e-12 * phi_scale)))

    if cfg.method in ("proxgrad", "proxpoint-oracle"):
        resid = trace.column("descent_residual")[:-1]
        slack = _tolerance_slack(resid, 1e-10 * phi_scale)
        checks.append(CheckLine("descent_inequality", slack >= 0.0, slack))
        if cfg.method == "proxgrad":
            margins = []
            for k in range(len(trace.iterates) - 1):
                d = diag.dist_to_stationarity(problem, trace.iterates[k + 1])
                margins.append((1.0 + beta * t_used) * gnorms[k] - d)
            slack = _tolerance_slack(margins, 1e-8)
            checks.append(CheckLine("improved_certificate", slack >= 0.0, slack))
    else:
        resid = trace.column("decrease_residual")[:-1]
        slack = _tolerance_slack(resid, 1e-10 * phi_scale)
        checks.append(CheckLine("sufficient_decrease", slack >= 0.0, slack))
        expected = ((3.0 * problem.L * beta * trace.column("t_accepted") + 2.0)
                    * gnorms)
        diff = float(np.max(np.abs(expected - trace.column("certificate"))))
        checks.append(CheckLine("certificate_formula", diff == 0.0, -diff))
        margins = []
        for k, x in enumerate(trace.iterates):
            d = diag.dist_to_stationarity(problem, x)
            margins.append(d - 0.5 * gnorms[k])
        slack = _tolerance_slack(margins, 1e-8)
        checks.append(CheckLine("half_bound", slack >= 0.0, slack))

    constants = None
    ref = None
    diag_seed = cfg.diag_seed if cfg.diag_seed is not None else cfg.seed
    if cfg.constants or cfg.sandwich or cfg.tail_rate:
        ref = diag.analytic_reference(problem)
        if ref is None:
            ref = diag.compute_reference(problem, x0=trace.final_x, t=cfg.t0,
                                         tol=1e-12)
    if cfg.constants:
        gap0 = float(phis[0] - ref.phi_star)
        if cfg.nu_spec == "gap0":
            nu = gap0 if gap0 > 0 else float("inf")
        elif cfg.nu_spec == "inf":
            nu = float("inf")
        else:
            nu = float(cfg.nu_spec)
        constants = diag.estimate_constants(problem, ref, nu, t_used,
                                            n_samples=cfg.samples,
                                            seed=diag_seed,
                                            inner_tol=cfg.inner_tol)
        L_eff = 1.0 if cfg.method != "proxlinear" else problem.L
        lbg = L_eff * beta * constants.gamma_hat
        constants.extras["natural_rate_bound"] = 1.0 - 1.0 / (25.0 + 10.0 * lbg)
        bound = diag.iteration_bound(beta, nu, constants.gamma_hat,
                                     float(ref.dist(x0)) ** 2, gap0, cfg.eps)
        constants.extras["iteration_bound"] = bound
        for name, (ok, slack) in constants.checks.items():
            checks.append(CheckLine(f"constants_{name}", ok, slack))
    if cfg.sandwich:
        if cfg.method == "proxlinear" or not problem.f_convex:
            checks.append(CheckLine("sandwich_skipped_nonconvex", True,
                                    float("inf")))
        else:
            s_t = cfg.sandwich_t if cfg.sandwich_t is not None else 0.5 / beta
            rng = np.random.default_rng(diag_seed)
            center = ref.center()
            radius = 1.0 + float(np.max(np.abs(center)))
            pts = center + rng.uniform(-radius, radius,
                                       size=(cfg.sandwich_points, problem.dim))
            rep = diag.verify_sandwich(problem, s_t, pts, cfg.inner_tol)
            checks.append(CheckLine("sandwich_lower",
                                    rep.min_lower_slack >= -1e-8,
                                    rep.min_lower_slack + 1e-8))
            checks.append(CheckLine("sandwich_upper",
                                    rep.min_upper_slack >= -1e-8,
                                    rep.min_upper_slack + 1e-8))
    if cfg.tail_rate:
        try:
            rate = diag.fit_tail_rate(trace, ref.phi_star, cfg.tail_fraction)
            checks.append(CheckLine("tail_rate", rate < 1.0, 1.0 - rate))
            if constants is not None:
                constants.extras["tail_rate"] = rate
        except ProxboundError:
            # too short a trace to fit: vacuous pass
            checks.append(CheckLine("tail_rate", True, float("inf")))

    final_cert = float(trace.column("certificate")[-1])
    return RunReport(config_echo=dict(cfg.echo), status=trace.status,
                     iterations=trace.iterations,
                     final_gnorm=float(gnorms[-1]),
                     final_certificate=final_cert, trace=trace,
                     constants=constants, checks=checks)


def emit_report(report, out_dir):
    """Write trace.csv, constants.txt and report.txt into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    report.trace.write_csv(os.path.join(out_dir, "trace.csv"),
                           zero_elapsed=True)
    with open(os.path.join(out_dir, "constants.txt"), "w",
              encoding="ascii", newline="\n") as fh:
        if report.constants is not None:
            fh.write(report.constants.to_text())
    lines = report.summary_lines() + [c.render() for c in report.checks]
    with open(os.path.join(out_dir, "report.txt"), "w",
              encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return [os.path.join(out_dir, name)
            for name in ("trace.csv", "constants.txt", "report.txt")]


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="proxbound",
        description="Run proximal-method experiments from a config file.")
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="run an experiment")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--quiet", action="store_true")
    check_p = sub.add_parser("check", help="validate a config without running")
    check_p.add_argument("config")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"config error: {line}", file=sys.stderr)
        return 2

    if args.command == "check":
        print(f"{args.config}: OK")
        return 0

    out_dir = args.out if args.out is not None else cfg.out_dir
    try:
        report = run_experiment(cfg)
        emit_report(report, out_dir)
    except ProxboundError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    if not args.quiet:
        for line in report.summary_lines():
            print(line)
        for check in report.checks:
            print(check.render())
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
