"""Command-line front end: ``fbspec <command> [options]``.

Configuration comes from an optional flat ``key=value`` file (``#`` starts a
comment, lists are written ``key=[a,b,c]``, model parameters as
``param.<name>=value``); command-line flags override file values.

Exit codes: 0 success, 1 configuration error, 2 solver terminal condition,
3 I/O error.
"""

import argparse
import ast
import csv
import io
import json
import logging
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import __version__, harness, mms, model, stepper

logger = logging.getLogger("fbspec")

COMMANDS = ("solve", "mms", "time-study", "space-study", "stability", "self-convergence")
CASES = ("example1", "example2", "base-model")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class OutputPathError(ConfigError):
    """The configured output location cannot be written."""


@dataclass
class RunConfig:
    command: str = "solve"
    case: str = "example1"
    N: int = 100
    M: int = 100
    T: float = 1.0
    M_list: list = field(default_factory=lambda: [100, 200, 1000])
    N_list: list = field(default_factory=lambda: [10, 20, 100])
    N_ref: int = 600
    M_ref: int = 20000
    eps_list: list = field(default_factory=lambda: [1e-6, 1e-8, 1e-10])
    stride: int = 1
    out: Optional[str] = None
    paper_literal: bool = False
    relax_admissibility: bool = False
    bootstrap: str = "exact"  # exact | euler (exact only applies to manufactured cases)
    radius_mode: str = "extrapolated"
    components: str = "both"
    workers: int = 1
    params: dict = field(default_factory=dict)

    def model_params(self):
        """Default parameter set with overrides applied.

        The default set already breaks w1 > 1; overrides are rejected only
        for admissibility violations they add, unless relaxed.
        """
        base = model.default_params()
        if not self.params:
            return base
        merged = base.with_overrides(**self.params)
        if not self.relax_admissibility:
            def rule(msg):
                return msg.split(", got")[0]

            inherited = {rule(v) for v in base.violations(strict=True)}
            added = [v for v in merged.violations(strict=True) if rule(v) not in inherited]
            if added:
                raise model.AdmissibilityError("; ".join(added))
        return merged

    def problem(self):
        prm = self.model_params()
        prob = harness.make_problem(
            self.case, prm, paper_literal=self.paper_literal, exact_bootstrap=self.bootstrap == "exact"
        )
        return replace(prob, radius_mode=self.radius_mode)


_KEYS = {f.name for f in fields(RunConfig)} - {"params"}
_INT_KEYS = {"N", "M", "N_ref", "M_ref", "stride", "workers"}
_INT_LISTS = {"M_list", "N_list"}
_BOOL_KEYS = {"paper_literal", "relax_admissibility"}


def _norm_key(key):
    key = key.strip().replace("-", "_")
    lowered = {k.lower(): k for k in _KEYS}
    return lowered.get(key.lower(), key)


def _parse_bool(key, text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_list(key, text, cast):
    t = str(text).strip()
    if not (t.startswith("[") and t.endswith("]")):
        raise ConfigError(f"{key}: expected a list like [a,b,c], got {text!r}")
    items = [s.strip() for s in t[1:-1].split(",") if s.strip()]
    try:
        return [cast(s) for s in items]
    except ValueError:
        raise ConfigError(f"{key}: bad list entry in {text!r}") from None


def _as_int(s):
    v = ast.literal_eval(s.strip()) if isinstance(s, str) else s
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ValueError(s)
    return v


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return _as_int(value)
        if key == "T":
            return float(value)
        if key in _INT_LISTS:
            return value if isinstance(value, list) else _parse_list(key, value, _as_int)
        if key == "eps_list":
            return value if isinstance(value, list) else _parse_list(key, value, float)
        if key in _BOOL_KEYS:
            return value if isinstance(value, bool) else _parse_bool(key, value)
    except (ValueError, SyntaxError):
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    return str(value).strip() if value is not None else None


def read_config_file(path):
    """Flat key=value pairs from a file, with ``param.<name>`` entries
    collected under ``params``."""
    values, params = {}, {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("param."):
            params[key[len("param.") :]] = value
        else:
            values[key] = value
    return values, params


def _parse_param_value(name, text):
    if name not in model.PARAM_NAMES:
        raise ConfigError(f"unknown model parameter {name!r}")
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"param.{name}: cannot parse {text!r}") from None


def parse_config(path=None, overrides=None, param_overrides=None):
    """Build a validated RunConfig.

    Precedence: defaults < file < ``overrides``.  Unknown keys and every
    violated constraint are reported by name.
    """
    raw, raw_params = ({}, {}) if path is None else read_config_file(path)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    raw_params.update(param_overrides or {})

    cfg = RunConfig()
    for key, value in raw.items():
        nk = _norm_key(key)
        if nk not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, nk, _coerce(nk, value))
    cfg.params = {name: _parse_param_value(name, v) for name, v in raw_params.items()}

    problems = validate(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    check_output_path(cfg.out)
    return cfg


def validate(cfg):
    out = []
    if cfg.command not in COMMANDS:
        out.append(f"command must be one of {', '.join(COMMANDS)}, got {cfg.command!r}")
    if cfg.case not in CASES:
        out.append(f"case must be one of {', '.join(CASES)}, got {cfg.case!r}")
    for k in ("N", "M", "N_ref", "M_ref", "stride", "workers"):
        if getattr(cfg, k) < 1:
            out.append(f"{k} must be a positive integer, got {getattr(cfg, k)}")
    if cfg.M < 2:
        out.append(f"M must be at least 2, got {cfg.M}")
    if not cfg.T > 0:
        out.append(f"T must be positive, got {cfg.T}")
    for k in ("M_list", "N_list"):
        vals = getattr(cfg, k)
        if not vals:
            out.append(f"{k} is empty")
        elif any(v < 1 for v in vals):
            out.append(f"{k} entries must be positive integers")
        elif any(b <= a for a, b in zip(vals, vals[1:])):
            out.append(f"{k}: list not increasing")
    if any(M < 2 for M in cfg.M_list):
        out.append("M_list entries must be at least 2")
    if not cfg.eps_list or any(not e > 0 for e in cfg.eps_list):
        out.append("eps_list entries must be positive")
    if cfg.N_list and cfg.N_ref < max(cfg.N_list):
        out.append(f"N_ref={cfg.N_ref} must be at least max(N_list)={max(cfg.N_list)}")
    if cfg.M_list and cfg.M_ref < max(cfg.M_list):
        out.append(f"M_ref={cfg.M_ref} must be at least max(M_list)={max(cfg.M_list)}")
    if cfg.M_list and any(cfg.M_ref % m for m in cfg.M_list):
        out.append("M_ref must be a multiple of every M_list entry")
    if cfg.bootstrap not in ("exact", "euler"):
        out.append(f"bootstrap must be 'exact' or 'euler', got {cfg.bootstrap!r}")
    if cfg.radius_mode not in ("extrapolated", "lagged"):
        out.append(f"radius_mode must be 'extrapolated' or 'lagged', got {cfg.radius_mode!r}")
    if cfg.components not in ("both", "parabolic", "velocity"):
        out.append(f"components must be both, parabolic or velocity, got {cfg.components!r}")
    if cfg.case == "base-model" and cfg.command in ("mms", "time-study"):
        out.append(f"{cfg.command} needs a manufactured case; base-model has no exact solution")
    if cfg.params:
        try:
            cfg.model_params()
        except model.AdmissibilityError as err:
            hint = "" if cfg.relax_admissibility else " (pass --relax-admissibility to accept)"
            out.append(f"model parameters: {err}{hint}")
    return out


def check_output_path(path):
    """Fail early, before any solve, if ``path`` or its .meta sibling cannot be written."""
    if not path:
        return
    target = Path(path)
    parent = target.resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OutputPathError(f"output directory not writable: {parent}")
    for p in (target, target.with_suffix(".meta")):
        if p.is_dir() or (p.exists() and not os.access(p, os.W_OK)):
            raise OutputPathError(f"output path not writable: {p}")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def fmt(x):
    """17 significant digits, blank for missing values."""
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def version_string():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def report_table(report):
    """(header, rows) for an ErrorReport, StabilityReport or Trajectory."""
    if isinstance(report, harness.ErrorReport):
        return ["level", "e_inf", "rate"], [[fmt(n), fmt(e), fmt(s)] for n, e, s in report.rows()]
    if isinstance(report, harness.StabilityReport):
        return ["eps", "diff", "ratio"], [[fmt(e), fmt(d), fmt(r)] for e, d, r in report.rows()]
    if isinstance(report, stepper.Trajectory):
        n = len(report.p_nodes[0]) if report.p_nodes else report.N + 1
        header = ["t", "R", "v1"] + [f"p_node_{i}" for i in range(n)]
        rows = [
            [fmt(t), fmt(R), fmt(v)] + [fmt(p) for p in ps]
            for t, R, v, ps in zip(report.times, report.R, report.v1, report.p_nodes)
        ]
        return header, rows
    raise TypeError(f"cannot emit {type(report).__name__}")


def render_csv(report):
    header, rows = report_table(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _meta_payload(report, config, extra):
    meta = {
        "version": version_string(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "config": asdict(config) if config is not None else None,
    }
    if isinstance(report, (harness.ErrorReport, harness.StabilityReport)):
        meta["wall_times"] = list(report.wall_times)
    if isinstance(report, harness.ErrorReport):
        meta["failures"] = {str(k): v for k, v in report.failures.items()}
        meta["flagged_levels"] = list(report.flagged)
        meta["reference"] = report.reference
    meta.update(extra or {})
    return meta


def emit_report(report, path, config=None, extra=None):
    """Write ``path`` (CSV) and ``path`` with a ``.meta`` suffix (JSON)."""
    path = Path(path)
    meta_path = path.with_suffix(".meta")
    try:
        path.write_text(render_csv(report))
        meta_path.write_text(json.dumps(_meta_payload(report, config, extra), indent=2, default=str) + "\n")
    except OSError as err:
        raise OSError(f"cannot write {err.filename or path}: {err.strerror}") from err
    return path, meta_path


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def execute(cfg):
    """Run the configured command; returns (report, extra metadata, failure message or None)."""
    problem = cfg.problem()
    extra = {}
    if cfg.command == "solve":
        traj, rep = problem.solve(cfg.N, cfg.M, cfg.T, stride=cfg.stride)
        extra["run"] = rep.as_dict()
        if not rep.completed:
            return traj, extra, rep.message
        return traj, extra, None
    if cfg.command == "mms":
        case = mms.get_case(cfg.case, problem.params, cfg.paper_literal)
        extra["residuals"] = asdict(mms.verify_case(case))
        traj, rep = problem.solve(cfg.N, cfg.M, cfg.T)
        extra["run"] = rep.as_dict()
        err = harness.e_infinity(traj, problem.exact_p) if rep.completed else None
        report = harness.ErrorReport(axis="time", case=problem.name, levels=[(cfg.M, err)], rates=[])
        report.wall_times.append(rep.wall_time)
        return report, extra, (None if rep.completed else rep.message)
    if cfg.command == "time-study":
        report = harness.time_refinement_study(problem, cfg.N, cfg.M_list, cfg.T, workers=cfg.workers)
    elif cfg.command == "space-study":
        report = harness.space_refinement_study(problem, cfg.M, cfg.N_list, cfg.N_ref, cfg.T, workers=cfg.workers)
    elif cfg.command == "self-convergence":
        report = harness.self_convergence_study(problem, cfg.M_list, cfg.M_ref, cfg.N, cfg.T, workers=cfg.workers)
    elif cfg.command == "stability":
        report = harness.stability_study(
            problem, cfg.eps_list, cfg.M, cfg.N, cfg.T, components=cfg.components, workers=cfg.workers
        )
        failed = [e for e, d in zip(report.eps_levels, report.diffs) if d is None]
        return report, extra, (f"perturbed runs failed for eps={failed}" if failed else None)
    else:  # pragma: no cover - validated earlier
        raise ConfigError(f"unknown command {cfg.command}")
    failure = "; ".join(f"level {k}: {v}" for k, v in report.failures.items()) or None
    return report, extra, failure


def build_parser():
    p = argparse.ArgumentParser(prog="fbspec", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS, help="may instead come from the config file")
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--case", choices=CASES)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--stride", type=int)
    p.add_argument("--M-list", dest="M_list", metavar="[a,b,...]")
    p.add_argument("--N-list", dest="N_list", metavar="[a,b,...]")
    p.add_argument("--eps-list", dest="eps_list", metavar="[a,b,...]")
    p.add_argument("--N-ref", dest="N_ref", type=int)
    p.add_argument("--M-ref", dest="M_ref", type=int)
    p.add_argument("--bootstrap", choices=("exact", "euler"))
    p.add_argument("--radius-mode", dest="radius_mode", choices=("extrapolated", "lagged"))
    p.add_argument("--components", choices=("both", "parabolic", "velocity"))
    p.add_argument("--workers", type=int)
    p.add_argument("--paper-literal", dest="paper_literal", action="store_true", default=None)
    p.add_argument("--relax-admissibility", dest="relax_admissibility", action="store_true", default=None)
    p.add_argument("--param", action="append", default=[], metavar="key=value")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    overrides = {
        k: getattr(args, k)
        for k in (
            "command", "N", "M", "T", "case", "out", "stride", "M_list", "N_list", "eps_list",
            "N_ref", "M_ref", "bootstrap", "radius_mode", "components", "workers",
            "paper_literal", "relax_admissibility",
        )
    }
    try:
        params = {}
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"--param expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = v.strip()
        cfg = parse_config(args.config, overrides, params)
    except OutputPathError as err:
        print(f"fbspec: I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as err:
        print(f"fbspec: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    started = time.perf_counter()
    try:
        report, extra, failure = execute(cfg)
        logger.info("%s finished in %.2f s", cfg.command, time.perf_counter() - started)
    except stepper.SolverError as err:
        print(f"fbspec: solver stopped: {err}", file=sys.stderr)
        return EXIT_SOLVER

    try:
        if cfg.out:
            emit_report(report, cfg.out, cfg, extra)
        else:
            sys.stdout.write(render_csv(report))
    except OSError as err:
        print(f"fbspec: I/O error: {err}", file=sys.stderr)
        return EXIT_IO

    if failure:
        print(f"fbspec: solver stopped: {failure}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
