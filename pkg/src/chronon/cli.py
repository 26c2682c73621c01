"""Command-line runner: ``chronon {dispersion,evolve,commutators,derivative}``.

Options may also come from a flat ``key=value`` file given with
``--config``; keys are the long flag names (``grid-n`` or ``grid_n``) and
command-line flags win over file values.

Exit status: 0 success, 1 runtime error, 2 usage error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import algebra, difference_calculus as dcalc, dispersion as disp, wavepacket as wp
from .dispersion import StepSpec
from .errors import ChrononError, InternalError, UsageError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

COMMANDS = ("dispersion", "evolve", "commutators", "derivative")

SCHEMAS = {
    "dispersion": ("case", "tau", "m", "p", "E", "E_D", "v_group", "g_factor", "im_ed_residual"),
    "evolve": ("step", "t", "norm", "centroid_x", "centroid_v", "front_x", "cone_fraction"),
    "commutators": ("case", "px", "py", "pz", "m", "tau", "ij", "closed_re", "closed_im",
                    "numeric_re", "numeric_im", "abs_err"),
    "derivative": ("E", "lambda_re", "lambda_im", "ds_re", "ds_im", "eigen_ratio_re",
                   "eigen_ratio_im", "ed_general_re", "ed_general_im", "residual"),
}

SWEEPABLE = {
    "dispersion": ("p", "E", "tau", "m"),
    "derivative": ("E", "tau", "lambda_re", "lambda_im", "ds_re", "ds_im"),
}


@dataclass(frozen=True)
class Sweep:
    param: str
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self):
        text = f"{self.param}:{self.start!r}:{self.stop!r}:{self.count}"
        return text + (":log" if self.spacing == "log" else "")


def parse_sweep(text: str) -> Sweep:
    parts = text.split(":")
    if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] not in ("log", "linear")):
        raise UsageError(f"sweep: expected <param>:<start>:<stop>:<count>[:log], got {text!r}")
    try:
        start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise UsageError(f"sweep: non-numeric bounds or count in {text!r}") from None
    spacing = parts[4] if len(parts) == 5 else "linear"
    if count < 2:
        raise UsageError("sweep: count must be at least 2")
    if spacing == "log" and not (start > 0 and stop > 0):
        raise UsageError("sweep: log spacing needs positive bounds")
    return Sweep(parts[0].replace("-", "_"), start, stop, count, spacing)


@dataclass(frozen=True)
class ScenarioConfig:
    command: str
    case: str = "a"
    tau: float = 0.1
    lambda_re: float = 1.0
    lambda_im: float = 0.0
    ds_re: float = 0.0
    ds_im: float = 1.0
    m: float = 0.0
    p0: float = 1.0
    sigma: float = 0.25
    grid_n: int = 4096
    p_max: float = 16.0
    steps: int = 1000
    dt: float = 0.01
    scheme: Optional[str] = None
    sweep: Optional[Sweep] = None
    out_path: str = "-"
    format: str = "csv"
    seed: int = 0
    draws: int = 100
    record_every: int = 1
    s_re: float = 0.25
    s_im: float = -0.5

    def step_spec(self) -> StepSpec:
        return make_step(self.case, self.tau, self)

    def effective_scheme(self) -> str:
        if self.scheme is not None:
            return self.scheme
        return "leapfrog" if self.case == "b" else "literal"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sweep"] = None if self.sweep is None else str(self.sweep)
        d["scheme"] = self.effective_scheme() if self.command == "evolve" else self.scheme
        return d


def make_step(case: str, tau: float, cfg: ScenarioConfig) -> StepSpec:
    if case == "a":
        return StepSpec.case_a(tau)
    if case == "b":
        return StepSpec.case_b(tau)
    return StepSpec.general(complex(cfg.lambda_re, cfg.lambda_im), complex(cfg.ds_re, cfg.ds_im))


# flag name -> (config field, converter, choices)
OPTIONS = {
    "case": ("case", str, ("a", "b", "general")),
    "tau": ("tau", float, None),
    "lambda-re": ("lambda_re", float, None),
    "lambda-im": ("lambda_im", float, None),
    "ds-re": ("ds_re", float, None),
    "ds-im": ("ds_im", float, None),
    "mass": ("m", float, None),
    "p0": ("p0", float, None),
    "sigma": ("sigma", float, None),
    "grid-n": ("grid_n", int, None),
    "p-max": ("p_max", float, None),
    "steps": ("steps", int, None),
    "dt": ("dt", float, None),
    "scheme": ("scheme", str, ("literal", "leapfrog", "effective")),
    "sweep": ("sweep", parse_sweep, None),
    "out": ("out_path", str, None),
    "format": ("format", str, ("csv", "json")),
    "seed": ("seed", int, None),
    "draws": ("draws", int, None),
    "record-every": ("record_every", int, None),
    "s-re": ("s_re", float, None),
    "s-im": ("s_im", float, None),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _convert(key: str, raw: str):
    field_name, conv, choices = OPTIONS[key]
    try:
        value = conv(raw)
    except UsageError:
        raise
    except (TypeError, ValueError):
        raise UsageError(f"{key}: cannot interpret {raw!r} as {conv.__name__}") from None
    if choices is not None and value not in choices:
        raise UsageError(f"{key}: {raw!r} is not one of {', '.join(choices)}")
    if isinstance(value, float) and not math.isfinite(value):
        raise UsageError(f"{key}: value must be finite")
    return field_name, value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chronon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", dest="config", default=None, help="key=value file")
        for flag, (_, _, choices) in OPTIONS.items():
            p.add_argument(f"--{flag}", dest=flag.replace("-", "_") + "_raw", default=None,
                           metavar=flag.upper().replace("-", "_") if choices is None else "{" + ",".join(choices) + "}")
    return parser


def read_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and '#' comments are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "m":
            key = "mass"
        if key not in OPTIONS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        values[key] = raw
    return values


def parse_config(argv: Sequence[str], config_path: Optional[str] = None) -> ScenarioConfig:
    """Defaults, then the config file, then command-line flags."""
    ns = build_parser().parse_args(list(argv))
    merged = {}
    path = ns.config or config_path
    if path:
        merged.update(read_config_file(path))
    for flag in OPTIONS:
        raw = getattr(ns, flag.replace("-", "_") + "_raw")
        if raw is not None:
            merged[flag] = raw
    values = dict(_convert(key, raw) for key, raw in merged.items())
    cfg = ScenarioConfig(command=ns.command, **values)
    validate(cfg)
    return cfg


def validate(cfg: ScenarioConfig) -> None:
    if cfg.grid_n < 2 or cfg.grid_n & (cfg.grid_n - 1):
        raise UsageError(f"grid-n: {cfg.grid_n} is not a power of two")
    signed_ok = cfg.command == "dispersion" and cfg.case == "a"
    if cfg.case != "general" and not (cfg.tau > 0 or signed_ok):
        raise UsageError("tau: must be positive (signed values only for dispersion with case a)")
    if cfg.case == "general":
        if cfg.command not in ("dispersion", "derivative"):
            raise UsageError(f"case: 'general' is only valid for dispersion and derivative, not {cfg.command}")
        if cfg.lambda_re == 0 and cfg.lambda_im == 0:
            raise UsageError("lambda-re/lambda-im: lambda must be nonzero")
    if cfg.m < 0:
        raise UsageError("mass: must be nonnegative")
    if cfg.sigma <= 0:
        raise UsageError("sigma: must be positive")
    if cfg.p_max <= 0:
        raise UsageError("p-max: must be positive")
    if cfg.steps < 1:
        raise UsageError("steps: must be at least 1")
    if cfg.dt <= 0:
        raise UsageError("dt: must be positive")
    if cfg.draws < 1:
        raise UsageError("draws: must be at least 1")
    if cfg.record_every < 1:
        raise UsageError("record-every: must be at least 1")
    if cfg.command == "evolve":
        scheme = cfg.effective_scheme()
        if scheme == "literal" and cfg.case != "a":
            raise UsageError("scheme: 'literal' needs case a")
        if scheme == "leapfrog" and cfg.case != "b":
            raise UsageError("scheme: 'leapfrog' needs case b")
    if cfg.sweep is not None:
        allowed = SWEEPABLE.get(cfg.command, ())
        if cfg.sweep.param not in allowed:
            if not allowed:
                raise UsageError(f"sweep: not supported for {cfg.command}")
            raise UsageError(f"sweep: {cfg.command} can sweep {', '.join(allowed)}, not {cfg.sweep.param!r}")
        if cfg.sweep.param == "tau" and cfg.case == "general":
            raise UsageError("sweep: tau has no meaning for the general case")


def worker_count() -> int:
    raw = os.environ.get("CHRONON_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"CHRONON_THREADS: {raw!r} is not an integer") from None
    return os.cpu_count() or 1


def _ordered_map(func, items) -> list:
    """Map in parallel but keep input order, so output never depends on worker count."""
    items = list(items)
    workers = min(worker_count(), len(items)) or 1
    if workers == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# --- scenario runners -------------------------------------------------------

def _dispersion_row(cfg: ScenarioConfig, case: str, tau: float, m: float, p: float) -> dict:
    E = disp.rel_energy(abs(p), m)
    step = make_step(case, tau, cfg)
    if step.is_real_case:
        ed = complex(disp.deformed_energy(step, E))
        residual = disp.reality_residual(E, step.lam, step.delta_s) if step.lam != 0 else 0.0
        if E > 0:
            v = float(disp.group_velocity(step, [p], m)[0])
            g = float(disp.canonical_factor(step, E))
        else:
            # massless rest point: symmetric velocity limit, canonical limit
            v, g = 0.0, 1.0
    else:
        ed = complex(disp.ed_general(E, step.lam, step.delta_s))
        residual = abs(ed.imag)
        slope = complex(disp.ed_general_slope(E, step.lam, step.delta_s))
        v = slope.real * p / E if E > 0 else 0.0
        g = (ed * slope).real / E if E > 0 else 1.0
    return {"case": case, "tau": tau, "m": m, "p": p, "E": E, "E_D": ed.real,
            "v_group": v, "g_factor": g, "im_ed_residual": residual}


def run_dispersion(cfg: ScenarioConfig) -> list[dict]:
    sweep = cfg.sweep or Sweep("p", 0.0, cfg.p_max, 65)
    tau = cfg.tau if cfg.case != "general" else 0.0
    rows = []
    for value in sweep.values():
        value = float(value)
        tau_v, m_v, p_v = tau, cfg.m, cfg.p0
        if sweep.param == "p":
            p_v = value
        elif sweep.param == "E":
            if value < cfg.m:
                raise UsageError(f"sweep: E = {value!r} lies below the rest energy m = {cfg.m!r}")
            p_v = math.sqrt(max(value * value - cfg.m * cfg.m, 0.0))
        elif sweep.param == "tau":
            tau_v = value
        elif sweep.param == "m":
            m_v = value
        rows.append(_dispersion_row(cfg, cfg.case, tau_v, m_v, p_v))
    return rows


def run_evolve(cfg: ScenarioConfig) -> list[dict]:
    grid = wp.MomentumGrid(cfg.grid_n, cfg.p_max)
    state = wp.gaussian_packet(grid, cfg.p0, cfg.sigma, cfg.m)
    scheme = cfg.effective_scheme()
    if scheme == "literal":
        traj = wp.evolve_case_a(state, cfg.tau, cfg.steps, cfg.record_every)
    elif scheme == "leapfrog":
        traj = wp.evolve_case_b(state, cfg.tau, cfg.steps, cfg.record_every)
    else:
        traj = wp.evolve_effective(state, cfg.step_spec(), cfg.dt, cfg.steps, cfg.record_every)
    return [{"step": r.step, "t": r.t, "norm": r.norm, "centroid_x": r.centroid_x,
             "centroid_v": r.centroid_v, "front_x": r.front_x, "cone_fraction": r.cone_fraction}
            for r in traj.records]


@dataclass(frozen=True)
class CommutatorDraw:
    case: str
    p_vec: tuple
    m: float
    tau: float
    test: algebra.GaussianTestState3D


def commutator_draws(cfg: ScenarioConfig) -> list[CommutatorDraw]:
    """Random probe points; generated sequentially from the seed before any parallel work."""
    rng = np.random.default_rng(cfg.seed)
    draws = []
    for _ in range(cfg.draws):
        while True:
            p = rng.uniform(-2.0, 2.0, 3)
            if np.linalg.norm(p) >= 0.3:
                break
        m = float(rng.uniform(0.0, 2.0))
        tau = float(cfg.tau * rng.uniform(0.1, 1.0))
        center = p + rng.uniform(-0.5, 0.5, 3)
        sigma = float(rng.uniform(0.5, 1.5))
        x0 = rng.uniform(-1.0, 1.0, 3)
        test = algebra.GaussianTestState3D(tuple(center.tolist()), sigma, tuple(x0.tolist()))
        draws.append(CommutatorDraw(cfg.case, tuple(p.tolist()), m, tau, test))
    return draws


def _commutator_rows(draw: CommutatorDraw) -> list[dict]:
    step = StepSpec.case_a(draw.tau) if draw.case == "a" else StepSpec.case_b(draw.tau)
    closed = algebra.commutator_qp_closed(step, draw.p_vec, draw.m)
    raw = algebra.commutator_qp_numeric(step, draw.p_vec, draw.m, draw.test)
    numeric = 0.5 * (raw + raw.T)
    rows = []
    for i in range(3):
        for j in range(3):
            c, n = complex(closed[i, j]), complex(numeric[i, j])
            rows.append({"case": draw.case, "px": draw.p_vec[0], "py": draw.p_vec[1],
                         "pz": draw.p_vec[2], "m": draw.m, "tau": draw.tau, "ij": f"{i + 1}{j + 1}",
                         "closed_re": c.real, "closed_im": c.imag, "numeric_re": n.real,
                         "numeric_im": n.imag, "abs_err": abs(c - n)})
    return rows


def run_commutators(cfg: ScenarioConfig) -> list[dict]:
    return [row for rows in _ordered_map(_commutator_rows, commutator_draws(cfg)) for row in rows]


def run_derivative(cfg: ScenarioConfig) -> list[dict]:
    sweep = cfg.sweep or Sweep("E", 0.0, 5.0, 51)
    s = complex(cfg.s_re, cfg.s_im)
    rows = []
    for value in sweep.values():
        params = {"E": cfg.p0, "tau": cfg.tau, "lambda_re": cfg.lambda_re, "lambda_im": cfg.lambda_im,
                  "ds_re": cfg.ds_re, "ds_im": cfg.ds_im}
        params[sweep.param] = float(value)
        if cfg.case == "general":
            lam = complex(params["lambda_re"], params["lambda_im"])
            ds = complex(params["ds_re"], params["ds_im"])
        else:
            step = StepSpec.case_a(params["tau"]) if cfg.case == "a" else StepSpec.case_b(params["tau"])
            lam, ds = step.lam, step.delta_s
        E = params["E"]
        ratio = dcalc.eigen_ratio(E, s, ds, lam)
        ed = complex(disp.ed_general(E, lam, ds))
        rows.append({"E": E, "lambda_re": lam.real, "lambda_im": lam.imag, "ds_re": ds.real,
                     "ds_im": ds.imag, "eigen_ratio_re": ratio.real, "eigen_ratio_im": ratio.imag,
                     "ed_general_re": ed.real, "ed_general_im": ed.imag, "residual": abs(ratio - ed)})
    return rows


RUNNERS = {
    "dispersion": run_dispersion,
    "evolve": run_evolve,
    "commutators": run_commutators,
    "derivative": run_derivative,
}


def run_scenario(cfg: ScenarioConfig) -> list[dict]:
    try:
        return RUNNERS[cfg.command](cfg)
    except UsageError:
        raise
    except ChrononError as exc:
        raise type(exc)(f"{cfg.command} (case {cfg.case}, tau {cfg.tau!r}): {exc}") from exc


# --- output -----------------------------------------------------------------

def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _check_rows(records: list[dict], schema: Optional[Sequence[str]]) -> tuple:
    if not records:
        raise InternalError("no records to emit")
    columns = tuple(schema) if schema is not None else tuple(records[0])
    for k, row in enumerate(records):
        if tuple(row) != columns:
            raise InternalError(f"row {k} does not match the schema {columns}")
        for key, value in row.items():
            if isinstance(value, (float, np.floating)) and not math.isfinite(value):
                raise InternalError(f"row {k}: non-finite value in column {key!r}")
    return columns


def render(records: list[dict], fmt: str, schema: Optional[Sequence[str]] = None,
           config: Optional[dict] = None) -> str:
    columns = _check_rows(records, schema)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in records:
            writer.writerow([_format(row[c]) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        rows = [{c: (float(v) if isinstance(v, np.floating) else v) for c, v in row.items()}
                for row in records]
        return json.dumps({"schema": list(columns), "config": config or {}, "rows": rows},
                          indent=1, allow_nan=False) + "\n"
    raise InternalError(f"unknown format {fmt!r}")


def emit(records: list[dict], fmt: str, out_path: str, schema: Optional[Sequence[str]] = None,
         config: Optional[dict] = None) -> None:
    """Write records as CSV or JSON; nothing is written if validation fails."""
    text = render(records, fmt, schema, config)
    if out_path in ("-", ""):
        sys.stdout.write(text)
        return
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        records = run_scenario(cfg)
        emit(records, cfg.format, cfg.out_path, SCHEMAS[cfg.command], cfg.as_dict())
    except UsageError as exc:
        print(f"chronon: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"chronon: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ChrononError, OSError) as exc:
        print(f"chronon: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
