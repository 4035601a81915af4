"""Experiment configuration, presets and table runners."""
from __future__ import annotations

import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .assembly import VELOCITIES, Coefficients, SourceTerm, assemble_global, assemble_local, \
    c_tilde_bounds, element_matrices
from .decomp import PUKind, build_decomposition, build_pu
from .krylov import SolveReport, gmres_right, random_initial_guess
from .mesh import build_strip_mesh
from .schwarz import Variant, build_preconditioner

log = logging.getLogger(__name__)

ROW_COLUMNS = ["preset", "N", "ny", "delta_over_h", "pu", "c0", "nu", "velocity", "supg",
               "iterations", "converged", "final_residual"]
SPECTRUM_COLUMNS = ["delta", "pu", "lambda_min", "lambda_max"]
FOV_COLUMNS = ["delta", "pu", "theta", "re", "im"]

COEFF_ROWS = [(1.0, 1.0), (1.0, 0.001), (0.001, 1.0), (0.001, 0.001)]
OVERLAP_LAYERS = [1, 2, 3, 4]
WEAK_SCALING_N = [2, 4, 8, 16]
WEAK_SCALING_N_FULL = [2, 4, 8, 16, 32, 64]
X0_MODES = ("zero", "random", "random_preconditioned")


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage} failed: {exc}")
        self.stage = stage
        self.__cause__ = exc


@dataclass
class ExperimentConfig:
    preset: str = "custom"
    N: int = 5
    ny: int = 60
    overlap_layers: int = 1
    pu: str = "PU2"
    variant: str = "SORAS"
    velocity: str = "rotating"
    c0: float = 1.0
    nu: float = 1.0
    supg: bool = False
    source_x: float = 0.5
    source_y: float = 0.1
    tol: float = 1e-6
    maxit: int = 500
    x0: str = "zero"
    residual_norm: str = "initial"
    seed: int = 0
    out: str = ""
    threads: int = 1

    def validate(self) -> "ExperimentConfig":
        problems = []
        if self.N < 1:
            problems.append("N must be >= 1")
        if self.ny < 1:
            problems.append("ny must be >= 1")
        if self.overlap_layers < 1:
            problems.append("overlap_layers must be >= 1")
        if self.pu not in {k.value for k in PUKind}:
            problems.append(f"unknown pu {self.pu!r}")
        if self.variant not in {v.value for v in Variant}:
            problems.append(f"unknown variant {self.variant!r}")
        if self.velocity not in VELOCITIES:
            problems.append(f"unknown velocity {self.velocity!r}")
        if not self.nu > 0:
            problems.append("nu must be positive")
        if not 0 < self.tol < 1:
            problems.append("tol must lie in (0, 1)")
        if self.maxit < 1:
            problems.append("maxit must be >= 1")
        if self.x0 not in X0_MODES:
            problems.append(f"x0 must be one of {X0_MODES}")
        if self.residual_norm not in ("initial", "rhs"):
            problems.append("residual_norm must be 'initial' or 'rhs'")
        if self.seed < 0 or self.seed >= 2 ** 64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def coefficients(self) -> Coefficients:
        return Coefficients(c0=self.c0, nu=self.nu, velocity=VELOCITIES[self.velocity],
                            supg=self.supg)

    @property
    def source(self) -> SourceTerm:
        return SourceTerm(center=(self.source_x, self.source_y))

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


PRESETS = {
    "table1": dict(N=5, ny=60, velocity="rotating", supg=False, source_x=0.5, source_y=0.1),
    "table2": dict(N=5, ny=60, velocity="negdiv", supg=False, source_x=0.5, source_y=0.1),
    "table3": dict(N=5, ny=60, velocity="normal", supg=True, source_x=0.5, source_y=0.1),
    "table4": dict(ny=60, overlap_layers=2, velocity="normal", supg=True,
                   source_x=0.1, source_y=0.1, x0="random"),
    "table5": dict(N=2, ny=40, velocity="zero", c0=1.0, nu=1.0, supg=False),
    "fov": dict(N=2, ny=40, velocity="negdiv", c0=0.001, nu=0.001, supg=False),
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(preset=name, **{**PRESETS[name], **overrides}).validate()


_FIELD_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def _coerce(cfg_field, text):
    typ = _FIELD_TYPES[cfg_field.type] if isinstance(cfg_field.type, str) else cfg_field.type
    if typ is bool:
        low = text.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return typ(text.strip())


def parse_assignments(pairs) -> dict:
    """``key=value`` strings to typed config fields."""
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected key=value, got {pair!r}")
        key, value = (s.strip() for s in pair.split("=", 1))
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = _coerce(fields[key], value)
    return out


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                pairs.append(line)
    return parse_assignments(pairs)


def load_config(path=None, overrides=()) -> ExperimentConfig:
    values = read_config_file(path) if path else {}
    values.update(parse_assignments(overrides))
    preset = values.pop("preset", "custom")
    base = dict(PRESETS.get(preset, {}))
    base.update(values)
    return ExperimentConfig(preset=preset, **base).validate()


@dataclass
class Problem:
    config: ExperimentConfig
    mesh: object
    A: object
    rhs: np.ndarray
    subdomains: list
    pu: object
    preconditioner: object
    c_tilde: tuple = field(default=(0.0, 0.0))

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.mesh.boundary_node)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except Exception as exc:
        raise StageError(name, exc) from exc


def build_problem(config: ExperimentConfig) -> Problem:
    config.validate()
    coeffs = config.coefficients
    mesh = _stage("mesh", build_strip_mesh, config.N, config.ny)
    ct = c_tilde_bounds(mesh, coeffs)
    if ct[0] <= 0:
        log.warning("c_tilde in [%.4g, %.4g]: hypothesis c_tilde > 0 violated", *ct)
    else:
        log.info("c_tilde in [%.4g, %.4g]", *ct)
    subdomains = _stage("decomposition", build_decomposition, mesh, config.N, config.overlap_layers)
    pu = _stage("partition of unity", build_pu, config.pu, mesh, subdomains, config.overlap_layers)
    A, rhs = _stage("assembly", assemble_global, mesh, coeffs, config.source)
    K = _stage("assembly", element_matrices, mesh, coeffs)
    local = [_stage("local assembly", assemble_local, mesh, sd, coeffs, K) for sd in subdomains]
    P = _stage("preconditioner", build_preconditioner, subdomains, pu, local,
               Variant(config.variant), mesh.n_nodes, config.threads)
    return Problem(config, mesh, A, rhs, subdomains, pu, P, ct)


def initial_guess(problem: Problem) -> np.ndarray:
    """Initial iterate for the configured ``x0`` mode.

    ``random``: seeded uniform noise in [-1, 1) on the free nodes, 0 on the
    Dirichlet boundary.  ``random_preconditioned``: the same noise taken as
    the preconditioned variable, ``x0 = M^{-1} y0``.
    """
    n = problem.mesh.n_nodes
    if problem.config.x0 == "zero":
        return np.zeros(n)
    x0 = random_initial_guess(n, problem.config.seed)
    x0[problem.mesh.boundary_node] = 0.0
    if problem.config.x0 == "random_preconditioned":
        x0 = problem.preconditioner.apply(x0)
    return x0


def solve(problem: Problem):
    cfg = problem.config
    return _stage("solve", gmres_right, problem.A, problem.preconditioner, problem.rhs,
                  initial_guess(problem), cfg.tol, cfg.maxit, cfg.residual_norm)


def report_row(config: ExperimentConfig, report: SolveReport | None, error: str = "") -> dict:
    return {
        "preset": config.preset, "N": config.N, "ny": config.ny,
        "delta_over_h": 2 * config.overlap_layers, "pu": config.pu,
        "c0": config.c0, "nu": config.nu, "velocity": config.velocity,
        "supg": int(config.supg),
        "iterations": report.iterations if report else -1,
        "converged": (str(report.converged).lower() if report else f"failed:{error}"),
        "final_residual": f"{report.final_true_residual:.6e}" if report else "nan",
    }


def run_experiment(config: ExperimentConfig):
    """Build everything and solve; returns ``(report, row)``."""
    t0 = time.perf_counter()
    problem = build_problem(config)
    _, report = solve(problem)
    log.info("%s N=%d delta=%dh %s c0=%g nu=%g: %d iterations (%.1fs)", config.preset,
             config.N, 2 * config.overlap_layers, config.pu, config.c0, config.nu,
             report.iterations, time.perf_counter() - t0)
    return report, report_row(config, report)


def table_grid(name: str, full: bool = False, **overrides) -> list[ExperimentConfig]:
    """All cells of an iteration-count table, in row / column / PU order."""
    cells = []
    if name in ("table1", "table2", "table3"):
        for c0, nu in COEFF_ROWS:
            for layers in OVERLAP_LAYERS:
                for pu in ("PU1", "PU2"):
                    cells.append(preset_config(name, c0=c0, nu=nu, overlap_layers=layers,
                                               pu=pu, **overrides))
    elif name == "table4":
        for c0, nu in COEFF_ROWS:
            for N in (WEAK_SCALING_N_FULL if full else WEAK_SCALING_N):
                for pu in ("PU1", "PU2"):
                    cells.append(preset_config(name, c0=c0, nu=nu, N=N, pu=pu, **overrides))
    else:
        raise KeyError(f"{name!r} is not an iteration-count table")
    return cells


def run_cells(configs):
    """Run every config; failures become annotated rows.  Returns ``(rows, reports, ok)``."""
    rows, reports, ok = [], [], True
    for cfg in configs:
        try:
            report, row = run_experiment(cfg)
        except StageError as exc:
            log.error("cell failed: %s", exc)
            report, row, ok = None, report_row(cfg, None, exc.stage), False
        rows.append(row)
        reports.append(report)
    return rows, reports, ok


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def pivot(rows) -> dict:
    """``{(c0, nu): {column: "PU1(PU2)"}}`` with column = delta/h or N."""
    by_key = {}
    weak = any(r["preset"] == "table4" for r in rows)
    for r in rows:
        col = r["N"] if weak else r["delta_over_h"]
        by_key.setdefault((r["c0"], r["nu"]), {}).setdefault(col, {})[r["pu"]] = r["iterations"]
    return {k: {c: f"{v.get('PU1', '?')}({v.get('PU2', '?')})" for c, v in cols.items()}
            for k, cols in by_key.items()}


def format_table(rows) -> str:
    table = pivot(rows)
    lines = []
    for (c0, nu), cols in table.items():
        cells = "  ".join(f"{c}:{v}" for c, v in cols.items())
        lines.append(f"c0={c0:<6g} nu={nu:<6g} {cells}")
    return "\n".join(lines)


def run_table(name: str, out=None, full: bool = False, **overrides):
    """Run a named preset and write its CSV.  Returns ``(rows, ok)``."""
    if name in ("table5", "spectrum"):
        rows, ok = run_spectrum(**overrides)
        if out:
            write_rows(out, SPECTRUM_COLUMNS, rows)
        return rows, ok
    if name == "fov":
        rows, ok = run_fov(**overrides)
        if out:
            write_rows(out, FOV_COLUMNS, rows)
        return rows, ok
    rows, _, ok = run_cells(table_grid(name, full=full, **overrides))
    if out:
        write_rows(out, ROW_COLUMNS, rows)
    return rows, ok


def spectrum_report(layers: int, pu: str, **overrides):
    cfg = preset_config("table5", overlap_layers=layers, pu=pu, **overrides)
    problem = build_problem(cfg)
    return _stage("spectrum", analysis.preconditioned_spectrum_spd, problem.A,
                  problem.preconditioner, problem.interior,
                  descriptor={"delta_over_h": 2 * layers, "pu": pu})


def run_spectrum(**overrides):
    rows, ok = [], True
    for layers in OVERLAP_LAYERS:
        for pu in ("PU1", "PU2"):
            row = {"delta": f"{2 * layers}h", "pu": pu, "lambda_min": "nan", "lambda_max": "nan"}
            try:
                rep = spectrum_report(layers, pu, **overrides)
                row.update(lambda_min=f"{rep.lambda_min:.6f}", lambda_max=f"{rep.lambda_max:.6f}")
            except StageError as exc:
                log.error("spectrum cell failed: %s", exc)
                ok = False
            rows.append(row)
    return rows, ok


def fov_report(layers: int, pu: str, n_angles: int = 64, **overrides):
    cfg = preset_config("fov", overlap_layers=layers, pu=pu, **overrides)
    problem = build_problem(cfg)
    P = _stage("operator", analysis.preconditioned_dense, problem.A, problem.preconditioner,
               problem.interior)
    return _stage("fov", analysis.fov_boundary, P, n_angles,
                  descriptor={"delta_over_h": 2 * layers, "pu": pu})


def run_fov(n_angles: int = 64, **overrides):
    rows, ok = [], True
    for pu in ("PU1", "PU2"):
        for layers in OVERLAP_LAYERS:
            try:
                rep = fov_report(layers, pu, n_angles, **overrides)
            except StageError as exc:
                log.error("fov cell failed: %s", exc)
                ok = False
                continue
            log.info("fov %s delta=%dh area %.6g", pu, 2 * layers, rep.area)
            for th, z in zip(rep.theta, rep.points):
                rows.append({"delta": f"{2 * layers}h", "pu": pu, "theta": f"{th:.12g}",
                             "re": f"{z.real:.12g}", "im": f"{z.imag:.12g}"})
    return rows, ok
