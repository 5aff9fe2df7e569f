"""Convergence study: QMC vs MLQMC errors of the first two moments per level.

The reference moments come from plain QMC on ``ref_level`` with
``ref_samples`` Halton points. Each level's error is measured on the
reference mesh: H1 for the mean, W^{1,1} for the second moment.
Everything is deterministic; two runs with equal configuration write
byte-identical CSV files (unless wall times are requested).
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficient import CoefficientParams
from .estimator import CachedProblem, Problem, error_vs_reference, ml_moments, qmc_moments
from .fem import SolverError
from .quadrature import build_rule, sample_counts

__all__ = [
    "ConfigError",
    "StudyConfig",
    "StudyReport",
    "run_study",
    "write_report",
    "emit_plotdata",
    "fit_slope",
    "read_config_file",
]

MAX_REF_LEVEL = 5

COLUMNS = {
    1: ("err_mean_H1_qmc", "err_mean_H1_mlqmc"),
    2: ("err_m2_W11_qmc", "err_m2_W11_mlqmc"),
}


class ConfigError(ValueError):
    """Invalid study configuration."""


@dataclass
class StudyConfig:
    example_id: int = 1
    a: float = 0.12
    max_level: int = 3
    ref_level: int = 4
    ref_samples: int = 1000
    delta: float = 0.2
    base_samples: int = 10
    cg_tol: float = 1e-10
    kl_tol_base: float = 1e-4
    output_path: str = "study.csv"
    moment: str = "both"
    nl_variant: str = "plain"
    timing: bool = False

    def validate(self) -> None:
        if self.example_id not in (1, 2):
            raise ConfigError(f"example_id must be 1 or 2, got {self.example_id}")
        if self.max_level < 0:
            raise ConfigError("max_level must be nonnegative")
        if self.ref_level <= self.max_level:
            raise ConfigError(f"ref_level ({self.ref_level}) must exceed max_level ({self.max_level})")
        if self.ref_level > MAX_REF_LEVEL:
            raise ConfigError(f"ref_level above {MAX_REF_LEVEL} is beyond desk scale")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if self.ref_samples < 1 or self.base_samples < 1:
            raise ConfigError("sample counts must be positive")
        if self.moment not in ("1", "2", "both"):
            raise ConfigError(f"moment must be 1, 2 or both, got {self.moment!r}")
        if self.nl_variant not in ("plain", "log-boosted"):
            raise ConfigError(f"unknown nl_variant {self.nl_variant!r}")
        if not self.a > 0 or not self.cg_tol > 0 or not self.kl_tol_base > 0:
            raise ConfigError("a, cg_tol and kl_tol_base must be positive")

    @property
    def orders(self) -> tuple[int, ...]:
        return (1, 2) if self.moment == "both" else (int(self.moment),)


@dataclass
class StudyReport:
    config: StudyConfig
    rows: list[dict] = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    max_h1_seminorm: dict = field(default_factory=dict)
    ref_rank: int = 0

    @property
    def columns(self) -> list[str]:
        cols = ["level", "N_l", "M_l"]
        for o in self.config.orders:
            cols.extend(COLUMNS[o])
        cols.append("status")
        if self.config.timing:
            cols.append("wall_time_s")
        return cols

    @property
    def failed(self) -> bool:
        return any(r["status"] != "ok" for r in self.rows)

    def to_csv(self) -> str:
        cfg = self.config
        lines = [
            f"# anisouq study v1 example={cfg.example_id} a={cfg.a:g} ref_level={cfg.ref_level} "
            f"ref_samples={cfg.ref_samples} ref_M={self.ref_rank} delta={cfg.delta:g} "
            f"nl_variant={cfg.nl_variant}",
            ",".join(self.columns),
        ]
        for row in self.rows:
            lines.append(",".join(_fmt(row.get(c)) for c in self.columns))
        for name, value in self.slopes.items():
            lines.append(f"# slope {name} {_fmt(value)}")
        for level, value in sorted(self.max_h1_seminorm.items()):
            lines.append(f"# max_h1_seminorm level={level} {_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10e}"
    return str(v)


def fit_slope(levels, errors) -> float:
    """Least-squares slope of ``log2(error)`` against level."""
    levels = np.asarray(levels, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = np.isfinite(errors) & (errors > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(levels[ok], np.log2(errors[ok]), 1)[0])


def run_study(cfg: StudyConfig, problem: Problem | None = None) -> StudyReport:
    """Run the QMC/MLQMC convergence study described by ``cfg``."""
    cfg.validate()
    if problem is None:
        params = CoefficientParams(a=cfg.a, a_lower=min(cfg.a, 1.0), a_upper=max(2.0, cfg.a))
        problem = Problem.from_example(cfg.example_id, cfg.ref_level, params, cfg.kl_tol_base, cfg.cg_tol)
    orders = cfg.orders
    report = StudyReport(cfg, ref_rank=problem.expansions[cfg.ref_level].rank)

    ref_rule = build_rule(cfg.ref_samples, problem.expansions[cfg.ref_level].rank)
    ref = qmc_moments(cfg.ref_level, ref_rule, problem, orders)

    levels = range(cfg.max_level + 1)
    counts = [
        n for n in sample_counts(cfg.max_level, cfg.delta, cfg.base_samples, cfg.nl_variant)
    ]
    rule = build_rule(max(counts), problem.dimension(levels))
    cached = CachedProblem(problem, levels=set(levels))
    for l in levels:
        t0 = time.perf_counter()
        row = {"level": l, "N_l": counts[l], "M_l": problem.expansions[l].rank, "status": "ok"}
        try:
            qmc = qmc_moments(l, build_rule(counts[l], rule.M), cached, orders)
            ml = ml_moments(l, counts, cached, orders, points=rule.points)
            for o in orders:
                norm = "H1" if o == 1 else "W11"
                row[COLUMNS[o][0]] = error_vs_reference(qmc[o], ref[o], norm, problem)
                row[COLUMNS[o][1]] = error_vs_reference(ml[o], ref[o], norm, problem)
        except SolverError as exc:
            row["status"] = "solver_failure"
            for o in orders:
                row[COLUMNS[o][0]] = row[COLUMNS[o][1]] = math.nan
            row["error"] = str(exc)
        if cfg.timing:
            row["wall_time_s"] = time.perf_counter() - t0
        report.rows.append(row)

    for o in orders:
        for col in COLUMNS[o]:
            report.slopes[col] = fit_slope([r["level"] for r in report.rows], [r[col] for r in report.rows])
    for rec in problem.log:
        report.max_h1_seminorm[rec.level] = max(report.max_h1_seminorm.get(rec.level, 0.0), rec.h1_seminorm)
    return report


def write_report(report: StudyReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.to_csv())
    return path


# reference-slope anchors of the two figure panels
PLOT_ANCHORS = {1: ("mean_H1", 0.7), 2: ("m2_W11", 0.06)}


def emit_plotdata(report: StudyReport, out_dir, stem: str = "plot") -> list[Path]:
    """One CSV per panel: ``level,qmc,mlqmc,slope_ref`` with ``slope_ref = c 2**-l``."""
    if not report.rows:
        raise ValueError("empty report: nothing to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for o in report.config.orders:
        name, anchor = PLOT_ANCHORS[o]
        qcol, mcol = COLUMNS[o]
        lines = ["level,qmc,mlqmc,slope_ref"]
        for r in report.rows:
            l = r["level"]
            lines.append(f"{l},{_fmt(r[qcol])},{_fmt(r[mcol])},{_fmt(anchor * 2.0 ** (-l))}")
        path = out_dir / f"{stem}_{name}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines (``#`` starts a comment) into typed values."""
    types = {f.name: f.type for f in dataclasses.fields(StudyConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        kind = types[key]
        try:
            if kind == "int":
                out[key] = int(value)
            elif kind == "float":
                out[key] = float(value)
            elif kind == "bool":
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = value
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out
