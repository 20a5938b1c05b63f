"""Command-line front end: strict JSON configs, ordered commands, deterministic reports.

Usage examples::

    xyaubry alpha --potential product
    xyaubry barrier --potential projection --from 1 --to 1 --point-type fixed
    xyaubry tpo --potential squared_difference --a 0.3 --eps 0.05
    xyaubry run --config run.json
    xyaubry run --check-all --seed 7 --out out/

Every invocation writes ``report.json`` (sorted keys, floats printed with 17
significant digits), one CSV per exported table, and ``timings.json``. Wall
clock times live only in the latter so that reports stay byte-identical
between runs. The exit status is 0 iff every internal assertion held.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .aubry import AubryConsistencyError, mather_support
from .checks import check_all
from .lettergraph import minplus_multiply, write_matrix_csv
from .mane import EventuallyPeriodicPoint, sequence_barrier, shift_metric
from .orbitlab import gap_phi, orbit_descent_batch, tpo_experiment
from .pipeline import Session
from .potential import PotentialSpec, SpecError, builtin, describe, from_dict, to_dict
from .subaction import verify_calibration, write_subaction_csv

SCHEMA_VERSION = 1
COMMANDS = ("alpha", "subaction", "mane", "barrier", "aubry", "descent", "gap", "tpo")
DEPENDS = {
    "subaction": ("alpha",),
    "mane": ("subaction",),
    "barrier": ("mane",),
    "aubry": ("barrier",),
}
POINT_TYPES = ("fixed", "periodic")
EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key path."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


# -- config -----------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    tol_zero: float | None = None
    solver_tol: float = 1e-12
    window_multiplier: int | None = 4


@dataclass(frozen=True)
class BarrierParams:
    source: tuple[float, ...] = (1.0,)
    target: tuple[float, ...] = (1.0,)
    point_type: str = "fixed"


@dataclass(frozen=True)
class DescentParams:
    period: int = 4
    seeds: int = 10
    tol: float = 1e-10
    max_sweeps: int = 2000


@dataclass(frozen=True)
class GapParams:
    deltas: tuple[float, ...] = (0.1, 0.25)
    n_max: int = 50
    n_cells: int = 8


@dataclass(frozen=True)
class TPOParams:
    a: float = 0.3
    eps: float = 0.05
    trials: int = 20
    noise: float = 0.01


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSpec = field(
        default_factory=lambda: builtin("squared_difference_plus_well", 0.5))
    n_cells: int = 128
    tolerances: Tolerances = Tolerances()
    commands: tuple[str, ...] = ("alpha", "subaction", "mane", "aubry")
    output_dir: str = "out"
    seed: int = 0
    check_all: bool = False
    barrier: BarrierParams = BarrierParams()
    descent: DescentParams = DescentParams()
    gap: GapParams = GapParams()
    tpo: TPOParams = TPOParams()


_SECTIONS = {"tolerances": Tolerances, "barrier": BarrierParams, "descent": DescentParams,
             "gap": GapParams, "tpo": TPOParams}
# config spelling of fields whose Python name is awkward
_ALIASES = {("barrier", "source"): "from", ("barrier", "target"): "to"}


def _key(section, name):
    return _ALIASES.get((section, name), name)


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"potential": to_dict(cfg.potential), "n_cells": cfg.n_cells,
           "commands": list(cfg.commands), "output_dir": cfg.output_dir, "seed": cfg.seed,
           "check_all": cfg.check_all}
    for section in _SECTIONS:
        values = asdict(getattr(cfg, section))
        out[section] = {_key(section, k): (list(v) if isinstance(v, tuple) else v)
                        for k, v in values.items()}
    return out


def _expect(value, kind, where, *, positive=False, nonneg=False, optional=False):
    if value is None and optional:
        return None
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", where)
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", where)
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError("must be finite", where)
    elif kind is str:
        if not isinstance(value, str):
            raise ConfigError("expected a string", where)
    elif kind is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected true or false", where)
    if positive and value <= 0:
        raise ConfigError("must be positive", where)
    if nonneg and value < 0:
        raise ConfigError("must be non-negative", where)
    return value


def _float_list(value, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list of numbers", where)
    return tuple(_expect(v, float, f"{where}[{k}]") for k, v in enumerate(value))


_FIELD_RULES = {
    ("tolerances", "tol_zero"): lambda v, w: _expect(v, float, w, positive=True, optional=True),
    ("tolerances", "solver_tol"): lambda v, w: _expect(v, float, w, positive=True),
    ("tolerances", "window_multiplier"):
        lambda v, w: _expect(v, int, w, positive=True, optional=True),
    ("barrier", "source"): _float_list,
    ("barrier", "target"): _float_list,
    ("barrier", "point_type"): lambda v, w: _choice(v, POINT_TYPES, w),
    ("descent", "period"): lambda v, w: _expect(v, int, w, positive=True),
    ("descent", "seeds"): lambda v, w: _expect(v, int, w, positive=True),
    ("descent", "tol"): lambda v, w: _expect(v, float, w, positive=True),
    ("descent", "max_sweeps"): lambda v, w: _expect(v, int, w, positive=True),
    ("gap", "deltas"): _float_list,
    ("gap", "n_max"): lambda v, w: _expect(v, int, w, positive=True),
    ("gap", "n_cells"): lambda v, w: _expect(v, int, w, positive=True),
    ("tpo", "a"): lambda v, w: _expect(v, float, w),
    ("tpo", "eps"): lambda v, w: _expect(v, float, w, nonneg=True),
    ("tpo", "trials"): lambda v, w: _expect(v, int, w, positive=True),
    ("tpo", "noise"): lambda v, w: _expect(v, float, w, positive=True),
}


def _choice(value, options, where):
    if value not in options:
        raise ConfigError(f"expected one of {list(options)}, got {value!r}", where)
    return value


def _section(raw, section):
    cls = _SECTIONS[section]
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", section)
    names = {_key(section, f): f for f in cls.__dataclass_fields__}
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", section)
    values = {}
    for key, value in raw.items():
        name = names[key]
        values[name] = _FIELD_RULES[(section, name)](value, f"{section}.{key}")
    return cls(**values)


def config_from_dict(raw) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    allowed = {"potential", "n_cells", "commands", "output_dir", "seed", "check_all",
               *_SECTIONS}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", "<root>")
    if "potential" not in raw:
        raise ConfigError("missing", "potential")
    try:
        potential = from_dict(raw["potential"])
    except SpecError as exc:
        raise ConfigError(str(exc), "potential") from exc
    kw = {"potential": potential}
    if "n_cells" in raw:
        kw["n_cells"] = _expect(raw["n_cells"], int, "n_cells", positive=True)
    if "seed" in raw:
        kw["seed"] = _expect(raw["seed"], int, "seed", nonneg=True)
    if "output_dir" in raw:
        kw["output_dir"] = _expect(raw["output_dir"], str, "output_dir")
    if "check_all" in raw:
        kw["check_all"] = _expect(raw["check_all"], bool, "check_all")
    if "commands" in raw:
        cmds = raw["commands"]
        if not isinstance(cmds, list):
            raise ConfigError("expected a list", "commands")
        kw["commands"] = tuple(_choice(c, COMMANDS, f"commands[{k}]") for k, c in enumerate(cmds))
    for section in _SECTIONS:
        if section in raw:
            kw[section] = _section(raw[section], section)
    cfg = RunConfig(**kw)
    if not 0.0 < cfg.tpo.a < 1.0:
        raise ConfigError("must lie strictly between 0 and 1", "tpo.a")
    return cfg


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config; unknown keys are errors."""
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


# -- deterministic JSON -----------------------------------------------------


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float printed as ``%.17g``.

    Non-finite floats are refused: callers must tag them (DIVERGENT,
    UNAVAILABLE) explicitly.
    """
    def emit(o, level):
        o = _plain(o)
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None or isinstance(o, bool):
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            if not math.isfinite(o):
                raise ValueError("non-finite number in report; tag it instead")
            text = format(o, ".17g")
            return text if any(ch in text for ch in ".en") else text + ".0"
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {emit(v, level + 1)}"
                     for k, v in sorted(o.items(), key=lambda kv: str(kv[0]))]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            return "[\n" + ",\n".join(pad + emit(v, level + 1) for v in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")
    return emit(obj, 0) + "\n"


def _num(x):
    """Finite float, or a tag for +inf / nan."""
    x = float(x)
    if math.isfinite(x):
        return x
    return "DIVERGENT" if x > 0 else "UNAVAILABLE"


# -- running ----------------------------------------------------------------


def resolve_commands(requested) -> tuple[str, ...]:
    """Close ``requested`` under dependencies and sort into execution order."""
    need = set()
    stack = list(requested)
    while stack:
        c = stack.pop()
        if c not in COMMANDS:
            raise ConfigError(f"unknown command {c!r}", "commands")
        if c not in need:
            need.add(c)
            stack.extend(DEPENDS.get(c, ()))
    return tuple(c for c in COMMANDS if c in need)


class Runner:
    """Executes commands against one shared :class:`Session`."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        tol = cfg.tolerances
        self.session = Session(cfg.potential, cfg.n_cells, tol_zero=tol.tol_zero,
                               solver_tol=tol.solver_tol,
                               window_multiplier=tol.window_multiplier)
        self.out = Path(cfg.output_dir)
        self.csv_files: list[str] = []
        self.assertions: dict[str, bool] = {}
        self.timings: dict[str, float] = {}

    def _csv(self, name):
        self.csv_files.append(name)
        return self.out / name

    def _node_points(self, values, kind):
        grid = self.session.graph[0]
        letters = tuple(grid.nearest(v) for v in values)
        if kind == "fixed":
            if len(letters) != 1:
                raise ConfigError("a fixed point takes exactly one abscissa", "barrier")
            return EventuallyPeriodicPoint.fixed(letters[0])
        return EventuallyPeriodicPoint.periodic(letters)

    def cmd_alpha(self):
        s = self.session
        sp, twist, lip = s.spectral, s.twist, s.lipschitz
        grid, w = s.graph
        np.savetxt(self._csv("diagonal.csv"),
                   np.column_stack([grid.nodes, np.diag(w), np.diag(s.reduced)]),
                   delimiter=",", fmt="%.17g", header="abscissa,h_aa,reduced_self_loop",
                   comments="")
        if twist.passed:
            self.assertions["alpha_equals_diagonal_min"] = (
                abs(sp.alpha_grid - sp.alpha_diag) <= 1e-12 and len(sp.witness_cycle) == 1)
        return {
            "alpha_grid": sp.alpha_grid, "alpha_diag": sp.alpha_diag, "h_star": sp.h_star,
            "karp_value": sp.karp_value, "witness_cycle": list(sp.witness_cycle),
            "witness_abscissae": list(sp.witness_abscissae), "m_set": list(sp.m_set),
            "m_intervals": [list(iv) for iv in sp.m_intervals],
        }

    def cmd_subaction(self):
        s = self.session
        sub = s.subaction
        cal = verify_calibration(s.reduced, sub)
        write_subaction_csv(self._csv("subaction.csv"), s.graph[0].nodes, sub)
        min_edge = float(np.min(s.reweighted))
        self.assertions["subaction_calibrated"] = cal.calibrated
        self.assertions["reweighted_nonnegative"] = min_edge >= -1e-12
        return {"iterations": sub.iterations, "residual": sub.residual,
                "calibration_residual": cal.max_residual,
                "inequality_violation": cal.max_inequality_violation,
                "min_reweighted_edge": min_edge,
                "critical_nodes": list(sub.critical_nodes),
                "max_value": float(np.max(sub.values)), "min_value": float(np.min(sub.values))}

    def cmd_mane(self):
        d = self.session.mane
        write_matrix_csv(self._csv("mane.csv"), d)
        worst = float(np.max(d - minplus_multiply(d, d)))
        self.assertions["mane_triangle_inequality"] = worst <= 1e-12
        return {"triangle_violation": max(worst, 0.0),
                "diagonal_min": float(np.min(np.diag(d))),
                "max_entry": float(np.max(d))}

    def cmd_barrier(self):
        s = self.session
        b = s.barrier
        write_matrix_csv(self._csv("barrier.csv"), b.closed_form)
        rec = {"aubry_letters": list(b.aubry)}
        if b.windowed_tail_min is not None:
            write_matrix_csv(self._csv("barrier_windowed.csv"), b.windowed_tail_min)
            rec["window"] = list(b.window)
            rec["window_agreement"] = b.agreement
            self.assertions["barrier_window_agreement"] = b.agreement <= 1e-9
        for a in b.aubry:
            cal = verify_calibration(s.reduced, b.closed_form[a])
            self.assertions["barrier_rows_calibrated"] = (
                self.assertions.get("barrier_rows_calibrated", True) and cal.calibrated)
        p = self.cfg.barrier
        x = self._node_points(p.source, p.point_type)
        y = self._node_points(p.target, p.point_type)
        res = sequence_barrier(x, y, s.reduced, b)
        rec["sequence"] = {"from": list(p.source), "to": list(p.target),
                           "point_type": p.point_type,
                           "distance": shift_metric(x, y, s.graph[0].nodes),
                           **res.to_record()}
        return rec

    def cmd_aubry(self):
        s = self.session
        rep = s.aubry
        nodes = s.graph[0].nodes
        rows = []
        for k, cls in enumerate(rep.classes):
            for a in cls:
                rows.append((a, nodes[a], k, float(s.spectral.distance_to_m(nodes[a]))))
        np.savetxt(self._csv("aubry.csv"), np.array(rows, dtype=float).reshape(-1, 4),
                   delimiter=",", fmt="%.17g", header="letter,abscissa,class,m_distance",
                   comments="")
        rec = {"letters": list(rep.aubry_letters),
               "abscissae": [float(nodes[a]) for a in rep.aubry_letters],
               "classes": [[float(nodes[a]) for a in cls] for cls in rep.classes],
               "m_distance": list(rep.m_distance), "tol_zero": rep.tol_zero}
        if s.twist.passed:
            try:
                mather_support(s.spectral, rep.aubry_letters, s.reduced, True, mane=s.mane)
                ok = True
            except AubryConsistencyError as exc:
                rec["containment_error"] = str(exc)
                ok = False
            self.assertions["optimal_periodic_are_fixed_points_on_m"] = ok
            self.assertions["aubry_within_one_cell_of_m"] = all(
                d * self.cfg.n_cells <= 1.0 + 1e-9 for d in rep.m_distance)
        return rec

    def cmd_descent(self):
        p = self.cfg.descent
        inits = np.stack([np.random.default_rng([self.cfg.seed, k]).random(p.period)
                          for k in range(p.seeds)])
        traces = orbit_descent_batch(self.cfg.potential, inits, p.tol, p.max_sweeps)
        rows = [(k, it, e) for k, tr in enumerate(traces) for it, e in enumerate(tr.energies)]
        np.savetxt(self._csv("descent.csv"), np.array(rows, dtype=float).reshape(-1, 3),
                   delimiter=",", fmt="%.17g", header="run,sweep,energy", comments="")
        monotone = all(np.all(np.diff(tr.energies) <= 0) for tr in traces)
        self.assertions["descent_energy_monotone"] = monotone
        return {"period": p.period, "runs": p.seeds,
                "converged": sum(tr.converged for tr in traces),
                "max_final_spread": max(tr.final_spread for tr in traces),
                "final_constants": [float(np.mean(tr.final)) for tr in traces],
                "final_energies": [tr.final_energy for tr in traces]}

    def cmd_gap(self):
        p = self.cfg.gap
        rows, rec = [], []
        for delta in p.deltas:
            t = gap_phi(self.cfg.potential, p.n_cells, delta, p.n_max)
            rows.extend((delta, n, v) for n, v in t.per_n)
            first = t.per_n[0][1]
            if not t.empty_far_set:
                self.assertions[f"gap_monotone_delta_{delta!r}"] = all(
                    v >= first - 1e-12 for _, v in t.per_n)
            rec.append({"delta": delta, "empty_far_set": t.empty_far_set,
                        "phi_delta": _num(t.phi_delta), "phi_1": _num(first),
                        "far_nodes": len(t.far_nodes)})
        with open(self._csv("gap.csv"), "w", encoding="utf-8") as fh:
            fh.write("delta,n,phi\n")
            for delta, n, v in rows:
                cell = format(v, ".17g") if math.isfinite(v) else _num(v)
                fh.write(f"{delta:.17g},{n},{cell}\n")
        return {"n_cells": p.n_cells, "n_max": p.n_max, "tables": rec}

    def cmd_tpo(self):
        p = self.cfg.tpo
        rep = tpo_experiment(self.cfg.potential, p.a, p.eps, trials=p.trials, noise=p.noise,
                             n_cells=self.cfg.n_cells, seed=self.cfg.seed)
        self.assertions["tpo_single_fixed_point"] = rep.passed
        return {"a": p.a, "epsilon": p.eps, "unique_min": rep.unique_min,
                "minimizer": "UNAVAILABLE" if rep.minimizer is None else rep.minimizer,
                "second_derivative": ("UNAVAILABLE" if rep.second_derivative is None
                                      else rep.second_derivative),
                "aubry_letters": list(rep.aubry_letters), "nearest_node": rep.nearest_node,
                "robustness_radius": rep.robustness_radius,
                "robustness_radius_kind": "lower bound from random search",
                "trials": rep.trials, "passed": rep.passed}

    def run(self) -> dict:
        cfg = self.cfg
        self.out.mkdir(parents=True, exist_ok=True)
        record = {"schema_version": SCHEMA_VERSION, "version": __version__,
                  "config": _report_config(cfg),
                  "potential": {"spec": to_dict(cfg.potential),
                                "description": describe(cfg.potential)},
                  "commands": {}, "status": "complete"}
        try:
            t0 = time.perf_counter()
            twist, lip = self.session.twist, self.session.lipschitz
            record["twist"] = {"passed": twist.passed,
                               "max_mixed_partial": twist.max_mixed_partial,
                               "sample_density": twist.sample_density}
            record["lipschitz"] = {"l_planar": lip.l_planar, "l_shift": lip.l_shift}
            self.timings["certificates"] = time.perf_counter() - t0
            for name in resolve_commands(cfg.commands):
                t0 = time.perf_counter()
                record["commands"][name] = getattr(self, f"cmd_{name}")()
                self.timings[name] = time.perf_counter() - t0
            if cfg.check_all:
                t0 = time.perf_counter()
                results = check_all(seed=cfg.seed, n_cells=cfg.n_cells)
                record["checks"] = [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                    for r in results]
                for r in results:
                    self.assertions[f"check:{r.name}"] = r.passed
                self.timings["check_all"] = time.perf_counter() - t0
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            record["status"] = "incomplete"
            record["error"] = f"{type(exc).__name__}: {exc}"
        record["assertions"] = dict(self.assertions)
        record["all_passed"] = record["status"] == "complete" and all(self.assertions.values())
        record["csv_files"] = sorted(self.csv_files)
        return record


def _report_config(cfg: RunConfig) -> dict:
    # where a report is written does not affect it; keep copies comparable
    d = config_to_dict(cfg)
    del d["output_dir"]
    return d


def emit_report(record: dict, out_dir, timings: dict | None = None) -> Path:
    """Write ``report.json`` (and ``timings.json`` when given) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(dumps(record), encoding="utf-8")
    if timings is not None:
        (out / "timings.json").write_text(dumps(timings), encoding="utf-8")
    return path


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg`` and write its report; returns the report record."""
    runner = Runner(cfg)
    record = runner.run()
    emit_report(record, cfg.output_dir, runner.timings)
    return record


# -- argument parsing -------------------------------------------------------


def _parse_potential(text: str) -> PotentialSpec:
    """``name`` or ``name:p1,p2``; a path to a JSON file also works."""
    if text.endswith(".json"):
        return from_dict(json.loads(Path(text).read_text(encoding="utf-8")))
    name, _, params = text.partition(":")
    values = tuple(float(p) for p in params.split(",")) if params else ()
    return builtin(name, *values)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--potential", help="builtin name[:params] or a JSON spec file")
    common.add_argument("--n-cells", type=int, help="grid has n_cells + 1 letters")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol-zero", type=float)
    common.add_argument("--window-multiplier", type=int,
                        help="windowed barrier check length in units of N+1 (0 disables)")

    parser = argparse.ArgumentParser(prog="xyaubry", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("alpha", "optimal grid average and minimizing cycle"),
                       ("subaction", "calibrated subaction"),
                       ("mane", "letter-level Mañé matrix"),
                       ("aubry", "Aubry letters and barrier classes")):
        sub.add_parser(name, parents=[common], help=text)
    b = sub.add_parser("barrier", parents=[common], help="Peierls barrier between two points")
    b.add_argument("--from", dest="source", type=_floats, help="abscissa(e), comma separated")
    b.add_argument("--to", dest="target", type=_floats)
    b.add_argument("--point-type", choices=POINT_TYPES)
    d = sub.add_parser("descent", parents=[common], help="periodic-orbit coordinate descent")
    d.add_argument("--period", type=int)
    d.add_argument("--runs", dest="seeds", type=int, help="number of random starts")
    g = sub.add_parser("gap", parents=[common], help="gap function table")
    g.add_argument("--delta", dest="deltas", type=float, action="append")
    g.add_argument("--n-max", type=int)
    g.add_argument("--gap-cells", type=int, help="grid used for the gap table")
    t = sub.add_parser("tpo", parents=[common], help="single-well perturbation experiment")
    t.add_argument("--a", type=float)
    t.add_argument("--eps", type=float)
    t.add_argument("--trials", type=int)
    t.add_argument("--noise", type=float)
    r = sub.add_parser("run", parents=[common], help="run the commands listed in the config")
    r.add_argument("--check-all", action="store_true",
                   help="also run every structural check; exit status reflects them")
    sub.add_parser("emit-config", parents=[common], help="print the effective config")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    kw = {}
    if args.potential:
        kw["potential"] = _parse_potential(args.potential)
    if args.n_cells is not None:
        kw["n_cells"] = _expect(args.n_cells, int, "n_cells", positive=True)
    if args.seed is not None:
        kw["seed"] = _expect(args.seed, int, "seed", nonneg=True)
    if args.out:
        kw["output_dir"] = args.out
    tol = cfg.tolerances
    if args.tol_zero is not None:
        tol = replace(tol, tol_zero=_expect(args.tol_zero, float, "tol_zero", positive=True))
    if args.window_multiplier is not None:
        tol = replace(tol, window_multiplier=args.window_multiplier or None)
    kw["tolerances"] = tol
    cmd = args.command
    if cmd in COMMANDS:
        kw["commands"] = (cmd,)
    if cmd == "barrier":
        over = {k: v for k, v in (("source", args.source), ("target", args.target),
                                  ("point_type", args.point_type)) if v is not None}
        kw["barrier"] = replace(cfg.barrier, **over)
    elif cmd == "descent":
        over = {k: v for k, v in (("period", args.period), ("seeds", args.seeds)) if v is not None}
        kw["descent"] = replace(cfg.descent, **over)
    elif cmd == "gap":
        over = {k: v for k, v in (("deltas", tuple(args.deltas) if args.deltas else None),
                                  ("n_max", args.n_max), ("n_cells", args.gap_cells))
                if v is not None}
        kw["gap"] = replace(cfg.gap, **over)
    elif cmd == "tpo":
        over = {k: v for k, v in (("a", args.a), ("eps", args.eps), ("trials", args.trials),
                                  ("noise", args.noise)) if v is not None}
        kw["tpo"] = replace(cfg.tpo, **over)
    elif cmd == "run" and args.check_all:
        kw["check_all"] = True
    cfg = replace(cfg, **kw)
    # revalidate the merged result through the same strict path
    return config_from_dict(json.loads(dumps(config_to_dict(cfg))))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, SpecError, OSError, ValueError) as exc:
        print(f"xyaubry: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "emit-config":
        sys.stdout.write(dumps(config_to_dict(cfg)))
        return EXIT_OK
    try:
        record = run(cfg)
    except OSError as exc:
        print(f"xyaubry: {exc}", file=sys.stderr)
        return EXIT_ERROR
    summary = "complete" if record["status"] == "complete" else f"incomplete ({record['error']})"
    failed = sorted(k for k, v in record["assertions"].items() if not v)
    print(f"report: {Path(cfg.output_dir) / 'report.json'} [{summary}]")
    for name in failed:
        print(f"FAILED {name}")
    if record["status"] != "complete":
        return EXIT_ERROR
    return EXIT_OK if record["all_passed"] else EXIT_ASSERT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
