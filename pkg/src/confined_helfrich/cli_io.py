"""Command line, OBJ mesh files, run configuration and JSON/CSV reports.

Lengths are in units of the container scale (the unit ball by default), and
energies are dimensionless.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import jsonschema
import numpy as np

from . import analytic
from .container import Ball, Box, Container
from .errors import (HelfrichError, IoError, MeshError, NonTriangleFace, ParseError,
                     UsageError)
from .functionals import EnergyParams, area_value
from .mesh import (TriMesh, build_mesh, ellipsoid, icosphere, jittered,
                   sphere_lattice_with_necks, torus)
from .optimizer import SolveResult, SolverConfig, kkt_extract, minimize
from .verification import (GROWTH_CONFIG, SWEEP_CONFIG, AuditRecord, RigidityReport,
                           SqrtGrowthResult, inequality_audit, rigidity_sweep,
                           sqrt_growth_sweep, worker_count)

REPORT_VERSION = "1.0"
UNITS = "lengths in units of the container scale; energies dimensionless"
COMMANDS = ("minimize", "analyze", "catenoid", "rigidity", "sweep")
SWEEP_HEADER = ("h0", "target_area", "energy", "predicted", "rel_err", "lambda",
                "contact_fraction", "iterations")
DEFAULT_DELTAS = (0.02, 0.05, 0.1, 0.2)


# ---------------------------------------------------------------------------
# OBJ


def read_obj(path) -> TriMesh:
    """Read an ASCII OBJ with ``v x y z`` and triangular ``f i j k`` lines.

    Comments and blank lines are skipped; ``f`` entries may carry
    ``/vt/vn`` suffixes, which are ignored.
    """
    verts, faces, face_lines = [], [], []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) not in (3, 4):
                raise ParseError(lineno, "vertex needs 3 coordinates")
            try:
                verts.append([float(t) for t in rest[:3]])
            except ValueError:
                raise ParseError(lineno, "bad vertex coordinate") from None
        elif tag == "f":
            if len(rest) != 3:
                raise NonTriangleFace(lineno, f"face with {len(rest)} vertices")
            try:
                idx = [int(t.split("/", 1)[0]) for t in rest]
            except ValueError:
                raise ParseError(lineno, "bad face index") from None
            faces.append(idx)
            face_lines.append(lineno)
        elif tag in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
            continue
        else:
            raise ParseError(lineno, f"unknown record {tag!r}")
    n = len(verts)
    for idx, lineno in zip(faces, face_lines):
        if any(i < 1 or i > n for i in idx):
            raise ParseError(lineno, f"face index out of range 1..{n}")
    if not faces:
        raise ParseError(len(text.splitlines()), "no faces")
    try:
        return build_mesh(np.array(verts, float), np.array(faces, int) - 1)
    except MeshError as exc:
        raise ParseError(0, str(exc)) from exc


def write_obj(mesh: TriMesh, path) -> None:
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {i + 1} {j + 1} {k + 1}" for i, j, k in mesh.faces]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# mesh and container specs


def _numbers(field_name, parts, kinds):
    if len(parts) > len(kinds):
        raise UsageError(field_name, f"too many values in {':'.join(parts)!r}")
    try:
        return [k(p) for k, p in zip(kinds, parts)]
    except ValueError:
        raise UsageError(field_name, f"bad number in {':'.join(parts)!r}") from None


_GENERATORS = {
    # name: (argument types, required count)
    "icosphere": ((float, int), 1),
    "ellipsoid": ((float, float, float, int), 3),
    "torus": ((float, float, int, int), 2),
    "jittered": ((float, int, float), 3),
    "lattice": ((int, float, int), 2),
}


def is_generator_spec(spec: str) -> bool:
    return spec.split(":", 1)[0] in _GENERATORS and not Path(spec).exists()


def mesh_from_spec(spec: str, seed: int = 0) -> TriMesh:
    """``icosphere:r[:sub]``, ``ellipsoid:a:b:c[:sub]``, ``torus:R:r[:nmaj:nmin]``,
    ``jittered:r:sub:amplitude`` (uses ``seed``), ``lattice:N:neck[:sub]``, or an
    OBJ path."""
    name, *parts = spec.split(":")
    if name not in _GENERATORS or Path(spec).exists():
        return read_obj(spec)
    kinds, need = _GENERATORS[name]
    if len(parts) < need:
        raise UsageError("init", f"{name} needs at least {need} values")
    a = _numbers("init", parts, kinds)
    try:
        if name == "icosphere":
            return icosphere(*a)
        if name == "ellipsoid":
            return ellipsoid(tuple(a[:3]), *a[3:])
        if name == "torus":
            return torus(*a)
        if name == "jittered":
            return jittered(icosphere(a[0], a[1]), a[2], seed)
        return sphere_lattice_with_necks(*a)
    except (ValueError, HelfrichError) as exc:
        raise UsageError("init", str(exc)) from exc


def container_from_spec(spec: Optional[str]) -> Optional[Container]:
    """``none``, ``ball:r[:cx:cy:cz]`` or ``box:hx:hy:hz[:rounding]`` (centered)."""
    if spec is None or spec == "none":
        return None
    name, *parts = spec.split(":")
    try:
        if name == "ball":
            a = _numbers("container", parts, (float,) * 4)
            if len(a) not in (1, 4):
                raise UsageError("container", "ball takes r or r:cx:cy:cz")
            return Ball(tuple(a[1:]) if len(a) == 4 else (0.0, 0.0, 0.0), a[0])
        if name == "box":
            a = _numbers("container", parts, (float,) * 4)
            if len(a) < 3:
                raise UsageError("container", "box takes hx:hy:hz[:rounding]")
            h = np.array(a[:3])
            return Box(tuple(-h), tuple(h), a[3] if len(a) == 4 else 0.0)
    except ValueError as exc:
        raise UsageError("container", str(exc)) from exc
    raise UsageError("container", f"unknown container {name!r}")


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    command: str
    mesh_source: Optional[str] = None
    params: EnergyParams = field(default_factory=EnergyParams)
    container: Optional[str] = "ball:1"
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: Optional[str] = None
    mesh_output: Optional[str] = None
    seed: int = 0
    h0_values: tuple = ()
    deltas: tuple = DEFAULT_DELTAS
    eps: float = 1e-3
    subdivisions: int = 4
    threads: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"]["area_penalty_schedule"] = list(self.solver.area_penalty_schedule)
        d["h0_values"] = list(self.h0_values)
        d["deltas"] = list(self.deltas)
        return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("arguments", message)


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="confined-helfrich",
                description="Helfrich energy minimization of closed surfaces in containers.")
    p.add_argument("--config", help="JSON file with defaults (keys as the long flags)")
    sub = p.add_subparsers(dest="command")

    def common(sp, mesh=True):
        if mesh:
            sp.add_argument("--init", help="OBJ path or generator spec, e.g. icosphere:1:4")
        sp.add_argument("--container", help="ball:r, box:hx:hy:hz[:rounding] or none")
        sp.add_argument("--output", "-o", help="report path (JSON) or sweep path (CSV)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--max-iterations", type=int)
        sp.add_argument("--gradient-tol", type=float)
        sp.add_argument("--penalties", type=_float_list, help="area penalty schedule")
        sp.add_argument("--subdivisions", type=int)
        sp.add_argument("--normal-motion", action=argparse.BooleanOptionalAction, default=None,
                        help="move vertices along their normals only")

    sp = sub.add_parser("minimize", help="minimize the Helfrich energy of one mesh")
    common(sp)
    sp.add_argument("--h0", type=float)
    sp.add_argument("--target-area", type=float)
    sp.add_argument("--mesh-output", help="OBJ path for the final mesh")

    sp = sub.add_parser("analyze", help="energies, multipliers and inequality audit of a mesh")
    common(sp)
    sp.add_argument("--h0", type=float)
    sp.add_argument("--target-area", type=float)

    sp = sub.add_parser("catenoid", help="inverted catenoid diagnostics")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--output", "-o")

    sp = sub.add_parser("rigidity", help="multi-start sweep over H0 in the container")
    common(sp, mesh=False)
    sp.add_argument("--h0", type=_float_list, help="comma-separated H0 values")

    sp = sub.add_parser("sweep", help="energy growth with prescribed excess area")
    common(sp, mesh=False)
    sp.add_argument("--h0", type=float)
    sp.add_argument("--deltas", type=_float_list)
    return p


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError("config", f"file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config", "top level must be an object")
    return {k.replace("-", "_"): v for k, v in data.items()}


# solver defaults per command, matching the library entry points
_COMMAND_SOLVER = {"rigidity": SWEEP_CONFIG, "sweep": GROWTH_CONFIG}


def _solver_from(values: dict, base: dict) -> SolverConfig:
    known = {f.name for f in fields(SolverConfig)}
    start = _COMMAND_SOLVER.get(values.get("command"), SolverConfig())
    kw = {f.name: getattr(start, f.name) for f in fields(SolverConfig)}
    for k, v in dict(base).items():
        if k not in known:
            raise UsageError(f"solver.{k}", "unknown solver option")
        kw[k] = tuple(v) if k == "area_penalty_schedule" else v
    if values.get("max_iterations") is not None:
        kw["max_iterations"] = values["max_iterations"]
    if values.get("gradient_tol") is not None:
        kw["gradient_tol"] = values["gradient_tol"]
    if values.get("penalties") is not None:
        kw["area_penalty_schedule"] = tuple(values["penalties"])
    if values.get("normal_motion") is not None:
        kw["normal_motion"] = bool(values["normal_motion"])
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError("solver", str(exc)) from exc


def parse_config(argv: Sequence[str] | str | os.PathLike | None = None) -> RunConfig:
    """Validated RunConfig from command-line arguments or a JSON config file.

    A JSON file may hold every long flag (dashes or underscores) plus
    ``command`` and a ``solver`` object with SolverConfig fields; flags given
    on the command line override it.
    """
    if isinstance(argv, (str, os.PathLike)):
        argv = ["--config", os.fspath(argv)]
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = build_parser().parse_args(argv)
    file_vals = _load_config_file(ns.config) if ns.config else {}
    vals = {k: v for k, v in file_vals.items()}
    vals.update({k: v for k, v in vars(ns).items() if v is not None and k != "config"})
    command = vals.get("command")
    if command not in COMMANDS:
        raise UsageError("command", f"expected one of {', '.join(COMMANDS)}")

    seed = vals.get("seed", 0)
    if not isinstance(seed, int):
        raise UsageError("seed", "must be an integer")
    threads = worker_count()
    solver = _solver_from(vals, vals.get("solver") or {})
    kw = dict(command=command, seed=seed, solver=solver, threads=threads,
              output=vals.get("output"))
    if "container" in vals:
        container_from_spec(vals["container"])
        kw["container"] = vals["container"]
    if "subdivisions" in vals:
        if int(vals["subdivisions"]) < 0:
            raise UsageError("subdivisions", "must be nonnegative")
        kw["subdivisions"] = int(vals["subdivisions"])

    if command in ("minimize", "analyze"):
        init = vals.get("init")
        if init is None:
            raise UsageError("init", "a mesh file or generator spec is required")
        if not is_generator_spec(init) and not Path(init).is_file():
            raise UsageError("init", f"file not found: {init}")
        if vals.get("h0") is None:
            raise UsageError("h0", "spontaneous curvature --h0 is required")
        try:
            params = EnergyParams(H0=float(vals["h0"]), target_area=vals.get("target_area"))
        except (TypeError, ValueError) as exc:
            field_name = "target_area" if "target_area" in str(exc) else "h0"
            raise UsageError(field_name, str(exc)) from exc
        kw.update(mesh_source=init, params=params, mesh_output=vals.get("mesh_output"))
    elif command == "catenoid":
        eps = float(vals.get("eps", 1e-3))
        if not 1e-6 < eps < 0.5:
            raise UsageError("eps", "must lie in (1e-6, 0.5)")
        kw["eps"] = eps
        kw["container"] = None
    elif command == "rigidity":
        h0 = vals.get("h0")
        if h0 is None:
            raise UsageError("h0", "comma-separated H0 values are required")
        h0 = tuple(h0) if isinstance(h0, (list, tuple)) else _float_list(h0)
        if not h0 or not all(math.isfinite(x) for x in h0):
            raise UsageError("h0", "values must be finite")
        kw["h0_values"] = h0
    else:  # sweep
        if vals.get("h0") is None:
            raise UsageError("h0", "spontaneous curvature --h0 is required")
        h0 = float(vals["h0"])
        if not 0 <= h0 < 2:
            raise UsageError("h0", "must lie in [0, 2)")
        deltas = vals.get("deltas", DEFAULT_DELTAS)
        deltas = tuple(deltas) if isinstance(deltas, (list, tuple)) else _float_list(deltas)
        if not deltas or any(not (1e-4 < d < 0.5 or d == 0) for d in deltas):
            raise UsageError("deltas", "values must lie in (1e-4, 0.5)")
        kw.update(params=EnergyParams(H0=h0), deltas=deltas)
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# reports


def _schema(name: str) -> dict:
    return json.loads(resources.files(__package__).joinpath("schemas", name).read_text())


def report_schema() -> dict:
    return _schema("report.schema.json")


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def sigma_summary(sigma: np.ndarray) -> dict:
    sigma = np.asarray(sigma, float)
    if sigma.size == 0:
        return {"min": 0.0, "max": 0.0, "mass": 0.0, "contact_fraction": 0.0}
    return {
        "min": float(sigma.min()),
        "max": float(sigma.max()),
        "mass": float(sigma.sum()),
        "contact_fraction": float(np.count_nonzero(sigma) / sigma.size),
    }


def _audit_dict(audit: AuditRecord) -> dict:
    return {k: {"applicable": c.applicable, "passed": c.passed, "lhs": c.lhs, "rhs": c.rhs,
                "slack": c.slack} for k, c in audit.checks.items()}


def build_report(result: SolveResult | AuditRecord, *, H0: float | None = None,
                 config: RunConfig | dict | None = None, wall_seconds: float = 0.0,
                 area_residual: float | None = None, kkt=None) -> dict:
    """Report dictionary for a solve result, or for an audited mesh."""
    if isinstance(config, RunConfig):
        cfg = config.to_dict()
        if H0 is None:
            H0 = config.params.H0
    else:
        cfg = dict(config or {})
    rep = {"version": REPORT_VERSION, "config": cfg, "timing": {"wall_seconds": float(wall_seconds)},
           "units": UNITS}
    if isinstance(result, SolveResult):
        H0 = 0.0 if H0 is None else H0
        mesh = result.final_mesh
        audit = inequality_audit(mesh, H0)
        rep["energies"] = {"helfrich": _num(result.energy), "willmore": _num(audit.willmore),
                           "area": _num(audit.area)}
        rep["multipliers"] = {"lambda": _num(result.lam),
                              "sigma_summary": sigma_summary(result.contact_measure)}
        rep["constraint_residuals"] = {"area": _num(result.area_residual),
                                       "containment": _num(result.containment_violation),
                                       "kkt": _num(result.kkt_residual)}
        rep["status"] = result.status
        rep["iterations"] = int(result.iterations)
    elif isinstance(result, AuditRecord):
        audit = result
        rep["energies"] = {"helfrich": _num(audit.energy), "willmore": _num(audit.willmore),
                           "area": _num(audit.area)}
        lam = None if kkt is None else kkt.lam
        sig = np.zeros(0) if kkt is None else kkt.contact_measure
        rep["multipliers"] = {"lambda": _num(lam), "sigma_summary": sigma_summary(sig)}
        rep["constraint_residuals"] = {"area": _num(area_residual), "containment": None,
                                       "kkt": None if kkt is None else _num(kkt.kkt_residual)}
        rep["status"] = "analyzed"
    else:
        raise TypeError("expected a SolveResult or AuditRecord")
    rep["inequality_audit"] = _audit_dict(audit)
    return rep


def _dump_json(data: dict, path) -> None:
    try:
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_report(result: SolveResult | AuditRecord | dict, path, **kw) -> dict:
    """Write a JSON report validated against the shipped schema; returns it."""
    data = result if isinstance(result, dict) else build_report(result, **kw)
    jsonschema.validate(data, report_schema())
    _dump_json(data, path)
    return data


def report_rows(items: Iterable[RigidityReport] | SqrtGrowthResult, target_area=None) -> list[dict]:
    """Sweep rows keyed by :data:`SWEEP_HEADER`."""
    rows = []
    if isinstance(items, SqrtGrowthResult):
        for a, e, res in zip(items.areas, items.energies, items.results):
            rows.append(_row(items.H0, a, e, None, None, res))
        return rows
    for rep in items:
        rows.append(_row(rep.H0, target_area, rep.measured_min_energy, rep.predicted,
                         rep.relative_error, rep.result))
    return rows


def _row(h0, area, energy, predicted, rel, res) -> dict:
    if res is not None:
        lam = res.lam
        frac = sigma_summary(res.contact_measure)["contact_fraction"]
        its = res.iterations
    else:
        lam = frac = its = None
    return dict(zip(SWEEP_HEADER, (h0, area, energy, predicted, rel, lam, frac, its)))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else f"{v:.17g}"


def write_sweep(rows, path) -> int:
    """Write sweep rows (dicts, RigidityReports or a SqrtGrowthResult) as CSV.

    Returns the number of data rows.
    """
    if isinstance(rows, SqrtGrowthResult) or (
            isinstance(rows, (list, tuple)) and rows and isinstance(rows[0], RigidityReport)):
        rows = report_rows(rows)
    rows = list(rows)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_HEADER)
            for r in rows:
                w.writerow([_fmt(r.get(k)) for k in SWEEP_HEADER])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return len(rows)


# ---------------------------------------------------------------------------
# commands


def catenoid_report(eps: float, samples: int = 50, seed: int = 0) -> dict:
    patch = analytic.inverted_catenoid()
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.1, 0.9, samples)
    t = rng.uniform(0, 2 * np.pi, samples)
    z = np.column_stack([r * np.cos(t), r * np.sin(t)])
    diag = analytic.diagnostics(patch, z)
    return {
        "eps": eps,
        "conformality_max": float(np.max(diag.conformality)),
        "w_dot_grad_max": float(np.max(diag.w_dot_grad)),
        "w_cross_residual_max": float(np.max(diag.w_cross_residual)),
        "laplace_normal_residual_max": float(np.max(np.linalg.norm(
            analytic.laplace_normal_residual(patch, z), axis=1))),
        "g_limit": analytic.catenoid_g_limit(),
        "third_derivative_mass": analytic.third_derivative_mass(eps),
    }


def run(cfg: RunConfig, out=None) -> dict | list:
    out = sys.stdout if out is None else out
    t0 = time.perf_counter()
    container = container_from_spec(cfg.container)
    if cfg.command == "minimize":
        mesh = mesh_from_spec(cfg.mesh_source, cfg.seed)
        res = minimize(mesh, cfg.params, container, cfg.solver)
        rep = build_report(res, config=cfg, wall_seconds=time.perf_counter() - t0)
        if cfg.mesh_output:
            write_obj(res.final_mesh, cfg.mesh_output)
        print(f"status={res.status} energy={res.energy:.10g} lambda={res.lam:.6g} "
              f"iterations={res.iterations}", file=out)
    elif cfg.command == "analyze":
        mesh = mesh_from_spec(cfg.mesh_source, cfg.seed)
        audit = inequality_audit(mesh, cfg.params.H0)
        kkt = kkt_extract(mesh, cfg.params, container)
        ta = cfg.params.target_area
        ares = None if ta is None else abs(area_value(mesh) - ta) / ta
        rep = build_report(audit, config=cfg, kkt=kkt, area_residual=ares,
                           wall_seconds=time.perf_counter() - t0)
        print(f"energy={audit.energy:.10g} willmore={audit.willmore:.10g} area={audit.area:.10g} "
              f"audit={'pass' if audit.passed else 'FAIL'}", file=out)
    elif cfg.command == "catenoid":
        diag = catenoid_report(cfg.eps, seed=cfg.seed)
        rep = {"version": REPORT_VERSION, "config": cfg.to_dict(), "diagnostics": diag,
               "timing": {"wall_seconds": time.perf_counter() - t0}, "units": UNITS}
        jsonschema.validate(rep, _schema("catenoid.schema.json"))
        for k, v in diag.items():
            print(f"{k}={v:.10g}", file=out)
        if cfg.output:
            _dump_json(rep, cfg.output)
        return rep
    elif cfg.command == "rigidity":
        reps = rigidity_sweep(cfg.h0_values, cfg.solver, subdivisions=cfg.subdivisions,
                              seed=cfg.seed, container=container, workers=cfg.threads)
        rows = report_rows(reps)
        for r in rows:
            print(",".join(_fmt(r[k]) for k in SWEEP_HEADER), file=out)
        if cfg.output:
            write_sweep(rows, cfg.output)
        return rows
    else:
        res = sqrt_growth_sweep(cfg.params.H0, cfg.deltas, cfg.solver,
                                subdivisions=cfg.subdivisions)
        rows = report_rows(res)
        print(f"exponent={res.exponent:.6g} constant={res.constant:.6g}", file=out)
        if cfg.output:
            write_sweep(rows, cfg.output)
        return rows
    jsonschema.validate(rep, report_schema())
    if cfg.output:
        _dump_json(rep, cfg.output)
    return rep


def main(argv: Sequence[str] | None = None) -> int:
    try:
        run(parse_config(argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except HelfrichError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
