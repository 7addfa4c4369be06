"""Batch front-end: ``kahlerlag run <config>`` and ``kahlerlag list``.

A scenario is a JSON document naming a model, a submanifold and a task.
Reports are deterministic JSON (timing is written to a separate file) and
embed the sign conventions the numbers depend on.

Exit codes: 0 all verdicts pass, 2 configuration error, 3 verdict failure,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION, __version__
from .certify import converse_probe, corollary_integral, divergence_certificate, stokes_report
from .conventions import CONVENTIONS
from .errors import ConfigError, KahlerLagError
from .holo_extend import FourierSeries, complexify_immersion, cr_residual, pushforward_field, tube_samples
from .holo_fields import corollary_moment_formula, divergence_from_jet, field_basis, moment_map_check
from .kahler_core import BUILTIN_MODELS, load_model, sample_points
from .optimize import minimize_defect, minimize_volume, torus_generators
from .submanifold import FAMILIES, build_immersion

EXIT_OK, EXIT_CONFIG, EXIT_VERDICT, EXIT_INTERNAL = 0, 2, 3, 4

# task -> (needs submanifold, allowed options, tolerances with defaults; the first is the primary one)
TASKS = {
    "certify": (True, {"basis": str, "gate": bool}, {"certificate": 1e-6, "gate": 1e-8}),
    "probe": (True, {}, {"defect": 1e-7, "identity": 1e-5}),
    "stokes": (True, {"basis": str}, {"residual": 1e-6}),
    "moment-check": (False, {"points": int, "seed": int}, {"residual": 1e-6}),
    "optimize-volume": (True, {"max_iter": int}, {"gradient": 1e-6, "certificate": 1e-6}),
    "optimize-defect": (True, {"max_iter": int}, {"gradient": 1e-6, "certificate": 1e-6}),
    "extend-demo": (True, {"samples": int, "seed": int}, {"restriction": 1e-10, "cr": 1e-9}),
}
TASK_NOTES = {
    "certify": "integrals of div(V) over L for every basis field; basis: full | torus-generators",
    "probe": "minimality defect from the duals of Re xi and Im xi, with the integrated identity",
    "stokes": "pointwise d(i_V kappa) = div(V) kappa on a minimal Lagrangian",
    "moment-check": "d mu = i_V omega for the torus generators, and i div T(1,2) against "
    "(|z1|^2 - |z2|^2) / sum |zi|^2 at random points",
    "optimize-volume": "projected descent of orbit-torus volume from params.weights",
    "optimize-defect": "projected descent of the summed squared torus-generator certificates",
    "extend-demo": "Fourier continuation of L: restriction error, CR residual, truncation uniqueness",
}
TOP_KEYS = {"schema": str, "task": str, "model": dict, "submanifold": dict, "options": dict, "tolerances": dict, "output": dict}
MODEL_KEYS = {"name": str, "dimension": int, "potential": str}
SUB_KEYS = {"family": str, "params": dict, "resolution": int, "orientation": int}
OUTPUT_KEYS = {"dir": str}


@dataclass
class Scenario:
    task: str
    model: dict
    submanifold: dict | None
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "task": self.task,
            "model": self.model,
            "submanifold": self.submanifold,
            "options": self.options,
            "tolerances": self.tolerances,
        }


def _check_keys(obj: dict, allowed: dict, where: str, required=()):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown field {key!r}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{where}: missing required field {key!r}")
    for key, typ in allowed.items():
        if key in obj:
            val = obj[key]
            ok = isinstance(val, typ) and not (typ is int and isinstance(val, bool))
            if typ is float:
                ok = isinstance(val, (int, float)) and not isinstance(val, bool)
            if not ok:
                raise ConfigError(f"{where}.{key}: expected {typ.__name__}, got {type(val).__name__}")


def parse_scenario(text: str, source: str = "<config>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    _check_keys(raw, TOP_KEYS, "config", required=("schema", "task", "model"))
    if raw["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"config.schema: expected {SCHEMA_VERSION!r}, got {raw['schema']!r}")
    task = raw["task"]
    if task not in TASKS:
        raise ConfigError(f"config.task: unknown task {task!r}; known: {', '.join(TASKS)}")
    needs_sub, opt_keys, tol_defaults = TASKS[task]

    model = raw["model"]
    _check_keys(model, MODEL_KEYS, "model", required=("name", "dimension"))
    if model["name"] not in BUILTIN_MODELS and "potential" not in model:
        raise ConfigError(f"model.name: {model['name']!r} is not built in and no potential was given")

    sub = raw.get("submanifold")
    if needs_sub and sub is None:
        raise ConfigError(f"config: task {task!r} requires field 'submanifold'")
    if sub is not None:
        _check_keys(sub, SUB_KEYS, "submanifold", required=("family", "resolution"))
        if sub["family"] not in FAMILIES:
            raise ConfigError(f"submanifold.family: unknown family {sub['family']!r}")
        validate_resolution(sub["resolution"], "submanifold.resolution")
        if sub.get("orientation", 1) not in (1, -1):
            raise ConfigError("submanifold.orientation: must be 1 or -1")
        sub = {"params": {}, "orientation": 1, **sub}

    options = raw.get("options", {})
    _check_keys(options, opt_keys, "options")
    tols = raw.get("tolerances", {})
    _check_keys(tols, {k: float for k in tol_defaults}, "tolerances")
    for key, val in tols.items():
        if not val > 0:
            raise ConfigError(f"tolerances.{key}: must be positive")
    output = raw.get("output", {})
    _check_keys(output, OUTPUT_KEYS, "output")
    return Scenario(task, dict(model), sub, dict(options), {**tol_defaults, **tols}, dict(output))


def validate_resolution(N, where: str = "resolution") -> int:
    if isinstance(N, bool) or not isinstance(N, int) or N < 16 or N > 512 or N & (N - 1):
        raise ConfigError(f"{where}: must be a power of two between 16 and 512, got {N!r}")
    return N


# -- tasks ------------------------------------------------------------------------


def _immersion(sc: Scenario, model):
    s = sc.submanifold
    try:
        return build_immersion(model, s["family"], s["params"], s["resolution"], s["orientation"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"submanifold.params: {type(exc).__name__}: {exc}") from exc


def _basis(model, name: str):
    if name == "full":
        return list(field_basis(model))
    if name == "torus-generators":
        return torus_generators(model)
    raise ConfigError(f"options.basis: unknown basis {name!r}")


def task_certify(sc, model):
    L = _immersion(sc, model)
    rep = divergence_certificate(
        L,
        _basis(model, sc.options.get("basis", "full")),
        tol=sc.tolerances["certificate"],
        gate=sc.options.get("gate", True),
        gate_tol=sc.tolerances["gate"],
    )
    out = rep.to_dict()
    if model.kind == "projective" and model.n >= 1:
        out["moment_integral_12"] = corollary_integral(L)
    return out, rep.passed, rep.verdict, {"certificate.csv": rep.to_csv()}


def task_probe(sc, model):
    rep = converse_probe(_immersion(sc, model), sc.tolerances["defect"], sc.tolerances["identity"])
    return rep.to_dict(), rep.passed, rep.verdict, {}


def task_stokes(sc, model):
    L = _immersion(sc, model)
    rep = stokes_report(L, _basis(model, sc.options.get("basis", "full")), sc.tolerances["residual"])
    return rep.to_dict(), rep.max_residual < rep.tolerance, rep.verdict, {}


def task_moment_check(sc, model):
    if model.kind != "projective":
        raise ConfigError("moment-check: requires a projective model")
    tol = sc.tolerances["residual"]
    pts = sample_points(model, sc.options.get("points", 100), sc.options.get("seed", 0))
    rows = []
    for V in torus_generators(model):
        r = moment_map_check(model, V, pts, tol=tol)
        rows.append({"field": r.label, "max_residual": r.max_residual, "killing_residual": r.killing_residual, "t": r.t})
    V = torus_generators(model)[0]
    literal = scaled = 0.0
    for p in pts:
        chart, z = p.chart, p.coords
        vals, jac = V.jet(chart, z)
        idiv = 1j * divergence_from_jet(model, chart, z, vals, jac)
        f = corollary_moment_formula(model, chart, z)
        literal = max(literal, float(abs(idiv - f)))
        scaled = max(scaled, float(abs(idiv - (model.n + 1) * f)))
    passed = all(r["max_residual"] < tol for r in rows)
    out = {
        "lemma_rows": rows,
        "tolerance": tol,
        "points": len(pts),
        "formula_residual": literal,
        "formula_residual_times_n_plus_1": scaled,
    }
    verdict = "d mu = i_V omega holds" if passed else "moment-map identity violated"
    return out, passed, verdict, {}


def _optimize(sc, model, fn):
    L = _immersion(sc, model)
    weights = L.params.get("weights")
    if weights is None:
        raise ConfigError("submanifold.params.weights: optimization needs a start point on the orbit family")
    tr = fn(model, weights, N=sc.submanifold["resolution"], grad_tol=sc.tolerances["gradient"], max_iter=sc.options.get("max_iter", 500))
    cert = tr.final_certificate
    passed = tr.converged and cert.max_modulus < sc.tolerances["certificate"]
    verdict = f"{tr.termination}; final certificate {cert.max_modulus:.3e}"
    return tr.to_dict(), passed, verdict, {"trace.csv": tr.to_csv(), "certificate.csv": cert.to_csv()}


def task_optimize_volume(sc, model):
    return _optimize(sc, model, minimize_volume)


def task_optimize_defect(sc, model):
    return _optimize(sc, model, minimize_defect)


def task_extend_demo(sc, model):
    L = _immersion(sc, model)
    cimm = complexify_immersion(L)
    restriction = float(np.max(np.abs(cimm.evaluate(L.theta) - L.points)))
    w = tube_samples(cimm.tube, L.n, sc.options.get("samples", 50), sc.options.get("seed", 0))
    cr_map = cr_residual(cimm.evaluate, w)
    Vt = pushforward_field(cimm, [np.ones(L.N**L.n)] * L.n, label="constant")
    w_field = tube_samples(Vt.tube, L.n, sc.options.get("samples", 50), sc.options.get("seed", 0))
    cr_field = cr_residual(lambda u: Vt.on_tube(cimm, u), w_field)
    uniq = []
    for comp in cimm.components:
        s: FourierSeries = comp.series
        K = max(1, s.bandwidth // 2)
        gap = float(np.max(np.abs(s.truncate(K).evaluate(w) - s.truncate(K + 8).evaluate(w))))
        uniq.append({"K": K, "difference": gap, "tail_bound": s.tail_bound(K, cimm.tube.eta)})
    tol_r, tol_cr = sc.tolerances["restriction"], sc.tolerances["cr"]
    unique_ok = all(u["difference"] <= u["tail_bound"] + 1e-14 for u in uniq)
    passed = restriction < tol_r and max(cr_map, cr_field) < tol_cr and unique_ok
    out = {
        "tube_half_width": cimm.tube.eta,
        "jacobian_condition": cimm.condition,
        "restriction_error": restriction,
        "cr_residual_map": cr_map,
        "cr_residual_field": cr_field,
        "uniqueness": uniq,
        "fourier_tail": L.fourier_tail(),
    }
    verdict = "extension consistent" if passed else "extension check failed"
    return out, passed, verdict, {}


DISPATCH = {
    "certify": task_certify,
    "probe": task_probe,
    "stokes": task_stokes,
    "moment-check": task_moment_check,
    "optimize-volume": task_optimize_volume,
    "optimize-defect": task_optimize_defect,
    "extend-demo": task_extend_demo,
}


# -- reports ---------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


@dataclass
class RunReport:
    scenario: dict
    result: dict
    passed: bool
    verdict: str
    status: int
    wall_time: float = 0.0
    output: dict = field(default_factory=dict)

    def document(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "package_version": __version__,
            "conventions": CONVENTIONS,
            "scenario": self.scenario,
            "result": self.result,
            "passed": self.passed,
            "verdict": self.verdict,
            "exit_status": self.status,
        }


def run_scenario(text: str, source: str = "<config>", resolution=None, tolerance=None):
    """Parse, validate and run a scenario; returns (RunReport, tables)."""
    sc = parse_scenario(text, source)
    if resolution is not None:
        if sc.submanifold is None:
            raise ConfigError(f"--resolution: task {sc.task!r} has no submanifold")
        sc.submanifold["resolution"] = validate_resolution(resolution, "--resolution")
    if tolerance is not None:
        if not tolerance > 0:
            raise ConfigError("--tolerance: must be positive")
        primary = next(iter(TASKS[sc.task][2]))
        sc.tolerances[primary] = float(tolerance)
    try:
        model = load_model(sc.model["name"], sc.model["dimension"], sc.model.get("potential"))
    except (ValueError, KahlerLagError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    start = time.perf_counter()
    try:
        result, passed, verdict, tables = DISPATCH[sc.task](sc, model)
    except ConfigError:
        raise
    except KahlerLagError as exc:
        result = {"error": type(exc).__name__, "message": str(exc)}
        passed, verdict, tables = False, f"{type(exc).__name__}: {exc}", {}
    wall = time.perf_counter() - start
    status = EXIT_OK if passed else EXIT_VERDICT
    return RunReport(sc.echo(), result, passed, verdict, status, wall, sc.output), tables


def write_outputs(report: RunReport, tables: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dumps(report.document()))
    (out_dir / "timing.json").write_text(dumps({"wall_time_seconds": report.wall_time}))
    for name, text in sorted(tables.items()):
        (out_dir / name).write_text(text)


def list_builtins() -> str:
    lines = [f"schema: {SCHEMA_VERSION}", "", "models (name, dimension n):"]
    notes = {
        "flat-Cn": "flat C^n, potential |z|^2 (t = 0)",
        "CPn-t1": "Fubini-Study on CP^n scaled so Ric = omega (t = 1)",
        "CPn-unit": "Fubini-Study with potential log(1 + |w|^2) (t = n + 1)",
    }
    lines += [f"  {m:<18} {notes[m]}" for m in BUILTIN_MODELS]
    lines.append("  <any name>         symbolic Kahler potential via model.potential (sympy syntax in z1.., zb1..)")
    lines += ["", "submanifold families (submanifold.family, params):"]
    lines += [f"  {k:<18} {v}" for k, v in FAMILIES.items()]
    lines += [
        "",
        "field bases (options.basis):",
        "  full               sl(n+1) real basis on CP^n (each matrix B and iB); affine real basis on C^n",
        "  torus-generators   T(j,k): exp(is) on Z_j, exp(-is) on Z_k",
        "",
        "tasks (options; tolerances with defaults):",
    ]
    for name, (needs_sub, opts, tols) in TASKS.items():
        opt = ", ".join(f"{k}:{t.__name__}" for k, t in opts.items()) or "-"
        tol = ", ".join(f"{k}={v:g}" for k, v in tols.items())
        sub = "submanifold required" if needs_sub else "no submanifold"
        lines.append(f"  {name:<18} {TASK_NOTES[name]}")
        lines.append(f"  {'':<18} [{sub}; options: {opt}; tolerances: {tol}]")
    lines += [
        "",
        "config fields: schema, task, model{name, dimension, potential?}, "
        "submanifold{family, resolution, params?, orientation?}, options?, tolerances?, output{dir}?",
        "resolution: power of two between 16 and 512",
    ]
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kahlerlag", description="Certificates for minimal Lagrangian tori in Kahler manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config", help="path to a JSON scenario")
    run.add_argument("--out", default=None, help="output directory (default: output.dir or ./kahlerlag-out)")
    run.add_argument("--resolution", type=int, default=None, help="override submanifold.resolution")
    run.add_argument("--tolerance", type=float, default=None, help="override the task's primary tolerance")
    sub.add_parser("list", help="print the catalog of built-ins")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_builtins())
        return EXIT_OK
    try:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        report, tables = run_scenario(text, str(path), args.resolution, args.tolerance)
        out_dir = Path(args.out or report.output.get("dir", "kahlerlag-out"))
        write_outputs(report, tables, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(f"{report.scenario['task']}: {report.verdict}")
    print(f"report written to {out_dir / 'report.json'}")
    return report.status


if __name__ == "__main__":
    sys.exit(main())
