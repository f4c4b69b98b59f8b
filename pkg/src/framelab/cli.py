"""Experiment runner: ``framelab run | list-systems | export | verify``.

Exit codes: 0 when every analysis passes, 2 when one fails, 3 on a bad
configuration or request.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import circle, classify, cocycle, fields, models, splitting
from .errors import ConfigError, FramelabError, NotInReport
from .io import dumps, read_grid, sha256_file, write_csv, write_grid, write_json

EXIT_PASS = 0
EXIT_FAILED = 2
EXIT_CONFIG = 3

ANALYSES = ("autonomy", "classify", "lyapunov", "splitting", "regularity", "rotation-profile")


# -- system catalog -------------------------------------------------------------


def _mat2(v, name):
    a = np.asarray(v, dtype=float)
    if a.shape == (4,):
        a = a.reshape(2, 2)
    if a.shape != (2, 2):
        raise ConfigError(f"{name} must be 4 integers or a 2x2 matrix")
    return a


def _phase(spec):
    if spec is None:
        return models.sine_phase(0.2)
    if isinstance(spec, (int, float)):
        return models.FourierPhase(((0, 0, float(spec), 0.0),))
    if isinstance(spec, dict):
        if "amplitude" in spec:
            return models.sine_phase(float(spec["amplitude"]))
        if "modes" in spec:
            return models.FourierPhase(tuple(tuple(r) for r in spec["modes"]))
    if isinstance(spec, list):
        return models.FourierPhase(tuple(tuple(r) for r in spec))
    raise ConfigError(f"cannot read rho from {spec!r}")


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    branch: str
    build: object = field(repr=False, compare=False)


CATALOG = {
    e.name: e
    for e in [
        CatalogEntry("cat-map", {}, "2D Hyperbolic", lambda p: models.cat_map()),
        CatalogEntry(
            "toral-affine", {"A": "n x n integer matrix, |det| = 1", "v": "n reals"},
            "2D classes by trace; 3D AnosovTorus or torus algebraic branch",
            lambda p: models.toral_affine(p.get("A", [[2, 1], [1, 1]]), p.get("v")),
        ),
        CatalogEntry("perturbed-cat", {"eps": "real"}, "not autonomous", lambda p: models.perturbed_cat(float(p.get("eps", 0.1)))),
        CatalogEntry("anosov3", {}, "AnosovTorus", lambda p: models.anosov3()),
        CatalogEntry(
            "heis", {"B": "4 integers (2x2, det +-1, hyperbolic)", "k": "positive integer", "translation": "3 reals"},
            "AlgebraicBranch(Heis3)",
            lambda p: models.heis_system(_mat2(p.get("B", [2, 1, 1, 1]), "B"), int(p.get("k", 1)), p.get("translation")),
        ),
        CatalogEntry(
            "sol", {"A": "4 integers (SL(2,Z), |trace| > 2)"}, "AlgebraicBranch(Sol)",
            lambda p: models.sol_system(_mat2(p.get("A", [2, 1, 1, 1]), "A").astype(int)),
        ),
        CatalogEntry(
            "suspension", {"A": "4 integers (Anosov)", "m": "integer", "w": "2 reals", "twist": "real"},
            "SuspensionBranch (twist != 0); AlgebraicBranch(Sol or Abelian) when twist = 0",
            lambda p: models.suspension(
                _mat2(p.get("A", [2, 1, 1, 1]), "A"), int(p.get("m", 1)), p.get("w", (0.0, 0.0)), float(p.get("twist", 0.1))
            ),
        ),
        CatalogEntry(
            "circle-extension", {"A": "4 integers (Anosov)", "rho": "Fourier modes [[kx, ky, a, b], ...] or {amplitude}", "framing": "canonical | eigen"},
            "partially hyperbolic with a continuous, non-smooth framing (no 3D branch)",
            lambda p: models.circle_extension(_mat2(p.get("A", [2, 1, 1, 1]), "A"), _phase(p.get("rho")), p.get("framing", "canonical")),
        ),
        CatalogEntry("linear-parabolic", {"k": "integer"}, "2D ParabolicPlus, profile degree k", lambda p: models.linear_parabolic(int(p.get("k", 1)))),
        CatalogEntry(
            "monotone-twist", {"k": "integer", "eps": "real"}, "2D ParabolicPlus, profile degree k",
            lambda p: models.monotone_twist(int(p.get("k", 2)), float(p.get("eps", 0.1))),
        ),
        CatalogEntry("fiber-translation", {"shift": "real"}, "2D identity class, profile degree 0", lambda p: models.fiber_translation(float(p.get("shift", 0.3)))),
        CatalogEntry("fiber-flow", {"c": "real", "amp": "real in (0, 1)"}, "2D identity class, rigid fibers", lambda p: models.fiber_flow(float(p.get("c", 0.3)), float(p.get("amp", 0.5)))),
    ]
}


def list_systems() -> list[dict]:
    return [{"name": e.name, "params": e.params, "branch": e.branch} for e in CATALOG.values()]


# -- configuration --------------------------------------------------------------

DEFAULT_OPTIONS = {
    "autonomy": {"samples": 10_000},
    "classify": {"bracket_samples": 200},
    "lyapunov": {"starts": 16, "n_iter": 1000, "transient": 100},
    "splitting": {"grid": [256, 256, 64], "tol": 1e-10, "max_iter": 80},
    "regularity": {"heavy_grid": [512, 512, 4], "direction": 0},
    "rotation-profile": {"n_base": 256, "grid": 256},
}

DEFAULT_TOLERANCES = {"lyapunov": 1e-3, "structure": 1e-4}


@dataclass
class ExperimentConfig:
    system: str
    params: dict
    analyses: list
    tolerances: dict
    options: dict
    seed: int = 0
    output_dir: str = "framelab-out"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        sysd = d.get("system")
        if isinstance(sysd, str):
            name, params = sysd, dict(d.get("params", {}))
        elif isinstance(sysd, dict) and "name" in sysd:
            name, params = sysd["name"], dict(sysd.get("params", {}))
        else:
            raise ConfigError("config needs a system name")
        if name not in CATALOG:
            raise ConfigError(f"unknown constructor {name!r}; see list-systems")
        analyses = list(d.get("analyses", []))
        if not analyses:
            raise ConfigError("analyses must be a non-empty list")
        for a in analyses:
            if a not in ANALYSES:
                raise ConfigError(f"unknown analysis {a!r}")
        options = {k: dict(v) for k, v in DEFAULT_OPTIONS.items()}
        for k, v in d.get("options", {}).items():
            if k not in options:
                raise ConfigError(f"options for unknown analysis {k!r}")
            options[k].update(v)
        tolerances = dict(DEFAULT_TOLERANCES)
        tolerances.update(d.get("tolerances", {}))
        return cls(name, params, analyses, tolerances, options, int(d.get("seed", 0)), d.get("output_dir", "framelab-out"))

    def to_dict(self) -> dict:
        return {
            "system": {"name": self.system, "params": self.params},
            "analyses": self.analyses,
            "tolerances": self.tolerances,
            "options": self.options,
            "seed": self.seed,
        }


# -- analyses ---------------------------------------------------------------------


class Context:
    def __init__(self, cfg: ExperimentConfig, out: Path | None, heavy: bool):
        self.cfg = cfg
        self.out = out
        self.heavy = heavy
        self.sys = CATALOG[cfg.system].build(cfg.params)
        self.rng = np.random.default_rng(cfg.seed)
        self.results: dict = {}
        self.artifacts: list = []
        self.state: dict = {}

    def opt(self, analysis):
        return self.cfg.options[analysis]

    def artifact(self, name, writer, *args):
        if self.out is None:
            return None
        path = self.out / name
        size = writer(path, *args)
        self.artifacts.append({"path": name, "bytes": int(size), "sha256": sha256_file(path)})
        return name


def _autonomy(ctx: Context) -> dict:
    sys_ = ctx.sys
    pts = sys_.manifold.sample(ctx.rng, int(ctx.opt("autonomy")["samples"]))
    ctx.state["samples"] = pts
    rep = cocycle.autonomy_check(sys_.diffeo, sys_.framing, pts, ctx.cfg.tolerances.get("autonomy"))
    ctx.state["cocycle"] = rep
    out = rep.to_dict()
    out["det_sign"] = cocycle.determinant_check(rep)
    out["status"] = "pass" if rep.autonomous else "fail"
    return out


def _require_autonomy(ctx: Context, who: str) -> dict | None:
    if "autonomy" not in ctx.results:
        ctx.results["autonomy"] = _autonomy(ctx)
        ctx.results["autonomy"]["implicit"] = True
    if ctx.results["autonomy"]["status"] != "pass":
        return {"status": "skipped", "gate": f"{who} requires a passing autonomy check"}
    return None


def _classify(ctx: Context) -> dict:
    gate = _require_autonomy(ctx, "classify")
    if gate:
        return gate
    rep = ctx.state["cocycle"]
    sys_ = ctx.sys
    n = sys_.dimension
    if n == 2:
        tag = classify.classify_2d(rep.M)
        return {"status": "pass", "class": tag, "trace": float(np.trace(rep.M)), "det": rep.det}
    spec = cocycle.verify_partial_hyperbolicity(rep.M)
    if not sys_.framing.exact:
        return {
            "status": "fail",
            "partial_hyperbolicity": spec.to_dict(),
            "reason": "framing is only continuous; bracket data is undefined, so no branch is routed",
        }
    pts = ctx.state["samples"][: int(ctx.opt("classify")["bracket_samples"])]
    T = fields.structure_constants(sys_.framing, pts, tolerance=ctx.cfg.tolerances["structure"])
    if sys_.roles is not None and T.is_constant:
        s, c, u = sys_.roles
        jr = fields.jacobi_residual(T, (s, c, u))
    else:
        jr = fields.jacobi_residual(T)
    branch = classify.theorem3d_branch(rep, spec, T)
    out = {
        "status": "pass",
        "partial_hyperbolicity": spec.to_dict(),
        "structure_tensor": T.to_dict(),
        "jacobi_residual": jr.tolist(),
        "branch": branch.to_dict(),
        "branch_label": str(branch),
    }
    if sys_.roles is not None:
        s, c, u = sys_.roles
        out["a_cs_plus_a_cu"] = float(T.a[c, s, s] + T.a[c, u, u])
    return out


def _lyapunov(ctx: Context) -> dict:
    o = ctx.opt("lyapunov")
    sys_ = ctx.sys
    starts = sys_.manifold.sample(ctx.rng, int(o["starts"]))
    spec = cocycle.lyapunov_exponents(sys_.diffeo, starts, int(o["n_iter"]), transient=int(o["transient"]))
    ctx.state["lyapunov"] = spec
    out = spec.to_dict(with_running=True)
    tol = ctx.cfg.tolerances["lyapunov"]
    if "cocycle" in ctx.state:
        target = np.sort(np.log(np.abs(np.linalg.eigvals(ctx.state["cocycle"].M))))[::-1]
        err = float(np.max(np.abs(spec.exponents - target)))
        out.update({"expected": target.tolist(), "max_error": err})
        ok = err < tol and spec.per_point_spread < tol
    else:
        ok = spec.per_point_spread < tol
    out["status"] = "pass" if ok else "fail"
    return out


def _splitting(ctx: Context) -> dict:
    o = ctx.opt("splitting")
    if ctx.sys.name != "circle-extension":
        return {"status": "fail", "reason": "splitting needs a circle-extension system"}
    shape = tuple(int(v) for v in o["grid"])
    init = splitting.GridLineField.constant(shape)
    fld, rep = splitting.cone_converge(ctx.sys, init, float(o["tol"]), int(o["max_iter"]))
    ctx.state["field"] = fld
    oracle = splitting.series_slope(ctx.sys, shape)
    out = rep.to_dict()
    out["oracle_sup_error"] = float(np.max(np.abs(fld.slope - oracle)))
    out["summary"] = splitting.splitting_summary(fld)
    out["grid_file"] = ctx.artifact("splitting_unstable.bin", write_grid, fld.slope)
    ok = rep.converged and rep.invariance_residual <= 10 * rep.tol
    out["status"] = "pass" if ok else "fail"
    return out


def _regularity(ctx: Context) -> dict:
    o = ctx.opt("regularity")
    if ctx.heavy:
        shape = tuple(int(v) for v in o["heavy_grid"])
        tol = ctx.opt("splitting")["tol"]
        fld, _ = splitting.cone_converge(ctx.sys, splitting.GridLineField.constant(shape), float(tol), 200)
    else:
        if "field" not in ctx.state:
            if "splitting" not in ctx.results:
                ctx.results["splitting"] = _splitting(ctx)
                ctx.results["splitting"]["implicit"] = True
            if ctx.results["splitting"]["status"] != "pass":
                return {"status": "skipped", "gate": "regularity requires a converged splitting"}
        fld = ctx.state["field"]
    est = splitting.holder_exponent(fld, int(o["direction"]))
    out = est.to_dict()
    out["grid"] = list(fld.shape)
    out["heavy"] = bool(ctx.heavy)
    out["below_lipschitz"] = bool(est.exponent < 0.95)
    out["status"] = "pass"
    return out


def _rotation_profile(ctx: Context) -> dict:
    o = ctx.opt("rotation-profile")
    if ctx.sys.dimension != 2 or ctx.sys.fiber_axis is None:
        return {"status": "fail", "reason": "rotation profiles need a fibered map of T^2"}
    prof = circle.fiber_rotation_profile(ctx.sys, n_base=int(o["n_base"]))
    out = prof.to_dict()
    out["profile_file"] = ctx.artifact(
        "rotation_profile.csv", write_csv, ["z", "alpha"], zip(prof.z.tolist(), prof.alpha.tolist())
    )
    if prof.degree_k != 0:
        try:
            lin = circle.linearize_parabolic(ctx.sys, n_base=int(o["n_base"]), grid=int(o["grid"]))
            out["linearization"] = lin.to_dict()
        except FramelabError as exc:
            out["linearization"] = {"error": type(exc).__name__, "message": str(exc)}
    out["status"] = "pass"
    return out


RUNNERS = {
    "autonomy": _autonomy,
    "classify": _classify,
    "lyapunov": _lyapunov,
    "splitting": _splitting,
    "regularity": _regularity,
    "rotation-profile": _rotation_profile,
}


def run(cfg: ExperimentConfig, out: Path | None = None, heavy: bool = False, normalized: bool = False) -> tuple[dict, int]:
    """Run every analysis in order; returns the report and the exit code."""
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, out, heavy)
    timings = {}
    for name in cfg.analyses:
        if name in ctx.results:
            continue
        t0 = time.perf_counter()
        try:
            ctx.results[name] = RUNNERS[name](ctx)
        except FramelabError as exc:
            ctx.results[name] = {"status": "fail", "error": type(exc).__name__, "message": str(exc)}
        timings[name] = time.perf_counter() - t0
    if "lyapunov" in ctx.results and ctx.state.get("lyapunov") is not None:
        run_file = ctx.artifact(
            "lyapunov_running.csv", write_csv,
            ["iteration"] + [f"exponent_{i}" for i in range(ctx.sys.dimension)],
            ([i + 1] + row for i, row in enumerate(ctx.state["lyapunov"].running.tolist())),
        )
        ctx.results["lyapunov"]["running_file"] = run_file
    status = all(ctx.results[a]["status"] == "pass" for a in cfg.analyses)
    report = {
        "config": cfg.to_dict(),
        "results": ctx.results,
        "artifacts": ctx.artifacts,
        "passed": status,
    }
    if not normalized:
        report["timings"] = timings
    if out is not None:
        write_json(out / "report.json", report)
    return report, EXIT_PASS if status else EXIT_FAILED


# -- export / verify --------------------------------------------------------------


def export_plot_data(report: dict, analysis: str, out: Path, base: Path, stride: int = 1) -> Path:
    """Write the CSV for one analysis of a stored report."""
    if stride < 1:
        raise ConfigError("stride must be a positive integer")
    res = report.get("results", {}).get(analysis)
    if res is None or res.get("status") == "skipped":
        raise NotInReport(f"analysis {analysis!r} is not in the report")
    out.mkdir(parents=True, exist_ok=True)
    if analysis == "splitting":
        if not res.get("grid_file"):
            raise NotInReport("the splitting run wrote no grid file")
        full = read_grid(base / res["grid_file"])
        s = full[::stride, ::stride, ::stride]
        idx = np.indices(s.shape).reshape(3, -1).T * stride / np.asarray(full.shape, dtype=float)
        rows = (list(c) + [v] for c, v in zip(idx.tolist(), s.ravel().tolist()))
        path = out / "splitting.csv"
        write_csv(path, ["x", "y", "theta", "slope"], rows)
    elif analysis == "rotation-profile":
        path = out / "rotation_profile.csv"
        write_csv(path, ["z", "alpha"], zip(res["z"], res["alpha"]))
    elif analysis == "lyapunov":
        path = out / "lyapunov.csv"
        running = res["running"]
        header = ["iteration"] + [f"exponent_{i}" for i in range(len(running[0]))]
        write_csv(path, header, ([i + 1] + row for i, row in enumerate(running)))
    else:
        raise NotInReport(f"analysis {analysis!r} has no plot data")
    return path


def verify_report(report: dict, base: Path) -> list[str]:
    """Re-check stored artifacts; returns a list of problems (empty when clean)."""
    problems = []
    for art in report.get("artifacts", []):
        p = base / art["path"]
        if not p.exists():
            problems.append(f"missing {art['path']}")
            continue
        if p.stat().st_size != art["bytes"]:
            problems.append(f"size mismatch for {art['path']}")
        if "sha256" in art and sha256_file(p) != art["sha256"]:
            problems.append(f"checksum mismatch for {art['path']}")
    res = report.get("results", {}).get("splitting")
    if res and res.get("grid_file") and (base / res["grid_file"]).exists():
        s = read_grid(base / res["grid_file"])
        if not np.all(np.isfinite(s)):
            problems.append("grid field has non-finite slopes")
        cfg = ExperimentConfig.from_dict(
            {"system": report["config"]["system"], "analyses": ["splitting"]}
        )
        sys_ = CATALOG[cfg.system].build(cfg.params)
        fld = splitting.GridLineField(s)
        nxt = splitting.graph_transform_step(fld, sys_)
        delta = float(np.max(np.abs(nxt.slope - s)))
        if delta >= 10 * res["tol"]:
            problems.append(f"stored field is not a fixed point (one-step change {delta:.3e})")
    return problems


# -- command line -------------------------------------------------------------------


def _load_configs(path: str, seed: int | None) -> list[ExperimentConfig]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    items = raw["experiments"] if isinstance(raw, dict) and "experiments" in raw else [raw]
    cfgs = [ExperimentConfig.from_dict(d) for d in items]
    if seed is not None:
        for c in cfgs:
            c.seed = seed
    return cfgs


def _summary_line(name, res):
    extra = ""
    for key in ("class", "branch_label", "max_deviation", "contraction_estimate", "exponent", "degree"):
        if key in res:
            extra += f" {key}={res[key]}"
    if "error" in res:
        extra += f" error={res['error']}"
    return f"  {name:<17} {res['status']}{extra}"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="framelab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment (or a batch) from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--heavy", action="store_true", help="512-point grid for the regularity analysis")
    r.add_argument("--json-only", action="store_true", help="write only the JSON report and print it")
    r.add_argument("--normalized", action="store_true", help="omit timings so reports compare byte for byte")
    sub.add_parser("list-systems", help="print the constructor catalog")
    e = sub.add_parser("export", help="write CSV plot data for one analysis of a report")
    e.add_argument("report")
    e.add_argument("--analysis", required=True)
    e.add_argument("--out", default=None)
    e.add_argument("--stride", type=int, default=1)
    v = sub.add_parser("verify", help="re-check the stored artifacts of a report")
    v.add_argument("report")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-systems":
            print(json.dumps(list_systems(), indent=2))
            return EXIT_PASS
        if args.command == "run":
            cfgs = _load_configs(args.config, args.seed)
            code = EXIT_PASS
            for i, cfg in enumerate(cfgs):
                out = Path(args.out or cfg.output_dir)
                if len(cfgs) > 1:
                    out = out / f"{i:02d}-{cfg.system}"
                report, c = run(cfg, None if args.json_only else out, args.heavy, args.normalized)
                if args.json_only:
                    out.mkdir(parents=True, exist_ok=True)
                    write_json(out / "report.json", report)
                    sys.stdout.write(dumps(report))
                else:
                    print(f"{cfg.system}: {'pass' if c == EXIT_PASS else 'FAIL'} -> {out / 'report.json'}")
                    for name in report["results"]:
                        print(_summary_line(name, report["results"][name]))
                code = max(code, c)
            return code
        if args.command == "export":
            rp = Path(args.report)
            report = json.loads(rp.read_text())
            path = export_plot_data(report, args.analysis, Path(args.out) if args.out else rp.parent, rp.parent, args.stride)
            print(path)
            return EXIT_PASS
        if args.command == "verify":
            rp = Path(args.report)
            problems = verify_report(json.loads(rp.read_text()), rp.parent)
            for p in problems:
                print(p)
            print("ok" if not problems else f"{len(problems)} problem(s)")
            return EXIT_PASS if not problems else EXIT_FAILED
    except (ConfigError, NotInReport, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
