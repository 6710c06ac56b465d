"""Configuration-driven experiment runner.

``folharm <subcommand> --config <path> [--out <dir>] [--threads N] [--seed S]``

Subcommands: ``tension`` (dump the tension field), ``energy`` (print the
transversal energy), ``flow`` (run the heat flow, dump trace / final map /
diagnostics), ``verify`` (run identity checks), ``report`` (everything the
config selects, bundled).  Configs are single JSON documents validated
against ``config_schema.json`` before any computation; unknown keys are
rejected.  The output directory resolves as ``--out`` flag, then the
``FOLHARM_OUT`` environment variable, then the config's ``out`` key, then
``./folharm_out``.

Exit codes: 0 all selected checks pass, 1 a numerical check failed,
2 configuration/schema error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_SUBCOMMANDS = ("tension", "energy", "flow", "verify", "report")


def _set_thread_limit(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def load_config(path) -> dict:
    """Parse and schema-validate an experiment config."""
    import jsonschema

    from .errors import ConfigurationError

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    schema = json.loads(
        resources.files("folharm").joinpath("config_schema.json").read_text()
    )
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigurationError(f"config {path}: at {where}: {exc.message}") from exc
    return config


class Experiment:
    """Geometries, foliation, grid and initial map built from a config."""

    def __init__(self, config: dict, seed: int | None = None):
        from . import (
            build_geometry,
            build_grid,
            make_family,
            named_profile,
        )

        self.config = config
        self.seed = config.get("seed", 0) if seed is None else seed
        self.source = build_geometry(config["source"])
        self.target = (
            build_geometry(config["target"]) if "target" in config else self.source
        )
        self.struct = None
        if "foliation" in config:
            fol = config["foliation"]
            self.struct = named_profile(
                fol["profile"], fol.get("leaf_dimension", 1), fol.get("params")
            )
        self.resolution = config["resolution"]
        self.grid = build_grid(self.source, self.resolution)
        self._make_family = make_family

    def grid_at(self, n: int):
        from . import build_grid

        return build_grid(self.source, n)

    def initial_map(self, grid=None):
        from . import serialize
        from .errors import ConfigurationError

        grid = self.grid if grid is None else grid
        spec = self.config.get("map")
        if spec is None:
            raise ConfigurationError(
                "this subcommand needs a 'map' entry in the config"
            )
        if "csv" in spec:
            return serialize.map_from_csv(spec["csv"], grid, self.target)
        fam = self._make_family(
            spec["family"], self.source, self.target, spec.get("params")
        )
        return fam.realize(grid)


def _resolve_out(args, config: dict) -> Path:
    if args.out:
        out = args.out
    elif os.environ.get("FOLHARM_OUT"):
        out = os.environ["FOLHARM_OUT"]
    else:
        out = config.get("out", "folharm_out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- subcommand bodies -----------------------------------------------------


def run_tension(exp: Experiment, out: Path) -> tuple[int, dict]:
    import numpy as np

    from . import serialize, tension, tension_sup_norm

    mapf = exp.initial_map()
    tau = tension(mapf)
    serialize.scalar_field_to_csv(out / "tension.csv", exp.grid, {"tau": tau})
    payload = {
        "subcommand": "tension",
        "resolution": list(exp.grid.shape),
        "max_tension": tension_sup_norm(mapf, tau),
        "mean_abs_tension": float(np.mean(np.abs(tau))),
        "seed": exp.seed,
        "pass": True,
    }
    serialize.dump_json(out / "tension.json", payload)
    return EXIT_OK, payload


def run_energy(exp: Experiment, out: Path) -> tuple[int, dict]:
    from . import serialize, transversal_energy

    mapf = exp.initial_map()
    E = transversal_energy(mapf, exp.struct, check_cancellation=exp.struct is not None)
    payload = {
        "subcommand": "energy",
        "resolution": list(exp.grid.shape),
        "E_B": E,
        "seed": exp.seed,
        "pass": True,
    }
    serialize.dump_json(out / "energy.json", payload)
    print(f"E_B = {E!r}")
    return EXIT_OK, payload


def run_flow_cmd(exp: Experiment, out: Path) -> tuple[int, dict]:
    from . import (
        FlowConfig,
        RigidityTolerances,
        rigidity_diagnostics,
        run_flow,
        serialize,
        tension_sup_norm,
    )

    flow_cfg = FlowConfig(**exp.config.get("flow", {}))
    mapf = exp.initial_map()
    final, trace = run_flow(mapf, exp.struct, flow_cfg)
    serialize.trace_to_csv(out / "flow_trace.csv", trace)
    serialize.map_to_csv(out / "flow_final_map.csv", final)
    converged = trace.termination == "tension_tol"
    payload = {
        "subcommand": "flow",
        "resolution": list(exp.grid.shape),
        "termination": trace.termination,
        "steps": trace.steps[-1],
        "initial_energy": trace.energy[0],
        "final_energy": trace.energy[-1],
        "final_max_tension": tension_sup_norm(final),
        "monotone_energy": all(
            b <= a + 1e-14 for a, b in zip(trace.energy, trace.energy[1:])
        ),
        "seed": exp.seed,
        "pass": converged,
    }
    if "rigidity" in exp.config and converged:
        rig = dict(exp.config["rigidity"])
        rank_cap = rig.pop("rank_cap")
        diag = rigidity_diagnostics(
            final, exp.struct, rank_cap, RigidityTolerances(**rig)
        )
        payload["rigidity"] = diag.to_dict()
    serialize.dump_json(out / "flow.json", payload)
    return (EXIT_OK if converged else EXIT_CHECK_FAILED), payload


def _divergence_vector_field(grid, spec: dict):
    import numpy as np

    spec = dict(spec or {})
    comp = int(spec.pop("component", 0))
    amp = float(spec.pop("amplitude", 1.0))
    kvec = np.asarray(spec.pop("kvec", [1] + [0] * (grid.dim - 1)), dtype=float)
    phase = float(spec.pop("phase", 0.0))
    omega = np.zeros(grid.dim)
    for a in range(grid.dim):
        lo, hi = grid.geometry.chart_bounds[a]
        omega[a] = 2 * np.pi / (hi - lo)
    s = np.einsum("a,...a->...", kvec * omega, grid.points) + phase
    X = np.zeros(grid.shape + (grid.dim,))
    X[..., comp] = amp * np.cos(s)
    return X


def _verify_reports(exp: Experiment) -> list[dict]:
    """Run the checks selected under config['verify']; one report per check."""
    from . import (
        FoliatedStructure,
        VariationSpec,
        check_divergence_theorem,
        check_first_variation,
        check_lemma_volume,
        composition_residuals,
        make_family,
        refinement_report,
        variation_field,
        weitzenbock_residual,
    )
    from .errors import ConfigurationError
    from .verify import IdentityResidualReport

    vcfg = exp.config["verify"]
    tolerances = vcfg.get("tolerances", {})
    order_tol = vcfg.get("order_tolerance", 1.7)
    resolutions = exp.config.get("resolutions")
    reports = []
    for check in vcfg["checks"]:
        if check == "first_variation":
            var = dict(exp.config.get("variation", {}))
            fd_steps = tuple(var.pop("fd_steps", (1e-2, 5e-3, 2.5e-3)))
            mapf = exp.initial_map()
            V = variation_field(exp.grid, exp.target, var)
            rep = check_first_variation(
                mapf, exp.struct, VariationSpec(V, fd_steps),
                tolerance=tolerances.get("first_variation", 1e-3),
            )
        elif check == "weitzenbock":
            mode = vcfg.get("weitzenbock_mode", "general")
            tol = tolerances.get("weitzenbock")

            def residual(n, mode=mode):
                return weitzenbock_residual(
                    exp.initial_map(exp.grid_at(n)), exp.struct, mode
                )

            if resolutions:
                rep = refinement_report(
                    "weitzenbock", resolutions, residual, order_tol, tol
                )
            else:
                r = residual(exp.resolution)
                rep = IdentityResidualReport(
                    "weitzenbock", [list(exp.grid.shape)], [r],
                    tolerance=tol, passed=(tol is None or r <= tol),
                )
        elif check == "lemma_volume":
            if exp.struct is None:
                raise ConfigurationError("lemma_volume check needs a foliation")
            if resolutions:
                # exercise the finite-difference route by withholding the
                # closed-form derivative
                discrete = FoliatedStructure(
                    exp.struct.leaf_dimension, exp.struct.vol, None
                )
                rep = refinement_report(
                    "lemma_volume", resolutions,
                    lambda n: check_lemma_volume(exp.grid_at(n), discrete),
                    order_tol, tolerances.get("lemma_volume"),
                )
            else:
                tol = tolerances.get("lemma_volume", 1e-12)
                r = check_lemma_volume(exp.grid, exp.struct)
                rep = IdentityResidualReport(
                    "lemma_volume", [list(exp.grid.shape)], [r],
                    tolerance=tol, passed=r <= tol,
                )
        elif check == "divergence":
            if exp.struct is None:
                raise ConfigurationError("divergence check needs a foliation")
            field_spec = vcfg.get("divergence_field", {})

            def residual(n):
                grid = exp.grid_at(n)
                X = _divergence_vector_field(grid, field_spec)
                return check_divergence_theorem(grid, X, exp.struct)

            if resolutions:
                rep = refinement_report(
                    "divergence", resolutions, residual, order_tol,
                    tolerances.get("divergence"),
                )
            else:
                tol = tolerances.get("divergence", 1e-8)
                r = residual(exp.resolution)
                rep = IdentityResidualReport(
                    "divergence", [list(exp.grid.shape)], [r],
                    tolerance=tol, passed=r <= tol,
                )
        elif check == "composition":
            comp_cfg = vcfg.get("compose_with")
            if comp_cfg is None:
                raise ConfigurationError(
                    "composition check needs verify.compose_with"
                )
            from . import build_geometry

            outer_target = build_geometry(comp_cfg["target"])
            psi = make_family(
                comp_cfg["family"], exp.target, outer_target,
                comp_cfg.get("params"),
            )

            def residual(n):
                res = composition_residuals(exp.initial_map(exp.grid_at(n)), psi)
                return max(res.values())

            if resolutions:
                rep = refinement_report(
                    "composition", resolutions, residual, order_tol,
                    tolerances.get("composition"),
                )
            else:
                tol = tolerances.get("composition", 1e-2)
                r = residual(exp.resolution)
                rep = IdentityResidualReport(
                    "composition", [list(exp.grid.shape)], [r],
                    tolerance=tol, passed=r <= tol,
                )
        else:  # unreachable behind the schema
            raise ConfigurationError(f"unknown check {check!r}")
        reports.append(rep.to_dict())
    return reports


def _write_verify_outputs(reports: list[dict], out: Path, name: str) -> bool:
    import csv

    from . import serialize

    serialize.dump_json(out / f"{name}.json", {"reports": reports})
    with open(out / f"{name}_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["identity", "finest_residual", "min_order", "pass"])
        for rep in reports:
            min_order = min(rep["orders"]) if rep["orders"] else ""
            writer.writerow([
                rep["identity"],
                serialize.fmt(rep["residuals"][-1]),
                serialize.fmt(min_order) if min_order != "" else "",
                str(rep["pass"]).lower(),
            ])
    ok = True
    for rep in reports:
        status = "PASS" if rep["pass"] else "FAIL"
        print(f"{status} {rep['identity']}: residuals {rep['residuals']}")
        ok &= rep["pass"]
    if not ok:
        failing = [r["identity"] for r in reports if not r["pass"]]
        print(f"failing identities: {', '.join(failing)}", file=sys.stderr)
    return ok


def run_verify(exp: Experiment, out: Path) -> tuple[int, dict]:
    reports = _verify_reports(exp)
    ok = _write_verify_outputs(reports, out, "verify")
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), {"reports": reports}


def run_report(exp: Experiment, out: Path) -> tuple[int, dict]:
    from . import serialize

    payload: dict = {"subcommand": "report", "seed": exp.seed}
    codes = []
    if "map" in exp.config:
        code, part = run_energy(exp, out)
        payload["energy"] = part
        codes.append(code)
    if "flow" in exp.config or "rigidity" in exp.config:
        code, part = run_flow_cmd(exp, out)
        payload["flow"] = part
        codes.append(code)
    if "verify" in exp.config:
        reports = _verify_reports(exp)
        ok = _write_verify_outputs(reports, out, "verify")
        payload["verify"] = {"reports": reports}
        codes.append(EXIT_OK if ok else EXIT_CHECK_FAILED)
    payload["pass"] = all(c == EXIT_OK for c in codes)
    serialize.dump_json(out / "report.json", payload)
    return (EXIT_OK if payload["pass"] else EXIT_CHECK_FAILED), payload


_RUNNERS = {
    "tension": run_tension,
    "energy": run_energy,
    "flow": run_flow_cmd,
    "verify": run_verify,
    "report": run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folharm",
        description="transversal tension, energy, heat flow and identity "
                    "checks for foliated maps",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker thread cap for numerical kernels")
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (recorded in reports)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        _set_thread_limit(args.threads)

    from .errors import FolharmError
    from .errors import ConfigurationError

    try:
        config = load_config(args.config)
        exp = Experiment(config, seed=args.seed)
        out = _resolve_out(args, config)
        code, _ = _RUNNERS[args.subcommand](exp, out)
        return code
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FolharmError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
