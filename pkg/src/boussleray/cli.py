"""Command-line driver: ``boussleray {mms-time,mms-space,marsigli,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .io import ConfigError, RunManifest, parse_config, serialize_config, write_jsonl, write_rate_table
from .stepper import Model

log = logging.getLogger("boussleray")

_EXPERIMENT = {"mms-time": "mms-time", "mms-space": "mms-space", "marsigli": "marsigli",
               "verify": "property-suite"}


class _Parser(argparse.ArgumentParser):
    """Argument errors as JSON on stderr, exit code 2."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boussleray", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("mms-time", "temporal convergence study on the manufactured solution"),
        ("mms-space", "spatial convergence study on the manufactured solution"),
        ("marsigli", "lock-exchange benchmark"),
        ("verify", "algebraic property suite"),
    ]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, help="YAML configuration file")
        s.add_argument("--model", choices=[m.value for m in Model])
        s.add_argument("--deconv-order", type=int, dest="N")
        s.add_argument("--scale", choices=("desk", "paper"))
        s.add_argument("--out", dest="out_dir")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args) -> tuple:
    text = args.config.read_text() if args.config else ""
    overrides = {"model": args.model, "N": args.N, "scale": args.scale, "out_dir": args.out_dir}
    if not text.strip():
        overrides["experiment"] = _EXPERIMENT[args.command]
    cfg = parse_config(text, overrides)
    if cfg.experiment != _EXPERIMENT[args.command]:
        raise ConfigError([f"config experiment {cfg.experiment!r} does not match command {args.command!r}"])
    return cfg, text


def _mms_time(cfg, out: Path) -> dict:
    from .verification import MmsProblem, run_temporal_study

    problem = MmsProblem(cfg.Re, cfg.Ri, cfg.Pr)
    table = run_temporal_study(
        problem, cfg.h, cfg.dts, None if cfg.steps_per_row else cfg.t_end, cfg.degree,
        cfg.model, cfg.N, cfg.temperature_wind, cfg.backend, cfg.steps_per_row,
    )
    write_rate_table(table, out / "temporal_rates.csv")
    print(table.format())
    return {"rows": len(table.rows)}


def _mms_space(cfg, out: Path) -> dict:
    from .verification import MmsProblem, run_spatial_study

    problem = MmsProblem(cfg.Re, cfg.Ri, cfg.Pr)
    degrees = cfg.degrees or [cfg.degree]
    for k in degrees:
        table = run_spatial_study(problem, cfg.hs, k, cfg.t_end, cfg.dt, cfg.model, cfg.N, cfg.backend)
        write_rate_table(table, out / f"spatial_rates_P{k}.csv")
        print(f"P{k}")
        print(table.format())
    return {"degrees": degrees}


def _marsigli(cfg, out: Path) -> dict:
    from .verification import MarsigliScenario, run_marsigli

    scenario = MarsigliScenario(Re=cfg.Re, Ri=cfg.Ri, Pr=cfg.Pr, t_end=cfg.t_end,
                                snapshot_times=tuple(cfg.snapshot_times))
    shape = (cfg.nx, cfg.ny) if cfg.nx and cfg.ny else None
    res = run_marsigli(
        scenario, cfg.model, cfg.mesh_role, cfg.N, cfg.dt, cfg.t_end, shape, cfg.alpha, cfg.backend, out,
        cfg.vtk_refine, cfg.normalize, cfg.indicator_arg, progress_every=50,
    )
    summary = {"model": res.model, "mesh_role": res.mesh_role, "aborted": res.aborted,
               "wall_time": res.wall_time, **res.meta}
    for t in sorted(res.snapshots):
        try:
            r = res.at(t)
        except KeyError:
            continue
        summary[f"t{t:g}"] = {"out_of_range_fraction": r.out_of_range_fraction,
                              "T_min": r.T_min, "T_max": r.T_max, "top_mean_ux": r.top_mean_ux}
    print(json.dumps(summary, indent=2, default=str))
    if res.aborted:
        raise RuntimeError(f"run aborted: {res.error}")
    return summary


def _verify(cfg, out: Path) -> dict:
    from .verification import run_property_suite

    results = run_property_suite()
    for r in results:
        print(r.line())
    write_jsonl([{"name": r.name, "value": r.value, "tol": r.tol, "passed": r.passed} for r in results],
                out / "properties.jsonl")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise RuntimeError(f"properties failed: {', '.join(failed)}")
    return {"passed": len(results)}


_RUNNERS = {"mms-time": _mms_time, "mms-space": _mms_space, "marsigli": _marsigli,
            "property-suite": _verify}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg, text = _load(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "problems": exc.problems}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    manifest = RunManifest.begin(cfg.to_dict(), serialize_config(cfg), out)
    (out / "config.yaml").write_text(serialize_config(cfg))
    try:
        summary = _RUNNERS[cfg.experiment](cfg, out)
    except Exception as exc:
        manifest.finish(out, "failed", {"error": str(exc)})
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    manifest.finish(out, "ok", summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
