"""Command-line front end.

Subcommands: pass, optimize, footprint, annual, grid, multipass,
compare-protocols. Configuration comes from a TOML file plus flat overrides;
artifacts (CSV/JSON) land in --out-dir and a one-line summary goes to stdout.
Validation failures exit nonzero with a machine-readable JSON error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import (
    annual_volume,
    config_hash,
    continuous_asymptotic_oracle,
    footprint_sweep,
    grid_to_csv,
    sensitivity_grid,
)
from .config import ConfigError, RunConfig
from .counts import EFFICIENT, STANDARD, accumulate_window
from .finitekey import skl_finite, skl_standard_bb84
from .optimizer import optimize_multi_pass
from .orbit import pass_geometry


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satkey", description="Satellite decoy-state BB84 finite-key toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("pass", "Tallies and SKL for one pass at fixed parameters"),
        ("optimize", "Optimise SKL over protocol parameters and time window"),
        ("footprint", "SKL vs ground-track offset sweep"),
        ("annual", "Footprint sweep plus expected annual key volume"),
        ("grid", "Sensitivity grid over system parameters"),
        ("multipass", "SKL vs number of aggregated identical passes"),
        ("compare-protocols", "Efficient vs standard BB84 over link efficiencies"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=str, default=None, help="TOML config file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--threads", type=int, default=None)
        cmd.add_argument("--out-dir", type=str, default=None)
        cmd.add_argument("--dmin-km", type=float, default=0.0)
        cmd.add_argument("--eta-offset-db", type=float, default=0.0)
        cmd.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="flat config override, repeatable",
        )
        if name == "pass":
            cmd.add_argument("--dt", type=float, default=None,
                             help="transmission half-width in seconds")
        if name == "multipass":
            cmd.add_argument("--max-passes", type=int, default=10)
        if name == "annual":
            cmd.add_argument("--latitude-deg", type=float, default=55.9)
    return parser


def _load_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        dotted, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        overrides[dotted] = _coerce(value)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    cfg = RunConfig.load(args.config, overrides)
    if args.eta_offset_db:
        cfg.system = replace(
            cfg.system, link=cfg.system.link.with_offset(args.eta_offset_db)
        )
    return cfg


def _out(cfg: RunConfig, name: str) -> Path:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def _write_manifest(cfg: RunConfig, command: str) -> None:
    payload = {
        "command": command,
        "config": cfg.raw,
        "seed": cfg.seed,
        "version": __version__,
        "config_hash": config_hash(cfg.system, cfg.protocol),
    }
    with open(_out(cfg, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2)


def _cmd_pass(cfg: RunConfig, args) -> str:
    geom = pass_geometry(cfg.system.orbit, d_min_km=args.dmin_km)
    tallies = accumulate_window(
        geom, cfg.system.link, cfg.protocol, cfg.system.error, half_width_s=args.dt
    )
    if cfg.protocol.variant == STANDARD:
        result = skl_standard_bb84(tallies, cfg.protocol, cfg.system.security)
    else:
        result = skl_finite(tallies, cfg.protocol, cfg.system.security)
    geom.to_csv(_out(cfg, "geometry.csv"))
    tallies.to_json(_out(cfg, "tallies.json"))
    result.to_json(_out(cfg, "skl.json"))
    return f"pass d_min={args.dmin_km:g} km SKL={result.ell} bits QBER={result.qber:.4g}"


def _cmd_optimize(cfg: RunConfig, args) -> str:
    opt = cfg.system.optimize(d_min_km=args.dmin_km)
    opt.result.to_json(_out(cfg, "skl.json"))
    payload = {
        "skl_bits": opt.result.ell,
        "half_width_s": opt.half_width_s,
        "p_x": opt.params.p_x,
        "mu": list(opt.params.mu),
        "p_mu": list(opt.params.p_mu),
        "n_evaluations": opt.n_evaluations,
        "seed": cfg.seed,
    }
    with open(_out(cfg, "optimum.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    return (
        f"optimize SKL={opt.result.ell} bits dt={opt.half_width_s:g} s "
        f"p_x={opt.params.p_x:.4f} mu=({opt.params.mu[0]:.4f},{opt.params.mu[1]:.4f})"
    )


def _footprint(cfg: RunConfig):
    camp = cfg.campaign
    step = camp.get("d_min_step_km", 50.0)
    d_max = camp.get("d_min_max_km", 1500.0)
    grid = np.arange(0.0, d_max + 1e-9, step)
    return footprint_sweep(cfg.system, grid)


def _cmd_footprint(cfg: RunConfig, args) -> str:
    curve = _footprint(cfg)
    curve.to_csv(_out(cfg, "footprint.csv"))
    return (
        f"footprint d_min_plus={curve.d_min_plus_km:.0f} km "
        f"theta_max_minus={curve.theta_max_minus_deg:.1f} deg "
        f"SKL(0)={curve.skl_bits[0]:.0f} bits"
    )


def _cmd_annual(cfg: RunConfig, args) -> str:
    curve = _footprint(cfg)
    latitude = args.latitude_deg if args.latitude_deg is not None else 55.9
    estimate = annual_volume(curve, latitude, cfg.system.orbit)
    curve.to_csv(_out(cfg, "footprint.csv"))
    estimate.to_json(_out(cfg, "annual.json"))
    return (
        f"annual SKL_year={estimate.skl_year_bits:.4g} bits "
        f"SKL_int={estimate.skl_int_bit_m:.4g} bit*m at {latitude:g} deg"
    )


def _cmd_grid(cfg: RunConfig, args) -> str:
    camp = cfg.campaign
    rows = sensitivity_grid(
        cfg.system,
        eta_offsets_db=camp.get("eta_offsets_db", [0.0]),
        p_ec_values=camp.get("p_ec_values"),
        qber_i_values=camp.get("qber_i_values"),
        d_min_km=args.dmin_km,
    )
    grid_to_csv(rows, _out(cfg, "grid.csv"))
    nonzero = sum(1 for r in rows if r["skl_bits"] > 0)
    return f"grid {len(rows)} cells, {nonzero} with positive SKL"


def _cmd_multipass(cfg: RunConfig, args) -> str:
    geom = pass_geometry(cfg.system.orbit, d_min_km=args.dmin_km)
    rows = []
    for m in range(1, args.max_passes + 1):
        opt = optimize_multi_pass(
            m, geom, cfg.system.link, cfg.system.error, cfg.system.security,
            space=cfg.system.space, seed=cfg.seed,
            source_rate_hz=cfg.system.source_rate_hz, variant=cfg.system.variant,
            config=cfg.system.opt,
        )
        rows.append(
            {"passes": m, "skl_bits": opt.result.ell, "per_pass": opt.result.ell / m}
        )
    grid_to_csv(rows, _out(cfg, "multipass.csv"))
    return f"multipass l_1={rows[0]['skl_bits']} l_{args.max_passes}={rows[-1]['skl_bits']}"


def _cmd_compare(cfg: RunConfig, args) -> str:
    rows = []
    for variant in (EFFICIENT, STANDARD):
        opt = cfg.system.optimize(d_min_km=args.dmin_km, variant=variant)
        rows.append({"variant": variant, "skl_bits": opt.result.ell,
                     "half_width_s": opt.half_width_s})
    grid_to_csv(rows, _out(cfg, "protocols.csv"))
    return (
        f"compare-protocols efficient={rows[0]['skl_bits']} "
        f"standard={rows[1]['skl_bits']} bits"
    )


_COMMANDS = {
    "pass": _cmd_pass,
    "optimize": _cmd_optimize,
    "footprint": _cmd_footprint,
    "annual": _cmd_annual,
    "grid": _cmd_grid,
    "multipass": _cmd_multipass,
    "compare-protocols": _cmd_compare,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        summary = _COMMANDS[args.command](cfg, args)
        _write_manifest(cfg, args.command)
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
