"""Command-line front end: constructions, simulations, sweeps, exports.

Subcommands: witness, simulate, deepen, cover.  Parameters come from flags
and an optional plain-text config file (one `key = value` per line, `#`
comments, unknown keys rejected).  Outputs are JSON (certificates, chains)
and CSV (orbits, average series) with parameter-echo headers; runs are
deterministic, so identical inputs give byte-identical files.

Exit codes: 0 verified success, 1 usage/validation error, 2 construction
or verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .averaging import average_series, series_csv_lines
from .bigreal import BigReal
from .errors import LorenzHistError
from .geometry import BoxSpec, SigmaPoint
from .map1d import MapParams, find_period2
from .semiflow import FlowParams, build_orbit, orbit_csv_lines
from .witness import (
    WitnessSettings,
    certificate_to_json,
    construct_witness,
    deepen,
    dense_cover,
    verify_certificate,
)

CONFIG_KEYS = {
    "rho": float,
    "c": float,
    "lam": float,
    "mu": float,
    "nu": float,
    "t_out": float,
    "eta": float,
    "mode": str,
    "margin": float,
    "precision_bits": int,
    "seed": int,
    "out_dir": str,
}


class UsageError(Exception):
    pass


def load_config(path: Optional[str]) -> dict:
    """Parse `key = value` lines; unknown keys are rejected."""
    cfg: dict = {}
    if path is None:
        return cfg
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            cfg[key] = CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return cfg


def dump_config(cfg: dict) -> str:
    lines = [f"{k} = {cfg[k]}" for k in sorted(cfg)]
    return "\n".join(lines) + "\n"


def settings_from_config(cfg: dict) -> WitnessSettings:
    try:
        return WitnessSettings(
            map_params=MapParams(
                rho=cfg.get("rho", 0.75), c=cfg.get("c", 0.95)
            ),
            flow_params=FlowParams(
                lam=cfg.get("lam", 1.0),
                mu=cfg.get("mu", 2.0),
                nu=cfg.get("nu", 1.0),
                t_out=cfg.get("t_out", 1.0),
            ),
            box=BoxSpec(eta=cfg.get("eta", 0.04)),
            mode=cfg.get("mode", "strict"),
            margin=cfg.get("margin", 3.0),
            precision_override=cfg.get("precision_bits"),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _echo_meta(cfg: dict, settings: WitnessSettings, **extra) -> dict:
    meta = {
        "rho": settings.map_params.rho,
        "c": settings.map_params.c,
        "lam": settings.flow_params.lam,
        "mu": settings.flow_params.mu,
        "nu": settings.flow_params.nu,
        "t_out": settings.flow_params.t_out,
        "eta": settings.box.eta,
        "mode": settings.mode,
    }
    if "seed" in cfg:
        meta["seed"] = cfg["seed"]
    meta.update(extra)
    return meta


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_witness(args, cfg: dict) -> int:
    settings = settings_from_config(cfg)
    if not 0.0 < args.eps < 1.0:
        raise UsageError("eps must lie in (0, 1)")
    if args.x0 == 0.0:
        raise UsageError("x0 = 0 lies on the singular section line")
    if args.N < 1:
        raise UsageError("N must be a positive integer")
    out = Path(args.out_dir or cfg.get("out_dir", "."))
    try:
        result = construct_witness(args.x0, args.N, args.eps, settings, y0=args.y0)
        report = verify_certificate(result.certificate)
    except LorenzHistError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return 2
    cert = result.certificate
    _write(out / "certificate.json", certificate_to_json(cert))
    series = result.series(grid=args.grid)
    meta = _echo_meta(cfg, settings, x0=args.x0, N=args.N, eps=args.eps)
    _write(out / "series.csv", "\n".join(series_csv_lines(series, meta)) + "\n")
    if not report.passed:
        for c in report.failures():
            print(f"verification failed: {c.name}: {c.detail}", file=sys.stderr)
        return 2
    print(
        f"witness ok: sigma={cert.sigma:.4f} n0={cert.n0} n1={cert.n1} "
        f"tau0={cert.tau0:.3f} tau1={cert.tau1:.3f} "
        f"A0={cert.A0:.6f} A1={cert.A1:.6f} min_gap={cert.min_sample_gap():.4f}"
    )
    return 0


def cmd_simulate(args, cfg: dict) -> int:
    settings = settings_from_config(cfg)
    if args.horizon < 0:
        raise UsageError("horizon must be nonnegative")
    prec = cfg.get("precision_bits") or 128
    if args.x0 == "per2":
        x0 = find_period2(settings.map_params, prec)
    else:
        try:
            x0 = BigReal.from_str(args.x0, prec)
        except Exception:
            raise UsageError(f"bad x0 value {args.x0!r}")
        if x0.sign() == 0:
            raise UsageError("x0 = 0 lies on the singular section line")
        if abs(x0.float_approx()) > 1:
            raise UsageError("x0 must lie in [-1, 1]")
    if abs(args.y0) > 1:
        raise UsageError("y0 must lie in [-1, 1]")
    out = Path(args.out_dir or cfg.get("out_dir", "."))
    try:
        orbit = build_orbit(
            SigmaPoint(x0, args.y0), args.horizon,
            settings.flow_params, settings.map_params,
        )
    except LorenzHistError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 2
    meta = _echo_meta(cfg, settings, x0=str(args.x0), y0=args.y0, horizon=args.horizon)
    _write(out / "orbit.csv", "\n".join(orbit_csv_lines(orbit, meta)) + "\n")
    if args.horizon > 0 and orbit.segments:
        series = average_series(orbit, args.grid, settings.box, horizon=args.horizon)
        lines = series_csv_lines(series, meta)
    else:
        lines = [f"# {k} = {meta[k]}" for k in sorted(meta)] + ["t,A"]
    _write(out / "series.csv", "\n".join(lines) + "\n")
    print(f"simulate ok: {len(orbit.crossings)} crossings, horizon={args.horizon}")
    return 0


def cmd_deepen(args, cfg: dict) -> int:
    settings = settings_from_config(cfg)
    if args.levels < 1:
        raise UsageError("levels must be >= 1")
    out = Path(args.out_dir or cfg.get("out_dir", "."))
    try:
        seed = construct_witness(args.x0, args.N, args.eps, settings, y0=args.y0)
        chain = deepen(seed, args.levels, settings=settings)
    except LorenzHistError as exc:
        print(f"deepening failed: {exc}", file=sys.stderr)
        return 2
    docs = [certificate_to_json(c) for c in chain.levels]
    _write(out / "chain.json", "[\n" + ",\n".join(docs) + "\n]\n")
    osc = chain.oscillation
    ok = osc.high_count >= args.levels and osc.low_count >= args.levels
    print(
        f"deepen: levels={len(chain.levels)} oscillation "
        f"high={osc.high_count} low={osc.low_count}"
    )
    return 0 if ok else 2


def cmd_cover(args, cfg: dict) -> int:
    settings = settings_from_config(cfg)
    if args.grid < 1:
        raise UsageError("grid must be >= 1")
    if args.m < 1:
        raise UsageError("m must be >= 1")
    out = Path(args.out_dir or cfg.get("out_dir", "."))
    results, failures = dense_cover(args.N, args.m, args.grid, settings)
    all_ok = not failures
    docs = []
    for res in results:
        rep = verify_certificate(res.certificate)
        if not rep.passed:
            all_ok = False
        docs.append(certificate_to_json(res.certificate))
    _write(out / "cover.json", "[\n" + ",\n".join(docs) + "\n]\n")
    for i, x, msg in failures:
        print(f"grid point {i} (x = {x}): {msg}", file=sys.stderr)
    print(f"cover: {len(results)}/{args.grid} certificates, failures={len(failures)}")
    return 0 if all_ok else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lorenzhist",
        description="Constructive non-convergent time averages for the "
        "geometric Lorenz semiflow",
    )
    ap.add_argument("--config", help="plain-text config file (key = value)")
    sub = ap.add_subparsers(dest="command", required=True)

    w = sub.add_parser("witness", help="build and verify one certificate")
    w.add_argument("--x0", type=float, required=True)
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--eps", type=float, required=True)
    w.add_argument("--y0", type=float, default=0.0)
    w.add_argument("--grid", type=int, default=400)
    w.add_argument("--out-dir", default=None)

    s = sub.add_parser("simulate", help="build an orbit and its average series")
    s.add_argument("--x0", required=True, help="decimal, or 'per2' for the periodic point")
    s.add_argument("--y0", type=float, default=0.0)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--grid", type=int, default=200)
    s.add_argument("--out-dir", default=None)

    d = sub.add_parser("deepen", help="nested chain of certificates")
    d.add_argument("--x0", type=float, default=0.33)
    d.add_argument("--N", type=int, default=10)
    d.add_argument("--eps", type=float, default=0.1)
    d.add_argument("--y0", type=float, default=0.0)
    d.add_argument("--levels", type=int, required=True)
    d.add_argument("--out-dir", default=None)

    c = sub.add_parser("cover", help="certificates over a section grid")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--grid", type=int, required=True)
    c.add_argument("--out-dir", default=None)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
        if args.command == "witness":
            return cmd_witness(args, cfg)
        if args.command == "simulate":
            return cmd_simulate(args, cfg)
        if args.command == "deepen":
            return cmd_deepen(args, cfg)
        if args.command == "cover":
            return cmd_cover(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
