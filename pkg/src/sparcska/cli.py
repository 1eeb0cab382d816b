"""Command-line front end.

Subcommands: ``rates``, ``region``, ``impact``, ``optimize``, ``simulate``.
Exit status is 0 on success, 1 on a usage error and 2 on a domain or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict

from .config import RunConfig, load_config
from .errors import SparcSkaError
from .feasibility import q_opt, sweep_channel, sweep_region
from .protocol import sweep_simulate
from .rates import optimal_key_rate, rate_point
from .transcript import write_transcripts

__all__ = ["main", "build_parser"]

LN2 = math.log(2)
RATE_COLUMNS = {"r_star", "c_bob", "c_eve", "r_k", "r_p", "rate_gap", "r_k_at_opt", "r_k_opt"}
POINT_COLUMNS = ["q", "d_x", "r_star", "gamma_bob", "gamma_eve", "c_bob", "c_eve", "r_k", "r_p",
                 "rate_gap", "alpha_req", "feasible", "error"]
SIM_COLUMNS = ["q", "n", "L", "M", "M_inner", "trials", "distortion_mean", "wz_error_rate",
               "key_disagree_rate", "uniformity", "leakage", "wall_time"]

# flag -> (section, key, type)
_FLAGS = {
    "--sigma-x2": ("model", "sigma_x2", float),
    "--sigma-b2": ("model", "sigma_b2", float),
    "--sigma-e2": ("model", "sigma_e2", float),
    "--q": ("wz", "q", float),
    "--delta1": ("wz", "delta1", float),
    "--delta2": ("wz", "delta2", float),
    "--decoder": ("wz", "decoder", str),
    "--quantizer": ("wz", "quantizer", str),
    "--n": ("code", "n", int),
    "--L": ("code", "l_sections", int),
    "--M": ("code", "m_per_section", int),
    "--M-inner": ("code", "m_inner", int),
    "--amp-power": ("code", "amp_power", float),
    "--dict-seed": ("code", "dict_seed", int),
    "--nu": ("hash", "nu", float),
    "--out-bits": ("hash", "out_bits", int),
    "--q-min": ("sweep", "q_min", float),
    "--q-max": ("sweep", "q_max", float),
    "--n-points": ("sweep", "n_points", int),
    "--alpha-fixed": ("sweep", "alpha_fixed", float),
    "--trials": ("sim", "trials", int),
    "--seed": ("sim", "master_seed", int),
    "--workers": ("sim", "workers", int),
    "--view": ("sim", "view", str),
    "--output-dir": ("output", "directory", str),
    "--format": ("output", "format", str),
}
_LIST_FLAGS = {
    "--q-values": ("sim", "q_values", float),
    "--m-inner-values": ("sim", "m_inner_values", int),
}
_SWITCHES = {
    "--bits": ("output", "bits", True),
    "--linear": ("sweep", "log_spaced", False),
    "--no-transcripts": ("sim", "transcripts", False),
    "--timing": ("sim", "timing", True),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dest(flag: str) -> str:
    return "opt_" + flag.lstrip("-").replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (or a CSV written by this tool)")
    for flag, (section, key, typ) in _FLAGS.items():
        common.add_argument(flag, dest=_dest(flag), type=typ, default=argparse.SUPPRESS,
                            metavar=key.upper(), help=f"{section}.{key}")
    for flag, (section, key, _) in _LIST_FLAGS.items():
        common.add_argument(flag, dest=_dest(flag), default=argparse.SUPPRESS,
                            metavar="V1,V2,...", help=f"{section}.{key}, comma separated")
    for flag, (section, key, _) in _SWITCHES.items():
        common.add_argument(flag, dest=_dest(flag), action="store_true",
                            default=argparse.SUPPRESS, help=f"{section}.{key}")

    parser = _Parser(prog="sparcska",
                     description="SPARC-based secret key agreement: rates, sweeps and simulation.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.add_parser("rates", parents=[common], help="print every closed-form quantity at one Q")
    sub.add_parser("region", parents=[common], help="(R_P, R_K) region CSV over a Q grid")
    sub.add_parser("impact", parents=[common], help="R_K(Q) curves as Eve's or Bob's noise varies")
    sub.add_parser("optimize", parents=[common], help="smallest feasible Q for alpha_fixed")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol runs")
    return parser


def _overrides(args) -> dict:
    out = {}
    ns = vars(args)
    for flag, (section, key, _) in _FLAGS.items():
        if _dest(flag) in ns:
            out[(section, key)] = ns[_dest(flag)]
    for flag, (section, key, typ) in _LIST_FLAGS.items():
        if _dest(flag) in ns:
            try:
                out[(section, key)] = [typ(v) for v in ns[_dest(flag)].split(",") if v]
            except ValueError as exc:
                raise SparcSkaError(f"{flag}: {exc}") from exc
    for flag, (section, key, value) in _SWITCHES.items():
        if _dest(flag) in ns:
            out[(section, key)] = value
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _convert(row: dict, bits: bool) -> dict:
    if not bits:
        return row
    return {k: (v / LN2 if k in RATE_COLUMNS and isinstance(v, float) else v) for k, v in row.items()}


def artifact_name(command: str, cfg: RunConfig) -> str:
    digest = hashlib.sha256(f"{command}\n{cfg.canonical_json()}".encode()).hexdigest()[:12]
    return f"{command}-{digest}"


def _emit(command: str, cfg: RunConfig, columns: list[str], rows: list[dict],
          notes: list[str] = ()) -> str:
    out_dir = cfg.output_dir()
    os.makedirs(out_dir, exist_ok=True)
    bits = cfg["output"]["bits"]
    rows = [_convert(r, bits) for r in rows]
    base = os.path.join(out_dir, artifact_name(command, cfg))
    units = "bits/symbol" if bits else "nats/symbol"
    if cfg["output"]["format"] == "json":
        path = base + ".json"
        doc = {"command": command, "config": cfg.echo(), "provenance": cfg.echo_provenance(),
               "units": units, "notes": list(notes), "columns": columns,
               "rows": [[r.get(c) for c in columns] for r in rows]}
        text = json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n"
    else:
        path = base + ".csv"
        buf = io.StringIO()
        buf.write(f"# sparcska {command}\n")
        buf.write(f"# config: {cfg.canonical_json()}\n")
        buf.write(f"# provenance: {json.dumps(cfg.echo_provenance(), sort_keys=True, separators=(',', ':'))}\n")
        buf.write(f"# units: {units}\n")
        for note in notes:
            buf.write(f"# note: {note}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _cmd_rates(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    q = cfg["wz"]["q"]
    alpha_fixed = cfg["sweep"]["alpha_fixed"]
    pt = rate_point(model, q, alpha_fixed, cfg.margins())
    row = _convert(asdict(pt) | {"r_k_opt": optimal_key_rate(model)}, cfg["output"]["bits"])
    labels = [("Q", "q"), ("D_X", "d_x"), ("R*", "r_star"), ("gamma_bob", "gamma_bob"),
              ("gamma_eve", "gamma_eve"), ("C_bob", "c_bob"), ("C_eve", "c_eve"),
              ("R_K", "r_k"), ("R_P", "r_p"), ("R_K_opt", "r_k_opt"), ("rate_gap", "rate_gap"),
              ("alpha_req", "alpha_req")]
    lines = [f"{label}={row[key]:.6f}" for label, key in labels]
    lines.append(f"feasible={'true' if pt.feasible else 'false'} (alpha_fixed={alpha_fixed:g})")
    lines.append(f"units={'bits' if cfg['output']['bits'] else 'nats'}/symbol")
    return lines


def _infeasible_note(label: str, points, alpha_fixed: float) -> list[str]:
    if any(p.feasible for p in points):
        return []
    reqs = [p.alpha_req for p in points if p.error is None]
    low = min(reqs) if reqs else math.nan
    return [f"{label}: no feasible Q on the grid (min alpha_req={low:.4f} > alpha_fixed={alpha_fixed:g})"]


def _cmd_region(cfg: RunConfig) -> list[str]:
    sweep = cfg.sweep_config()
    base = cfg.model()
    rows, notes = [], []
    for i, pair in enumerate(cfg["region"]["scenarios"]):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise SparcSkaError(f"region.scenarios[{i}] must be a [sigma_b2, sigma_e2] pair")
        model = type(base)(base.sigma_x2, float(pair[0]), float(pair[1]))
        points = sweep_region(model, sweep, cfg["sim"]["workers"])
        notes += _infeasible_note(f"scenario {i}", points, sweep.alpha_fixed)
        for p in points:
            rows.append({"scenario": i, "sigma_b2": model.sigma_b2, "sigma_e2": model.sigma_e2,
                         **asdict(p)})
    cols = ["scenario", "sigma_b2", "sigma_e2"] + POINT_COLUMNS
    return [_emit("region", cfg, cols, rows, notes)]


def _cmd_impact(cfg: RunConfig) -> list[str]:
    sweep = cfg.sweep_config()
    base = cfg.model()
    imp = cfg["impact"]
    rows, notes = [], []
    plans = [("eve", type(base)(base.sigma_x2, imp["bob_fixed"], base.sigma_e2), imp["eve_values"]),
             ("bob", type(base)(base.sigma_x2, base.sigma_b2, imp["eve_fixed"]), imp["bob_values"])]
    for which, model, values in plans:
        for curve in sweep_channel(model, which, [float(v) for v in values], sweep,
                                   cfg["sim"]["workers"]):
            notes += _infeasible_note(f"vary={which} sigma2={curve.sigma2:g}", curve.points,
                                      sweep.alpha_fixed)
            for p in curve.points:
                rows.append({"vary": which, "sigma_b2": curve.model.sigma_b2,
                             "sigma_e2": curve.model.sigma_e2, **asdict(p)})
    cols = ["vary", "sigma_b2", "sigma_e2", "q", "r_k", "alpha_req", "feasible", "error"]
    return [_emit("impact", cfg, cols, rows, notes)]


def _cmd_optimize(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    alpha_fixed = cfg["sweep"]["alpha_fixed"]
    res = q_opt(model, alpha_fixed, cfg.margins())
    row = {"alpha_fixed": alpha_fixed, "feasible": res.feasible, "q_opt": res.q_opt,
           "r_k_at_opt": res.r_k_at_opt, "bracket_lo": res.bracket[0] if res.bracket else None,
           "bracket_hi": res.bracket[1] if res.bracket else None, "q_upper": res.q_upper,
           "alpha_min": res.alpha_min}
    cols = list(row)
    path = _emit("optimize", cfg, cols, [row])
    shown = _convert(row, cfg["output"]["bits"])
    if res.feasible:
        lines = [f"q_opt={res.q_opt:.9g}", f"R_K(q_opt)={shown['r_k_at_opt']:.6f}",
                 f"q_upper={res.q_upper:.9g}" if res.q_upper is not None else "q_upper=",
                 f"alpha_min={res.alpha_min:.6f}"]
    else:
        lines = [f"infeasible: min alpha_req={res.alpha_min:.6f} > alpha_fixed={alpha_fixed:g}"]
    return lines + [path]


def _cmd_simulate(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    sim = cfg["sim"]
    qs = sim["q_values"] or [cfg["wz"]["q"]]
    inners = sim["m_inner_values"] or [cfg["code"]["m_inner"]]
    grid = [(float(q), cfg.code_params(int(mi))) for q in qs for mi in inners]
    rows_out = sweep_simulate(
        grid, model, sim["trials"], sim["master_seed"], out_bits=cfg["hash"]["out_bits"],
        nu=cfg["hash"]["nu"], view=sim["view"], workers=1, keep_transcripts=sim["transcripts"],
        decoder=cfg["wz"]["decoder"], quantizer=cfg["wz"]["quantizer"],
        fresh_hash=True, session_workers=sim["workers"])
    rows, paths = [], []
    for r in rows_out:
        s, p = r.stats, r.params
        rows.append({"q": r.q, "n": p.n, "L": p.l_sections, "M": p.m_per_section,
                     "M_inner": p.m_inner, "trials": s.trials, "distortion_mean": s.distortion_mean,
                     "wz_error_rate": s.wz_error_rate, "key_disagree_rate": s.key_disagree_rate,
                     "uniformity": s.uniformity, "leakage": s.leakage,
                     "wall_time": s.wall_time if sim["timing"] else None})
    notes = [f"row {i}: key_bits={r.stats.key_bits}" for i, r in enumerate(rows_out)]
    path = _emit("simulate", cfg, SIM_COLUMNS, rows, notes)
    paths.append(path)
    if sim["transcripts"]:
        stem = os.path.splitext(path)[0]
        for i, r in enumerate(rows_out):
            tpath = f"{stem}-row{i}.transcripts"
            write_transcripts(tpath, r.transcripts, cfg.echo())
            paths.append(tpath)
    return paths


_COMMANDS = {"rates": _cmd_rates, "region": _cmd_region, "impact": _cmd_impact,
             "optimize": _cmd_optimize, "simulate": _cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config, _overrides(args))
        lines = _COMMANDS[args.command](cfg)
    except SparcSkaError as exc:
        print(f"sparcska: error: {exc}", file=sys.stderr)
        return 2
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
