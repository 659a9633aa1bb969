"""Command-line entry point: single runs, parameter sweeps, vibrational
listings, branch-surface exports, the representation cross-check, and the
resolved-config echo.

All file output funnels through atomic writes (temp file + rename); every
run directory receives a `resolved.cfg` echo and a `meta.json` with the run
metadata. CSV cells use 12 significant digits with `.` decimal separator so
identical invocations produce byte-identical files. Verbosity is controlled
by the CAVDYN_LOG environment variable (DEBUG/INFO/WARNING/ERROR).
"""

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, config as configmod, observables, units
from . import polariton as polmod
from . import system, xspace
from .errors import CavdynError, ConfigError, OutputError
from .grids import PotentialCurve, vibrational_eigenstates
from .propagate import propagate as run_propagation

log = logging.getLogger("cavdyn.cli")

SWEEP_MEMBER_ENV = "OMP_NUM_THREADS"


def _fmt(value):
    return format(float(value), ".12g")


def _cell(value):
    """CSV cell: empty for missing, %.12g for numbers."""
    return "" if value is None else _fmt(value)


def atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {str(path)!r}: {exc}") from exc


def _ensure_dir(path):
    try:
        Path(path).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create directory {str(path)!r}: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_meta(outdir, payload):
    body = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    atomic_write(Path(outdir) / "meta.json", body + "\n")


def _meta_base(command, config_ref, cfg):
    return {
        "tool": f"cavdyn {__version__}",
        "command": command,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config_source": str(config_ref),
        "composition": cfg.composition,
    }


# ------------------------------------------------------------- CSV writers


def populations_csv(record):
    basis = record.basis
    k_max = record.p_nu.shape[1]
    header = (
        ["t_fs"]
        + [f"p_{label}" for label in basis.labels]
        + ["p_photon_state", "n_photon_expect", "norm_total"]
        + [f"p_nu{k}" for k in range(k_max)]
    )
    lines = [",".join(header)]
    times_fs = record.times_fs
    for m in range(record.n_snapshots):
        row = (
            [_fmt(times_fs[m])]
            + [_fmt(v) for v in record.p_channel[m]]
            + [_fmt(record.p_photon_state[m]), _fmt(record.n_expect[m]),
               _fmt(record.norm_total[m])]
            + [_fmt(v) for v in record.p_nu[m]]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def surfaces_csv(curves):
    branches = ("lower", "middle", "upper")
    header = (
        ["R_bohr"]
        + [f"E_{b}" for b in branches]
        + [f"comp_{b}_{d}" for b in branches for d in polmod.BASIS_LABELS]
    )
    lines = [",".join(header)]
    for i, r in enumerate(curves.r):
        row = [_fmt(r)] + [_fmt(e) for e in curves.energies[i]]
        for b in range(3):
            row += [_fmt(w) for w in curves.compositions[i, b]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def crossings_csv(reports):
    header = ["branch_lower", "branch_upper", "r_star_bohr", "gap_ha"] + [
        f"comp_{side}_{d}"
        for side in ("lower", "upper")
        for d in polmod.BASIS_LABELS
    ]
    lines = [",".join(header)]
    for rep in reports:
        row = [str(rep.branches[0]), str(rep.branches[1]),
               _fmt(rep.r_star), _fmt(rep.gap)]
        row += [_fmt(w) for w in rep.composition_lower]
        row += [_fmt(w) for w in rep.composition_upper]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def levels_csv(ladders):
    lines = ["curve,nu,energy_ha"]
    for tag, ladder in ladders:
        for nu, energy in enumerate(ladder.energies):
            lines.append(f"{tag},{nu},{_fmt(energy)}")
    return "\n".join(lines) + "\n"


def compare_csv(labels, times_fs, fock_rows, x_rows):
    header = ["t_fs"]
    header += [f"p_{lab}_fock" for lab in labels]
    header += [f"p_{lab}_x" for lab in labels]
    header += ["n_photon_expect_fock", "n_photon_expect_x",
               "norm_fock", "norm_x"]
    lines = [",".join(header)]
    for m, t in enumerate(times_fs):
        fock, xrep = fock_rows[m], x_rows[m]
        row = [_fmt(t)]
        row += [_fmt(v) for v in fock["p_channel"]]
        row += [_fmt(v) for v in xrep["p_channel"]]
        row += [_fmt(fock["n_expect"]), _fmt(xrep["n_expect"]),
                _fmt(fock["norm"]), _fmt(xrep["norm"])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- subcommands


def _load(args):
    text, cfg = configmod.load_config(args.config)
    raw = configmod.read_raw(text)
    for item in getattr(args, "set", None) or []:
        key, _, value = item.partition("=")
        if not value:
            raise ConfigError(
                f"--set needs section.key=value, got {item!r}"
            )
        raw = configmod.override_raw(raw, key.strip(), value.strip())
    base_dir = configmod.resolve_config_path(args.config).parent
    cfg = configmod.parse_raw(raw, base_dir)
    return raw, base_dir, cfg


def _run_diagnostics(record):
    try:
        return observables.diagnostics(record)
    except CavdynError as exc:
        log.info("diagnostics unavailable: %s", exc)
        return None


def cmd_propagate(args):
    _, _, cfg = _load(args)
    record = run_propagation(cfg)
    outdir = Path(args.out)
    _ensure_dir(outdir)
    atomic_write(outdir / "resolved.cfg", configmod.echo(cfg))
    atomic_write(outdir / "populations.csv", populations_csv(record))
    diag = _run_diagnostics(record)
    meta = _meta_base("propagate", args.config, cfg)
    meta["pulse_end_fs"] = units.au_to_fs(record.pulse_end)
    meta["n_snapshots"] = record.n_snapshots
    meta["run"] = record.meta
    meta["diagnostics"] = None if diag is None else asdict(diag)
    write_meta(outdir, meta)
    log.info("propagate: %d snapshots -> %s", record.n_snapshots, outdir)
    return 0


def _sweep_member(payload):
    """One sweep member, fully independent; returns a summary row dict."""
    raw, base_dir, member_dir, param, token = payload
    member_dir = Path(member_dir)
    row = {"member": member_dir.name, "param": param, "value": token}
    try:
        cfg = configmod.parse_raw(raw, Path(base_dir))
        record = run_propagation(cfg)
        _ensure_dir(member_dir)
        atomic_write(member_dir / "resolved.cfg", configmod.echo(cfg))
        atomic_write(member_dir / "populations.csv", populations_csv(record))
        diag = observables.diagnostics(record)
        meta = _meta_base("sweep-member", f"{param}={token}", cfg)
        meta["pulse_end_fs"] = units.au_to_fs(record.pulse_end)
        meta["n_snapshots"] = record.n_snapshots
        meta["run"] = record.meta
        meta["diagnostics"] = asdict(diag)
        write_meta(member_dir, meta)
        row.update(status="ok", exit_code=0, diagnostics=asdict(diag))
    except CavdynError as exc:
        row.update(status="error", exit_code=exc.exit_code,
                   error=str(exc), diagnostics=None)
    return row


SUMMARY_FIELDS = (
    "exchange_period_fs", "peak_p_mol", "t_peak_fs",
    "t_one_over_e_fs", "ratio_photon_molecule", "final_norm",
)


def summary_csv(param, rows):
    header = ["member", param] + list(SUMMARY_FIELDS) + ["status", "error"]
    lines = [",".join(header)]
    for row in rows:
        diag = row.get("diagnostics") or {}
        cells = [row["member"], row["value"]]
        cells += [_cell(diag.get(f)) for f in SUMMARY_FIELDS]
        error = row.get("error", "").replace(",", ";").replace("\n", " ")
        cells += [row["status"], error]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_sweep(args):
    raw, base_dir, _ = _load(args)
    tokens = [tok.strip() for tok in args.values.split(",") if tok.strip()]
    if not tokens:
        raise ConfigError("--values must list at least one value")
    parsed = []
    for tok in tokens:
        try:
            parsed.append(float(tok))
        except ValueError:
            raise ConfigError(
                f"sweep value {tok!r} for {args.param} is not a number"
            ) from None
    if len(set(parsed)) != len(parsed):
        raise ConfigError(f"sweep values must be distinct, got {tokens}")

    outdir = Path(args.out)
    _ensure_dir(outdir)
    key = args.param.split(".")[-1]
    payloads = []
    for tok in tokens:
        # override_raw validates the parameter path; per-member config
        # problems surface inside the member so one bad value cannot sink
        # the whole sweep
        member_raw = configmod.override_raw(raw, args.param, tok)
        member_dir = outdir / f"{key}={tok}"
        payloads.append((member_raw, str(base_dir), str(member_dir),
                         args.param, tok))

    jobs = max(1, min(args.jobs or len(payloads), len(payloads)))
    if jobs == 1:
        rows = [_sweep_member(p) for p in payloads]
    else:
        # keep member BLAS single-threaded; children inherit the env
        saved = os.environ.get(SWEEP_MEMBER_ENV)
        os.environ[SWEEP_MEMBER_ENV] = "1"
        try:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sweep_member, payloads))
        finally:
            if saved is None:
                os.environ.pop(SWEEP_MEMBER_ENV, None)
            else:
                os.environ[SWEEP_MEMBER_ENV] = saved

    atomic_write(outdir / "summary.csv", summary_csv(args.param, rows))
    meta = {
        "tool": f"cavdyn {__version__}",
        "command": "sweep",
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "config_source": str(args.config),
        "param": args.param,
        "values": tokens,
        "jobs": jobs,
        "members": [
            {k: row.get(k) for k in ("member", "value", "status",
                                     "exit_code", "error")}
            for row in rows
        ],
    }
    write_meta(outdir, meta)
    failed = [row for row in rows if row["status"] != "ok"]
    for row in failed:
        log.error("sweep member %s failed: %s", row["member"], row["error"])
    if failed:
        return max(row["exit_code"] for row in failed)
    return 0


def cmd_levels(args):
    _, _, cfg = _load(args)
    model = system.build_model(cfg)
    count = args.count or cfg.schedule.nu_max + 1
    ladders = [
        (tag, vibrational_eigenstates(
            PotentialCurve(values, tag), model.mass, model.basis.grid,
            count, tag=tag))
        for tag, values in (("ground", model.curves[0]),
                            ("excited", model.curves[1]))
    ]
    outdir = Path(args.out)
    _ensure_dir(outdir)
    atomic_write(outdir / "resolved.cfg", configmod.echo(cfg))
    atomic_write(outdir / "levels.csv", levels_csv(ladders))
    meta = _meta_base("levels", args.config, cfg)
    meta["count"] = count
    meta["zero_point_ha"] = {tag: float(lad.energies[0])
                             for tag, lad in ladders}
    write_meta(outdir, meta)
    return 0


def cmd_surfaces(args):
    _, _, cfg = _load(args)
    model = system.build_model(cfg)
    curves = polmod.polariton_surfaces(model)
    reports = polmod.locate_avoided_crossings(curves)
    outdir = Path(args.out)
    _ensure_dir(outdir)
    atomic_write(outdir / "resolved.cfg", configmod.echo(cfg))
    atomic_write(outdir / "surfaces.csv", surfaces_csv(curves))
    atomic_write(outdir / "crossings.csv", crossings_csv(reports))
    meta = _meta_base("surfaces", args.config, cfg)
    meta["n_crossings"] = len(reports)
    meta["crossings"] = [
        {"branches": list(rep.branches), "r_star_bohr": rep.r_star,
         "gap_ha": rep.gap}
        for rep in reports
    ]
    write_meta(outdir, meta)
    return 0


def cmd_compare(args):
    raw, base_dir, _ = _load(args)
    raw = configmod.override_raw(raw, "propagation.t_final_fs",
                                 str(args.t_end_fs))
    cfg = configmod.parse_raw(raw, base_dir)
    record = run_propagation(cfg)
    snaps = xspace.oracle_propagate(cfg, args.t_end_fs)
    if len(snaps) != record.n_snapshots:
        raise OutputError(
            f"snapshot count mismatch: {record.n_snapshots} Fock vs "
            f"{len(snaps)} x-grid"
        )
    labels = record.basis.labels
    fock_rows = [
        {"p_channel": record.p_channel[m], "n_expect": record.n_expect[m],
         "norm": record.norm_total[m]}
        for m in range(record.n_snapshots)
    ]
    x_rows = [
        {"p_channel": s.p_channel, "n_expect": s.n_expect,
         "norm": s.norm_total}
        for s in snaps
    ]
    dev = max(
        float(np.max(np.abs(f["p_channel"] - x["p_channel"])))
        for f, x in zip(fock_rows, x_rows)
    )
    outdir = Path(args.out)
    _ensure_dir(outdir)
    atomic_write(outdir / "resolved.cfg", configmod.echo(cfg))
    atomic_write(
        outdir / "compare.csv",
        compare_csv(labels, record.times_fs, fock_rows, x_rows),
    )
    meta = _meta_base("compare", args.config, cfg)
    meta["t_end_fs"] = args.t_end_fs
    meta["max_channel_deviation"] = dev
    write_meta(outdir, meta)
    print(f"max channel-population deviation: {dev:.3e}")
    return 0


def cmd_print_config(args):
    _, _, cfg = _load(args)
    sys.stdout.write(configmod.echo(cfg))
    return 0


# ------------------------------------------------------------------ parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cavdyn",
        description=(
            "Coupled atom-molecule-cavity wavepacket runs and analyses. "
            "Configs are INI files or builtin:<name> "
            "(builtin:default, builtin:lossy, builtin:noatom)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext, out_default=None):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True,
                       help="config file path or builtin:<name>")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config key (repeatable)")
        if out_default is not None:
            p.add_argument("--out", default=out_default,
                           help=f"output directory (default {out_default})")
        p.set_defaults(fn=fn)
        return p

    add("propagate", cmd_propagate, "run one propagation", out_default="run")

    p = add("sweep", cmd_sweep, "run one config across parameter values",
            out_default="sweep")
    p.add_argument("--param", required=True,
                   help="parameter path, e.g. cavity.g_rel")
    p.add_argument("--values", required=True,
                   help="comma-separated values, e.g. 0.0022,0.0038")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel member runs (default: one per value)")

    p = add("levels", cmd_levels, "list vibrational levels of both curves",
            out_default="levels")
    p.add_argument("--count", type=int, default=None,
                   help="levels per curve (default nu_max+1)")

    add("surfaces", cmd_surfaces,
        "export branch surfaces and avoided crossings", out_default="surfaces")

    p = add("compare", cmd_compare,
            "cross-check Fock-basis vs x-grid propagation",
            out_default="compare")
    p.add_argument("--t-end-fs", type=float, default=50.0,
                   help="comparison horizon in fs (default 50)")

    add("print-config", cmd_print_config,
        "echo the resolved configuration to stdout")
    return parser


def _setup_logging():
    level_name = os.environ.get("CAVDYN_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("cavdyn").setLevel(level)


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CavdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
