"""Command-line front end.

::

    crowqed <command> [--config FILE] [--set key=value ...] [--out PATH]
                      [--format csv|json|svg] [--workers N]

Commands are ``bands``, ``gf``, ``transport``, ``chi``, ``threshold``,
``oracle-check`` and ``sweep``.  Exit status is 0 on success, 1 when
``oracle-check`` finds a failing identity, 2 for invalid input or a
computation that cannot proceed, and 3 for file I/O failures.  Errors are
reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, build_config, load_toml, parse_set
from .errors import CrowqedError, ExceptionalPointError, RegimeWarning, ValidationError
from .model import ModelParams, PopulationProfile
from .oracle import run_oracle_suite
from .output import Series, Table, line_plot_svg, to_csv, to_json
from .spectral import branch_dispersion, evaluate_gf, poles_damped, time_response
from .susceptibility import chi_sweep
from .transport import exact_lasing_threshold, gain_rate, laser_threshold, transport_report

__all__ = ["main", "run", "point_rows"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3


def _bands(k, params: ModelParams, s_z: float) -> dict:
    plus, minus = poles_damped(k, params, s_z)
    row = {
        "k": k,
        "omega_plus": plus.real,
        "omega_minus": minus.real,
        "decay_plus": -plus.imag,
        "decay_minus": -minus.imag,
    }
    try:
        br = branch_dispersion(k, params, s_z)
        row.update(amp_a=br.amp_a.real, amp_b=br.amp_b.real, amp_a_im=br.amp_a.imag, amp_b_im=br.amp_b.imag)
    except ExceptionalPointError:
        row.update(amp_a=math.nan, amp_b=math.nan, amp_a_im=math.nan, amp_b_im=math.nan)
    return row


def _transport(k, params: ModelParams, s_z: float) -> dict:
    rep = transport_report(k, params, s_z)
    return {
        "k": k,
        "v_plus": rep.v_plus,
        "v_minus": rep.v_minus,
        "bandwidth_plus": rep.bandwidth_plus,
        "bandwidth_minus": rep.bandwidth_minus,
        "threshold_sz": rep.threshold_sz,
        "gain": rep.gain,
        "lasing": rep.lasing,
    }


def _threshold(params: ModelParams, s_z: float) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        gain = gain_rate(params, s_z)
    return {
        "s_z": s_z,
        "threshold_approx": laser_threshold(params),
        "threshold_exact": exact_lasing_threshold(params),
        "gain_approx": gain.approx,
        "gain_exact": gain.exact,
        "lasing": gain.lasing,
        "in_regime": gain.in_regime,
    }


def point_rows(command: str, params: ModelParams, s_z: float, ks) -> list[dict]:
    """Rows for one parameter point (one per wavenumber, except ``threshold``)."""
    PopulationProfile.uniform(s_z, params.n_sites, params.n_atoms)
    if command == "threshold":
        return [_threshold(params, s_z)]
    rows = []
    for k in sorted(ks):
        if command == "bands":
            row = _bands(k, params, s_z)
        elif command == "transport":
            row = _transport(k, params, s_z)
        elif command == "sweep":
            row = {**_bands(k, params, s_z), **_transport(k, params, s_z)}
        else:
            raise ValidationError(f"{command!r} is not a point-wise command")
        rows.append(row)
    return rows


def _sweep_task(task):
    command, params, s_z, ks, point = task
    changes = dict(point)
    s_z = changes.pop("s_z", s_z)
    for name in ("n_sites", "n_atoms"):
        if name in changes:
            changes[name] = int(changes[name])
    params = params.replace(**changes)
    return [{**point, **row} for row in point_rows(command, params, s_z, ks)]


def _pointwise_table(cfg: RunConfig) -> Table:
    axes = cfg.axes
    points = [dict(zip([a.name for a in axes], values)) for values in itertools.product(*(a.values for a in axes))]
    tasks = [(cfg.command, cfg.params, cfg.s_z, cfg.k_values, p) for p in points]
    if cfg.workers > 1 and len(tasks) > 1:
        workers = min(cfg.workers, len(tasks))
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=chunk))
    else:
        results = [_sweep_task(t) for t in tasks]
    table = Table.from_rows([row for rows in results for row in rows], title=cfg.title or cfg.command)

    names = [a.name for a in axes]
    if names:
        x, groups = names[-1], names[:-1] + (["k"] if len(cfg.k_values) > 1 and cfg.command != "threshold" else [])
    else:
        x, groups = ("k", []) if cfg.command != "threshold" else ("s_z", [])
    defaults = {
        "bands": ["omega_plus", "omega_minus"],
        "transport": ["v_plus", "v_minus"],
        "sweep": ["v_plus", "v_minus"],
        "threshold": ["gain_exact", "gain_approx"],
    }[cfg.command]
    ys = [c for c in cfg.columns if c not in names and c != "k"] or defaults
    table.xlabel = x
    _add_series(table, x, ys, groups)
    return table


def _add_series(table: Table, x: str, ys, groups):
    """One series per y column and per distinct combination of ``groups``."""
    if not groups:
        keys = [()]
    else:
        seen = []
        for row in table.rows():
            key = tuple(row[g] for g in groups)
            if key not in seen:
                seen.append(key)
        keys = seen
    for key in keys:
        label_tail = ", ".join(f"{g}={v:.4g}" for g, v in zip(groups, key))
        for i, y in enumerate(ys):
            if y not in table.columns:
                continue
            if groups:
                # series columns are materialised so the SVG writer stays generic
                mask = [all(row[g] == v for g, v in zip(groups, key)) for row in table.rows()]
                xs = [v if m else math.nan for v, m in zip(table.columns[x], mask)]
                name_x = f"__{x}|{label_tail}"
                table.columns.setdefault(name_x, xs)
                label = f"{y} ({label_tail})"
                table.plot.append(Series(name_x, y, label, dashed=bool(i % 2)))
            else:
                table.plot.append(Series(x, y, y, dashed=bool(i % 2)))


def _omega_grid(cfg: RunConfig) -> np.ndarray:
    lo, hi, n = cfg.omega_window
    if lo is None or hi is None:
        poles = [poles_damped(k, cfg.params, cfg.s_z) for k in cfg.k_values]
        re = [p.real for pair in poles for p in pair]
        lo = min(re) - 1.0 if lo is None else lo
        hi = max(re) + 1.0 if hi is None else hi
        if not hi > lo:
            raise ValidationError("omega window is empty")
    return np.linspace(lo, hi, n)


def _gf_table(cfg: RunConfig) -> Table:
    rows = []
    if cfg.domain == "time":
        if not cfg.profile.is_homogeneous:
            raise ValidationError("time-domain output needs a homogeneous population")
        t = np.linspace(0.0, cfg.t_window[0], cfg.t_window[1])
        for k in sorted(cfg.k_values):
            photon = time_response(k, cfg.params, cfg.s_z, t, eps=cfg.eps, kind="photon")
            atom = time_response(k, cfg.params, cfg.s_z, t, eps=cfg.eps, kind="atom")
            for i in range(len(t)):
                rows.append(
                    {"k": k, "t": t[i], "re_photon": photon[i].real, "im_photon": photon[i].imag,
                     "abs_photon": abs(photon[i]), "re_atom": atom[i].real, "im_atom": atom[i].imag,
                     "abs_atom": abs(atom[i])}
                )
        x, ys = "t", ["re_photon", "im_photon"]
    else:
        omega = _omega_grid(cfg)
        population = cfg.profile if not cfg.profile.is_homogeneous else cfg.s_z
        for k in sorted(cfg.k_values):
            ev = evaluate_gf(k, omega, cfg.params, population, cfg.eps)
            a_photon = ev.spectral_function("photon")
            a_atom = ev.spectral_function("atom")
            for i in range(len(omega)):
                rows.append(
                    {"k": k, "omega": omega[i], "re_photon": ev.photon_gf[i].real, "im_photon": ev.photon_gf[i].imag,
                     "re_atom": ev.atom_gf[i].real, "im_atom": ev.atom_gf[i].imag,
                     "spectral_photon": a_photon[i], "spectral_atom": a_atom[i]}
                )
        x, ys = "omega", ["spectral_photon", "spectral_atom"]
    table = Table.from_rows(rows, title=cfg.title or "Green functions", xlabel=x)
    ys = [c for c in cfg.columns if c not in (x, "k")] or ys
    _add_series(table, x, ys, ["k"] if len(cfg.k_values) > 1 else [])
    return table


def _chi_table(cfg: RunConfig) -> Table:
    lo, hi, n = cfg.delta_window
    rows = []
    for k in sorted(cfg.k_values):
        curve = chi_sweep(k, cfg.params, (lo, hi), n)
        for d, c1, c2 in zip(curve.delta_grid, curve.chi1, curve.chi2):
            rows.append({"k": k, "delta": d, "chi1": c1, "chi2": c2})
    table = Table.from_rows(rows, title=cfg.title or "susceptibility", xlabel="delta")
    _add_series(table, "delta", ["chi1", "chi2"], ["k"] if len(cfg.k_values) > 1 else [])
    return table


def _oracle_table(cfg: RunConfig) -> tuple[Table, bool]:
    n, trials, seed = cfg.oracle
    report = run_oracle_suite(n, trials=trials, seed=seed)
    rows = [
        {"identity": c.identity, "max_residual": c.max_residual, "tolerance": c.tolerance, "passed": c.passed}
        for c in report.checks
    ]
    return Table.from_rows(rows, title="oracle check"), report.passed


def _visible(table: Table) -> Table:
    """Drop the helper columns used only for plotting."""
    names = [c for c in table.columns if not c.startswith("__")]
    return Table({c: table.columns[c] for c in names})


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute ``cfg``; returns the rendered artifact and the exit status."""
    status = EXIT_OK
    if cfg.command in ("bands", "transport", "threshold", "sweep"):
        table = _pointwise_table(cfg)
    elif cfg.command == "gf":
        table = _gf_table(cfg)
    elif cfg.command == "chi":
        table = _chi_table(cfg)
    elif cfg.command == "oracle-check":
        table, passed = _oracle_table(cfg)
        status = EXIT_OK if passed else EXIT_CHECK_FAILED
    else:  # pragma: no cover - guarded by build_config
        raise ValidationError(f"unknown command {cfg.command!r}")

    if cfg.format == "svg":
        return line_plot_svg(table), status
    data = _visible(table)
    if cfg.columns:
        try:
            data = data.select(list(cfg.columns))
        except KeyError as exc:
            raise ValidationError(f"unknown output column(s): {exc.args[0]}") from exc
    if cfg.format == "json":
        return to_json(data, cfg.to_dict(), __version__), status
    return to_csv(data), status


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crowqed", description="Polariton bands, Green functions and transport in a doped CROW.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", metavar="FILE", help="flat TOML configuration file")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--out", metavar="PATH", help="write the artifact here instead of stdout")
    p.add_argument("--format", choices=("csv", "json", "svg"))
    p.add_argument("--workers", type=int, metavar="N", help="sweep worker processes (fallback: CROWQED_WORKERS)")
    p.add_argument("--n", type=int, dest="oracle_n", metavar="N", help="ring size for oracle-check")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _fail(status: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return status


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        file_values = load_toml(args.config) if args.config else {}
    except OSError as exc:
        return _fail(EXIT_IO, "io", f"cannot read config: {exc}")
    except CrowqedError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    try:
        cfg = build_config(
            args.command,
            file_values,
            [parse_set(s) for s in args.sets],
            {"out": args.out, "format": args.format, "workers": args.workers, "oracle_n": args.oracle_n},
        )
        text, status = run(cfg)
    except ValidationError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    except CrowqedError as exc:
        return _fail(EXIT_VALIDATION, "computation", str(exc))
    try:
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        return _fail(EXIT_IO, "io", f"cannot write output: {exc}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
