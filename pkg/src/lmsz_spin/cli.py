"""Command-line front end.

Exit codes: 0 success, 1 a check or verification failed, 2 configuration
error, 3 numerical failure. CSV goes to ``--out`` (reports then go to
stdout) or to stdout (reports then go to stderr).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys

import numpy as np

from . import checks
from .config import ConfigError, RunConfig
from .propagator import PropagationError, asymptotic_estimate, run_sweep
from .qubits import (
    BLOCK_LABELS,
    classify_interactions,
    decompose_qubit_blocks,
    final_probabilities,
    max_entanglement_slope,
)
from .qutrits import (
    FOUR_BASIS,
    P3_CANDIDATES,
    THREE_LEVEL_BASIS,
    fictitious_probabilities,
    four_dim_final_probs,
    reduction_violations,
    three_level_probs,
    three_level_reduction,
)
from .scan import ScanSpec, canonical_axis, entanglement_key, parse_range, run_scan, scan_maxima
from .sweep import HALF, SPLITTING, SweepProtocol, slope_for_lambda

log = logging.getLogger("lmsz_spin")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
HALF_CROSSING_LAMBDA = 10.0


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def column_name(label: str) -> str:
    return "p_" + label.replace("+", "p").replace("-", "m")


def _configure_logging() -> None:
    level = os.environ.get("LMSZ_SPIN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", metavar="PATH", help="INI run configuration; flags override it")
    g.add_argument("--system", choices=("qubits", "qutrits"))
    g.add_argument("--alpha", type=float, help="sweep slope")
    g.add_argument("--lambda", dest="lam", type=float, help="LMSZ parameter of the strongest block (sets alpha)")
    g.add_argument("--gammas", metavar="x,y,z,xy,yx", help="coupling constants")
    g.add_argument("--scenario", metavar="NAME", help="interaction scenario, e.g. iso-exchange-dm")
    g.add_argument("--gamma", type=float, help="scenario exchange strength")
    g.add_argument("--Gamma", type=float, help="scenario anisotropic (DM or d-d) strength")
    g.add_argument("--gamma-y", dest="gamma_y", type=float, help="second exchange constant of anisotropic scenarios")
    g.add_argument("--gamma-dm", dest="Gamma_dm", type=float, help="DM strength when d-d and DM are both present")
    g.add_argument("--initial", metavar="STATE", help="initial basis state, e.g. +- or m10 (p/m spell +/-)")
    g.add_argument("--window-factor", dest="window_factor", type=float, metavar="W")
    g.add_argument("--mode", choices=("full", "half"))
    g.add_argument("--convention", choices=("splitting", "literal"), help="slope convention of the ramp")
    g.add_argument("--tol", type=float, help="local error tolerance")
    g.add_argument("--n-samples", dest="n_samples", type=int, help="time-series samples")
    g.add_argument("--scan-axis", dest="scan_axis", help="alpha, lambda or a coupling (gamma_x ... gamma_yx)")
    g.add_argument("--scan-range", dest="scan_range", metavar="lo:hi:n")
    g.add_argument("--numeric", action="store_const", const=True, help="add propagated estimates to scans")
    g.add_argument("--observed", metavar="P_plus,P_minus", help="observed pair for classify")
    g.add_argument("--tolerance", dest="classify_tol", type=float, help="classify tolerance on P_plus = 0")
    g.add_argument("--jobs", type=int, metavar="N")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", metavar="PATH")
    o = common.add_argument_group("output")
    o.add_argument("--json", action="store_true", help="machine-readable report")
    o.add_argument("--dump-config", dest="dump_config", action="store_true",
                   help="print the merged configuration and exit")

    parser = argparse.ArgumentParser(prog="lmsz-spin", description="LMSZ sweeps of coupled qubits and qutrits.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="propagate one sweep and write the time series")
    sub.add_parser("scan", parents=[common], help="asymptotic quantities along one axis")
    sub.add_parser("classify", parents=[common], help="scenarios consistent with an observed (P+, P-)")
    ent = sub.add_parser("entangle-condition", parents=[common], help="slopes giving maximal entanglement")
    ent.add_argument("--verify", action="store_true", help="propagate at each slope and report the concurrence")
    st = sub.add_parser("selftest", parents=[common], help="structural invariants and three-level arbitration")
    st.add_argument("--draws", type=int, default=100, help="random draws per suite")
    return parser


_OVERRIDES = ("system", "alpha", "lam", "gammas", "scenario", "gamma", "Gamma", "gamma_y", "Gamma_dm", "initial",
              "window_factor", "mode", "convention", "tol", "n_samples", "scan_axis", "scan_range", "numeric",
              "observed", "classify_tol", "jobs", "seed", "out")


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    return cfg.override(**{k: getattr(args, k) for k in _OVERRIDES})


@contextlib.contextmanager
def _streams(cfg: RunConfig):
    """``(csv_stream, report_stream)``."""
    if cfg.out:
        try:
            fh = open(cfg.out, "w", newline="", encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot write {cfg.out}: {exc}") from None
        with fh:
            yield fh, sys.stdout
    else:
        yield sys.stdout, sys.stderr


def _report(stream, as_json: bool, payload: dict, lines) -> None:
    if as_json:
        json.dump(payload, stream, indent=2, default=_jsonable)
        stream.write("\n")
    else:
        for line in lines:
            print(line, file=stream)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"not serializable: {type(v)}")


# -- simulate ----------------------------------------------------------------

def closed_form_final(cfg: RunConfig, params, sweep: SweepProtocol) -> tuple[dict | None, str]:
    """Asymptotic populations from the closed forms, with a note on their applicability."""
    if sweep.convention != SPLITTING:
        return None, "closed forms assume the splitting slope convention"
    initial = cfg.initial_label
    if cfg.system == "qubits":
        return final_probabilities(params, sweep.alpha, initial, half=sweep.mode == HALF), ""
    if sweep.mode == HALF:
        return None, "no closed form for qutrit half crossings"
    if initial in FOUR_BASIS:
        return four_dim_final_probs(*fictitious_probabilities(params, sweep.alpha), initial), ""
    if initial == "-11" and not reduction_violations(params):
        red = three_level_reduction(params)
        out = {}
        for name, fn in P3_CANDIDATES.items():
            probs = three_level_probs(fn(red, sweep.alpha))
            out.update({f"{lab}[{name}]": p for lab, p in zip(THREE_LEVEL_BASIS, probs)})
        return out, "three-level block: candidate exponents listed side by side"
    return None, "no closed form for this initial state"


def cmd_simulate(cfg: RunConfig, as_json: bool) -> int:
    params = cfg.params()
    sweep = cfg.sweep(params)
    try:
        series = run_sweep(cfg.system, params, sweep, cfg.initial_label, cfg.propagation())
        failure = None
    except PropagationError as exc:
        series, failure = exc.partial, exc
    ent_name = series.entanglement_name
    header = ["t"] + [column_name(lab) for lab in series.labels] + ["magnetization", ent_name, "norm"]
    with _streams(cfg) as (out, rep):
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for i, t in enumerate(series.times):
            writer.writerow([fmt(t)] + [fmt(v) for v in series.populations[i]]
                            + [fmt(series.magnetization[i]), fmt(series.entanglement[i]), fmt(series.norm[i])])
        if failure is not None:
            print(f"error: {failure}", file=sys.stderr)
            return EXIT_NUMERIC
        est = asymptotic_estimate(series)
        closed, note = closed_form_final(cfg, params, sweep)
        payload = {
            "system": cfg.system, "initial": cfg.initial_label, "alpha": sweep.alpha,
            "window": [float(series.times[0]), float(series.times[-1])],
            "estimates": est.probabilities, "uncertainty": est.uncertainty, "drift": est.drift,
            "converged": est.converged, "final_" + ent_name: float(series.entanglement[-1]),
            "norm_drift": series.norm_drift(), "n_steps": series.n_steps, "closed_form": closed, "note": note,
        }
        lines = [f"alpha = {fmt(sweep.alpha)}, window [{series.times[0]:.6g}, {series.times[-1]:.6g}], "
                 f"{series.n_steps} steps, norm drift {series.norm_drift():.2e}",
                 f"final {ent_name} = {series.entanglement[-1]:.6f}"]
        for lab in series.labels:
            p = est.probabilities[lab]
            if closed is not None:
                ref = [f"{k}={v:.6f}" for k, v in closed.items() if k == lab or k.startswith(lab + "[")]
                if ref or p > 1e-9:
                    lines.append(f"  {lab:>4}: {p:.6f} +/- {est.uncertainty[lab]:.1e}   closed form {' '.join(ref)}")
            elif p > 1e-9:
                lines.append(f"  {lab:>4}: {p:.6f} +/- {est.uncertainty[lab]:.1e}")
        if note:
            lines.append(note)
        _report(rep, as_json, payload, lines)
    if not est.converged:
        print(f"warning: asymptotic estimate not converged (oscillation {est.max_uncertainty:.3g}, "
              f"drift {est.max_drift:.3g}); increase the window factor", file=sys.stderr)
    return EXIT_OK


# -- scan --------------------------------------------------------------------

def cmd_scan(cfg: RunConfig, as_json: bool) -> int:
    if cfg.scan_axis is None or cfg.scan_range is None:
        raise ConfigError("scan needs --scan-axis and --scan-range")
    axis = canonical_axis(cfg.scan_axis)
    params = cfg.params()
    # the scanned axis fixes the slope itself
    sweep = SweepProtocol(1.0, mode=cfg.mode, window_factor=cfg.window_factor, convention=cfg.convention) \
        if axis in ("alpha", "lambda") else cfg.sweep(params)
    values = tuple(float(v) for v in parse_range(cfg.scan_range))
    spec = ScanSpec(cfg.system, params, sweep, cfg.initial_label, axis, values, cfg.numeric,
                    cfg.propagation())
    try:
        rows = run_scan(spec, cfg.jobs)
    except PropagationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    maxima = scan_maxima(spec, rows)
    header = list(rows[0])
    with _streams(cfg) as (out, rep):
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(row[k]) for k in header])
        key = entanglement_key(cfg.system)
        payload = {"axis": axis, "n_points": len(rows),
                   "maxima": {k: [{"location": m.location, "value": m.value} for m in v] for k, v in maxima.items()}}
        lines = [f"{key} maxima along {axis}:"]
        for kind, found in maxima.items():
            for m in found:
                lines.append(f"  {kind}: {axis} = {m.location:.6f}, {key} = {m.value:.6f}")
        if not any(maxima.values()):
            lines.append("  none inside the scanned range")
        _report(rep, as_json, payload, lines)
    if cfg.numeric and not all(r.get("converged", True) for r in rows):
        print("warning: some numeric estimates did not converge", file=sys.stderr)
    return EXIT_OK


# -- classify ----------------------------------------------------------------

def cmd_classify(cfg: RunConfig, as_json: bool) -> int:
    if cfg.system != "qubits":
        raise ConfigError("classify works on the two-qubit scenario table")
    if cfg.alpha is None:
        raise ConfigError("classify needs --alpha")
    observed = cfg.observed_pair()
    matches = classify_interactions(observed, cfg.alpha, cfg.classify_tol)
    payload = {"observed": list(observed), "alpha": cfg.alpha,
               "matches": [{"scenario": m.kind.value, "inferred": m.inferred, "note": m.note} for m in matches]}
    lines = [f"observed P+ = {observed[0]:g}, P- = {observed[1]:g} at alpha = {cfg.alpha:g}"]
    for m in matches:
        vals = ", ".join(f"{k} = {v:.6g}" for k, v in m.inferred.items())
        lines.append(f"  {m.kind.value}: {vals}" + (f"  ({m.note})" if m.note else ""))
    _report(sys.stdout, as_json, payload, lines)
    return EXIT_OK


# -- entangle-condition ------------------------------------------------------

def cmd_entangle_condition(cfg: RunConfig, as_json: bool, verify: bool) -> int:
    if cfg.system != "qubits":
        raise ConfigError("entangle-condition is defined for the two-qubit blocks")
    params = cfg.params()
    blocks = []
    for block in decompose_qubit_blocks(params):
        if block.magnitude == 0:
            blocks.append({"block": block.tag, "alpha_star": None})
            continue
        entry = {
            "block": block.tag,
            "gamma": block.gamma, "Gamma": block.Gamma,
            "alpha_star": max_entanglement_slope(block.gamma, block.Gamma),
            "half_crossing_alpha": slope_for_lambda(block.magnitude, HALF_CROSSING_LAMBDA),
        }
        if verify:
            sweep = SweepProtocol(entry["alpha_star"], window_factor=cfg.window_factor)
            start = BLOCK_LABELS[block.tag][1]
            try:
                series = run_sweep("qubits", params, sweep, start, cfg.propagation())
            except PropagationError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_NUMERIC
            tail = series.entanglement[int(len(series.times) * 0.9):]
            entry["verified_concurrence"] = float(tail.mean())
        blocks.append(entry)
    if all(b["alpha_star"] is None for b in blocks):
        raise ConfigError("both blocks have zero transverse coupling; no slope gives entanglement")
    lines = []
    for b in blocks:
        if b["alpha_star"] is None:
            lines.append(f"{b['block']}: zero transverse coupling, stays in its initial state")
            continue
        lines.append(f"{b['block']}: alpha* = {b['alpha_star']:.6f} (full crossing, P = 1/2)")
        lines.append(f"  adiabatic alternative: half crossing from t = 0 with alpha <= "
                     f"{b['half_crossing_alpha']:.6g} (Lambda >= {HALF_CROSSING_LAMBDA:g}) also gives P -> 1/2")
        if "verified_concurrence" in b:
            lines.append(f"  propagated concurrence at alpha*: {b['verified_concurrence']:.6f}")
    _report(sys.stdout, as_json, {"blocks": blocks}, lines)
    if verify and any(b.get("verified_concurrence", 1.0) < 0.98 for b in blocks):
        return EXIT_FAILED
    return EXIT_OK


# -- selftest ----------------------------------------------------------------

def cmd_selftest(cfg: RunConfig, as_json: bool, draws: int) -> int:
    results = checks.selftest(seed=cfg.seed, n_draws=draws, jobs=cfg.jobs)
    payload = {"checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]}
    _report(sys.stdout, as_json, payload, [r.line() for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args).validate()
        if args.dump_config:
            sys.stdout.write(cfg.to_ini())
            return EXIT_OK
        if args.command == "simulate":
            return cmd_simulate(cfg, args.json)
        if args.command == "scan":
            return cmd_scan(cfg, args.json)
        if args.command == "classify":
            return cmd_classify(cfg, args.json)
        if args.command == "entangle-condition":
            return cmd_entangle_condition(cfg, args.json, args.verify)
        return cmd_selftest(cfg, args.json, args.draws)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PropagationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining validation errors from the library are input problems
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
