"""Command-line interface: gain reports, switch-state optimization, experiments.

Exit codes: 0 success, 2 configuration error, 3 geometry error, 4 numerical
error, 5 experiment finished but excluded 0.1% or more of its trials.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import Network
from .errors import (ConfigError, GeometryError, NumericalError,
                     PassivityError, QuadratureError)
from .experiments import (ExperimentConfig, ExperimentResult, _sample_trial_network,
                          _trial_seeds, achievable_rate, frequency_response,
                          rate_vs_density, run_cdf_experiment, summarize)
from .geometry import SamplingConfig, canonical_pair, sample_network
from .matching import gain_report, power_gain, rho_chi
from .netfile import (experiment_to_dict, load_experiment, load_network,
                      network_to_dict, save_network)
from .optimize import (GaParams, ReducedSwitchSystem, exhaustive_search,
                       optimize_frequency, optimize_genetic, optimize_n_minus_one,
                       optimize_one_relay, state_from_hex, state_to_hex)

EXCLUSION_LIMIT = 1e-3


def _preset_dir():
    return resources.files("mirelay") / "presets"


def list_presets() -> list[tuple[str, str]]:
    """(name, description) of every bundled experiment preset."""
    out = []
    for entry in sorted(_preset_dir().iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            obj = json.loads(entry.read_text())
            out.append((entry.name[: -len(".json")], obj.get("description", "")))
    return out


def _resolve_config(ref: str) -> tuple[ExperimentConfig, str]:
    """An experiment config from a file path or a bundled preset name."""
    path = Path(ref)
    if path.exists():
        return load_experiment(path), str(path)
    candidate = _preset_dir() / f"{ref}.json"
    if candidate.is_file():
        with resources.as_file(candidate) as real:
            return load_experiment(real), f"preset:{ref}"
    names = ", ".join(name for name, _ in list_presets())
    raise ConfigError(f"{ref!r} is neither a config file nor a preset (presets: {names})")


def _add_sampling_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("network source")
    group.add_argument("--network", metavar="FILE", help="network JSON file to load")
    group.add_argument("--distance", type=float, default=0.5,
                       help="Tx-Rx distance in meters (default 0.5)")
    group.add_argument("--alignment", choices=("coaxial", "misaligned"), default="coaxial",
                       help="endpoint arrangement when sampling (default coaxial)")
    group.add_argument("--attenuation-db", type=float, default=23.7,
                       help="Tx-Rx attenuation for --alignment misaligned (default 23.7)")
    group.add_argument("--density", type=float, default=None,
                       help="relay density in 1/dm^3; omit for a relay-free link")
    group.add_argument("--fixed-count", type=int, default=None,
                       help="exact relay count instead of a Poisson draw")
    group.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    group.add_argument("--save-network", metavar="FILE",
                       help="write the network used to a JSON file")


def _network_from_args(args) -> Network:
    if args.network is not None:
        net = load_network(args.network)
    else:
        tx, rx, override = canonical_pair(args.distance, args.alignment,
                                          attenuation_db=args.attenuation_db)
        if args.density is None and args.fixed_count is None:
            net = Network.build(tx, rx, mtr_override=override)
        else:
            cfg = SamplingConfig(tx_rx_distance=args.distance,
                                 relay_density=args.density if args.density is not None else 0.0,
                                 rng_seed=args.seed, fixed_count=args.fixed_count)
            net = sample_network(cfg, tx, rx, mtr_override=override)
    if args.save_network:
        save_network(net, args.save_network)
        print(f"network written to {args.save_network}")
    return net


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}j"


def cmd_gain(args) -> int:
    """Report the matched gain of one network at one frequency."""
    net = _network_from_args(args)
    freq = args.freq if args.freq is not None else net.design_frequency
    if args.switch_state is not None and net.n_relays:
        state = state_from_hex(args.switch_state, net.n_relays)
        net = net.with_switch_state(state)
        closed = int(state.sum())
        print(f"switch state: {closed}/{len(state)} relays closed")
    from .circuit import effective_two_port
    z = effective_two_port(net, freq)
    report = gain_report(z)
    k = net.m_tr / math.sqrt(net.tx.self_inductance * net.rx.self_inductance)
    print(f"network: {net.n_relays} relays, f = {freq / 1e6:.6g} MHz")
    print(f"M_tr = {net.m_tr:.6g} H (k = {k:.6g})")
    print(f"z11 = {_fmt_complex(z.z11)} ohm, z21 = {_fmt_complex(z.z21)} ohm, "
          f"z22 = {_fmt_complex(z.z22)} ohm")
    print(f"rho = {report.rho:.9g}, chi = {report.chi:.9g}")
    eta_db = 10.0 * math.log10(report.eta) if report.eta > 0 else -math.inf
    print(f"eta = {report.eta:.9g} ({eta_db:.4f} dB)")
    print(f"h = {_fmt_complex(report.h)} (|h| = {abs(report.h):.6g})")
    print(f"Z_in = {_fmt_complex(report.z_in)} ohm, Z_out = {_fmt_complex(report.z_out)} ohm")
    return 0


_SCHEME_ALIASES = {"one": "one-relay", "n-1": "n-minus-one", "freq": "frequency"}


def cmd_optimize(args) -> int:
    """Optimize the switch state (or frequency) of one network."""
    args.scheme = _SCHEME_ALIASES.get(args.scheme, args.scheme)
    net = _network_from_args(args)
    freq = args.freq if args.freq is not None else net.design_frequency
    outdir = Path(args.out) if args.out else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    result: dict = {"scheme": args.scheme, "n_relays": net.n_relays,
                    "frequency": freq}

    if args.scheme == "frequency":
        band = (args.band[0], args.band[1]) if args.band else None
        f_star, eta = optimize_frequency(net, band=band, grid_points=args.grid_points)
        result["best_frequency"] = f_star
        print(f"best frequency: {f_star / 1e6:.6f} MHz")
    elif args.scheme == "genetic":
        params = GaParams(generations=args.generations, survivors=args.survivors,
                          rng_seed=args.ga_seed)
        trace: list = []
        state, eta = optimize_genetic(net, freq, params=params, trace=trace)
        result["state"] = state_to_hex(state)
        result["closed"] = int(state.sum())
        print(f"best state: {int(state.sum())}/{net.n_relays} relays closed "
              f"({state_to_hex(state)})")
        if outdir is not None:
            with open(outdir / "trace.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["generation", "best_eta", "best_eta_db"])
                for gen, best in trace:
                    writer.writerow([gen, f"{best:.12g}",
                                     f"{10.0 * math.log10(best):.6f}" if best > 0 else "-inf"])
            from .plotting import ga_trace_figure
            ga_trace_figure(trace, outdir / "trace.png")
            print(f"trace written to {outdir / 'trace.csv'} and {outdir / 'trace.png'}")
    elif args.scheme == "exhaustive":
        state, eta = exhaustive_search(net, freq)
        result["state"] = state_to_hex(state)
        result["closed"] = int(state.sum())
        print(f"best state: {int(state.sum())}/{net.n_relays} relays closed "
              f"({state_to_hex(state)})")
    else:
        fn = optimize_one_relay if args.scheme == "one-relay" else optimize_n_minus_one
        index, eta = fn(net, freq)
        result["relay_index"] = index
        word = "closed" if args.scheme == "one-relay" else "opened"
        print(f"best relay to leave {word}: index {index}")

    eta_db = 10.0 * math.log10(eta) if eta > 0 else -math.inf
    result["eta"] = eta
    result["eta_db"] = eta_db
    print(f"eta = {eta:.9g} ({eta_db:.4f} dB)")
    if net.n_relays:
        baseline = ReducedSwitchSystem(net, freq)
        eta_none = baseline.evaluate(np.zeros(net.n_relays, dtype=bool))
        eta_all = baseline.evaluate(np.ones(net.n_relays, dtype=bool))
        result["eta_none"] = eta_none
        result["eta_all"] = eta_all
        print(f"reference: eta(none) = {eta_none:.9g}, eta(all) = {eta_all:.9g}")
    if outdir is not None:
        (outdir / "result.json").write_text(json.dumps(result, indent=2) + "\n")
        print(f"result written to {outdir / 'result.json'}")
    return 0


def _progress_printer(total: int):
    step = max(1, total // 20)

    def progress(done: int, _total: int) -> None:
        if done % step == 0 or done == total:
            print(f"  {done}/{total} trials", file=sys.stderr, flush=True)

    return progress


def _write_trials_csv(result: ExperimentResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["density", "trial", "n_relays", "scheme",
                         "eta", "eta_db", "gain_db", "detail"])
        for r in result.records:
            writer.writerow([f"{r.density:g}", r.trial_index, r.n_relays, r.scheme,
                             f"{r.eta:.12g}", f"{r.eta_db:.6f}", f"{r.gain_db:.6f}",
                             r.detail])


def _write_summary_csv(result: ExperimentResult, path: Path) -> list[dict]:
    rows = summarize(result)
    if rows:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return rows


def _run_response_report(cfg: ExperimentConfig, outdir: Path) -> None:
    if "freq_tuning" in cfg.schemes:
        raise ConfigError("scheme 'freq_tuning' is not a switch state; "
                          "frequency_response configs accept none/all/one_relay/"
                          "n_minus_one/genetic")
    density = cfg.relay_densities[0]
    sampling_seed, ga_seed, orientation_seed = _trial_seeds(cfg.rng_seed, 0, 0)
    net = _sample_trial_network(cfg, density, sampling_seed, orientation_seed)
    n = net.n_relays
    print(f"sampled network: {n} relays at {density:g}/dm^3", file=sys.stderr)
    save_network(net, outdir / "network.json")
    states: dict[str, np.ndarray] = {}
    for scheme in cfg.schemes:
        if scheme == "none":
            states["none"] = np.zeros(n, dtype=bool)
        elif scheme == "all":
            states["all"] = np.ones(n, dtype=bool)
        elif n == 0:
            states[scheme] = np.zeros(0, dtype=bool)
        elif scheme == "one_relay":
            index, _ = optimize_one_relay(net, cfg.design_frequency)
            state = np.zeros(n, dtype=bool)
            state[index] = True
            states["one_relay"] = state
        elif scheme == "n_minus_one":
            index, _ = optimize_n_minus_one(net, cfg.design_frequency)
            state = np.ones(n, dtype=bool)
            state[index] = False
            states["n_minus_one"] = state
        elif scheme == "genetic":
            params = replace(cfg.ga, rng_seed=ga_seed)
            state, _ = optimize_genetic(net, cfg.design_frequency, params=params)
            states["genetic"] = state
    freqs, curves = frequency_response(net, band=cfg.freq_band,
                                       grid_points=cfg.freq_grid_points, states=states)
    with open(outdir / "response.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frequency_hz"] + [f"eta_{label}" for label in curves])
        for i, f in enumerate(freqs):
            writer.writerow([f"{f:.6f}"] + [f"{curves[label][i]:.12g}" for label in curves])
    from .plotting import frequency_response_figure
    frequency_response_figure(freqs, curves, net.design_frequency, outdir / "response.png")
    print(f"wrote {outdir / 'response.csv'} and {outdir / 'response.png'}")


def cmd_experiment(args) -> int:
    """Run a Monte Carlo experiment and write its report files."""
    cfg, source = _resolve_config(args.config)
    if args.trials is not None:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.densities is not None:
        densities = tuple(float(v) for v in args.densities.split(","))
        cfg = replace(cfg, relay_densities=densities)
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    cap = os.environ.get("MIRELAY_MAX_WORKERS")
    if cap is not None:
        workers = min(workers, max(1, int(cap)))

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    manifest = {"config": experiment_to_dict(cfg), "source": source,
                "outdir": str(outdir), "version": __version__, "workers": workers,
                "started": started.isoformat(timespec="seconds")}

    if cfg.kind == "frequency_response":
        _run_response_report(cfg, outdir)
        manifest["finished"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return 0

    total = len(cfg.relay_densities) * cfg.trials
    print(f"running {total} trials ({cfg.trials} per density, "
          f"scenario {cfg.scenario}, workers {workers})", file=sys.stderr)
    result = run_cdf_experiment(cfg, workers=workers,
                                progress=_progress_printer(total))

    _write_trials_csv(result, outdir / "trials.csv")
    rows = _write_summary_csv(result, outdir / "summary.csv")
    if result.exclusions:
        with open(outdir / "exclusions.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["density", "trial", "reason"])
            for e in result.exclusions:
                writer.writerow([f"{e.density:g}", e.trial_index, e.reason])
    from .plotting import eta_cdf_figure, rates_figure
    if cfg.kind == "rates":
        summaries = rate_vs_density(result)
        with open(outdir / "rates.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["density", "scheme", "n_trials", "mean_rate_bps",
                             "outage_rate_bps"])
            for s in summaries:
                writer.writerow([f"{s.density:g}", s.scheme, s.n_trials,
                                 f"{s.mean_rate:.6f}", f"{s.outage_rate:.6f}"])
        rates_figure(summaries, outdir / "rates.png")
    eta_cdf_figure(result, outdir / "cdf.png")

    manifest["finished"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    manifest["records"] = len(result.records)
    manifest["exclusions"] = len(result.exclusions)
    manifest["exclusion_fraction"] = result.exclusion_fraction
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    for row in rows:
        print(f"density {row['density']:g}/dm^3 scheme {row['scheme']:<12s} "
              f"median eta {row['eta_db_p50']:8.3f} dB  "
              f"median gain {row['median_gain_db']:7.3f} dB  "
              f"improving {100.0 * row['improving_fraction']:5.1f}%")
    print(f"report written to {outdir}")
    if result.exclusion_fraction >= EXCLUSION_LIMIT:
        print(f"warning: excluded {len(result.exclusions)} trials "
              f"({100.0 * result.exclusion_fraction:.3f}% >= "
              f"{100.0 * EXCLUSION_LIMIT:.1f}%)", file=sys.stderr)
        return 5
    return 0


def cmd_presets(args) -> int:
    for name, description in list_presets():
        print(f"{name:<18s} {description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirelay",
        description="Magneto-inductive channels through clouds of resonant "
                    "passive relays: gain reports, switch-state optimization, "
                    "and Monte Carlo experiments.")
    parser.add_argument("--version", action="version", version=f"mirelay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gain = sub.add_parser("gain", help="matched-gain report for one network")
    _add_sampling_args(p_gain)
    p_gain.add_argument("--freq", type=float, default=None,
                        help="operating frequency in Hz (default: design frequency)")
    p_gain.add_argument("--switch-state", metavar="HEX", default=None,
                        help="relay switch state as produced by `optimize` "
                             "(bit i = relay i, 1 = closed)")
    p_gain.set_defaults(func=cmd_gain)

    p_opt = sub.add_parser("optimize", help="optimize relay switch state or frequency")
    _add_sampling_args(p_opt)
    p_opt.add_argument("--scheme", choices=("genetic", "one-relay", "one",
                                            "n-minus-one", "n-1", "frequency",
                                            "freq", "exhaustive"),
                       default="genetic")
    p_opt.add_argument("--freq", type=float, default=None,
                       help="operating frequency in Hz (default: design frequency)")
    p_opt.add_argument("--generations", type=int, default=500)
    p_opt.add_argument("--survivors", type=int, default=20)
    p_opt.add_argument("--ga-seed", type=int, default=0,
                       help="genetic-search seed (default 0)")
    p_opt.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                       default=None, help="frequency band in Hz for --scheme frequency")
    p_opt.add_argument("--grid-points", type=int, default=401)
    p_opt.add_argument("--out", metavar="DIR", default=None,
                       help="directory for result.json (and the genetic trace)")
    p_opt.set_defaults(func=cmd_optimize)

    p_exp = sub.add_parser("experiment", help="run a Monte Carlo experiment report")
    p_exp.add_argument("--config", required=True,
                       help="experiment JSON file or bundled preset name "
                            "(see `mirelay presets`)")
    p_exp.add_argument("--out", required=True, metavar="DIR",
                       help="output directory for CSV files, figures, manifest")
    p_exp.add_argument("--trials", type=int, default=None, help="override trial count")
    p_exp.add_argument("--seed", type=int, default=None, help="override master seed")
    p_exp.add_argument("--densities", default=None,
                       help="override densities, comma-separated (e.g. 0.1,1)")
    p_exp.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: all cores; results are "
                            "worker-count independent; capped by MIRELAY_MAX_WORKERS)")
    p_exp.set_defaults(func=cmd_experiment)

    p_pre = sub.add_parser("presets", help="list bundled experiment presets")
    p_pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, QuadratureError, PassivityError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
