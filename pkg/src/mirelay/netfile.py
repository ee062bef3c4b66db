"""JSON persistence for networks and experiment configurations.

Two document types, distinguished by a mandatory "format" field:

* ``mi-network/1`` — a concrete coil arrangement (tx, rx, relays with
  their loads, optional M_tr override).
* ``mi-experiment/1`` — a Monte Carlo experiment description.

Unknown keys are rejected rather than ignored so typos surface as
ConfigError instead of silently running a different experiment.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .circuit import LoadState, Network
from .errors import ConfigError
from .experiments import ExperimentConfig, RateParams
from .geometry import Coil
from .optimize import GaParams

NETWORK_FORMAT = "mi-network/1"
EXPERIMENT_FORMAT = "mi-experiment/1"


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def _coil_to_dict(coil: Coil) -> dict:
    return {"position": [float(v) for v in coil.position],
            "orientation": [float(v) for v in coil.orientation],
            "radius": coil.radius, "turns": coil.turns,
            "self_inductance": coil.self_inductance, "resistance": coil.resistance}


def _coil_from_dict(obj: dict, where: str) -> Coil:
    _require_keys(obj, {"position", "orientation", "radius", "turns",
                        "self_inductance", "resistance"}, where)
    try:
        return Coil(position=np.asarray(obj["position"], float),
                    orientation=np.asarray(obj["orientation"], float),
                    radius=float(obj["radius"]), turns=int(obj["turns"]),
                    self_inductance=float(obj["self_inductance"]),
                    resistance=float(obj["resistance"]))
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r} in {where}") from exc


def _load_to_dict(load: LoadState) -> dict:
    if load.kind == "resonant":
        return {"kind": "resonant", "capacitance": load.capacitance}
    if load.kind == "open":
        return {"kind": "open"}
    z = complex(load.impedance)
    return {"kind": "custom", "impedance": [z.real, z.imag]}


def _load_from_dict(obj: dict, where: str) -> LoadState:
    _require_keys(obj, {"kind", "capacitance", "impedance"}, where)
    kind = obj.get("kind")
    if kind == "resonant":
        return LoadState.resonant(float(obj["capacitance"]))
    if kind == "open":
        return LoadState.open_circuit()
    if kind == "custom":
        re, im = obj["impedance"]
        return LoadState.custom(complex(float(re), float(im)))
    raise ConfigError(f"unknown load kind {kind!r} in {where}")


def network_to_dict(net: Network) -> dict:
    return {"format": NETWORK_FORMAT,
            "design_frequency": net.design_frequency,
            "mtr_override": net.mtr_override,
            "tx": _coil_to_dict(net.tx), "rx": _coil_to_dict(net.rx),
            "relays": [{"coil": _coil_to_dict(coil), "load": _load_to_dict(load)}
                       for coil, load in net.relays]}


def network_from_dict(obj: dict) -> Network:
    _require_keys(obj, {"format", "design_frequency", "mtr_override", "tx", "rx",
                        "relays"}, "network document")
    if obj.get("format") != NETWORK_FORMAT:
        raise ConfigError(f"expected format {NETWORK_FORMAT!r}, got {obj.get('format')!r}")
    for key in ("tx", "rx"):
        if key not in obj:
            raise ConfigError(f"network document is missing {key!r}")
    relays = []
    for i, entry in enumerate(obj.get("relays", [])):
        _require_keys(entry, {"coil", "load"}, f"relays[{i}]")
        if "coil" not in entry or "load" not in entry:
            raise ConfigError(f"relays[{i}] needs both 'coil' and 'load'")
        coil = _coil_from_dict(entry["coil"], f"relays[{i}].coil")
        load = _load_from_dict(entry["load"], f"relays[{i}].load")
        relays.append((coil, load))
    override = obj.get("mtr_override")
    return Network.build(tx=_coil_from_dict(obj["tx"], "tx"),
                         rx=_coil_from_dict(obj["rx"], "rx"),
                         relays=relays,
                         mtr_override=None if override is None else float(override),
                         design_frequency=float(obj.get("design_frequency", 13.56e6)))


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


def load_network(path: str | Path) -> Network:
    return network_from_dict(_read_json(path))


_EXPERIMENT_KEYS = {"format", "description", "scenario", "tx_rx_distance",
                    "relay_densities", "trials", "schemes", "kind",
                    "design_frequency", "rng_seed", "attenuation_db", "rate",
                    "sampling", "ga", "freq_band", "freq_grid_points"}


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    return {"format": EXPERIMENT_FORMAT,
            "description": cfg.description,
            "scenario": cfg.scenario,
            "tx_rx_distance": cfg.tx_rx_distance,
            "relay_densities": list(cfg.relay_densities),
            "trials": cfg.trials,
            "schemes": list(cfg.schemes),
            "kind": cfg.kind,
            "design_frequency": cfg.design_frequency,
            "rng_seed": cfg.rng_seed,
            "attenuation_db": cfg.attenuation_db,
            "rate": {"transmit_power": cfg.rate.transmit_power,
                     "bandwidth": cfg.rate.bandwidth,
                     "temperature": cfg.rate.temperature,
                     "noise_figure_db": cfg.rate.noise_figure_db},
            "sampling": {"min_coil_separation": cfg.min_coil_separation,
                         "fixed_count": cfg.fixed_count},
            "ga": {"generations": cfg.ga.generations,
                   "survivors": cfg.ga.survivors,
                   "recombined_per_generation": cfg.ga.recombined_per_generation,
                   "expected_mutation_flips": cfg.ga.expected_mutation_flips,
                   "rng_seed": cfg.ga.rng_seed},
            "freq_band": None if cfg.freq_band is None else list(cfg.freq_band),
            "freq_grid_points": cfg.freq_grid_points}


def experiment_from_dict(obj: dict) -> ExperimentConfig:
    _require_keys(obj, _EXPERIMENT_KEYS, "experiment document")
    if obj.get("format") != EXPERIMENT_FORMAT:
        raise ConfigError(f"expected format {EXPERIMENT_FORMAT!r}, got {obj.get('format')!r}")
    rate_obj = obj.get("rate", {})
    _require_keys(rate_obj, {"transmit_power", "bandwidth", "temperature",
                             "noise_figure_db"}, "rate")
    rate = RateParams(**rate_obj)
    sampling = obj.get("sampling", {})
    _require_keys(sampling, {"min_coil_separation", "fixed_count"}, "sampling")
    ga_obj = obj.get("ga", {})
    _require_keys(ga_obj, {"generations", "survivors", "recombined_per_generation",
                           "expected_mutation_flips", "rng_seed"}, "ga")
    ga = GaParams(**ga_obj)
    band = obj.get("freq_band")
    kwargs = dict(scenario=obj.get("scenario", "misaligned"),
                  tx_rx_distance=float(obj.get("tx_rx_distance", 0.5)),
                  relay_densities=tuple(obj.get("relay_densities", (0.1, 0.3, 1.0))),
                  trials=int(obj.get("trials", 2000)),
                  schemes=tuple(obj.get("schemes", ("none", "all"))),
                  kind=obj.get("kind", "cdf"),
                  design_frequency=float(obj.get("design_frequency", 13.56e6)),
                  rng_seed=int(obj.get("rng_seed", 0)),
                  rate=rate,
                  attenuation_db=float(obj.get("attenuation_db", 23.7)),
                  ga=ga,
                  freq_band=None if band is None else (float(band[0]), float(band[1])),
                  freq_grid_points=int(obj.get("freq_grid_points", 101)),
                  description=str(obj.get("description", "")))
    sep = sampling.get("min_coil_separation")
    count = sampling.get("fixed_count")
    kwargs["min_coil_separation"] = None if sep is None else float(sep)
    kwargs["fixed_count"] = None if count is None else int(count)
    return ExperimentConfig(**kwargs)


def save_experiment(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(experiment_to_dict(cfg), indent=2) + "\n")


def load_experiment(path: str | Path) -> ExperimentConfig:
    return experiment_from_dict(_read_json(path))


def _read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must hold a JSON object at the top level")
    return obj


def load_document(path: str | Path):
    """Load either document type by its format field."""
    obj = _read_json(path)
    fmt = obj.get("format")
    if fmt == NETWORK_FORMAT:
        return network_from_dict(obj)
    if fmt == EXPERIMENT_FORMAT:
        return experiment_from_dict(obj)
    raise ConfigError(f"unknown document format {fmt!r} in {path}")
