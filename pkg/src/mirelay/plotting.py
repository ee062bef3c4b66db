"""Figure rendering for experiment reports (headless, files only)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentResult, RateSummary

DPI = 150
_SCHEME_COLORS = {"none": "0.35", "all": "tab:blue", "one_relay": "tab:orange",
                  "n_minus_one": "tab:green", "freq_tuning": "tab:red",
                  "genetic": "tab:purple"}
_DENSITY_STYLES = ("-", "--", ":", "-.")


def _cdf_xy(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(values)
    y = np.arange(1, len(x) + 1) / len(x)
    return x, y


def eta_cdf_figure(result: ExperimentResult, path: str | Path) -> Path:
    """Empirical CDF of the matched gain (dB) per density and scheme."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    densities = result.config.relay_densities
    for di, density in enumerate(densities):
        style = _DENSITY_STYLES[di % len(_DENSITY_STYLES)]
        for scheme in result.config.schemes:
            values = np.array([r.eta_db for r in result.records
                               if r.density == density and r.scheme == scheme])
            if len(values) == 0:
                continue
            finite = values[np.isfinite(values)]
            if len(finite) == 0:
                continue
            x, y = _cdf_xy(finite)
            label = scheme if len(densities) == 1 else f"{scheme}, {density:g}/dm^3"
            ax.plot(x, y, style, color=_SCHEME_COLORS.get(scheme, "k"),
                    label=label, linewidth=1.4)
    ax.set_xlabel("channel power gain (dB)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    title = f"{result.config.scenario}, d = {result.config.tx_rx_distance:g} m"
    ax.set_title(title)
    return _save(fig, path)


def frequency_response_figure(freqs: np.ndarray, curves: dict[str, np.ndarray],
                              design_frequency: float, path: str | Path) -> Path:
    """Matched gain (dB) over frequency for one or more switch states."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, etas in curves.items():
        with np.errstate(divide="ignore"):
            ax.plot(freqs / 1e6, 10.0 * np.log10(etas), label=label, linewidth=1.4)
    ax.axvline(design_frequency / 1e6, color="0.6", linestyle=":",
               label="design frequency")
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("channel power gain (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def rates_figure(summaries: list[RateSummary], path: str | Path) -> Path:
    """Mean and 1%-outage achievable rate versus relay density."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    schemes = sorted({s.scheme for s in summaries},
                     key=lambda s: list(_SCHEME_COLORS).index(s) if s in _SCHEME_COLORS else 99)
    for scheme in schemes:
        rows = sorted((s for s in summaries if s.scheme == scheme),
                      key=lambda s: s.density)
        dens = [s.density for s in rows]
        color = _SCHEME_COLORS.get(scheme, "k")
        ax.plot(dens, [s.mean_rate for s in rows], "-o", color=color,
                label=f"{scheme}, mean", linewidth=1.4, markersize=4)
        ax.plot(dens, [s.outage_rate for s in rows], "--s", color=color,
                label=f"{scheme}, 1% outage", linewidth=1.1, markersize=4)
    if all(s.density > 0 for s in summaries):
        ax.set_xscale("log")
    ax.set_xlabel("relay density (1/dm^3)")
    ax.set_ylabel("achievable rate (bit/s)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)


def ga_trace_figure(trace: list[tuple[int, float]], path: str | Path) -> Path:
    """Best-so-far matched gain (dB) per genetic-search generation."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    gens = [g for g, _ in trace]
    best = [10.0 * math.log10(e) if e > 0 else float("nan") for _, e in trace]
    ax.plot(gens, best, linewidth=1.4)
    ax.set_xlabel("generation")
    ax.set_ylabel("best gain (dB)")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
