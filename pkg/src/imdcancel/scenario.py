"""Experiment description: what to simulate, which algorithms, which sweep.

Scenarios are plain dataclasses, constructible in code or from a TOML file.
File parsing is strict: unknown keys are rejected so a typo cannot silently
fall back to a default.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .interference import GammaTable, ImdCoefficients, default_gamma_table
from .waveform import DlWaveformConfig, UlWaveformConfig


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass
class AlgoSpec:
    """One algorithm entry: base parameters plus per-leakage-power tuning."""

    name: str
    label: str
    params: dict = field(default_factory=dict)
    tuned: dict = field(default_factory=dict)  # leakage dB -> param overrides

    def resolved(self, leakage_db: float) -> dict:
        """Base parameters with the closest tuned overrides applied."""
        out = dict(self.params)
        if self.tuned:
            keys = np.array(sorted(self.tuned))
            nearest = float(keys[np.argmin(np.abs(keys - leakage_db))])
            out.update(self.tuned[nearest])
        return out


@dataclass
class NormStudy:
    """Weight-norm evolution experiment (constrained SGD vs. limiter)."""

    leakage_db: float = -18.0
    constraint_weights: tuple = (0.1, 0.01)
    constraint_target: float = 1.0
    limiter_target: float = 3.0
    norm_p: int = 1


@dataclass
class Scenario:
    ul: UlWaveformConfig = field(default_factory=UlWaveformConfig)
    dl: DlWaveformConfig = field(default_factory=DlWaveformConfig)
    pa_model: str = "rapp"  # "rapp" or "linear"
    pa_crest_db: float = 6.0
    pa_smoothness: float = 2.0
    isolation_db: float = 50.0
    leakage_taps: np.ndarray | None = None  # explicit channel, overrides draws
    gamma_mode: str = "scaledQ"  # or "independentIQ"
    gamma: GammaTable = field(default_factory=default_gamma_table)
    leakage_sweep_db: tuple = (-30.0, -25.0, -20.0, -15.0, -10.0)
    rx_snr_db: float = 10.0
    nmse_leakage_db: float | None = None  # default: middle of the sweep
    psd_leakage_db: float | None = None
    algorithms: list = field(default_factory=list)
    n_runs: int = 10
    n_channels: int = 3
    slots: int = 2
    base_seed: int = 1
    norm_study: NormStudy | None = None

    def __post_init__(self) -> None:
        if not self.leakage_sweep_db:
            raise ConfigError("leakage sweep must not be empty")
        if self.n_runs < 1 or self.n_channels < 1:
            raise ConfigError("ensemble sizes must be at least 1")
        if self.pa_model not in ("rapp", "linear"):
            raise ConfigError("pa model must be 'rapp' or 'linear'")
        if self.gamma_mode not in ("scaledQ", "independentIQ"):
            raise ConfigError("gamma mode must be 'scaledQ' or 'independentIQ'")
        if self.nmse_leakage_db is None:
            sweep = sorted(self.leakage_sweep_db)
            self.nmse_leakage_db = float(sweep[len(sweep) // 2])
        if self.psd_leakage_db is None:
            self.psd_leakage_db = float(max(self.leakage_sweep_db))

    def coefficients(self, leakage_db: float) -> ImdCoefficients:
        coeffs = self.gamma.lookup(leakage_db)
        if self.gamma_mode == "scaledQ":
            coeffs = coeffs.to_scaled_q()
        return coeffs


# ---------------------------------------------------------------------------
# strict TOML loading

_WAVEFORM_KEYS = {"fft_size", "rb_lo", "rb_hi", "mod_order", "cp_len", "rate", "taper_len"}
_PA_KEYS = {"model", "crest_db", "smoothness"}
_LEAKAGE_KEYS = {"isolation_db", "taps"}
_INTERFERENCE_KEYS = {"gamma_mode", "gamma"}
_RUN_KEYS = {
    "leakage_sweep_db",
    "rx_snr_db",
    "n_runs",
    "n_channels",
    "slots",
    "seed",
    "nmse_leakage_db",
    "psd_leakage_db",
}
_NORM_STUDY_KEYS = {
    "leakage_db",
    "constraint_weights",
    "constraint_target",
    "limiter_target",
    "norm_p",
}
_ALGO_COMMON = {"name", "label", "q_lin", "step_size", "reg", "guard", "freeze_w0", "tuned"}
_ALGO_KEYS = {
    "saf-real": _ALGO_COMMON
    | {
        "coupling",
        "n_ctrl",
        "order",
        "kind",
        "r_min",
        "dr",
        "nonlinearity",
        "td",
        "norm",
        "norm_target",
        "norm_p",
        "constraint_weight",
        "out_taps",
        "scaler",
        "scaler_forget",
        "scaler_step",
        "scaler_reg",
    },
    "saf-complex": _ALGO_COMMON
    | {
        "coupling",
        "n_ctrl",
        "order",
        "kind",
        "r_min",
        "dr",
        "nonlinearity",
        "td",
        "norm",
        "norm_target",
        "norm_p",
        "constraint_weight",
        "out_delay",
        "out_gain",
    },
    "quad-lms": _ALGO_COMMON | {"scaler_forget"},
    "krls": _ALGO_COMMON | {"kernel_std", "ald_threshold", "max_dict", "train_symbols"},
}
_TUNABLE_KEYS = {"step_size", "reg", "coupling"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{where}]")


def _waveform_from(section: dict, cls, where: str):
    _check_keys(section, _WAVEFORM_KEYS, where)
    kwargs = {}
    if "rb_lo" in section or "rb_hi" in section:
        base = cls()
        kwargs["rb_range"] = (
            int(section.get("rb_lo", base.rb_range[0])),
            int(section.get("rb_hi", base.rb_range[1])),
        )
    for key in ("fft_size", "mod_order", "cp_len", "taper_len"):
        if key in section:
            kwargs[key] = int(section[key])
    if "rate" in section:
        kwargs["rate"] = float(section["rate"])
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _complex_pair(value, where: str) -> complex:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{where}: complex values are [re, im] pairs")
    return complex(float(value[0]), float(value[1]))


def _gamma_from(rows: list, where: str) -> GammaTable:
    grid, entries = [], []
    for row in rows:
        _check_keys(row, {"leakage_db", "c2", "c4", "c6"}, where)
        grid.append(float(row["leakage_db"]))
        entries.append(
            ImdCoefficients(
                _complex_pair(row["c2"], where),
                _complex_pair(row.get("c4", (0.0, 0.0)), where),
                _complex_pair(row.get("c6", (0.0, 0.0)), where),
            )
        )
    try:
        return GammaTable(np.array(grid), entries)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _algo_from(section: dict, index: int) -> AlgoSpec:
    name = section.get("name")
    if name not in _ALGO_KEYS:
        raise ConfigError(
            f"algorithms[{index}]: name must be one of {sorted(_ALGO_KEYS)}"
        )
    _check_keys(section, _ALGO_KEYS[name], f"algorithms[{index}] ({name})")
    tuned_raw = section.get("tuned", {})
    tuned = {}
    for key, overrides in tuned_raw.items():
        try:
            power = float(key)
        except ValueError as exc:
            raise ConfigError(f"tuned keys must be leakage powers, got {key!r}") from exc
        _check_keys(overrides, _TUNABLE_KEYS, f"algorithms[{index}].tuned.{key}")
        tuned[power] = dict(overrides)
    params = {k: v for k, v in section.items() if k not in ("name", "label", "tuned")}
    return AlgoSpec(name=name, label=section.get("label", name), params=params, tuned=tuned)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error in {path}: {exc}") from exc

    _check_keys(
        raw,
        {"waveform", "pa", "leakage", "interference", "run", "algorithms", "norm_study"},
        "top level",
    )
    kwargs: dict = {}

    wave = raw.get("waveform", {})
    _check_keys(wave, {"ul", "dl"}, "waveform")
    if "ul" in wave:
        kwargs["ul"] = _waveform_from(wave["ul"], UlWaveformConfig, "waveform.ul")
    if "dl" in wave:
        kwargs["dl"] = _waveform_from(wave["dl"], DlWaveformConfig, "waveform.dl")

    pa = raw.get("pa", {})
    _check_keys(pa, _PA_KEYS, "pa")
    if "model" in pa:
        kwargs["pa_model"] = pa["model"]
    if "crest_db" in pa:
        kwargs["pa_crest_db"] = float(pa["crest_db"])
    if "smoothness" in pa:
        kwargs["pa_smoothness"] = float(pa["smoothness"])

    leak = raw.get("leakage", {})
    _check_keys(leak, _LEAKAGE_KEYS, "leakage")
    if "isolation_db" in leak:
        kwargs["isolation_db"] = float(leak["isolation_db"])
    if "taps" in leak:
        kwargs["leakage_taps"] = np.array(
            [_complex_pair(t, "leakage.taps") for t in leak["taps"]]
        )

    intf = raw.get("interference", {})
    _check_keys(intf, _INTERFERENCE_KEYS, "interference")
    if "gamma_mode" in intf:
        kwargs["gamma_mode"] = intf["gamma_mode"]
    if "gamma" in intf:
        kwargs["gamma"] = _gamma_from(intf["gamma"], "interference.gamma")

    run = raw.get("run", {})
    _check_keys(run, _RUN_KEYS, "run")
    if "leakage_sweep_db" in run:
        kwargs["leakage_sweep_db"] = tuple(float(v) for v in run["leakage_sweep_db"])
    for src, dst, conv in (
        ("rx_snr_db", "rx_snr_db", float),
        ("n_runs", "n_runs", int),
        ("n_channels", "n_channels", int),
        ("slots", "slots", int),
        ("seed", "base_seed", int),
        ("nmse_leakage_db", "nmse_leakage_db", float),
        ("psd_leakage_db", "psd_leakage_db", float),
    ):
        if src in run:
            kwargs[dst] = conv(run[src])

    if "norm_study" in raw:
        ns = raw["norm_study"]
        _check_keys(ns, _NORM_STUDY_KEYS, "norm_study")
        kwargs["norm_study"] = NormStudy(
            leakage_db=float(ns.get("leakage_db", -18.0)),
            constraint_weights=tuple(ns.get("constraint_weights", (0.1, 0.01))),
            constraint_target=float(ns.get("constraint_target", 1.0)),
            limiter_target=float(ns.get("limiter_target", 3.0)),
            norm_p=int(ns.get("norm_p", 1)),
        )

    algos = raw.get("algorithms", [])
    if not isinstance(algos, list):
        raise ConfigError("[[algorithms]] must be an array of tables")
    kwargs["algorithms"] = [_algo_from(a, i) for i, a in enumerate(algos)]

    try:
        return Scenario(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
