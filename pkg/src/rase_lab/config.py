"""Run configuration: an INI file with [physics], [timing], [dsp] and [run]
sections, plus flat ``section.key=value`` overrides.

Reference pulses use ``timing.ref1_delay_us``, ``timing.ref1_duration_us``,
``timing.ref1_freq_hz``, ``timing.ref1_amplitude`` (same for ref2).  DSP keys
are ``dsp.h_us``, ``dsp.w_hz``, ``dsp.cutoff_us``, ``dsp.filter_bw_hz`` and
``dsp.width_convention``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .core import PhysicsParams, ProtocolTiming, RefPulse, multimode_timing
from .dsp import DspConfig, WindowSpec

DEFAULT_SEED = 2016
DEFAULT_V_PRELOSS = 2.812


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSettings:
    n_shots: int = 8000
    seed: int = DEFAULT_SEED
    v_preloss: float = DEFAULT_V_PRELOSS
    # vacuum shots per calibration; 0 means four times n_shots
    n_vacuum: int = 0
    b_points: int = 1001
    quantize_delay: bool = False
    min_ref_snr: float = 5.0

    def __post_init__(self):
        if self.n_shots < 1:
            raise ConfigError("n_shots must be at least 1")
        if self.n_vacuum < 0 or self.b_points < 2:
            raise ConfigError("n_vacuum must be >= 0 and b_points >= 2")

    @property
    def vacuum_shots(self) -> int:
        return self.n_vacuum or 4 * self.n_shots


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    timing: ProtocolTiming = field(default_factory=ProtocolTiming)
    dsp: DspConfig = field(default_factory=DspConfig)
    run: RunSettings = field(default_factory=RunSettings)


_REF_KEYS = ("delay_us", "duration_us", "freq_hz", "amplitude")
_DSP_WINDOW_KEYS = ("h_us", "w_hz", "cutoff_us")


def _convert(raw: str, current):
    if isinstance(current, bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    if current is None:
        return None if raw.strip().lower() in ("", "none") else float(raw)
    try:
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r}") from None
    return raw.strip()


def _field_names(cls):
    return {f.name for f in fields(cls)}


def apply_overrides(cfg: RunConfig, items: dict[str, str]) -> RunConfig:
    """Apply ``{"section.key": "value"}`` overrides."""
    phys, tim, dsp, run = {}, {}, {}, {}
    for key, raw in items.items():
        section, _, name = key.partition(".")
        try:
            if section == "physics" and name in _field_names(PhysicsParams):
                phys[name] = _convert(raw, getattr(cfg.physics, name))
            elif section == "timing" and name[:4] in ("ref1", "ref2") and name[5:] in _REF_KEYS:
                ref = name[:4]
                cur = tim.get(ref, getattr(cfg.timing, ref))
                tim[ref] = replace(cur, **{name[5:]: float(raw)})
            elif section == "timing" and name in _field_names(ProtocolTiming) - {"ref1", "ref2"}:
                tim[name] = _convert(raw, getattr(cfg.timing, name))
            elif section == "dsp" and name in _DSP_WINDOW_KEYS:
                dsp.setdefault("window", {})[name] = float(raw)
            elif section == "dsp" and name in ("filter_bw_hz", "width_convention"):
                dsp[name] = _convert(raw, getattr(cfg.dsp, name))
            elif section == "run" and name in _field_names(RunSettings):
                run[name] = _convert(raw, getattr(cfg.run, name))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: {e}") from None
    try:
        window = dsp.pop("window", None)
        new_dsp = replace(cfg.dsp, **dsp)
        if window:
            new_dsp = replace(new_dsp, window=replace(new_dsp.window, **window))
        return RunConfig(replace(cfg.physics, **phys), replace(cfg.timing, **tim),
                         new_dsp, replace(cfg.run, **run))
    except ValueError as e:
        raise ConfigError(str(e)) from None


def parse_assignments(pairs) -> dict[str, str]:
    out = {}
    for p in pairs or ():
        key, sep, val = p.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override must look like section.key=value, got {p!r}")
        out[key.strip()] = val.strip()
    return out


def load_config(path=None, overrides=None, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    items = {}
    if path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys such as inv_L are case-sensitive
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as e:
            raise ConfigError(f"malformed config: {e}") from None
        for section in cp.sections():
            for k, v in cp.items(section):
                items[f"{section}.{k}"] = v
    items.update(overrides or {})
    return apply_overrides(cfg, items)


def multimode_config(cfg: RunConfig | None = None) -> RunConfig:
    cfg = cfg or RunConfig()
    t = cfg.timing
    mm = multimode_timing(ref1=t.ref1, ref2=t.ref2, tail_us=t.tail_us, mode_offset_us=t.mode_offset_us)
    return replace(cfg, timing=mm)


def dump_config(cfg: RunConfig, path) -> None:
    """Write ``cfg`` as an INI file that :func:`load_config` reads back."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["physics"] = {k: repr(v) if isinstance(v, float) else str(v)
                     for k, v in dataclasses.asdict(cfg.physics).items()}
    tim = {}
    for f in fields(ProtocolTiming):
        v = getattr(cfg.timing, f.name)
        if isinstance(v, RefPulse):
            for rk in _REF_KEYS:
                tim[f"{f.name}_{rk}"] = repr(getattr(v, rk))
        else:
            tim[f.name] = "none" if v is None else str(v)
    cp["timing"] = tim
    w: WindowSpec = cfg.dsp.window
    cp["dsp"] = dict(h_us=str(w.h_us), w_hz=str(w.w_hz), cutoff_us=str(w.cutoff_us),
                     filter_bw_hz=str(cfg.dsp.filter_bw_hz), width_convention=cfg.dsp.width_convention)
    cp["run"] = {k: str(v) for k, v in dataclasses.asdict(cfg.run).items()}
    with open(Path(path), "w") as fh:
        cp.write(fh)
