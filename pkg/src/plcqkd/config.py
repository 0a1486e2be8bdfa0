"""
Flat ``section.key = value`` run configuration.

Every physical quantity carries its unit in the key name. Files are parsed
with :mod:`configparser` (``#`` and ``;`` comments allowed); ``--set``
overrides use the same keys.
"""

import configparser
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from . import devices, linksim, optics
from .devices import DetectorSpec, FibreSpec, MziSpec, SourceSpec, SwitchMode, ThermalSpec
from .exceptions import ConfigError, InvalidArgumentError


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _slots(s):
    if isinstance(s, tuple):
        return s
    return tuple(int(x) for x in str(s).split(",") if x.strip())


def _optional_float(s):
    return None if s is None or str(s).strip().lower() in ("", "auto") else float(s)


def _mzi_keys(prefix, bias):
    return {
        f"{prefix}.delay_slots": (int, 1, lambda v: v >= 1, ">= 1"),
        f"{prefix}.r_in": (float, 0.5, lambda v: 0 <= v <= 1, "in [0, 1]"),
        f"{prefix}.r_out": (float, 0.5, lambda v: 0 <= v <= 1, "in [0, 1]"),
        f"{prefix}.t_short_db": (float, 0.0, lambda v: v >= 0, ">= 0"),
        f"{prefix}.t_long_db": (float, 8.0, lambda v: v >= 0, ">= 0"),
        f"{prefix}.overlap": (float, 0.995, lambda v: 0 <= v <= 1, "in [0, 1]"),
        f"{prefix}.temperature_k": (float, 298.15, lambda v: v > 0, "> 0"),
        f"{prefix}.t_ref_k": (float, 298.15, lambda v: v > 0, "> 0"),
        f"{prefix}.dn_dt_per_k": (float, 1.0e-5, lambda v: v > 0, "> 0"),
        f"{prefix}.delta_l_m": (float, 1.6, lambda v: v > 0, "> 0"),
        f"{prefix}.lambda_m": (float, 1.55e-6, lambda v: v > 0, "> 0"),
        f"{prefix}.phase_bias_rad": (float, bias, np.isfinite, "finite"),
        f"{prefix}.unbalance_delta_rad": (float, 0.0, np.isfinite, "finite"),
    }


# key -> (parser, default, check, domain description)
SCHEMA: Dict[str, tuple] = {
    "run.seed": (int, 0, lambda v: 0 <= v < 2**64, "in [0, 2^64)"),
    "run.out_dir": (str, "out", bool, "non-empty"),
    "source.mu": (float, 0.1, lambda v: v >= 0, ">= 0"),
    "source.rep_rate_hz": (float, 500e3, lambda v: v > 0, "> 0"),
    "source.polarisation": (str, "te", lambda v: v in ("te", "tm"), "te or tm"),
    "switch.mode": (str, "split", lambda v: v in ("bar", "cross", "split"), "bar, cross or split"),
    "switch.pm_phase_rad": (float, 0.0, lambda v: 0 <= v < 2 * np.pi, "in [0, 2 pi)"),
    **_mzi_keys("alice_mzi", linksim.COUPLER_QUADRATURE),
    **_mzi_keys("bob_mzi", 0.0),
    "fibre.length_km": (float, 0.0, lambda v: v >= 0, ">= 0"),
    "fibre.atten_db_per_km": (float, 0.2, lambda v: v >= 0, ">= 0"),
    "fibre.scramble": (_bool, True, lambda v: True, "boolean"),
    "detectors.efficiency": (float, 0.10, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "detectors.dark_prob_per_gate": (float, 1e-5, lambda v: 0 <= v < 1, "in [0, 1)"),
    "detectors.gate_width_s": (float, 2.5e-9, lambda v: v > 0, "> 0"),
    "detectors.gated_slots": (_slots, (0, 1, 2), lambda v: set(v) <= {0, 1, 2}, "subset of 0,1,2"),
    "link.slot_pitch_s": (float, optics.SLOT_PITCH, lambda v: v > 0, "> 0"),
    "link.scramble_samples": (int, 256, lambda v: v >= 1, ">= 1"),
    "scan.t1_start_k": (_optional_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
    "scan.t1_stop_k": (_optional_float, None, lambda v: v is None or v > 0, "> 0 or auto"),
    "scan.steps": (int, 49, lambda v: v >= 2, ">= 2"),
    "scan.duration_s": (float, 10.0, lambda v: v > 0, "> 0"),
    "scan.workers": (int, 1, lambda v: v >= 1, ">= 1"),
    "bb84.n_pulses": (int, 1_000_000, lambda v: v >= 1, ">= 1"),
    "bb84.batch_size": (int, 100_000, lambda v: v >= 1, ">= 1"),
    "sweep.delta_steps": (int, 7, lambda v: v >= 2, ">= 2"),
    "sweep.n_polarisations": (int, 10_000, lambda v: v >= 1, ">= 1"),
}


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if v is None:
        return "auto"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_text(text):
    """Raw ``{key: string}`` pairs from config file text."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("[root]\n" + text)
    except configparser.Error as e:
        raise ConfigError("<file>", str(e).replace("\n", " ")) from e
    return dict(cp["root"])


def parse_override(item):
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def resolve(raw):
    """Typed, range-checked values for every schema key."""
    values = {}
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
    for key, (conv, default, check, domain) in SCHEMA.items():
        if key in raw:
            try:
                v = conv(raw[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(key, f"cannot parse {raw[key]!r}: {e}") from e
        else:
            v = default
        if not check(v):
            raise ConfigError(key, f"value {format_value(v)} must be {domain}")
        values[key] = v
    return values


@dataclass
class RunConfig:
    link: linksim.LinkConfig
    values: Dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self):
        return self.values["run.seed"]

    @property
    def out_dir(self):
        return self.values["run.out_dir"]

    def t1_range(self):
        start, stop, steps = linksim.default_scan_range(self.link)
        v = self.values
        start = start if v["scan.t1_start_k"] is None else v["scan.t1_start_k"]
        if v["scan.t1_stop_k"] is None:
            stop = start + 2 * self.link.alice_mzi.thermal.fringe_period
        else:
            stop = v["scan.t1_stop_k"]
        return start, stop, v["scan.steps"]

    def echo(self):
        """``key = value`` lines for every setting, parseable by :func:`parse_text`."""
        return "".join(f"{k} = {format_value(v)}\n" for k, v in sorted(self.values.items()))


def _mzi(v, p):
    d = v[f"{p}.unbalance_delta_rad"]
    return MziSpec(
        delay_slots=v[f"{p}.delay_slots"],
        r_in=v[f"{p}.r_in"], r_out=v[f"{p}.r_out"],
        t_short=optics.db_to_transmission(v[f"{p}.t_short_db"]),
        t_long=optics.db_to_transmission(v[f"{p}.t_long_db"]),
        u_long=np.diag([np.exp(1j * d), np.exp(-1j * d)]),
        thermal=ThermalSpec(v[f"{p}.t_ref_k"], v[f"{p}.dn_dt_per_k"], v[f"{p}.delta_l_m"], v[f"{p}.lambda_m"]),
        temperature=v[f"{p}.temperature_k"],
        overlap=v[f"{p}.overlap"],
        phase_bias=v[f"{p}.phase_bias_rad"],
    )


def build_link(v):
    try:
        det = DetectorSpec(v["detectors.efficiency"], v["detectors.dark_prob_per_gate"],
                           v["detectors.gate_width_s"], v["detectors.gated_slots"])
    except InvalidArgumentError as e:
        raise ConfigError("detectors", str(e)) from e
    if det.gate_width > v["link.slot_pitch_s"]:
        raise ConfigError("detectors.gate_width_s", "gate wider than link.slot_pitch_s")
    if v["alice_mzi.delay_slots"] != v["bob_mzi.delay_slots"]:
        raise ConfigError("bob_mzi.delay_slots", "must equal alice_mzi.delay_slots")
    pol = optics.TE if v["source.polarisation"] == "te" else optics.TM
    n = int(round(v["source.rep_rate_hz"] * v["scan.duration_s"]))
    return linksim.LinkConfig(
        source=SourceSpec(v["source.mu"], v["source.rep_rate_hz"], pol.copy()),
        switch_default=devices.SwitchSetting(SwitchMode(v["switch.mode"]), v["switch.pm_phase_rad"]),
        alice_mzi=_mzi(v, "alice_mzi"),
        fibre=FibreSpec(v["fibre.length_km"], v["fibre.atten_db_per_km"], v["fibre.scramble"]),
        bob_mzi=_mzi(v, "bob_mzi"),
        detectors=(det, det),
        pulses_per_point=n,
        seed=v["run.seed"],
        slot_pitch=v["link.slot_pitch_s"],
        scramble_samples=v["link.scramble_samples"],
    )


def load_run_config(path=None, overrides=()):
    """Read a config file (optional) and apply ``key=value`` overrides.

    Raises
    ------
    ConfigError
        Unknown key, unparsable or out-of-range value; ``.path`` names the key.
    OSError
        The file cannot be read.
    """
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = parse_text(fh.read())
    for item in overrides:
        k, val = parse_override(item)
        raw[k] = val
    values = resolve(raw)
    return RunConfig(build_link(values), values)
