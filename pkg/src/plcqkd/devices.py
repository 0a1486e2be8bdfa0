"""
Parameterised models of the link components: light source, Mach-Zehnder
switch, unbalanced Mach-Zehnder interferometer, fibre, thermal phase
tuning and gated photon counter.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import optics
from .exceptions import InvalidArgumentError, UnsupportedInputError

C_VACUUM = 299_792_458.0


def _require(cond, msg):
    if not cond:
        raise InvalidArgumentError(msg)


def _unit_matrix():
    return np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ThermalSpec:
    """Thermo-optic tuning of an interferometer's path difference.

    Attributes
    ----------
    t_ref : float
        Temperature (K) at which the thermal phase is zero.
    dn_dt : float
        Thermo-optic coefficient (1/K).
    delta_l : float
        Path-length difference (m).
    lam : float
        Wavelength (m).
    """

    t_ref: float = 298.15
    dn_dt: float = 1.0e-5
    delta_l: float = 1.6
    lam: float = 1.55e-6

    def __post_init__(self):
        _require(self.delta_l > 0, "delta_l must be > 0")
        _require(self.lam > 0, "lambda must be > 0")
        _require(self.dn_dt > 0, "dn_dt must be > 0")

    @property
    def fringe_period(self):
        """Temperature change (K) that advances the phase by 2 pi."""
        return self.lam / (self.delta_l * self.dn_dt)


def temperature_to_phase(thermal, t):
    """Interferometric phase offset (rad, in [0, 2 pi)) from temperature detuning."""
    phi = 2 * np.pi / thermal.lam * thermal.dn_dt * thermal.delta_l * (t - thermal.t_ref)
    return float(np.mod(phi, 2 * np.pi))


def phase_to_temperature(thermal, phi):
    """Smallest temperature >= t_ref that yields ``phi``."""
    return thermal.t_ref + np.mod(phi, 2 * np.pi) / (2 * np.pi) * thermal.fringe_period


@dataclass(frozen=True)
class MziSpec:
    """Unbalanced Mach-Zehnder interferometer.

    ``phase_bias`` is a static long-arm phase added to the thermal phase;
    it stands for the fabrication offset that temperature tuning
    compensates. ``overlap`` is the coherence factor between light that
    took this interferometer's long arm and the reference temporal mode.
    """

    delay_slots: int = 1
    r_in: float = 0.5
    r_out: float = 0.5
    t_short: float = 1.0
    t_long: float = 1.0
    u_short: np.ndarray = field(default_factory=_unit_matrix)
    u_long: np.ndarray = field(default_factory=_unit_matrix)
    thermal: ThermalSpec = field(default_factory=ThermalSpec)
    temperature: float = 298.15
    overlap: float = 1.0
    phase_bias: float = 0.0

    def __post_init__(self):
        for name in ("r_in", "r_out", "t_short", "t_long", "overlap"):
            v = getattr(self, name)
            _require(0.0 <= v <= 1.0, f"{name}={v} outside [0, 1]")
        _require(int(self.delay_slots) == self.delay_slots and self.delay_slots >= 1,
                 "delay_slots must be an integer >= 1")
        for name in ("u_short", "u_long"):
            m = np.asarray(getattr(self, name), dtype=complex)
            _require(m.shape == (2, 2), f"{name} must be 2x2")
            object.__setattr__(self, name, m)

    @property
    def long_arm_phase(self):
        return temperature_to_phase(self.thermal, self.temperature) + self.phase_bias


class SwitchMode(Enum):
    BAR = "bar"
    CROSS = "cross"
    SPLIT = "split"


@dataclass(frozen=True)
class SwitchSetting:
    mode: SwitchMode = SwitchMode.SPLIT
    pm_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", SwitchMode(self.mode))
        _require(0.0 <= self.pm_phase < 2 * np.pi, "pm_phase must lie in [0, 2 pi)")


BAR = SwitchSetting(SwitchMode.BAR)
CROSS = SwitchSetting(SwitchMode.CROSS)


def split(pm_phase=0.0):
    return SwitchSetting(SwitchMode.SPLIT, float(np.mod(pm_phase, 2 * np.pi)))


@dataclass(frozen=True)
class SourceSpec:
    mu: float = 0.1
    rep_rate: float = 500e3
    polarisation: np.ndarray = field(default_factory=lambda: optics.TE.copy())

    def __post_init__(self):
        _require(self.mu >= 0, "mu must be >= 0")
        _require(self.rep_rate > 0, "rep_rate must be > 0")
        pol = np.asarray(self.polarisation, dtype=complex)
        _require(pol.shape == (2,) and abs(np.vdot(pol, pol).real - 1) < 1e-12,
                 "polarisation must be a unit Jones vector")
        object.__setattr__(self, "polarisation", pol)


@dataclass(frozen=True)
class FibreSpec:
    length_km: float = 0.0
    atten_db_per_km: float = 0.2
    scramble: bool = False

    def __post_init__(self):
        _require(self.length_km >= 0, "length_km must be >= 0")
        _require(self.atten_db_per_km >= 0, "atten_db_per_km must be >= 0")

    @property
    def transmission(self):
        return optics.db_to_transmission(self.length_km * self.atten_db_per_km)


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.10
    dark_prob_per_gate: float = 1e-5
    gate_width: float = 2.5e-9
    gated_slots: tuple = (0, 1, 2)

    def __post_init__(self):
        _require(0.0 <= self.efficiency <= 1.0, "efficiency outside [0, 1]")
        _require(0.0 <= self.dark_prob_per_gate < 1.0, "dark_prob_per_gate outside [0, 1)")
        _require(self.gate_width > 0, "gate_width must be > 0")
        object.__setattr__(self, "gated_slots", tuple(int(s) for s in self.gated_slots))


def mzsw_prepare(setting, state, out_ports):
    """Route a single input mode into Alice's short and/or long arm.

    BAR sends everything to the short arm, CROSS to the long arm, SPLIT
    divides equally with the long arm advanced by ``pm_phase``.
    """
    short, long_ = out_ports
    if len({(k.slot, k.port, k.tag) for k in state.amplitudes}) > 1:
        raise UnsupportedInputError("switch expects a single populated input mode")
    new = {}
    for k, a in state.amplitudes.items():
        if setting.mode is SwitchMode.BAR:
            new[k._replace(port=short)] = a
        elif setting.mode is SwitchMode.CROSS:
            new[k._replace(port=long_)] = a
        else:
            new[k._replace(port=short)] = a / np.sqrt(2)
            new[k._replace(port=long_)] = np.exp(1j * setting.pm_phase) * a / np.sqrt(2)
    return state._with(new)


def mzi_arms(spec, state, short, long_, label):
    """Apply both arms of an interferometer (no couplers)."""
    state = optics.apply_delay(state, long_, spec.delay_slots)
    state = optics.apply_phase(state, long_, spec.long_arm_phase)
    state = optics.apply_loss(state, long_, spec.t_long)
    state = optics.apply_jones(state, long_, spec.u_long)
    state = optics.apply_mode_mismatch(state, long_, spec.overlap, label)
    state = optics.apply_loss(state, short, spec.t_short)
    return optics.apply_jones(state, short, spec.u_short)


def mzi_transfer(spec, state, in_port, out_ports, label=None):
    """Propagate a pulse train through an unbalanced MZI.

    The input is injected on ``in_port`` (vacuum on the other input).
    The short arm runs along ``out_ports[0]`` and the long arm along
    ``out_ports[1]``, so with a 50/50 output coupler the short-arm light
    exits ``p0`` in bar and ``p1`` in cross. ``label`` tags the
    mode-mismatched fraction of the long arm and must differ between
    interferometers in one chain; it defaults to ``("mzi", p0, p1)``.
    """
    p0, p1 = out_ports
    if p0 == p1:
        raise InvalidArgumentError("output ports must differ")
    if state.ports() - {in_port}:
        raise UnsupportedInputError(
            f"input state populates ports {sorted(map(str, state.ports() - {in_port}))} besides {in_port!r}")
    label = ("mzi", p0, p1) if label is None else label
    state = state.relabel({in_port: p0})
    state = optics.apply_coupler(state, p0, p1, spec.r_in)
    state = mzi_arms(spec, state, p0, p1, label)
    return optics.apply_coupler(state, p0, p1, spec.r_out)


def fibre_transfer(spec, state, rng=None, rotation=None):
    """Attenuate all modes and, if scrambling, rotate polarisation.

    One rotation is drawn per call (or ``rotation`` is used when given) and
    applied to every slot alike.
    """
    s = np.sqrt(spec.transmission)
    u = rotation
    if u is None and spec.scramble:
        if rng is None:
            raise InvalidArgumentError("scrambling fibre needs an rng")
        u = optics.haar_random_unitary(rng)
    new = {}
    for k, a in state.amplitudes.items():
        new[k] = s * (a if u is None else u @ a)
    return state._with(new)


def click_probability(p_mode, source, det):
    """Gate click probability for a Poissonian pulse.

    Probability that the photon signal or a dark count fires the gate,
    given single-photon probability ``p_mode`` of reaching that mode.
    """
    p_mode = np.asarray(p_mode, dtype=float)
    if np.any(p_mode < -1e-15) or np.any(p_mode > 1 + 1e-12):
        raise InvalidArgumentError("p_mode outside [0, 1]")
    signal = -np.expm1(-source.mu * det.efficiency * np.clip(p_mode, 0.0, 1.0))
    d = det.dark_prob_per_gate
    out = signal + d - signal * d
    return float(out) if out.ndim == 0 else out


def coherence_length(pulse_duration=500e-12, group_index=1.45):
    """Coherence length (m) of a transform-limited pulse in the waveguide."""
    return C_VACUUM * pulse_duration / group_index


def overlap_from_mismatch(delta_l, l_c):
    """Mode-overlap factor for a residual path mismatch ``delta_l`` (m)."""
    return float(np.exp(-(delta_l / l_c) ** 2))
