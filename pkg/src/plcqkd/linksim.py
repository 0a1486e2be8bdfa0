"""
The full link: source, switch and Alice's MZI, fibre, Bob's MZI and two
gated counters. Computes per-slot detection probabilities, samples gated
counts and runs temperature fringe scans.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import devices, optics
from .devices import DetectorSpec, FibreSpec, MziSpec, SourceSpec, SwitchSetting
from .exceptions import InvalidArgumentError, UndefinedVisibilityError

# Fixed quadrature between the two central-slot paths under the symmetric
# coupler convention: the long-then-short path picks up one fewer cross
# factor i than the short-then-long path.
COUPLER_QUADRATURE = np.pi / 2

ALICE, BOB = "alice", "bob"
_A_SHORT, _A_LONG, _FIBRE = "a_short", "a_long", "fibre"

SCAN_CSV_HEADER = ["t1_K", "phase_rad", "counts_p0", "counts_p1", "expected_p0", "expected_p1"]


def default_alice():
    return MziSpec(t_long=optics.db_to_transmission(8.0), overlap=0.995,
                   phase_bias=COUPLER_QUADRATURE)


def default_bob():
    return MziSpec(t_long=optics.db_to_transmission(8.0), overlap=0.995)


@dataclass(frozen=True)
class LinkConfig:
    """Parameters of the whole chain.

    The default instance carries the reference imperfection set: 8 dB
    long-arm excess loss in both interferometers, overlap 0.995, detector
    efficiency 0.10, dark probability 1e-5 per gate, mu = 0.1 and a
    per-pulse polarisation scrambler on a zero-length fibre. Alice's
    ``phase_bias`` cancels the coupler quadrature so that equal
    temperatures give zero relative phase.
    """

    source: SourceSpec = field(default_factory=SourceSpec)
    switch_default: SwitchSetting = field(default_factory=devices.split)
    alice_mzi: MziSpec = field(default_factory=default_alice)
    fibre: FibreSpec = field(default_factory=lambda: FibreSpec(scramble=True))
    bob_mzi: MziSpec = field(default_factory=default_bob)
    detectors: Tuple[DetectorSpec, DetectorSpec] = (DetectorSpec(), DetectorSpec())
    pulses_per_point: int = 5_000_000
    seed: int = 0
    slot_pitch: float = optics.SLOT_PITCH
    scramble_samples: int = 256

    def __post_init__(self):
        if self.alice_mzi.delay_slots != self.bob_mzi.delay_slots:
            raise InvalidArgumentError("alice_mzi and bob_mzi must share delay_slots")
        if len(self.detectors) != 2:
            raise InvalidArgumentError("exactly two detectors are required")
        for d in self.detectors:
            if d.gate_width > self.slot_pitch:
                raise InvalidArgumentError("gate_width exceeds the slot pitch")
        if self.pulses_per_point < 0 or self.scramble_samples < 1:
            raise InvalidArgumentError("pulses_per_point must be >= 0, scramble_samples >= 1")
        object.__setattr__(self, "detectors", tuple(self.detectors))

    def with_alice_temperature(self, t1):
        return replace(self, alice_mzi=replace(self.alice_mzi, temperature=t1))


def ideal_config(**kw):
    """Lossless, perfectly coherent, noise-free chain."""
    base = dict(
        alice_mzi=MziSpec(phase_bias=COUPLER_QUADRATURE),
        bob_mzi=MziSpec(),
        fibre=FibreSpec(scramble=False),
        detectors=(DetectorSpec(dark_prob_per_gate=0.0),) * 2,
    )
    base.update(kw)
    return LinkConfig(**base)


def relative_phase(config):
    """Calibrated relative phase between the two interferometers, in [0, 2 pi).

    Zero means a SPLIT(0) pulse interferes constructively on port 0.
    """
    d = config.alice_mzi.long_arm_phase - config.bob_mzi.long_arm_phase - COUPLER_QUADRATURE
    return float(np.mod(d, 2 * np.pi))


@dataclass
class SlotProbabilities:
    """Detection probability per ``(bin, port)``, bin in {0, 1, 2} counting MZI delays."""

    table: Dict[Tuple[int, int], float]

    def __getitem__(self, key):
        return self.table[key]

    def slot_total(self, b):
        return self.table[(b, 0)] + self.table[(b, 1)]

    def as_array(self):
        return np.array([[self.table[(b, p)] for p in (0, 1)] for b in range(3)])

    @classmethod
    def from_array(cls, arr):
        return cls({(b, p): float(arr[b, p]) for b in range(3) for p in (0, 1)})


def alice_output(config, setting):
    """State launched into the fibre for a given switch setting."""
    a = config.alice_mzi
    state = optics.new_basis_state(0, "source", config.source.polarisation, config.slot_pitch)
    state = devices.mzsw_prepare(setting, state, (_A_SHORT, _A_LONG))
    state = devices.mzi_arms(a, state, _A_SHORT, _A_LONG, ALICE)
    state = optics.apply_coupler(state, _A_SHORT, _A_LONG, a.r_out)
    return state.on_ports([_A_SHORT]).relabel({_A_SHORT: _FIBRE})


def _bin_table(state, delay):
    out = np.zeros((3, 2))
    for (slot, port), p in state.probabilities().items():
        b, rem = divmod(slot, delay)
        if rem or b > 2:
            raise AssertionError(f"unexpected output slot {slot}")
        out[b, port] += p
    return out


def chain_probabilities(config, setting=None, pol_rotation=None):
    """Single-photon detection probabilities after the full chain.

    ``pol_rotation`` is a fixed fibre polarisation rotation; ``None`` means
    no rotation. Probability exiting Alice's unused port or lost in the
    arms is simply absent from the table.
    """
    setting = config.switch_default if setting is None else setting
    state = alice_output(config, setting)
    fibre = replace(config.fibre, scramble=False)
    state = devices.fibre_transfer(fibre, state, rotation=pol_rotation)
    state = devices.mzi_transfer(config.bob_mzi, state, _FIBRE, (0, 1), label=BOB)
    return SlotProbabilities.from_array(_bin_table(state, config.bob_mzi.delay_slots))


def _bob_response(config):
    """Bob's transfer as Jones blocks: ``{(slot_in, slot_out, port, tag): 2x2}``."""
    d = config.bob_mzi.delay_slots
    blocks = {}
    for slot_in in (0, d):
        for col, e in enumerate((optics.TE, optics.TM)):
            st = optics.new_basis_state(slot_in, _FIBRE, e)
            out = devices.mzi_transfer(config.bob_mzi, st, _FIBRE, (0, 1), label=BOB)
            for k, a in out.amplitudes.items():
                key = (slot_in, k.slot, k.port, k.tag)
                blocks.setdefault(key, np.zeros((2, 2), dtype=complex))[:, col] = a
    return blocks


def chain_probabilities_batch(config, setting, rotations):
    """Vectorised :func:`chain_probabilities` over fibre rotations.

    Returns an array of shape ``(n, 3, 2)``.
    """
    rotations = np.asarray(rotations, dtype=complex).reshape(-1, 2, 2)
    d = config.bob_mzi.delay_slots
    launched = alice_output(config, setting)
    s = np.sqrt(config.fibre.transmission)
    amps = {}
    for (slot_in, slot_out, port, tag_b), m in _bob_response(config).items():
        for k, a in launched.amplitudes.items():
            if k.slot != slot_in:
                continue
            v = np.einsum("ij,njk,k->ni", m, rotations, s * a)
            key = (slot_out, port, k.tag | tag_b)
            amps[key] = amps.get(key, 0) + v
    out = np.zeros((len(rotations), 3, 2))
    for (slot_out, port, _), v in amps.items():
        out[:, slot_out // d, port] += np.sum(np.abs(v) ** 2, axis=1)
    return out


def scrambled_probabilities(config, setting, n_samples, rng):
    """Mean chain probabilities over ``n_samples`` Haar fibre rotations."""
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    rot = optics.haar_random_unitaries(rng, n_samples)
    return SlotProbabilities.from_array(chain_probabilities_batch(config, setting, rot).mean(axis=0))


def min_visibility_over_polarisation(u_short, u_long):
    """Worst-case central-slot visibility over input polarisations: ``|Tr(Us^H Ul)| / 2``."""
    if not (optics.is_unitary(u_short) and optics.is_unitary(u_long)):
        raise InvalidArgumentError("path Jones matrices must be unitary")
    u_short, u_long = np.asarray(u_short), np.asarray(u_long)
    return float(abs(np.trace(u_short.conj().T @ u_long)) / 2)


def phase_stepped_visibility(config, rotations, port=0):
    """Central-slot fringe visibility per fibre rotation, measured through the chain.

    Alice's relative phase is stepped by 0, pi/2, pi, 3 pi/2 using the
    switch modulator and the sinusoid contrast is recovered from the four
    probabilities.
    """
    p = np.stack([chain_probabilities_batch(config, devices.split(k * np.pi / 2), rotations)[:, 1, port]
                  for k in range(4)])
    amp = np.hypot(p[0] - p[2], p[1] - p[3]) / 2
    return amp / p.mean(axis=0)


def polarisation_sweep(u_short, u_long, n, rng):
    """Minimum measured visibility over ``n`` Haar-random input polarisations."""
    cfg = ideal_config(bob_mzi=MziSpec(u_short=u_short, u_long=u_long))
    rot = optics.haar_random_unitaries(rng, n)
    return float(phase_stepped_visibility(cfg, rot).min())


def _click_table(probs, config):
    out = {}
    for port, det in enumerate(config.detectors):
        for b in det.gated_slots:
            out[(b, port)] = devices.click_probability(probs[(b, port)], config.source, det)
    return out


def _binomial(clicks, n, rng):
    return {k: int(rng.binomial(n, clicks[k])) for k in sorted(clicks)}


def sample_counts(probs, config, duration_s, rng):
    """Gated click counts for ``duration_s`` seconds of pulses.

    Each gated ``(bin, port)`` draws ``Binomial(N, p_click)`` with
    ``N = rep_rate * duration_s``.
    """
    if duration_s <= 0:
        raise InvalidArgumentError("duration_s must be > 0")
    n = int(round(config.source.rep_rate * duration_s))
    return _binomial(_click_table(probs, config), n, rng)


def point_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


@dataclass(frozen=True)
class ScanRow:
    t1: float
    phase: float
    counts_port0: int
    counts_port1: int
    expected_p0: float
    expected_p1: float


def _scan_point(config, setting, t1, index, scramble):
    rng = point_rng(config.seed, index)
    cfg = config.with_alice_temperature(t1)
    if scramble:
        rot = optics.haar_random_unitaries(rng, config.scramble_samples)
        p = chain_probabilities_batch(cfg, setting, rot)
        probs = SlotProbabilities.from_array(p.mean(axis=0))
        # each pulse sees its own rotation: the per-pulse click is a mixture
        clicks = {}
        for port, det in enumerate(cfg.detectors):
            clicks[(1, port)] = float(np.mean(devices.click_probability(p[:, 1, port], cfg.source, det)))
    else:
        probs = chain_probabilities(cfg, setting)
        clicks = {(1, port): devices.click_probability(probs[(1, port)], cfg.source, det)
                  for port, det in enumerate(cfg.detectors)}
    counts = _binomial(clicks, config.pulses_per_point, rng)
    return ScanRow(float(t1), relative_phase(cfg), counts[(1, 0)], counts[(1, 1)],
                   probs[(1, 0)], probs[(1, 1)])


def default_scan_range(config, periods=2, points_per_period=24):
    th = config.alice_mzi.thermal
    start = config.alice_mzi.temperature
    return start, start + periods * th.fringe_period, periods * points_per_period + 1


def fringe_scan(config, t1_range=None, setting=None, scramble_per_pulse=None, workers=1):
    """Central-slot counts on both ports of Bob's MZI versus Alice's temperature.

    Parameters
    ----------
    config : LinkConfig
    t1_range : (start, stop, steps), optional
        Temperatures in K, endpoints included. Defaults to two fringe
        periods at 24 points per period from Alice's current temperature.
    setting : SwitchSetting, optional
        Defaults to SPLIT(0).
    scramble_per_pulse : bool, optional
        Give every pulse an independent Haar fibre rotation. Defaults to
        ``config.fibre.scramble``. Rotations are sampled
        (``config.scramble_samples`` per point) and click probabilities
        averaged before the binomial draw.
    workers : int
        Thread count. Each point seeds its own stream from
        ``(config.seed, index)`` so the result does not depend on it.

    Returns
    -------
    list of ScanRow
    """
    start, stop, steps = default_scan_range(config) if t1_range is None else t1_range
    if steps < 2:
        raise InvalidArgumentError("a scan needs at least 2 steps")
    setting = devices.split(0.0) if setting is None else setting
    scramble = config.fibre.scramble if scramble_per_pulse is None else scramble_per_pulse
    temps = np.linspace(start, stop, int(steps))
    args = [(config, setting, t, i, scramble) for i, t in enumerate(temps)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(lambda a: _scan_point(*a), args))
    return [_scan_point(*a) for a in args]


def visibility(series):
    """Fringe visibility ``(max - min) / (max + min)`` of a count series."""
    x = np.asarray(series, dtype=float)
    if x.size == 0 or not np.any(x):
        raise UndefinedVisibilityError("visibility undefined for an empty or all-zero series")
    hi, lo = x.max(), x.min()
    return float((hi - lo) / (hi + lo))


def fit_visibility(phases, counts):
    """Visibility from a least-squares sinusoid ``a + b cos(phi) + c sin(phi)``."""
    phases = np.asarray(phases, dtype=float)
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    (a, b, c), *_ = np.linalg.lstsq(design, np.asarray(counts, dtype=float), rcond=None)
    if a <= 0:
        raise UndefinedVisibilityError("fitted mean is not positive")
    return float(np.hypot(b, c) / a)


def scan_visibilities(rows):
    return (visibility([r.counts_port0 for r in rows]),
            visibility([r.counts_port1 for r in rows]))


def write_scan_csv(rows, fh):
    """Write scan rows; floats use ``repr`` so output is exact and stable."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SCAN_CSV_HEADER)
    for r in rows:
        w.writerow([repr(r.t1), repr(r.phase), r.counts_port0, r.counts_port1,
                    repr(r.expected_p0), repr(r.expected_p1)])
