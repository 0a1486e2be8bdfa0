"""
BB84 over the simulated link.

Alice's bit and basis select a switch setting; Bob reads the time basis
from the first and last detection slots and the phase basis from the
output port in the central slot.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from . import devices, linksim, optics
from .exceptions import InvalidArgumentError


class Basis(IntEnum):
    TIME = 0
    PHASE = 1


DOUBLE_CLICK = "double_click"
_NONE, _DOUBLE = -1, -2

_SETTINGS = {
    (0, Basis.TIME): devices.BAR,
    (1, Basis.TIME): devices.CROSS,
    (0, Basis.PHASE): devices.split(0.0),
    (1, Basis.PHASE): devices.split(np.pi),
}


def prepare(bit, basis):
    """Switch setting encoding ``bit`` in ``basis``."""
    if bit not in (0, 1):
        raise InvalidArgumentError(f"bit must be 0 or 1, got {bit!r}")
    return _SETTINGS[(int(bit), Basis(basis))]


def interpret(outcome):
    """Map a ``(slot, port)`` detection to ``(basis, bit)``."""
    slot, port = outcome
    if slot == 0:
        return Basis.TIME, 0
    if slot == 2:
        return Basis.TIME, 1
    if slot == 1:
        return Basis.PHASE, int(port)
    raise InvalidArgumentError(f"slot {slot} outside 0..2")


@dataclass(frozen=True)
class PulseRecord:
    index: int
    alice_bit: int
    alice_basis: Basis
    bob_outcome: Union[None, Tuple[int, int], str]


@dataclass
class SessionRecords:
    """Columnar per-pulse ledger.

    ``slot`` is -1 for no click and -2 for a multi-click; ``port`` is -1
    unless exactly one gate fired.
    """

    alice_bit: np.ndarray
    alice_basis: np.ndarray
    slot: np.ndarray
    port: np.ndarray

    def __len__(self):
        return len(self.alice_bit)

    def __iter__(self) -> Iterator[PulseRecord]:
        return (self[i] for i in range(len(self)))

    def __getitem__(self, i):
        s = int(self.slot[i])
        outcome = None if s == _NONE else DOUBLE_CLICK if s == _DOUBLE else (s, int(self.port[i]))
        return PulseRecord(i, int(self.alice_bit[i]), Basis(int(self.alice_basis[i])), outcome)

    def _cols(self):
        return self.alice_bit, self.alice_basis, self.slot, self.port

    @classmethod
    def from_records(cls, records):
        records = sorted(records, key=lambda r: r.index)
        slot, port = [], []
        for r in records:
            if r.bob_outcome is None:
                slot.append(_NONE), port.append(-1)
            elif r.bob_outcome == DOUBLE_CLICK:
                slot.append(_DOUBLE), port.append(-1)
            else:
                slot.append(r.bob_outcome[0]), port.append(r.bob_outcome[1])
        return cls(np.array([r.alice_bit for r in records], dtype=np.int8),
                   np.array([int(r.alice_basis) for r in records], dtype=np.int8),
                   np.array(slot, dtype=np.int8), np.array(port, dtype=np.int8))

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate(cols) for cols in zip(*(p._cols() for p in parts))))


def _gate_mask(config):
    mask = np.zeros((3, 2), dtype=bool)
    for port, det in enumerate(config.detectors):
        for b in det.gated_slots:
            mask[b, port] = True
    return mask


def _click_probs(config, probs):
    """Per-gate click probabilities, shape ``(..., 3, 2)``; ungated entries are 0."""
    out = np.zeros_like(probs)
    for port, det in enumerate(config.detectors):
        out[..., port] = devices.click_probability(probs[..., port], config.source, det)
    return out * _gate_mask(config)


def _run_batch(config, n, rng):
    bits = rng.integers(0, 2, n, dtype=np.int8)
    bases = rng.integers(0, 2, n, dtype=np.int8)
    probs = np.empty((n, 3, 2))
    if config.fibre.scramble:
        rot = optics.haar_random_unitaries(rng, n)
    for (bit, basis), setting in _SETTINGS.items():
        sel = (bits == bit) & (bases == basis)
        if config.fibre.scramble:
            probs[sel] = linksim.chain_probabilities_batch(config, setting, rot[sel])
        else:
            probs[sel] = linksim.chain_probabilities(config, setting).as_array()
    fired = rng.random((n, 3, 2)) < _click_probs(config, probs)
    n_fired = fired.sum(axis=(1, 2))
    flat = fired.reshape(n, 6).argmax(axis=1)
    slot = np.where(n_fired == 0, _NONE, np.where(n_fired > 1, _DOUBLE, flat // 2)).astype(np.int8)
    port = np.where(n_fired == 1, flat % 2, -1).astype(np.int8)
    return SessionRecords(bits, bases, slot, port)


def run_session(config, n_pulses, rng=None, batch_size=100_000, workers=1):
    """Simulate ``n_pulses`` BB84 pulses.

    Every gate (3 slots x 2 ports) fires independently, which is exact for
    Poissonian pulses. Pulses are generated in fixed-size batches, each
    with its own stream derived from ``(seed, batch index)``; ``seed`` is
    ``config.seed`` or one draw from ``rng``. Output does not depend on
    ``workers``.
    """
    if n_pulses < 1:
        raise InvalidArgumentError("n_pulses must be >= 1")
    seed = config.seed if rng is None else int(rng.integers(2**63))
    sizes = [min(batch_size, n_pulses - s) for s in range(0, n_pulses, batch_size)]
    jobs = [(config, m, linksim.point_rng(seed, i)) for i, m in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda j: _run_batch(*j), jobs))
    else:
        parts = [_run_batch(*j) for j in jobs]
    return SessionRecords.concat(parts)


@dataclass
class SiftedKey:
    """Sifted key material. QBERs are ``None`` when no bit was kept in that basis."""

    bits_alice: np.ndarray
    bits_bob: np.ndarray
    qber_time: Optional[float]
    qber_phase: Optional[float]
    sift_ratio: float
    n_time: int = 0
    n_phase: int = 0


def kept_mask(records):
    """Single-click pulses whose detected basis matches Alice's."""
    single = records.slot >= 0
    bob_basis = np.where(records.slot == 1, Basis.PHASE, Basis.TIME)
    return single & (bob_basis == records.alice_basis)


def bob_bits(records):
    return np.where(records.slot == 1, records.port, records.slot // 2).astype(np.int8)


def sift(records):
    """Standard BB84 sifting: drop no-clicks, multi-clicks and basis mismatches."""
    if not isinstance(records, SessionRecords):
        records = SessionRecords.from_records(records)
    keep = kept_mask(records)
    a, b = records.alice_bit[keep], bob_bits(records)[keep]
    basis = records.alice_basis[keep]

    def qber(which):
        m = basis == which
        return float(np.mean(a[m] != b[m])) if m.any() else None

    total = len(records)
    return SiftedKey(a.copy(), b.copy(), qber(Basis.TIME), qber(Basis.PHASE),
                     float(keep.sum() / total) if total else 0.0,
                     int(np.sum(basis == Basis.TIME)), int(np.sum(basis == Basis.PHASE)))


def qber_phase_prediction(visibility):
    """Phase-basis error rate implied by fringe visibility."""
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgumentError("visibility outside [0, 1]")
    return (1.0 - visibility) / 2.0


def _single_click_probs(config, probs):
    """Probability that gate ``g`` is the only one to fire, shape ``(..., 3, 2)``."""
    c = _click_probs(config, probs).reshape(*probs.shape[:-2], 6)
    out = np.empty_like(c)
    for g in range(6):
        others = np.delete(c, g, axis=-1)
        out[..., g] = c[..., g] * np.prod(1 - others, axis=-1)
    return out.reshape(probs.shape)


def _state_single_clicks(config, n_rotations, rng):
    if config.fibre.scramble:
        rng = np.random.default_rng(config.seed) if rng is None else rng
        rot = optics.haar_random_unitaries(rng, n_rotations)
    out = {}
    for key, setting in _SETTINGS.items():
        if config.fibre.scramble:
            probs = linksim.chain_probabilities_batch(config, setting, rot)
        else:
            probs = linksim.chain_probabilities(config, setting).as_array()[None]
        out[key] = _single_click_probs(config, probs).mean(axis=0)
    return out


def expected_sift_ratio(config, n_rotations=4096, rng=None):
    """Analytic probability that a pulse survives sifting.

    Averages over the four states and, for a scrambling fibre, over a
    sample of Haar rotations.
    """
    total = 0.0
    for (bit, basis), s in _state_single_clicks(config, n_rotations, rng).items():
        total += (s[1].sum() if basis is Basis.PHASE else s[0].sum() + s[2].sum()) / 4
    return float(total)


def expected_qber(config, n_rotations=4096, rng=None):
    """Analytic ``(qber_time, qber_phase)`` including dark counts; ``None`` if nothing is kept."""
    singles = _state_single_clicks(config, n_rotations, rng)
    out = []
    for basis in (Basis.TIME, Basis.PHASE):
        kept = wrong = 0.0
        for bit in (0, 1):
            s = singles[(bit, basis)]
            if basis is Basis.PHASE:
                ok, bad = s[1, bit], s[1, 1 - bit]
            else:
                ok, bad = s[2 * bit].sum(), s[2 - 2 * bit].sum()
            kept += ok + bad
            wrong += bad
        out.append(float(wrong / kept) if kept > 0 else None)
    return tuple(out)


def write_records_csv(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "alice_bit", "alice_basis", "slot", "port", "kept"])
    keep = kept_mask(records)
    for i in range(len(records)):
        s = int(records.slot[i])
        slot = "" if s == _NONE else "double" if s == _DOUBLE else s
        port = "" if s < 0 else int(records.port[i])
        w.writerow([i, int(records.alice_bit[i]), Basis(int(records.alice_basis[i])).name,
                    slot, port, int(keep[i])])


def bits_to_hex(bits):
    """Hex string of a bit sequence, MSB first, zero-padded to whole bytes."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def report(key, n_pulses):
    def fmt(q):
        return "undefined" if q is None else repr(q)

    return "\n".join([
        f"pulses = {n_pulses}",
        f"sifted_bits = {len(key.bits_alice)}",
        f"sift_ratio = {key.sift_ratio!r}",
        f"time_bits = {key.n_time}",
        f"phase_bits = {key.n_phase}",
        f"qber_time = {fmt(key.qber_time)}",
        f"qber_phase = {fmt(key.qber_phase)}",
    ]) + "\n"
