"""
Mode-level linear optics for time-bin circuits.

A single-photon pulse is described by a sparse table of complex amplitudes
indexed by time slot, spatial port and an environment tag, each entry
holding a two-component Jones vector. Elements (coupler, phase, delay,
loss, polarisation transform) are pure functions returning a new state.

The tag is a frozenset of labels. It is empty for light in the reference
temporal mode; devices with imperfect mode overlap move part of the
amplitude into a tagged, mutually orthogonal mode, which removes coherence
without removing probability.
"""

from dataclasses import dataclass, field
from typing import Dict, Hashable, Mapping, NamedTuple

import numpy as np

from .exceptions import InvalidArgumentError

SLOT_PITCH = 8e-9  # s, one MZI delay

TE = np.array([1.0, 0.0], dtype=complex)
TM = np.array([0.0, 1.0], dtype=complex)


class ModeIndex(NamedTuple):
    slot: int
    port: Hashable
    tag: frozenset = frozenset()


def jones_vector(h, v):
    return np.array([h, v], dtype=complex)


def is_unitary(m, atol=1e-12):
    m = np.asarray(m, dtype=complex)
    return m.shape == (2, 2) and np.allclose(m.conj().T @ m, np.eye(2), rtol=0, atol=atol)


@dataclass(frozen=True)
class ModeState:
    """Sparse single-photon wavefunction.

    Attributes
    ----------
    amplitudes : dict
        ``ModeIndex -> ndarray(2,)`` complex Jones vectors. Absent entries
        are zero amplitude.
    slot_pitch : float
        Duration of one time slot in seconds.
    """

    amplitudes: Mapping[ModeIndex, np.ndarray] = field(default_factory=dict)
    slot_pitch: float = SLOT_PITCH

    def ports(self):
        return {k.port for k in self.amplitudes}

    def slots(self):
        return {k.slot for k in self.amplitudes}

    def amplitude(self, slot, port, tag=frozenset()):
        """Jones vector at a mode (zeros when absent)."""
        a = self.amplitudes.get(ModeIndex(slot, port, frozenset(tag)))
        return np.zeros(2, dtype=complex) if a is None else a.copy()

    def probabilities(self):
        """Detection probability per ``(slot, port)``, summed over tags and polarisation."""
        out: Dict[tuple, float] = {}
        for k, a in self.amplitudes.items():
            out[(k.slot, k.port)] = out.get((k.slot, k.port), 0.0) + float(np.vdot(a, a).real)
        return out

    def on_ports(self, ports):
        """Restrict to the given ports, discarding everything else."""
        ports = set(ports)
        return self._with({k: a for k, a in self.amplitudes.items() if k.port in ports})

    def relabel(self, mapping):
        """Rename ports; ports missing from ``mapping`` keep their label."""
        new = {}
        for k, a in self.amplitudes.items():
            key = k._replace(port=mapping.get(k.port, k.port))
            new[key] = new.get(key, 0) + a
        return self._with(new)

    def _with(self, amplitudes):
        return ModeState(_prune(amplitudes), self.slot_pitch)


def _prune(amplitudes):
    return {k: np.asarray(a, dtype=complex) for k, a in amplitudes.items() if np.any(a != 0)}


def new_basis_state(slot, port, jones, slot_pitch=SLOT_PITCH):
    """State with one populated mode."""
    jones = np.asarray(jones, dtype=complex)
    if jones.shape != (2,) or not np.all(np.isfinite(jones)):
        raise InvalidArgumentError("jones must be a finite 2-vector")
    if np.vdot(jones, jones).real == 0:
        raise InvalidArgumentError("jones vector has zero norm")
    if slot < 0:
        raise InvalidArgumentError("slot must be >= 0")
    return ModeState({ModeIndex(slot, port): jones.copy()}, slot_pitch)


def total_probability(state):
    return float(sum(np.vdot(a, a).real for a in state.amplitudes.values()))


def _map_port(state, port, fn):
    new = {}
    for k, a in state.amplitudes.items():
        if k.port == port:
            k, a = fn(k, a)
        new[k] = a
    return state._with(new)


def apply_coupler(state, port_a, port_b, r):
    """Symmetric beamsplitter between two ports, applied slot by slot.

    ``(a, b) -> (sqrt(r) a + i sqrt(1-r) b, i sqrt(1-r) a + sqrt(r) b)``,
    identically on both polarisation components and within each tag.
    """
    if port_a == port_b:
        raise InvalidArgumentError("coupler needs two distinct ports")
    if not 0.0 <= r <= 1.0:
        raise InvalidArgumentError(f"power split ratio {r} outside [0, 1]")
    t, x = np.sqrt(r), 1j * np.sqrt(1.0 - r)
    new = {k: a for k, a in state.amplitudes.items() if k.port not in (port_a, port_b)}
    pairs = {(k.slot, k.tag) for k in state.amplitudes if k.port in (port_a, port_b)}
    for slot, tag in pairs:
        a = state.amplitude(slot, port_a, tag)
        b = state.amplitude(slot, port_b, tag)
        new[ModeIndex(slot, port_a, tag)] = t * a + x * b
        new[ModeIndex(slot, port_b, tag)] = x * a + t * b
    return state._with(new)


def apply_phase(state, port, phi):
    f = np.exp(1j * phi)
    return _map_port(state, port, lambda k, a: (k, f * a))


def apply_delay(state, port, n_slots):
    if int(n_slots) != n_slots or n_slots < 0:
        raise InvalidArgumentError("delay must be a non-negative integer number of slots")
    n_slots = int(n_slots)
    return _map_port(state, port, lambda k, a: (k._replace(slot=k.slot + n_slots), a))


def apply_loss(state, port, t):
    """Scale intensity on ``port`` by transmission ``t``."""
    if not 0.0 <= t <= 1.0:
        raise InvalidArgumentError(f"transmission {t} outside [0, 1]")
    s = np.sqrt(t)
    return _map_port(state, port, lambda k, a: (k, s * a))


def apply_jones(state, port, m):
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise InvalidArgumentError("Jones matrix must be 2x2")
    return _map_port(state, port, lambda k, a: (k, m @ a))


def apply_mode_mismatch(state, port, overlap, label):
    """Split amplitude on ``port`` into the reference mode and an orthogonal one.

    A fraction ``overlap`` of the intensity stays coherent with untagged
    light; the rest moves to a mode tagged with ``label``. Two paths that
    each pass one mismatched element with overlap ``g`` interfere with
    coherence ``g``.
    """
    if not 0.0 <= overlap <= 1.0:
        raise InvalidArgumentError(f"overlap {overlap} outside [0, 1]")
    if overlap == 1.0:
        return state
    keep, leak = np.sqrt(overlap), np.sqrt(1.0 - overlap)
    new = {}
    for k, a in state.amplitudes.items():
        if k.port != port:
            new[k] = new.get(k, 0) + a
            continue
        if label in k.tag:
            raise InvalidArgumentError(f"mode already carries tag {label!r}")
        new[k] = new.get(k, 0) + keep * a
        k2 = k._replace(tag=k.tag | {label})
        new[k2] = new.get(k2, 0) + leak * a
    return state._with(new)


def haar_random_unitary(rng):
    """Haar-distributed 2x2 unitary.

    A unit quaternion from four standard normals gives a uniform SU(2)
    element; a uniform global phase extends it to U(2).
    """
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    a, b = q[0] + 1j * q[1], q[2] + 1j * q[3]
    su2 = np.array([[a, -b.conjugate()], [b, a.conjugate()]])
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi)) * su2


def haar_random_unitaries(rng, n):
    """Vectorised :func:`haar_random_unitary`, shape ``(n, 2, 2)``."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    a, b = q[:, 0] + 1j * q[:, 1], q[:, 2] + 1j * q[:, 3]
    u = np.empty((n, 2, 2), dtype=complex)
    u[:, 0, 0], u[:, 0, 1] = a, -b.conj()
    u[:, 1, 0], u[:, 1, 1] = b, a.conj()
    return u * np.exp(1j * rng.uniform(0.0, 2 * np.pi, n))[:, None, None]


def db_to_transmission(db):
    return 10.0 ** (-db / 10.0)
