import numpy as np
import pytest
from scipy.stats import unitary_group

from plcqkd import devices, linksim, optics
from plcqkd.devices import DetectorSpec, FibreSpec, MziSpec, SourceSpec, ThermalSpec


def random_unitary(rng):
    return unitary_group.rvs(2, random_state=rng)


def random_mzi(rng, label_bias=0.0):
    th = ThermalSpec(t_ref=298.15, dn_dt=1e-5, delta_l=1.6, lam=1.55e-6)
    return MziSpec(
        r_in=rng.uniform(0.3, 0.7), r_out=rng.uniform(0.3, 0.7),
        t_short=optics.db_to_transmission(rng.uniform(0, 10)),
        t_long=optics.db_to_transmission(rng.uniform(0, 10)),
        u_short=random_unitary(rng), u_long=random_unitary(rng),
        thermal=th, temperature=298.15 + rng.uniform(0, 0.2),
        overlap=rng.uniform(0.5, 1.0), phase_bias=rng.uniform(0, 2 * np.pi) + label_bias,
    )


def random_setting(rng):
    k = rng.integers(4)
    if k == 0:
        return devices.BAR
    if k == 1:
        return devices.CROSS
    return devices.split(rng.uniform(0, 2 * np.pi))


def random_config(rng):
    pol = random_unitary(rng) @ optics.TE
    return linksim.LinkConfig(
        source=SourceSpec(polarisation=pol),
        alice_mzi=random_mzi(rng), bob_mzi=random_mzi(rng),
        fibre=FibreSpec(length_km=rng.uniform(0, 50), atten_db_per_km=0.2),
        detectors=(DetectorSpec(), DetectorSpec()),
    )


def random_state(rng, n_modes=4, ports=(0, 1, 2), max_slot=4):
    amps = {}
    for _ in range(n_modes):
        k = optics.ModeIndex(int(rng.integers(max_slot)), int(rng.choice(ports)))
        amps[k] = rng.normal(size=2) + 1j * rng.normal(size=2)
    norm = np.sqrt(sum(np.vdot(a, a).real for a in amps.values()))
    return optics.ModeState({k: a / norm for k, a in amps.items()})


def assert_states_close(s1, s2, atol=1e-12):
    keys = set(s1.amplitudes) | set(s2.amplitudes)
    for k in keys:
        a = s1.amplitudes.get(k, np.zeros(2))
        b = s2.amplitudes.get(k, np.zeros(2))
        np.testing.assert_allclose(a, b, rtol=0, atol=atol, err_msg=str(k))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
