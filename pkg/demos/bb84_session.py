"""
A short BB84 session over the time-bin link.

Alice picks a bit and a basis for every pulse and sets her switch
accordingly. Bob's slot and port tell him the bit, and the slot alone tells
him which basis he measured in. After sifting we compare the error rates with
what the link model predicts.
"""

from dataclasses import replace

import numpy as np

from plcqkd import linksim, qkd
from plcqkd.devices import SourceSpec


def run(label, config, n):
    key = qkd.sift(qkd.run_session(config, n, workers=4))
    q_time, q_phase = qkd.expected_qber(config)
    fmt = lambda q: "n/a" if q is None else f"{q:.4f}"
    print(f"{label}: sifted {len(key.bits_alice)} of {n} "
          f"(ratio {key.sift_ratio:.2e}, expected {qkd.expected_sift_ratio(config):.2e})")
    print(f"   qber_time  {fmt(key.qber_time)}  expected {q_time:.4f}")
    print(f"   qber_phase {fmt(key.qber_phase)}  expected {q_phase:.4f}")
    return key


def main():
    config = linksim.LinkConfig(seed=11)
    run("default link", config, 2_000_000)

    # brighter pulses give enough phase-basis bits to see the overlap error
    bright = replace(config, source=SourceSpec(mu=2.0))
    key = run("mu = 2", bright, 500_000)
    print(f"   first key bytes: {qkd.bits_to_hex(key.bits_bob[:64])}")

    p = linksim.chain_probabilities(config, qkd.prepare(0, qkd.Basis.PHASE))
    v = linksim.visibility([p[(1, 0)], p[(1, 1)]])
    print(f"noise-free visibility {v:.4f} -> phase QBER floor {qkd.qber_phase_prediction(v):.4f}")


if __name__ == "__main__":
    main()
