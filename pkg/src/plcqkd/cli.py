"""Command-line front end: ``plcqkd {fringe-scan,bb84,pol-sweep}``."""

import argparse
import csv
import os
import sys

import numpy as np

from . import linksim, qkd
from .config import load_run_config
from .exceptions import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _write(path, writer):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(fh)


def _prepare_out(rc):
    os.makedirs(rc.out_dir, exist_ok=True)
    return rc.out_dir


def cmd_fringe_scan(rc):
    rows = linksim.fringe_scan(rc.link, rc.t1_range(), workers=rc.values["scan.workers"])
    v0, v1 = linksim.scan_visibilities(rows)
    phases = [r.phase for r in rows]
    f0 = linksim.fit_visibility(phases, [r.counts_port0 for r in rows])
    f1 = linksim.fit_visibility(phases, [r.counts_port1 for r in rows])
    out = _prepare_out(rc)
    _write(os.path.join(out, "fringe.csv"), lambda fh: linksim.write_scan_csv(rows, fh))
    summary = (
        f"visibility_p0 = {v0!r}\nvisibility_p1 = {v1!r}\n"
        f"fit_visibility_p0 = {f0!r}\nfit_visibility_p1 = {f1!r}\n"
        f"points = {len(rows)}\n\n[config]\n{rc.echo()}"
    )
    _write(os.path.join(out, "summary.txt"), lambda fh: fh.write(summary))
    print(f"visibility port0={v0:.4f} port1={v1:.4f}")
    return EXIT_OK


def cmd_bb84(rc, n_pulses):
    records = qkd.run_session(rc.link, n_pulses, batch_size=rc.values["bb84.batch_size"],
                              workers=rc.values["scan.workers"])
    key = qkd.sift(records)
    p = linksim.chain_probabilities(rc.link, qkd.prepare(0, qkd.Basis.PHASE))
    v_expected = linksim.visibility([p[(1, 0)], p[(1, 1)]])
    out = _prepare_out(rc)
    _write(os.path.join(out, "records.csv"), lambda fh: qkd.write_records_csv(records, fh))
    _write(os.path.join(out, "key.hex"), lambda fh: fh.write(
        f"alice = {qkd.bits_to_hex(key.bits_alice)}\nbob = {qkd.bits_to_hex(key.bits_bob)}\n"))
    q_time, q_phase = qkd.expected_qber(rc.link)
    text = (qkd.report(key, n_pulses)
            + f"visibility_expected = {v_expected!r}\n"
            + f"qber_phase_predicted = {qkd.qber_phase_prediction(v_expected)!r}\n"
            + f"qber_time_expected = {q_time!r}\n"
            + f"qber_phase_expected = {q_phase!r}\n"
            + f"\n[config]\n{rc.echo()}")
    _write(os.path.join(out, "report.txt"), lambda fh: fh.write(text))
    print(qkd.report(key, n_pulses), end="")
    return EXIT_OK


def cmd_pol_sweep(rc, delta_steps):
    n = rc.values["sweep.n_polarisations"]
    rows = []
    for i, delta in enumerate(np.linspace(0.0, np.pi / 2, delta_steps)):
        u_long = np.diag([np.exp(1j * delta), np.exp(-1j * delta)])
        measured = linksim.polarisation_sweep(np.eye(2), u_long, n, linksim.point_rng(rc.seed, i))
        analytic = linksim.min_visibility_over_polarisation(np.eye(2), u_long)
        rows.append((float(delta), measured, analytic))
    out = _prepare_out(rc)

    def writer(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta_rad", "v_min_measured", "v_min_analytic"])
        for r in rows:
            w.writerow([repr(x) for x in r])

    _write(os.path.join(out, "pol_sweep.csv"), writer)
    for d, m, a in rows:
        print(f"delta={d:.4f} measured={m:.6f} analytic={a:.6f}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int, help="RNG seed (overrides run.seed)")
    common.add_argument("--out", help="output directory (overrides run.out_dir)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    p = argparse.ArgumentParser(prog="plcqkd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fringe-scan", parents=[common], help="temperature fringe scan")
    b = sub.add_parser("bb84", parents=[common], help="BB84 session")
    b.add_argument("--pulses", type=int, help="number of pulses (overrides bb84.n_pulses)")
    s = sub.add_parser("pol-sweep", parents=[common], help="Bob path-unbalance sweep")
    s.add_argument("--delta-steps", type=int, help="number of delta values in [0, pi/2]")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.out is not None:
        overrides.append(f"run.out_dir={args.out}")
    if getattr(args, "pulses", None) is not None:
        overrides.append(f"bb84.n_pulses={args.pulses}")
    if getattr(args, "delta_steps", None) is not None:
        overrides.append(f"sweep.delta_steps={args.delta_steps}")
    try:
        rc = load_run_config(args.config, overrides)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"cannot read config {args.config}: {e.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "fringe-scan":
            return cmd_fringe_scan(rc)
        if args.command == "bb84":
            return cmd_bb84(rc, rc.values["bb84.n_pulses"])
        return cmd_pol_sweep(rc, rc.values["sweep.delta_steps"])
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
