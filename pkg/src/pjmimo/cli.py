"""Command-line front end.

    pjmimo ber-sweep  --nr 128 --nt 16,32 --snr 0:2:14 --trials 2000 -o ber.csv
    pjmimo iter-sweep --nr 128 --nt 16 --snr 12 --iters 2:2:30 -o iters.csv
    pjmimo time-units --nr 128 --nt 16 --iters 12
    pjmimo detect     --instance inst.txt

SNR is defined as Nt / sigma_v^2 (total received signal power over complex
noise power with unit-energy symbols and CN(0, 1) channel gains). Ranges are
written ``start:step:stop`` and include ``stop``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .baseline import mmse_detect
from .model import ComplexSystemModel, Constellation, complex_to_real, unstack_real
from .pjadmm import PjadmmConfig, detect
from .reporting import BER_FIELDS, FORMATS, TIME_UNIT_FIELDS, render, write_report

SEED_ENV = "PJMIMO_SEED"


class UsageError(Exception):
    """Invalid flag value; the message names the flag."""


def parse_range(text: str, flag: str, cast=float) -> list:
    """``a:step:b`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [start + k * step for k in range(n)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
        out = [cast(v) for v in values]
        if cast is int and any(o != v for o, v in zip(out, values)):
            raise ValueError
        return out
    except ValueError:
        raise UsageError(f"{flag}: cannot parse {text!r} (use start:step:stop or a,b,c)") from None


def read_instance(path) -> ComplexSystemModel:
    """Parse a plain-text instance.

    Line 1: ``Nr Nt``; next Nr lines: 2*Nt floats, real/imag interleaved,
    one row of the channel each; last line: 2*Nr floats, the received
    vector interleaved the same way.
    """
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise UsageError(f"--instance: cannot read {path}: {exc.strerror}") from None
    try:
        nr, nt = (int(v) for v in lines[0].split())
    except (ValueError, IndexError):
        raise UsageError("--instance: first line must be 'Nr Nt'") from None
    if nr < 1 or nt < 1:
        raise UsageError("--instance: Nr and Nt must be >= 1")
    if len(lines) != nr + 2:
        raise UsageError(f"--instance: expected {nr + 2} non-empty lines, found {len(lines)}")

    def row(k, width, what):
        try:
            vals = np.array([float(v) for v in lines[k].split()])
        except ValueError:
            raise UsageError(f"--instance: line {k + 1} ({what}) has a non-numeric value") from None
        if vals.size != width:
            raise UsageError(f"--instance: line {k + 1} ({what}) needs {width} values, got {vals.size}")
        return vals[0::2] + 1j * vals[1::2]

    H = np.array([row(1 + r, 2 * nt, f"channel row {r + 1}") for r in range(nr)])
    y = row(nr + 1, 2 * nr, "received vector")
    return ComplexSystemModel(H=H, y=y)


def write_instance(path, H, y) -> None:
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    y = np.asarray(y, dtype=complex)

    def fmt(v):
        return " ".join(f"{z.real!r} {z.imag!r}" for z in (complex(a) for a in v))

    lines = [f"{H.shape[0]} {H.shape[1]}", *(fmt(r) for r in H), fmt(y)]
    Path(path).write_text("\n".join(lines) + "\n")


def _positive_int(v: int, flag: str, minimum: int = 1):
    if v < minimum:
        raise UsageError(f"{flag}: must be >= {minimum}, got {v}")


def _pjadmm_flags(p):
    g = p.add_argument_group("PJADMM parameters")
    g.add_argument("--rho", type=float, help="penalty weight (default: channel-dependent rule)")
    g.add_argument("--tau", type=float, help="proximal weight (default: channel-dependent rule)")
    g.add_argument("--delta", type=float, default=1e-12, help="objective-change tolerance")
    g.add_argument("--clamp", choices=("none", "box"), default="none",
                   help="project x onto [-l, l] every iteration")


def _sim_flags(p):
    p.add_argument("--nr", type=int, default=128, help="BS antennas (default 128)")
    p.add_argument("--order", type=int, default=4, help="QAM order M (default 4)")
    p.add_argument("--trials", type=int, default=1000, help="received vectors per point")
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes; does not change results")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("-o", "--output", help="report file (default: stdout)")
    _pjadmm_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pjmimo",
        description="Massive-MIMO uplink detection with proximal Jacobian ADMM.",
        epilog="SNR = Nt / sigma_v^2 (total received signal power over noise power).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ber-sweep", help="BER versus SNR",
                       description="BER versus SNR for PJADMM and/or MMSE on paired seeds.")
    _sim_flags(p)
    p.add_argument("--nt", default="16", help="users, comma list (default 16)")
    p.add_argument("--snr", default="0:2:14", help="SNR list in dB, start:step:stop inclusive")
    p.add_argument("--detector", choices=("pjadmm", "mmse", "both"), default="both")
    p.add_argument("--iters", help="PJADMM budget T, one value or one per --nt entry "
                   "(default: reference budget for Nr=128, else 12)")
    p.add_argument("--full", action="store_true",
                   help="every reference configuration (Nt = 16, 32, 64, 128 at Nr = 128)")

    p = sub.add_parser("iter-sweep", help="BER versus iteration budget",
                       description="PJADMM BER per iteration budget at fixed SNR, with MMSE.")
    _sim_flags(p)
    p.add_argument("--nt", type=int, default=16)
    p.add_argument("--snr", type=float, default=12.0, help="SNR in dB (default 12)")
    p.add_argument("--iters", default="2:2:40", help="budgets, start:step:stop inclusive")

    p = sub.add_parser("time-units", help="time-unit table",
                       description="Time units 4Nr + T(14Nr + 2Nt); without flags prints the reference table.")
    p.add_argument("--nr", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("-o", "--output")

    p = sub.add_parser("detect", help="detect one instance file",
                       description="Run a detector on a plain-text instance and print decisions.")
    p.add_argument("--instance", required=True, help="instance file (see module docs)")
    p.add_argument("--detector", choices=("pjadmm", "mmse"), default="pjadmm")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--iters", type=int, default=100, help="PJADMM budget T")
    p.add_argument("--noise-var", type=float, default=0.0,
                   help="complex noise variance sigma_v^2 used by MMSE")
    _pjadmm_flags(p)
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        seed = args.seed
    else:
        env = os.environ.get(SEED_ENV, "0")
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"${SEED_ENV}: not an integer: {env!r}") from None
    if seed < 0:
        raise UsageError(f"--seed: must be non-negative, got {seed}")
    return seed


def _sim_config(args, **kw) -> bench.SimConfig:
    _positive_int(args.trials, "--trials")
    _positive_int(args.threads, "--threads")
    _positive_int(args.nr, "--nr")
    try:
        Constellation(args.order)
    except ValueError as exc:
        raise UsageError(f"--order: {exc}") from None
    try:
        PjadmmConfig(rho=args.rho, tau=args.tau, delta=args.delta, clamp_mode=args.clamp)
    except ValueError as exc:
        flag = str(exc).split()[0]
        raise UsageError(f"--{flag}: {exc}") from None
    return bench.SimConfig(
        nr=args.nr,
        order=args.order,
        trials=args.trials,
        seed=_seed(args),
        rho=args.rho,
        tau=args.tau,
        delta=args.delta,
        clamp_mode=args.clamp,
        workers=args.threads,
        **kw,
    )


def _emit(text: str, args) -> None:
    if args.output:
        write_report(text, args.output)
    else:
        sys.stdout.write(text)


def _ber_sweep(args) -> str:
    detectors = bench.DETECTORS if args.detector == "both" else (args.detector,)
    snr = parse_range(args.snr, "--snr")
    if args.full:
        nts = list(bench.REF_ITERS)
        iters = [bench.REF_ITERS[n] for n in nts]
    else:
        nts = parse_range(args.nt, "--nt", int)
        for n in nts:
            _positive_int(n, "--nt")
        if args.iters is None:
            iters = [bench.REF_ITERS.get(n, 12) if args.nr == bench.REF_NR else 12
                     for n in nts]
        else:
            iters = parse_range(args.iters, "--iters", int)
            if len(iters) == 1:
                iters = iters * len(nts)
            if len(iters) != len(nts):
                raise UsageError("--iters: give one value or one per --nt entry")
    for t in iters:
        _positive_int(t, "--iters")
    report = bench.BerReport()
    for nt, t in zip(nts, iters):
        cfg = _sim_config(args, nt=nt, snr_db=(12.0,), t_iters=(t,), detectors=detectors)
        report = report + bench.sweep_snr(cfg, snr)
    return render([p.as_row() for p in report.points], BER_FIELDS, args.format)


def _iter_sweep(args) -> str:
    _positive_int(args.nt, "--nt")
    iters = parse_range(args.iters, "--iters", int)
    for t in iters:
        _positive_int(t, "--iters")
    cfg = _sim_config(args, nt=args.nt, snr_db=(args.snr,), t_iters=tuple(iters) or (1,))
    report = bench.sweep_iterations(cfg, iters)
    return render([p.as_row() for p in report.points], BER_FIELDS, args.format)


def _time_units(args) -> str:
    given = [v is not None for v in (args.nr, args.nt, args.iters)]
    if any(given) and not all(given):
        raise UsageError("--nr, --nt and --iters must be given together (or none for the reference table)")
    if all(given):
        for flag, v in (("--nr", args.nr), ("--nt", args.nt), ("--iters", args.iters)):
            _positive_int(v, flag, minimum=0)
        rows = bench.time_unit_rows(args.nr, args.nt, args.iters)
    else:
        rows = bench.reference_report().rows
    return render([r.as_row() for r in rows], TIME_UNIT_FIELDS, args.format)


def _detect(args) -> str:
    try:
        c = Constellation(args.order)
    except ValueError as exc:
        raise UsageError(f"--order: {exc}") from None
    if args.noise_var < 0:
        raise UsageError("--noise-var: must be non-negative")
    _positive_int(args.iters, "--iters")
    try:
        cfg = PjadmmConfig(rho=args.rho, tau=args.tau, delta=args.delta,
                           max_iter=args.iters, clamp_mode=args.clamp)
    except ValueError as exc:
        raise UsageError(f"--{str(exc).split()[0]}: {exc}") from None
    inst = read_instance(args.instance)
    inst.noise_var = args.noise_var
    m = complex_to_real(inst)
    if args.detector == "mmse":
        res = mmse_detect(m, c)
    else:
        res = detect(m, c, cfg)
    soft, hard = unstack_real(res.x_soft), unstack_real(res.x_hard)
    lines = [
        f"# detector={args.detector} iterations={res.iterations_used} converged={res.converged}",
        "user,soft_re,soft_im,hard_re,hard_im",
    ]
    for k, (s, h) in enumerate(zip(soft, hard)):
        lines.append(",".join([str(k), *(repr(float(v)) for v in (s.real, s.imag, h.real, h.imag))]))
    return "\n".join(lines) + "\n"


COMMANDS = {
    "ber-sweep": _ber_sweep,
    "iter-sweep": _iter_sweep,
    "time-units": _time_units,
    "detect": _detect,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
        if args.command == "detect":
            sys.stdout.write(text)
        else:
            _emit(text, args)
    except UsageError as exc:
        parser.exit(2, f"pjmimo {args.command}: error: {exc}\n")
    except (ValueError, np.linalg.LinAlgError, OSError) as exc:
        parser.exit(1, f"pjmimo {args.command}: {type(exc).__name__}: {exc}\n")
    return 0


run_cli = main


if __name__ == "__main__":
    sys.exit(main())
