"""Command-line entry point.

Exit codes: 0 success, 1 configuration error (including unknown flags and
unreadable config files), 2 runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time

import numpy as np

from ..estimation import optimize_frame
from .config import ConfigError, SimConfig, load_config, parse_overrides
from .link import Link, emit_csv, error_table_csv, run_campaign, write_text_atomic

log = logging.getLogger("uwotfs")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# long campaign for the full FER curves down to 1e-4
FULL_PRESET = {
    "snr_start_db": "0",
    "snr_stop_db": "30",
    "snr_step_db": "1",
    "min_errors": "200",
    "max_frames": "2000000",
    "stop_fer": "1e-4",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key = value scenario file (see docs/config.md)")
    p.add_argument("--out", metavar="PATH", help="write the CSV table to PATH instead of stdout")
    p.add_argument("--charge-overhead", action="store_true", help="charge UW and CP energy to E_b")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    keys = p.add_argument_group("configuration keys (override the config file)")
    for f in dataclasses.fields(SimConfig):
        if f.name == "charge_overhead":
            continue
        keys.add_argument(f"--{f.name.replace('_', '-')}", dest=f"key_{f.name}", metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uwotfs", description="UW-based MIMO OTFS/OFDM link simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sim = sub.add_parser("simulate", help="FER/BER sweep over E_b/sigma^2 (CSV)")
    _add_common(sim)
    sim.add_argument("--full", action="store_true", help="long sweep down to FER 1e-4")
    _add_common(sub.add_parser("optimize-frame", help="analytic channel-error table and best M"))
    _add_common(sub.add_parser("error-stats", help="Monte-Carlo channel-error table per M"))
    _add_common(sub.add_parser("selftest", help="quick end-to-end sanity checks"))
    return parser


def _config_from_args(args) -> SimConfig:
    raw = dict(FULL_PRESET) if getattr(args, "full", False) else {}
    raw.update({k[4:]: v for k, v in vars(args).items() if k.startswith("key_") and v is not None})
    overrides = parse_overrides(raw)
    if args.charge_overhead:
        overrides["charge_overhead"] = True
    return load_config(args.config, **overrides)


def _emit(text: str, out) -> None:
    if out:
        path = write_text_atomic(text, out)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def cmd_simulate(cfg: SimConfig, args) -> int:
    records = run_campaign(cfg)
    _emit(emit_csv(records), args.out)
    return EXIT_OK


def cmd_optimize_frame(cfg: SimConfig, args) -> int:
    noise_var = cfg.noise_variance(cfg.operating_snr_db)
    result = optimize_frame(cfg.N, cfg.candidate_ms, cfg.geometry, cfg.profile, noise_var)
    print(f"# N={cfg.N} n_uw={cfg.n_uw} n_tx={cfg.n_tx} f_D={cfg.doppler:.1f} Hz sigma2={noise_var:.4g}", file=sys.stderr)
    print(f"{'M':>3} {'sigma2_ce':>12} {'sigma2_d':>12} {'sigma2_total':>12}", file=sys.stderr)
    for M, ce, d, tot in result.table:
        print(f"{M:>3} {ce:12.5e} {d:12.5e} {tot:12.5e}", file=sys.stderr)
    print(f"M*={result.best_M}", file=sys.stderr)
    _emit(error_table_csv(result.table), args.out)
    return EXIT_OK


def cmd_error_stats(cfg: SimConfig, args) -> int:
    from .stats import empirical_errors

    rows = [empirical_errors(cfg, M) for M in cfg.candidate_ms]
    _emit(error_table_csv(rows), args.out)
    return EXIT_OK


def cmd_selftest(cfg: SimConfig, args) -> int:
    """Noiseless frames through both waveforms plus the analytic optimiser."""
    checks = []
    for waveform in ("ofdm", "otfs"):
        c = cfg.replace(waveform=waveform, static_channel=True)
        link = Link(c, 1e-12)
        errors = sum(link.trial(np.random.SeedSequence([c.seed, i]))[-1] for i in range(5))
        checks.append((f"noiseless {waveform} {c.n_tx}x{c.n_rx} {c.mcs}", errors == 0))
    result = optimize_frame(cfg.N, cfg.candidate_ms, cfg.geometry, cfg.profile, cfg.noise_variance(cfg.operating_snr_db))
    d = [r[2] for r in result.table]
    checks.append(("sigma2_d non-increasing in M", bool(np.all(np.diff(d) <= 1e-15))))
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_RUNTIME


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize-frame": cmd_optimize_frame,
    "error-stats": cmd_error_stats,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg, args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.debug("%s finished in %.1fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
