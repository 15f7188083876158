"""Command-line entry point: ``bfcsim [--preset fig2] [--trials N] ...``."""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigError, ScenarioConfig, config_from_mapping, load_config, snr_range
from .evaluation import draw_trial_channels, monte_carlo_sweep, scenario_from_config

log = logging.getLogger("bfcsim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4

RECORD_HEADER = ["strategy", "snr_db", "trial", "se_ki", "se_ij", "se_sum", "degenerate"]
MEANS_HEADER = ["strategy", "snr_db", "trials", "se_ki", "se_ij", "se_sum", "degenerate"]

# flag dest -> ScenarioConfig field
FLAG_FIELDS = {
    "nt": "nt", "nr": "nr", "ns": "ns", "nrf": "nrf",
    "snr_si": "snr_si_db", "kappa": "kappa_db", "trials": "trials", "seed": "seed",
    "strategies": "strategies", "phase_bits": "phase_bits", "dump_channels": "dump_channels",
    "out": "output_path", "format": "output_format", "workers": "workers", "power": "power",
}


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = ArgumentParser(prog="bfcsim", description=(
        "Monte Carlo spectral-efficiency sweeps of beamforming-cancellation designs "
        "for mmWave full-duplex with hybrid beamforming."))
    p.add_argument("--config", metavar="PATH", help="flat TOML scenario file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="published figure configuration")
    for name in ("nt", "nr", "ns", "nrf"):
        p.add_argument(f"--{name}", type=int, metavar="N")
    p.add_argument("--snr-start", type=float, metavar="DB")
    p.add_argument("--snr-stop", type=float, metavar="DB")
    p.add_argument("--snr-step", type=float, metavar="DB")
    p.add_argument("--snr-si", type=float, metavar="DB", help="SI SNR (default 120 dB)")
    p.add_argument("--kappa", type=float, metavar="DB", help="SI Rician factor (default 30 dB)")
    p.add_argument("--trials", type=int, metavar="N")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--strategies", metavar="LIST",
                   help="comma-separated, e.g. hd,eigen_only,case_a,ideal_fd or case_b:4")
    p.add_argument("--phase-bits", type=int, metavar="N")
    p.add_argument("--power", choices=("stream", "total"), help="precoder power normalization")
    p.add_argument("--workers", type=int, metavar="N", help="parallel worker processes")
    p.add_argument("--dump-channels", metavar="PATH", help="write every channel draw as CSV")
    p.add_argument("--out", metavar="PATH", help="per-trial records; means go to <stem>_means.<ext>")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    config = ScenarioConfig()
    if args.preset:
        config = config_from_mapping(PRESETS[args.preset], config)
    if args.config:
        config = load_config(args.config, config)
    overrides = {}
    for dest, field in FLAG_FIELDS.items():
        value = getattr(args, dest)
        if value is not None:
            overrides[field] = value
    snr = (args.snr_start, args.snr_stop, args.snr_step)
    if any(v is not None for v in snr):
        grid = config.snr_db_grid
        start = grid[0] if args.snr_start is None else args.snr_start
        stop = grid[-1] if args.snr_stop is None else args.snr_stop
        if args.snr_step is not None:
            step = args.snr_step
        else:
            step = grid[1] - grid[0] if len(grid) > 1 else 1.0
        overrides["snr_db_grid"] = snr_range(start, stop, step)
    return config_from_mapping(overrides, config)


def _fmt(value):
    if isinstance(value, bool):
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def records_csv(rows, header):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        d = asdict(row)
        writer.writerow([_fmt(d[k]) for k in header])
    return buf.getvalue()


def records_json(rows):
    return json.dumps([asdict(r) for r in rows], indent=1) + "\n"


def means_path(path, fmt):
    path = Path(path)
    return path.with_name(f"{path.stem}_means.{fmt}")


def write_results(result, config):
    fmt = config.output_format
    path = Path(config.output_path)
    if fmt == "csv":
        path.write_text(records_csv(result.records, RECORD_HEADER))
        means_path(path, fmt).write_text(records_csv(result.means, MEANS_HEADER))
    else:
        path.write_text(records_json(result.records))
        means_path(path, fmt).write_text(records_json(result.means))


def dump_channels(config, path):
    """One CSV row per channel: trial, kind, nr, nt, then row-major (re, im) pairs."""
    scenario = scenario_from_config(config)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "kind", "nr", "nt", "entries"])
        for trial in range(config.trials):
            chans = draw_trial_channels(config, trial, scenario)
            for ch in (chans.h_ki, chans.h_ij, chans.h_ii):
                flat = np.column_stack([ch.h.real.ravel(), ch.h.imag.ravel()]).ravel()
                writer.writerow([trial, ch.kind.value, ch.nr, ch.nt, *map(repr, flat.tolist())])


def summary_table(result, config):
    width = max(11, *(len(s) for s in config.strategies))
    lines = [f"mean sum SE [bits/s/Hz] over {config.trials} trial(s)",
             "SNR [dB]".rjust(8) + "".join(s.rjust(width + 1) for s in config.strategies)]
    for snr in config.snr_db_grid:
        cells = "".join(f"{result.mean(s, snr):{width + 1}.3f}" for s in config.strategies)
        lines.append(f"{snr:8.1f}{cells}")
    return "\n".join(lines)


def run(config):
    """Run a sweep, write outputs and print the summary; returns an exit code."""
    try:
        result = monte_carlo_sweep(config)
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_RUNTIME
    try:
        if config.output_path:
            write_results(result, config)
        if config.dump_channels:
            dump_channels(config, config.dump_channels)
    except OSError as exc:
        log.error("could not write output: %s", exc)
        return EXIT_IO
    print(summary_table(result, config))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"bfcsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
