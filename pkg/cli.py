import argparse
import logging
import sys
from pathlib import Path

from channelizer import channelize, write_spectral_dump
from errors import PipelineError
from managers import ConfigManager
from pipeline import (
    RunManifest,
    analyze,
    correlate,
    detect_dump,
    file_grid_indices,
    frames_from_dump,
    load_analysis,
    run_capture,
    simulate_file,
)
from report import emit_figures
from sky_sim import write_frame_dump

logger = logging.getLogger("pulsepair")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

FRAME_DUMP = "frames.bin"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this command line reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", type=Path, help="JSON scenario file")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--preset", choices=["full", "desk"], help="scale preset (default: desk)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--file-duration-hr", type=float, help="capture file duration in hours")
    p.add_argument("--ra-of-interest", type=float, help="RA of interest in hours")
    p.add_argument("--level", choices=["first", "second"], help="analysis level")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    p.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pulsepair", description="Two-element Δt=0 Δf pulse pair search on simulated sky data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write raw IQ frames of the first scheduled file")
    _add_common(p)
    p.add_argument("--ticks", type=int, help="number of 3 s ticks to simulate (default: one file)")
    p.add_argument("--spectra", action="store_true", help="also write per-element spectral dumps")

    p = sub.add_parser("detect", help="first-level candidates and RFI files")
    _add_common(p)
    p.add_argument("--frames", type=Path, help="detect a raw frame dump instead of simulating")

    p = sub.add_parser("analyze", help="pairs, second-level filter and RA bin statistics")
    _add_common(p)

    p = sub.add_parser("report", help="figure datasets and plots")
    _add_common(p)
    p.add_argument("--no-plots", action="store_true", help="datasets only")

    p = sub.add_parser("correlate", help="cross-correlation lag profile")
    _add_common(p)
    p.add_argument("--ticks", type=int, default=4, help="ticks to average (default: 4)")
    p.add_argument("--frames", type=Path, help="correlate a raw frame dump instead of simulating")

    p = sub.add_parser("run", help="detect, analyze, report and correlate")
    _add_common(p)
    p.add_argument("--no-plots", action="store_true", help="datasets only")
    p.add_argument("--ticks", type=int, default=4, help="ticks averaged for the lag profile (default: 4)")
    return parser


def _configure_logging(args):
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _load(args) -> tuple[ConfigManager, RunManifest]:
    overrides = {
        "simulation": {"seed": args.seed},
        "run": {
            "file_duration_hr": args.file_duration_hr,
            "ra_of_interest_hr": args.ra_of_interest,
            "level": args.level,
        },
    }
    config = ConfigManager(args.scenario, preset=args.preset, overrides=overrides)
    return config, RunManifest.from_config(config, args.out)


def _simulate(args, config, manifest):
    out = Path(manifest.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.save_resolved(out)
    grid_index = file_grid_indices(config, manifest)[0]
    write_frame_dump(out / FRAME_DUMP, simulate_file(config, manifest, grid_index, args.ticks))
    if args.spectra:
        for element in (0, 1):
            write_spectral_dump(
                out / f"spectra_{('east', 'west')[element]}.bin",
                (channelize(pair[element]) for pair in frames_from_dump(out / FRAME_DUMP, config)),
            )


def _report(args, config, manifest):
    pairs, table, d_series, density = load_analysis(manifest.output_dir)
    run = config.get_run()
    emit_figures(pairs, table, manifest.output_dir, d_series, density,
                 run["max_delta_f_hz"], run["max_dd_phi_rad"], plots=not args.no_plots)


def _correlate(args, config, manifest):
    frames = frames_from_dump(args.frames, config) if getattr(args, "frames", None) else None
    correlate(manifest, config, n_ticks=args.ticks, frames=frames)


def dispatch(args) -> None:
    config, manifest = _load(args)
    if args.command == "simulate":
        _simulate(args, config, manifest)
    elif args.command == "detect":
        if args.frames:
            detect_dump(args.frames, manifest, config)
        else:
            run_capture(manifest, config)
    elif args.command == "analyze":
        analyze(manifest, config)
    elif args.command == "report":
        _report(args, config, manifest)
    elif args.command == "correlate":
        _correlate(args, config, manifest)
    elif args.command == "run":
        run_capture(manifest, config)
        result = analyze(manifest, config)
        run = config.get_run()
        emit_figures(result.pairs, result.table, manifest.output_dir, result.d_series, result.candidate_density,
                     run["max_delta_f_hz"], run["max_dd_phi_rad"], plots=not args.no_plots)
        correlate(manifest, config, n_ticks=args.ticks)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        dispatch(args)
    except PipelineError as e:
        logger.error("%s", e)
        return EXIT_DATA
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
