"""Command-line front end.

Subcommands:
- simulate: run a scenario and write the dataset files
- stats: mean±std of i_rms, p, q and pf over an interval of a dataset
- compare: correlation and percentage error of a model dataset against a reference
- list-appliances: appliance kinds with their parameters and actions
- validate: parse a scenario and print what it contains

Example:
    film simulate --scenario house_evening --seed 42 --out runs/house
    film stats runs/house --appliance kettle --interval 120 300 --steady
    film compare runs/reference runs/house --error-csv runs/error.csv
"""

import argparse as ap
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import pandas as pd
from rich.console import Console
from rich.table import Table

import src.logging_module as lm

from . import analysis as an
from . import appliances as apl
from . import export as ex
from . import metering as mt
from . import panel as pn
from . import scenario as sc
from .errors import FilmError, InvalidInputError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
# sysexits.h EX_IOERR
EXIT_IO_ERROR = 74

console = Console()

_SOURCE_FLAGS = ("v_nominal", "freq", "noise_std", "source_resistance", "seed")


def source_overrides(args: ap.Namespace) -> Dict[str, float]:
    """Source settings given on the command line."""
    return {
        flag: getattr(args, flag)
        for flag in _SOURCE_FLAGS
        if getattr(args, flag, None) is not None
    }


def cmd_simulate(
    scenario_path: str,
    overrides: Dict[str, float],
    export: ex.ExportConfig,
    report_rate: float = mt.DEFAULT_REPORT_RATE,
    wave_rate: int = mt.DEFAULT_WAVE_RATE,
) -> int:
    """Runs a scenario, writes the dataset and prints a summary."""
    scenario = sc.load_scenario(scenario_path)
    source = replace(scenario.source or sc.SourceParams(), **overrides)
    dataset = pn.simulate(scenario, source, report_rate=report_rate, wave_rate=wave_rate)
    written = ex.write_dataset(dataset, export)
    identity = pn.panel_power_identity(dataset)

    table = Table(title=f"simulate: {scenario.name or scenario_path}")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("duration (s)", f"{scenario.duration:g}")
    table.add_row("ticks", str(len(dataset.aggregate)))
    table.add_row("events", str(len(dataset.events)))
    table.add_row("seed", str(source.seed))
    table.add_row("power identity max residual (W)", f"{identity.max_residual:.3g}")
    table.add_row("files", str(len(written)))
    table.add_row("output", str(export.output_dir))
    console.print(table)
    return EXIT_OK


def cmd_stats(
    dataset_path: str,
    appliance: str = pn.AGGREGATE,
    interval: Optional[Tuple[float, float]] = None,
    steady: bool = False,
    output_csv: Optional[str] = None,
) -> int:
    """Prints mean±std of every parameter over an interval."""
    dataset = ex.load_dataset(dataset_path)
    times = dataset.times
    if times.size == 0:
        raise InvalidInputError(f"dataset {dataset_path} is empty")
    t_start, t_end = interval if interval is not None else (0.0, float(times[-1]))
    stats = an.segment_statistics(dataset, appliance, t_start, t_end, steady=steady)

    table = Table(title=f"{appliance} [{t_start:g}, {t_end:g}] s")
    table.add_column("parameter")
    table.add_column("n", justify="right")
    table.add_column("mean±std", justify="right")
    for parameter, stat in stats.items():
        table.add_row(parameter.value, str(stat.n), str(stat))
    console.print(table)

    if output_csv is not None:
        pd.DataFrame(
            [
                {"parameter": p.value, "n": s.n, "mean": s.mean, "std": s.std}
                for p, s in stats.items()
            ]
        ).to_csv(output_csv, index=False)
        logger.info(f"wrote {output_csv}")
    return EXIT_OK


def cmd_compare(
    reference_path: str, model_path: str, error_csv: Optional[str] = None
) -> int:
    """Prints correlation (%) per parameter and channel plus max/mean E."""
    report = an.compare_datasets(
        ex.load_dataset(reference_path), ex.load_dataset(model_path)
    )
    summary = report.summary()

    table = Table(title="correlation coefficient of model and reference (%)")
    table.add_column("channel")
    for parameter in an.Parameter:
        table.add_column(f"r {parameter.value}", justify="right")
    for parameter in an.Parameter:
        table.add_column(f"E {parameter.value} max/mean", justify="right")
    for channel, row in summary.iterrows():
        r_cells = []
        for parameter in an.Parameter:
            r = row[f"r_{parameter.value}_pct"]
            r_cells.append("n/a" if r != r else f"{r:.2f}")
        e_cells = [
            f"{row[f'e_max_{p.value}_pct']:.3f}/{row[f'e_mean_{p.value}_pct']:.3f}"
            for p in an.Parameter
        ]
        table.add_row(str(channel), *r_cells, *e_cells)
    console.print(table)

    if error_csv is not None:
        report.error_frame().to_csv(error_csv, index=False)
        logger.info(f"wrote {error_csv}")
    return EXIT_OK


def cmd_list_appliances() -> int:
    table = Table(title="appliance kinds")
    table.add_column("kind")
    table.add_column("parameters (default)")
    table.add_column("actions")
    for kind in apl.ApplianceKind:
        params = ", ".join(
            name if default is None else f"{name}={default}"
            for name, default in apl.parameter_defaults(kind).items()
        )
        actions = ", ".join(sorted(a.value for a in apl.valid_actions(kind)))
        table.add_row(kind.value, params, actions)
    console.print(table)
    return EXIT_OK


def cmd_validate(scenario_path: str) -> int:
    scenario = sc.load_scenario(scenario_path)
    table = Table(title=f"{scenario.name or scenario_path}: {scenario.duration:g} s")
    table.add_column("appliance")
    table.add_column("kind")
    table.add_column("label")
    table.add_column("actions", justify="right")
    for spec in scenario.appliances:
        count = sum(1 for a in scenario.schedule if a.appliance_id == spec.id)
        table.add_row(spec.id, spec.kind.value, spec.label, str(count))
    console.print(table)
    console.print(f"{len(scenario.schedule)} actions, hash {sc.scenario_hash(scenario)[:12]}")
    return EXIT_OK


def build_parser() -> ap.ArgumentParser:
    parser = ap.ArgumentParser(
        prog="film", description="Simulate household appliance loads for NILM datasets."
    )
    parser.add_argument("--log-file", type=str, default=None, help="Also log to this file.")
    parser.add_argument("--log-dir", type=str, default="logs", help="Directory of the log file.")
    parser.add_argument("--verbose", action="store_true", help="Log debug messages.")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run a scenario and export the dataset.")
    simulate.add_argument(
        "--scenario", required=True, help="Scenario file or name of a bundled scenario."
    )
    simulate.add_argument("--seed", type=int, default=None, help="Seed of the voltage noise.")
    simulate.add_argument(
        "--report-hz", type=float, default=mt.DEFAULT_REPORT_RATE, help="Records per second."
    )
    simulate.add_argument(
        "--wave-hz", type=int, default=mt.DEFAULT_WAVE_RATE, help="Waveform samples per second."
    )
    simulate.add_argument(
        "--out", type=Path, default=None, help=f"Output directory (default ${ex.OUTPUT_DIR_ENV} or ./{ex.DEFAULT_OUTPUT_DIR})."
    )
    simulate.add_argument(
        "--format",
        action="append",
        choices=[f.value for f in ex.ExportFormat],
        default=None,
        help="Output to write; repeat for several (default: all but source_csv).",
    )
    simulate.add_argument("--decimals", type=int, default=6, help="Decimal places in CSV files.")
    simulate.add_argument("--v-nominal", type=float, default=None, help="Source RMS voltage.")
    simulate.add_argument("--freq", type=float, default=None, help="Mains frequency.")
    simulate.add_argument(
        "--noise-std", type=float, default=None, help="Per-cycle RMS amplitude noise (V)."
    )
    simulate.add_argument(
        "--source-resistance", type=float, default=None, help="Source resistance (ohm)."
    )

    stats = commands.add_parser("stats", help="Mean±std over an interval of a dataset.")
    stats.add_argument("dataset", help="Dataset directory.")
    stats.add_argument("--appliance", default=pn.AGGREGATE, help="Channel (default aggregate).")
    stats.add_argument(
        "--interval", type=float, nargs=2, metavar=("T0", "T1"), default=None, help="Seconds."
    )
    stats.add_argument(
        "--steady", action="store_true", help="Skip the 5 s after every ground-truth event."
    )
    stats.add_argument("--out", type=str, default=None, help="Also write the table as CSV.")

    compare = commands.add_parser("compare", help="Compare a model dataset with a reference.")
    compare.add_argument("reference", help="Reference dataset directory.")
    compare.add_argument("model", help="Model dataset directory.")
    compare.add_argument("--error-csv", type=str, default=None, help="Write E(t) as CSV.")

    commands.add_parser("list-appliances", help="Show appliance kinds and parameters.")

    validate = commands.add_parser("validate", help="Parse a scenario and summarize it.")
    validate.add_argument("--scenario", required=True, help="Scenario file or bundled name.")
    return parser


def _dispatch(args: ap.Namespace) -> int:
    if args.command == "simulate":
        formats = (
            frozenset(ex.ExportFormat(f) for f in args.format)
            if args.format
            else ex.DEFAULT_FORMATS
        )
        export = ex.ExportConfig(
            output_dir=args.out if args.out is not None else ex.default_output_dir(),
            formats=formats,
            decimal_places=args.decimals,
        )
        return cmd_simulate(
            args.scenario, source_overrides(args), export, args.report_hz, args.wave_hz
        )
    if args.command == "stats":
        interval = tuple(args.interval) if args.interval is not None else None
        return cmd_stats(args.dataset, args.appliance, interval, args.steady, args.out)
    if args.command == "compare":
        return cmd_compare(args.reference, args.model, args.error_csv)
    if args.command == "list-appliances":
        return cmd_list_appliances()
    return cmd_validate(args.scenario)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    lm.setup_logging(log_file_name=args.log_file, log_dir=args.log_dir, verbose=args.verbose)
    try:
        return _dispatch(args)
    except (FileNotFoundError, OSError) as error:
        lm.log_error(f"I/O error: {error}")
        return EXIT_IO_ERROR
    except FilmError as error:
        lm.log_error(str(error))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
