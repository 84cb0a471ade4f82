# /shadowlab/cli.py
"""
Version: 1.0.0
------------------------------
ID: SHADOWLAB-CLI-01
Beschreibung: Kommandozeile mit den Befehlen clv, shadow, sens, verify und fd.

Ablauf jedes Befehls:
1. Konfiguration laden und mit --out/--seed/--format überschreiben
2. Experiment prüfen (noch ohne Ausgabeverzeichnis)
3. Ausgabeverzeichnis anlegen, rechnen, Dateien schreiben

Exit-Codes: 0 Erfolg, 1 Dateifehler, 2 ungültige Konfiguration,
3 numerischer Fehler, 4 verletzte Eigenschaft, 5 nichts zu tun.

Stand: Oktober 2026
"""
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from colorama import Fore, Style, init

from shadowlab import artifact_cache
from shadowlab.commands.comparison_table import compare_results, format_comparison_table
from shadowlab.config import SETTINGS
from shadowlab.dynamics import FLOW
from shadowlab.error_handler import NothingToDoError, OutputError, PropertyFailure, handle_errors
from shadowlab.experiment import ShadowingExperiment
from shadowlab.status_banner import StatusBanner
from shadowlab.utils.config_handler import OUTPUT_FORMATS, ConfigManager, ExperimentConfig
from shadowlab.verify import print_verification_report, run_verification

init(autoreset=True)

logger = logging.getLogger("CLI")

DEFAULT_CONFIG = "config/settings.yaml"
RESOLVED_CONFIG_NAME = "config_used.yaml"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="YAML-Experimentkonfiguration")
    common.add_argument("--out", default=None, help="Ausgabeverzeichnis (überschreibt output.directory)")
    common.add_argument("--seed", type=int, default=None, help="Seed (überschreibt trajectory.seed)")
    common.add_argument("--format", dest="fmt", choices=OUTPUT_FORMATS, default=None,
                        help="nur dieses Ausgabeformat schreiben")
    common.add_argument("--no-progress", action="store_true", help="keine Fortschrittsbalken")
    common.add_argument("--debug", action="store_true", help="Stacktraces bei Fehlern protokollieren")

    parser = argparse.ArgumentParser(prog="shadowlab",
                                     description="CLVs, Schattenrichtungen und Sensitivitäten chaotischer Systeme")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("clv", parents=[common], help="CLVs und Lyapunov-Exponenten berechnen")
    sub.add_parser("shadow", parents=[common], help="tangentiale und adjungierte Schattenrichtung")
    sub.add_parser("sens", parents=[common], help="Sensitivitäten mit den konfigurierten Verfahren")
    verify = sub.add_parser("verify", parents=[common], help="Eigenschaftsprüfungen ausführen")
    verify.add_argument("--inject-fault", dest="inject_fault", type=float, default=None, metavar="EPS",
                        help="v̄ um EPS in Richtung des instabilen adjungierten CLV verfälschen")
    verify.add_argument("--samples", type=int, default=None, help="Zufallsziehungen je Prüfung")
    sub.add_parser("fd", parents=[common], help="Differenzenreferenz")
    return parser


def load_config(args) -> ExperimentConfig:
    config = ConfigManager(args.config).load_experiment_config()
    return config.with_overrides(out=args.out, seed=args.seed, fmt=args.fmt)


def prepare(args, command: str) -> Tuple[ShadowingExperiment, Path]:
    """Lädt und prüft alles, bevor das Ausgabeverzeichnis angelegt wird."""
    config = load_config(args)
    out_dir = Path(config.output.directory)
    experiment = ShadowingExperiment(config, progress=SETTINGS.show_progress(), cache_dir=out_dir)
    experiment.validate()
    if command == "sens" and not config.resolved_methods(experiment.kind):
        raise NothingToDoError("sensitivity.methods ist leer")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Ausgabeverzeichnis {out_dir} nicht anlegbar: {e}") from e
    ConfigManager(args.config).save_resolved_config(config, str(out_dir / RESOLVED_CONFIG_NAME))
    StatusBanner(experiment, command).display()
    return experiment, out_dir


def _wants(experiment: ShadowingExperiment, fmt: str) -> bool:
    return fmt in experiment.config.output.formats


@handle_errors
def cmd_clv(args) -> int:
    experiment, out_dir = prepare(args, "clv")
    clv = experiment.clv
    written: List[Path] = [out_dir / artifact_cache.CLV_CACHE_NAME]
    record = dict(experiment.summary(), **artifact_cache.exponents_record(clv))
    if _wants(experiment, "json"):
        written.append(artifact_cache.write_json(out_dir / "exponents.json", record))
    if _wants(experiment, "csv"):
        neutral = np.zeros(clv.dim)
        if clv.neutral_index is not None:
            neutral[clv.neutral_index] = 1.0
        rows = np.column_stack([np.arange(clv.dim), clv.exponents, neutral])
        written.append(artifact_cache.write_csv(out_dir / "exponents.csv", ["j", "exponent", "neutral"], rows,
                                                header={"n_unstable": clv.n_unstable, "min_angle": clv.min_angle}))
    if experiment.config.output.frames:
        written.append(artifact_cache.write_frames_csv(out_dir / "frames.csv", clv))
    banner = StatusBanner(experiment, "clv")
    banner.print_clv_summary()
    banner.print_outputs(written)
    return 0


@handle_errors
def cmd_shadow(args) -> int:
    experiment, out_dir = prepare(args, "shadow")
    traj = experiment.trajectory
    tangent, adjoint = experiment.tangent_shadowing, experiment.adjoint_shadowing
    report = experiment.property_report
    written: List[Path] = []
    header = {"buffer": adjoint.buffer, "window_start": adjoint.window[0], "window_stop": adjoint.window[1],
              **{k: v for k, v in report.as_dict().items() if isinstance(v, float)}}

    if _wants(experiment, "csv"):
        if experiment.kind == FLOW:
            rows = artifact_cache.shadow_rows(tangent.start, traj.step, tangent.v_pm, extra=[tangent.eta])
            columns = ["step", "t"] + artifact_cache.state_columns(traj.dim, "v") + ["eta"]
            written.append(artifact_cache.write_csv(out_dir / "tangent_shadowing.csv", columns, rows, header))
            rows = artifact_cache.shadow_rows(adjoint.start, traj.step, adjoint.v_bar)
            columns = ["step", "t"] + artifact_cache.state_columns(traj.dim, "vbar")
            written.append(artifact_cache.write_csv(out_dir / "adjoint_shadowing.csv", columns, rows, header))
        else:
            rows = artifact_cache.shadow_rows(tangent.start, traj.step, np.hstack([tangent.v, adjoint.v_bar]))
            columns = (["step", "t"] + artifact_cache.state_columns(traj.dim, "v")
                       + artifact_cache.state_columns(traj.dim, "vbar"))
            written.append(artifact_cache.write_csv(out_dir / "map_shadowing.csv", columns, rows, header))
    if _wants(experiment, "json"):
        record = dict(experiment.summary(), buffer=adjoint.buffer, window=list(adjoint.window),
                      properties=report.as_dict())
        written.append(artifact_cache.write_json(out_dir / "shadowing.json", record))

    StatusBanner(experiment, "shadow").print_outputs(written)
    if not report.passed:
        print(Fore.YELLOW + f"⚠️ Eigenschaften verletzt: {', '.join(report.failures())}" + Style.RESET_ALL)
    return 0


@handle_errors
def cmd_sens(args) -> int:
    experiment, out_dir = prepare(args, "sens")
    results = experiment.sensitivities()
    directions = experiment.direction_sensitivities()
    written: List[Path] = []

    if _wants(experiment, "json"):
        for method, result in results.items():
            written.append(artifact_cache.write_json(out_dir / f"sensitivity_{method}.json", result.as_dict()))
        record = dict(experiment.summary(), comparison=compare_results(results),
                      directions=[r.as_dict() for r in directions])
        if experiment.kind != FLOW and {"tangent-map", "adjoint-map"} <= set(results):
            record["map_identity"] = experiment.map_identity()
        written.append(artifact_cache.write_json(out_dir / "comparison.json", record))
    if _wants(experiment, "csv"):
        methods = list(results) + [f"adjoint-{r.direction}" for r in directions]
        values = list(results.values()) + directions
        rows = [[k, r.value, r.stderr, r.horizon] for k, r in enumerate(values)]
        header = {f"method_{k}": name for k, name in enumerate(methods)}
        written.append(artifact_cache.write_csv(out_dir / "sensitivity.csv",
                                                ["method", "value", "stderr", "horizon"], rows, header))

    print(format_comparison_table(results))
    for result in directions:
        print(f"[adjoint, Richtung {result.direction}] {result.value:.10g} ± {result.stderr:.2g}")
    StatusBanner(experiment, "sens").print_outputs(written)
    return 0


@handle_errors
def cmd_verify(args) -> int:
    experiment, out_dir = prepare(args, "verify")
    config = experiment.config
    samples = args.samples if args.samples is not None else config.verify.samples
    fault = args.inject_fault if args.inject_fault is not None else config.verify.inject_fault
    report = run_verification(experiment, samples=samples, seed=config.trajectory.seed, inject_fault=fault)
    written: List[Path] = []
    if _wants(experiment, "json"):
        written.append(artifact_cache.write_json(out_dir / "verify_report.json",
                                                 dict(experiment.summary(), **report.as_dict())))
    if _wants(experiment, "csv"):
        rows = [[k, c.measured, c.threshold, c.samples, float(c.passed)] for k, c in enumerate(report.checks)]
        header = {f"check_{k}": c.name for k, c in enumerate(report.checks)}
        written.append(artifact_cache.write_csv(out_dir / "verify_report.csv",
                                                ["check", "measured", "threshold", "samples", "passed"],
                                                rows, header))
    print_verification_report(report)
    StatusBanner(experiment, "verify").print_outputs(written)
    if not report.passed:
        raise PropertyFailure(f"Verletzte Eigenschaften: {', '.join(report.failures())}")
    return 0


@handle_errors
def cmd_fd(args) -> int:
    experiment, out_dir = prepare(args, "fd")
    result = experiment.finite_difference()
    written: List[Path] = []
    record = dict(experiment.summary(), **result.as_dict(), fd_step=experiment.config.sensitivity.fd_step,
                  ensemble=experiment.config.sensitivity.fd_ensemble)
    if _wants(experiment, "json"):
        written.append(artifact_cache.write_json(out_dir / "fd.json", record))
    if _wants(experiment, "csv"):
        written.append(artifact_cache.write_csv(out_dir / "fd.csv", ["value", "stderr", "horizon"],
                                                [[result.value, result.stderr, result.horizon]]))
    print(format_comparison_table({result.method: result}))
    StatusBanner(experiment, "fd").print_outputs(written)
    return 0


COMMAND_HANDLERS = {
    "clv": cmd_clv,
    "shadow": cmd_shadow,
    "sens": cmd_sens,
    "verify": cmd_verify,
    "fd": cmd_fd,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Einstiegspunkt der CLI; liefert den Exit-Code."""
    args = build_parser().parse_args(argv)
    SETTINGS.set_debug(args.debug)
    SETTINGS.set_progress(not args.no_progress)
    logger.debug(f"Befehl {args.command} mit {args.config}")
    return COMMAND_HANDLERS[args.command](args)
