# /shadowlab/utils/config_handler.py
"""
Verwaltet das Lesen, Prüfen und Schreiben der Experimentkonfiguration (YAML).

Die YAML-Datei wird in eingefrorene Datenklassen übersetzt; jede Abweichung
vom Schema (unbekannte Sektion oder Schlüssel, falscher Typ, nicht positive
Zahl, unbekanntes System) führt zu einem ConfigError, bevor eine
Ausgabedatei angelegt wird.
"""
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import yaml

from shadowlab.error_handler import ConfigError, safe_file_operation
from shadowlab.systems import get_system

logger = logging.getLogger("ConfigHandler")

METHOD_ALIASES = {
    "tangent": {"flow": "tangent-flow", "map": "tangent-map"},
    "adjoint": {"flow": "adjoint-flow", "map": "adjoint-map"},
    "fd": {"flow": "finite-difference", "map": "finite-difference"},
}
METHODS = {
    "flow": ("tangent-flow", "adjoint-flow", "finite-difference"),
    "map": ("tangent-map", "adjoint-map", "finite-difference"),
}
OUTPUT_FORMATS = ("json", "csv")


@dataclass(frozen=True)
class SystemSection:
    name: str = "lorenz63"
    parameter: Optional[float] = None


@dataclass(frozen=True)
class TrajectorySection:
    u0: Optional[Tuple[float, ...]] = None
    seed: int = 0
    spinup: Optional[float] = None
    horizon: float = 60.0
    step: Optional[float] = None


@dataclass(frozen=True)
class ClvSection:
    neutral_tolerance: Optional[float] = None
    qr_stride: Optional[int] = None
    transient_forward: float = 0.2
    transient_backward: float = 0.2


@dataclass(frozen=True)
class ShadowingSection:
    buffer: Optional[int] = None
    averaging: str = "interior"


@dataclass(frozen=True)
class SensitivitySection:
    methods: Tuple[str, ...] = ("tangent", "adjoint")
    fd_step: Optional[float] = None
    fd_ensemble: int = 4
    fd_horizon: Optional[float] = None
    directions: Tuple[str, ...] = ()


@dataclass(frozen=True)
class VerifySection:
    samples: int = 100
    inject_fault: Optional[float] = None


@dataclass(frozen=True)
class OutputSection:
    directory: str = "results"
    formats: Tuple[str, ...] = OUTPUT_FORMATS
    frames: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Vollständige, geprüfte Experimentkonfiguration."""
    system: SystemSection = field(default_factory=SystemSection)
    trajectory: TrajectorySection = field(default_factory=TrajectorySection)
    clv: ClvSection = field(default_factory=ClvSection)
    shadowing: ShadowingSection = field(default_factory=ShadowingSection)
    sensitivity: SensitivitySection = field(default_factory=SensitivitySection)
    verify: VerifySection = field(default_factory=VerifySection)
    output: OutputSection = field(default_factory=OutputSection)

    def with_overrides(self, out: Optional[str] = None, seed: Optional[int] = None,
                       fmt: Optional[str] = None) -> "ExperimentConfig":
        """Übernimmt CLI-Flags (--out, --seed, --format) in eine neue Konfiguration."""
        config = self
        if out is not None:
            config = replace(config, output=replace(config.output, directory=str(out)))
        if seed is not None:
            if int(seed) < 0:
                raise ConfigError(f"--seed muss >= 0 sein, erhalten: {seed}")
            config = replace(config, trajectory=replace(config.trajectory, seed=int(seed)))
        if fmt is not None:
            if fmt not in OUTPUT_FORMATS:
                raise ConfigError(f"Unbekanntes Ausgabeformat '{fmt}'")
            config = replace(config, output=replace(config.output, formats=(fmt,)))
        return config

    def resolved_methods(self, kind: str) -> Tuple[str, ...]:
        """Übersetzt Kurzformen (tangent, adjoint, fd) in Methodenbezeichner für die Systemart."""
        resolved = []
        for name in self.sensitivity.methods:
            tag = METHOD_ALIASES[name][kind] if name in METHOD_ALIASES else name
            if tag not in METHODS[kind]:
                raise ConfigError(f"Methode '{name}' passt nicht zu einem System der Art '{kind}'")
            if tag not in resolved:
                resolved.append(tag)
        return tuple(resolved)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for section in data.values():
            for key, value in section.items():
                if isinstance(value, tuple):
                    section[key] = list(value)
        return data


_SECTIONS = {
    "system": SystemSection,
    "trajectory": TrajectorySection,
    "clv": ClvSection,
    "shadowing": ShadowingSection,
    "sensitivity": SensitivitySection,
    "verify": VerifySection,
    "output": OutputSection,
}


def _number(section: str, key: str, value, kind=float, positive=False, non_negative=False, optional=True):
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{section}.{key} fehlt")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} muss eine Zahl sein, erhalten: {value!r}")
    if kind is int and float(value) != int(value):
        raise ConfigError(f"{section}.{key} muss ganzzahlig sein, erhalten: {value!r}")
    value = kind(value)
    if positive and not value > 0:
        raise ConfigError(f"{section}.{key} muss positiv sein, erhalten: {value}")
    if non_negative and value < 0:
        raise ConfigError(f"{section}.{key} muss >= 0 sein, erhalten: {value}")
    return value


def _names(section: str, key: str, value) -> Tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{section}.{key} muss eine Liste von Namen sein, erhalten: {value!r}")
    return tuple(value)


def _section(raw: dict, name: str) -> dict:
    data = raw.get(name) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"Sektion '{name}' muss eine Zuordnung sein")
    allowed = set(_SECTIONS[name].__dataclass_fields__)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"Unbekannte Schlüssel in '{name}': {', '.join(unknown)}")
    return data


def parse_experiment_config(raw: Optional[dict]) -> ExperimentConfig:
    """
    Prüft eine geladene YAML-Struktur und erzeugt die ExperimentConfig.

    Args:
        raw (dict | None): Ergebnis von yaml.safe_load

    Returns:
        ExperimentConfig: Geprüfte Konfiguration

    Raises:
        ConfigError: Bei jeder Schemaverletzung
    """
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("Konfiguration muss eine YAML-Zuordnung sein")
    unknown = sorted(set(raw) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"Unbekannte Sektionen: {', '.join(unknown)}")

    s = _section(raw, "system")
    name = s.get("name", SystemSection.name)
    if not isinstance(name, str):
        raise ConfigError(f"system.name muss ein Name sein, erhalten: {name!r}")
    spec = get_system(name)
    system = SystemSection(name=name, parameter=_number("system", "parameter", s.get("parameter")))

    t = _section(raw, "trajectory")
    u0 = t.get("u0")
    if u0 is not None:
        if not isinstance(u0, (list, tuple)) or len(u0) != spec.dim:
            raise ConfigError(f"trajectory.u0 muss {spec.dim} Einträge haben, erhalten: {u0!r}")
        u0 = tuple(_number("trajectory", "u0", v, optional=False) for v in u0)
    trajectory = TrajectorySection(
        u0=u0,
        seed=_number("trajectory", "seed", t.get("seed", 0), kind=int, non_negative=True, optional=False),
        spinup=_number("trajectory", "spinup", t.get("spinup"), non_negative=True),
        horizon=_number("trajectory", "horizon", t.get("horizon", TrajectorySection.horizon),
                        positive=True, optional=False),
        step=_number("trajectory", "step", t.get("step"), positive=True),
    )

    c = _section(raw, "clv")
    clv = ClvSection(
        neutral_tolerance=_number("clv", "neutral_tolerance", c.get("neutral_tolerance"), positive=True),
        qr_stride=_number("clv", "qr_stride", c.get("qr_stride"), kind=int, positive=True),
        transient_forward=_number("clv", "transient_forward", c.get("transient_forward", 0.2),
                                  non_negative=True, optional=False),
        transient_backward=_number("clv", "transient_backward", c.get("transient_backward", 0.2),
                                   non_negative=True, optional=False),
    )
    for key in ("transient_forward", "transient_backward"):
        if getattr(clv, key) >= 0.5:
            raise ConfigError(f"clv.{key} muss kleiner als 0.5 sein")

    sh = _section(raw, "shadowing")
    averaging = sh.get("averaging", ShadowingSection.averaging)
    if averaging not in ("interior", "full"):
        raise ConfigError(f"shadowing.averaging muss 'interior' oder 'full' sein, erhalten: {averaging!r}")
    shadowing = ShadowingSection(
        buffer=_number("shadowing", "buffer", sh.get("buffer"), kind=int, non_negative=True),
        averaging=averaging)

    se = _section(raw, "sensitivity")
    methods = _names("sensitivity", "methods", se.get("methods", list(SensitivitySection.methods)))
    known = set(METHOD_ALIASES) | set(METHODS[spec.kind])
    bad = [m for m in methods if m not in known]
    if bad:
        raise ConfigError(f"Unbekannte Methoden für {spec.name}: {', '.join(bad)}")
    directions = _names("sensitivity", "directions", se.get("directions"))
    missing = [d for d in directions if d != "s" and d not in spec.parameter_directions]
    if missing:
        raise ConfigError(f"Unbekannte Parameterrichtungen für {spec.name}: {', '.join(missing)}")
    sensitivity = SensitivitySection(
        methods=methods,
        fd_step=_number("sensitivity", "fd_step", se.get("fd_step"), positive=True),
        fd_ensemble=_number("sensitivity", "fd_ensemble", se.get("fd_ensemble", 4), kind=int,
                            positive=True, optional=False),
        fd_horizon=_number("sensitivity", "fd_horizon", se.get("fd_horizon"), positive=True),
        directions=directions)

    v = _section(raw, "verify")
    verify = VerifySection(
        samples=_number("verify", "samples", v.get("samples", 100), kind=int, positive=True, optional=False),
        inject_fault=_number("verify", "inject_fault", v.get("inject_fault"), positive=True))

    o = _section(raw, "output")
    formats = _names("output", "formats", o.get("formats", list(OUTPUT_FORMATS)))
    bad = [f for f in formats if f not in OUTPUT_FORMATS]
    if bad or not formats:
        raise ConfigError(f"output.formats muss aus {', '.join(OUTPUT_FORMATS)} bestehen, erhalten: {formats!r}")
    directory = o.get("directory", OutputSection.directory)
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory muss ein Pfad sein")
    frames = o.get("frames", False)
    if not isinstance(frames, bool):
        raise ConfigError("output.frames muss true oder false sein")
    output = OutputSection(directory=directory, formats=formats, frames=frames)

    return ExperimentConfig(system=system, trajectory=trajectory, clv=clv, shadowing=shadowing,
                            sensitivity=sensitivity, verify=verify, output=output)


class ConfigManager:
    def __init__(self, config_path="config/settings.yaml"):
        self.config_path = config_path

    @safe_file_operation
    def load_raw(self) -> dict:
        """Lädt die YAML-Datei ohne Schemaprüfung."""
        if not os.path.exists(self.config_path):
            raise ConfigError(f"Konfigurationsdatei fehlt: {self.config_path}")
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                return yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Fehler beim Parsen der YAML-Datei: {e}")

    def load_experiment_config(self) -> ExperimentConfig:
        """Lädt und prüft die Experimentkonfiguration."""
        config = parse_experiment_config(self.load_raw())
        logger.info(f"Konfiguration geladen: {self.config_path} (System {config.system.name})")
        return config

    @safe_file_operation
    def save_resolved_config(self, config: ExperimentConfig, path: str) -> bool:
        """Schreibt die tatsächlich verwendete Konfiguration neben die Ergebnisse."""
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(config.as_dict(), f, default_flow_style=False, sort_keys=True)
        logger.info(f"Verwendete Konfiguration gespeichert: {path}")
        return True
