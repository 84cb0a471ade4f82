# /shadowlab/experiment.py
"""
Version: 1.0.0
------------------------------
ID: SHADOWLAB-EXPERIMENT-01
Beschreibung: Zentrale Ablaufsteuerung eines Experiments.

ShadowingExperiment ist der Controller zwischen Konfiguration und Numerik:
jede Stufe (Bahn, CLVs, duale Basis, Schattenrichtungen, Sensitivitäten)
wird beim ersten Zugriff berechnet und danach wiederverwendet. Die CLI-Befehle
greifen nur auf die Stufen zu, die sie tatsächlich brauchen.

Stand: Oktober 2026
"""
import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from shadowlab import artifact_cache
from shadowlab.adjoint import AdjointClvBasis, dual_basis
from shadowlab.dynamics import FLOW, Spec, Trajectory, integrate, iterate, spinup
from shadowlab.error_handler import ConfigError, InputError
from shadowlab.sensitivity import (
    ADJOINT_FLOW,
    ADJOINT_MAP,
    FINITE_DIFFERENCE,
    TANGENT_FLOW,
    TANGENT_MAP,
    SensitivityResult,
    finite_difference_oracle,
    map_identity_sums,
    sensitivity_adjoint_directions,
    sensitivity_adjoint_flow,
    sensitivity_adjoint_map,
    sensitivity_tangent_flow,
    sensitivity_tangent_map,
)
from shadowlab.shadowing import (
    PropertyReport,
    adjoint_shadowing_flow,
    adjoint_shadowing_map,
    tangent_shadowing_flow,
    tangent_shadowing_map,
    verify_properties,
)
from shadowlab.systems import get_system
from shadowlab.tangent import ClvBasis, ClvOptions, compute_clvs
from shadowlab.utils.config_handler import ExperimentConfig
from shadowlab.utils.memory_estimator import format_memory_info


class ShadowingExperiment:
    def __init__(self, config: ExperimentConfig, progress: bool = False, cache_dir: Optional[Path] = None):
        """
        Initialisiert ein Experiment aus einer geprüften Konfiguration.

        Args:
            config (ExperimentConfig): Konfiguration inklusive CLI-Überschreibungen
            progress (bool): Fortschrittsbalken für Integration und Differenzenreferenz
            cache_dir (Path | None): Verzeichnis für clv_cache.npz, None = kein Cache
        """
        self.logger = logging.getLogger("Experiment")
        self.config = config
        self.progress = progress
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.clv_from_cache = False

    # --- Konfigurationsabhängige Größen ---

    @cached_property
    def spec(self) -> Spec:
        return get_system(self.config.system.name)

    @property
    def kind(self) -> str:
        return self.spec.kind

    @cached_property
    def parameter(self) -> float:
        value = self.config.system.parameter
        return float(self.spec.default_parameter if value is None else value)

    @cached_property
    def step(self) -> float:
        if self.kind != FLOW:
            return 1.0
        value = self.config.trajectory.step
        return float(self.spec.default_step if value is None else value)

    @cached_property
    def n_steps(self) -> int:
        """Schrittzahl der Analysebahn (Flüsse: horizon / h, Abbildungen: horizon)."""
        horizon = self.config.trajectory.horizon
        n = int(round(horizon / self.step)) if self.kind == FLOW else int(round(horizon))
        if n < 1:
            raise ConfigError(f"trajectory.horizon = {horizon} ergibt eine Bahn der Länge 0")
        return n

    @cached_property
    def spinup_duration(self) -> float:
        value = self.config.trajectory.spinup
        return float(self.spec.spinup_duration if value is None else value)

    @cached_property
    def clv_options(self) -> ClvOptions:
        c = self.config.clv
        try:
            return ClvOptions(qr_stride=c.qr_stride, neutral_tolerance=c.neutral_tolerance,
                              transient_forward=c.transient_forward, transient_backward=c.transient_backward,
                              seed=self.config.trajectory.seed)
        except InputError as e:
            raise ConfigError(str(e)) from e

    def validate(self):
        """Prüft alle Größen, die ohne Rechnung aus der Konfiguration folgen."""
        _ = self.spec, self.parameter, self.n_steps, self.spinup_duration, self.clv_options
        self.config.resolved_methods(self.kind)
        self.logger.info(f"Experiment {self.spec.name}: s = {self.parameter:g}, {self.n_steps} Schritte, "
                         f"h = {self.step:g}, voraussichtlich {format_memory_info(self.n_steps, self.spec.dim, self.kind)}")

    # --- Rechenstufen ---

    @cached_property
    def initial_state(self) -> np.ndarray:
        u0 = self.config.trajectory.u0
        if u0 is not None:
            return np.asarray(u0, dtype=float)
        rng = np.random.default_rng(self.config.trajectory.seed)
        return self.spec.sample_initial(rng, 1)[0]

    @cached_property
    def trajectory(self) -> Trajectory:
        self.validate()
        start = spinup(self.spec, self.initial_state, self.parameter, self.spinup_duration,
                       h=self.step, progress=self.progress)
        if self.kind == FLOW:
            traj = integrate(self.spec, start, self.parameter, self.step, self.n_steps, progress=self.progress)
        else:
            traj = iterate(self.spec, start, self.parameter, self.n_steps, progress=self.progress)
        self.logger.info(f"Bahn mit {traj.n_steps} Schritten erzeugt (Einschwingen: {self.spinup_duration:g})")
        return traj

    @cached_property
    def fingerprint(self) -> str:
        return artifact_cache.trajectory_fingerprint(self.trajectory, self.clv_options)

    @property
    def cache_path(self) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / artifact_cache.CLV_CACHE_NAME

    @cached_property
    def clv(self) -> ClvBasis:
        path = self.cache_path
        if path is not None:
            cached = artifact_cache.load_clv_cache(path, self.fingerprint)
            if cached is not None:
                self.clv_from_cache = True
                return cached
        basis = compute_clvs(self.trajectory, self.clv_options)
        if path is not None:
            artifact_cache.save_clv_cache(path, basis, self.fingerprint)
        return basis

    @cached_property
    def adjoint_basis(self) -> AdjointClvBasis:
        return dual_basis(self.clv, self.trajectory)

    @cached_property
    def tangent_shadowing(self):
        buffer = self.config.shadowing.buffer
        if self.kind == FLOW:
            return tangent_shadowing_flow(self.trajectory, self.clv, buffer=buffer)
        return tangent_shadowing_map(self.trajectory, self.clv, buffer=buffer)

    @cached_property
    def adjoint_shadowing(self):
        buffer = self.config.shadowing.buffer
        if self.kind == FLOW:
            return adjoint_shadowing_flow(self.trajectory, self.clv, self.adjoint_basis, buffer=buffer)
        return adjoint_shadowing_map(self.trajectory, self.clv, self.adjoint_basis, buffer=buffer)

    @cached_property
    def property_report(self) -> PropertyReport:
        return verify_properties(self.adjoint_shadowing, self.trajectory, self.clv, self.adjoint_basis)

    # --- Sensitivitäten ---

    def finite_difference(self) -> SensitivityResult:
        se = self.config.sensitivity
        horizon = se.fd_horizon if se.fd_horizon is not None else self.config.trajectory.horizon
        return finite_difference_oracle(self.spec, self.parameter, ds=se.fd_step, horizon=horizon,
                                        n_ensemble=se.fd_ensemble, seed=self.config.trajectory.seed,
                                        step=self.step if self.kind == FLOW else None,
                                        spinup_duration=self.spinup_duration, progress=self.progress)

    def sensitivity(self, method: str) -> SensitivityResult:
        """Berechnet die Sensitivität mit einem einzelnen Verfahren."""
        averaging = self.config.shadowing.averaging
        if method == TANGENT_FLOW:
            return sensitivity_tangent_flow(self.trajectory, self.tangent_shadowing, averaging=averaging)
        if method == ADJOINT_FLOW:
            return sensitivity_adjoint_flow(self.trajectory, self.adjoint_shadowing, averaging=averaging)
        if method == TANGENT_MAP:
            return sensitivity_tangent_map(self.trajectory, self.tangent_shadowing, averaging=averaging)
        if method == ADJOINT_MAP:
            return sensitivity_adjoint_map(self.trajectory, self.adjoint_shadowing, averaging=averaging)
        if method == FINITE_DIFFERENCE:
            return self.finite_difference()
        raise InputError(f"Unbekanntes Verfahren '{method}'")

    def sensitivities(self, methods: Optional[List[str]] = None) -> Dict[str, SensitivityResult]:
        methods = list(self.config.resolved_methods(self.kind) if methods is None else methods)
        return {method: self.sensitivity(method) for method in methods}

    def direction_sensitivities(self) -> List[SensitivityResult]:
        """Wiederverwendung der adjungierten Richtung für alle konfigurierten Zusatzparameter."""
        names = [name for name in self.config.sensitivity.directions if name != "s"]
        if not names:
            return []
        return sensitivity_adjoint_directions(self.trajectory, self.adjoint_shadowing, names=names,
                                              averaging=self.config.shadowing.averaging)

    def map_identity(self) -> Dict[str, float]:
        """Beide Seiten der exakten Summenidentität und ihr relativer Abstand (nur Abbildungen)."""
        if self.kind == FLOW:
            raise InputError("Die Summenidentität ist nur für Abbildungen definiert")
        lhs, rhs = map_identity_sums(self.trajectory, self.tangent_shadowing, self.adjoint_shadowing)
        scale = max(abs(lhs), abs(rhs))
        relative = abs(lhs - rhs) / scale if scale > 0 else 0.0
        return {"tangent_sum": lhs, "adjoint_sum": rhs, "relative_difference": relative}

    def summary(self) -> Dict[str, object]:
        """Kennzahlen für Banner und Ergebnisdateien."""
        return {
            "system": self.spec.name,
            "kind": self.kind,
            "parameter": self.parameter,
            "step": self.step,
            "n_steps": self.n_steps,
            "seed": self.config.trajectory.seed,
        }
