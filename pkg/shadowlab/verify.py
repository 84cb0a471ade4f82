# /shadowlab/verify.py
"""
Version: 1.0.0
------------------------------
ID: SHADOWLAB-VERIFY-01
Beschreibung: Führt die Eigenschaftsprüfungen eines Experiments durch.

Jede Prüfung misst eine Größe über zufällig gezogene Zufallsziehungen (Schritt,
Vektor, CLV-Auswahl) und vergleicht das Maximum mit einer festen Schranke:
- Kommutieren von Propagation und Projektion (tangential und adjungiert)
- Schranken, Idempotenz und Zerlegung der Eins für die Projektoren
- Konstanz der Paarung ⟨w̄, w⟩ und Biorthogonalität der dualen Basis
- Wachstumsraten der adjungierten CLVs, Formel für P̄⁰
- Definierende Eigenschaften der Schattenrichtungen, bei Flüssen mit dem
  Trend von ⟨v̄, f⟩ über wachsende Horizonte
- Summenidentität (Abbildungen) bzw. Gleichheit tangential/adjungiert (Flüsse),
  beide über den ganzen Konstruktionsbereich

Die Zufallsziehungen werden aus dem Seed der Konfiguration gezogen; gleiche
Konfiguration liefert denselben Bericht.

Stand: Oktober 2026
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from colorama import Fore, Style

from shadowlab.adjoint import adjoint_exponents, adjoint_project, adjoint_propagate, neutral_project_via_y
from shadowlab.dynamics import FLOW, trapezoid_weights
from shadowlab.shadowing import FAULT_MODES, inject_unstable_fault, verify_properties
from shadowlab.sensitivity import map_identity_sums, sensitivity_adjoint_flow, sensitivity_tangent_flow
from shadowlab.tangent import ClvBasis, project, project_all, projector, propagate

logger = logging.getLogger("Verify")

BOUND_SLACK = 1e-9
COMMUTATION_TOLERANCE = 1e-6
IDEMPOTENCE_TOLERANCE = 1e-12
PARTITION_TOLERANCE = 1e-10
PAIRING_TOLERANCE = {"flow": 1e-5, "map": 1e-10}
BIORTHOGONALITY_TOLERANCE = 1e-8
EXPONENT_TOLERANCE = 0.02
NEUTRAL_FORMULA_TOLERANCE = 1e-8
MAP_IDENTITY_TOLERANCE = 1e-10
FLOW_EQUIVALENCE_TOLERANCE = 1e-5
TANGENT_NEUTRAL_TOLERANCE = 1e-8
MAP_TANGENT_RESIDUAL = 1e-10
# Größter Abstand i2 - i1 beim Kommutieren; bei Flüssen höchstens ein QR-Intervall
MAP_COMMUTATION_SPAN = 20
PAIRING_SPAN = {"flow": 50, "map": 20}
# Anfangsstücke T/16 ... T/2 für den Trend von ⟨v̄, f⟩
PREFIX_PARTS = 16


@dataclass
class PropertyCheck:
    """Eine gemessene Eigenschaft mit Schranke."""
    name: str
    measured: float
    threshold: float
    samples: int = 1
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.measured) and self.measured <= self.threshold)

    def as_dict(self) -> dict:
        return {"name": self.name, "measured": float(self.measured), "threshold": float(self.threshold),
                "samples": int(self.samples), "passed": self.passed, "detail": self.detail}


@dataclass
class VerificationReport:
    system: str
    kind: str
    checks: List[PropertyCheck] = field(default_factory=list)
    fault_epsilon: Optional[float] = None
    fault_mode: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def as_dict(self) -> dict:
        return {
            "system": self.system,
            "kind": self.kind,
            "passed": self.passed,
            "failures": self.failures(),
            "fault_injection": None if self.fault_epsilon is None
            else {"epsilon": self.fault_epsilon, "mode": self.fault_mode},
            "checks": [check.as_dict() for check in self.checks],
        }


def _families(clv: ClvBasis) -> list:
    """Alle Auswahlen, für die Projektionen definiert sind."""
    families = list(range(clv.dim))
    if clv.n_unstable > 0:
        families.append("plus")
    if np.any(clv.selection("minus")):
        families.append("minus")
    if clv.kind == FLOW and clv.neutral_index is not None:
        families += ["zero", "pm"]
    return families


def _relative(error: float, scale: float) -> float:
    if scale == 0.0:
        return 0.0 if error == 0.0 else float(np.inf)
    return float(error / scale)


class PropertySuite:
    """
    Sammlung der zufallsbasierten Prüfungen für ein Experiment.

    Args:
        experiment: ShadowingExperiment mit Bahn, CLVs, dualer Basis und Schattenrichtungen
        samples (int): Zufallsziehungen je Prüfung
        seed (int): Seed des Zufallsgenerators
    """

    def __init__(self, experiment, samples: int = 100, seed: int = 0):
        self.experiment = experiment
        self.traj = experiment.trajectory
        self.clv = experiment.clv
        self.adj = experiment.adjoint_basis
        self.samples = int(samples)
        self.rng = np.random.default_rng(seed)
        self.families = _families(self.clv)

    # --- Zufallsziehungen ---

    def _steps(self) -> np.ndarray:
        return self.rng.integers(self.clv.start, self.clv.stop + 1, size=self.samples)

    def _pairs(self, lo: int, hi: int, span: int):
        first = self.rng.integers(lo, hi, size=self.samples)
        second = np.minimum(first + self.rng.integers(1, span + 1, size=self.samples), hi)
        return first, second

    def _vector(self) -> np.ndarray:
        return self.rng.standard_normal(self.traj.dim)

    def _family(self):
        return self.families[int(self.rng.integers(len(self.families)))]

    def _commutation_span(self) -> int:
        return self.clv.qr_stride if self.clv.kind == FLOW else MAP_COMMUTATION_SPAN

    # --- Tangentenseite ---

    def tangent_commutation(self) -> PropertyCheck:
        worst = 0.0
        for i1, i2 in zip(*self._pairs(self.clv.start, self.clv.stop, self._commutation_span())):
            v, which = self._vector(), self._family()
            moved = propagate(self.traj, i1, i2, v)
            a = propagate(self.traj, i1, i2, project(self.clv, i1, which, v))
            b = project(self.clv, i2, which, moved)
            worst = max(worst, _relative(np.linalg.norm(a - b), np.linalg.norm(moved)))
        return PropertyCheck("tangent_commutation", worst, COMMUTATION_TOLERANCE, self.samples,
                             "‖D P v - P D v‖ / ‖D v‖")

    def _bound(self, name: str, apply: Callable) -> PropertyCheck:
        worst = 0.0
        bound = self.clv.projection_bound
        for i in self._steps():
            v, which = self._vector(), self._family()
            worst = max(worst, _relative(np.linalg.norm(apply(i, which, v)), bound * np.linalg.norm(v)))
        return PropertyCheck(name, worst, 1.0 + BOUND_SLACK, self.samples,
                             f"‖P v‖ / (C_α ‖v‖), C_α = {bound:.4g}")

    def projection_bound(self) -> PropertyCheck:
        return self._bound("projection_bound", lambda i, which, v: project(self.clv, i, which, v))

    def projector_idempotence(self) -> PropertyCheck:
        worst = 0.0
        for i in self._steps():
            p = projector(self.clv, i, self._family())
            worst = max(worst, _relative(np.linalg.norm(p @ p - p, ord=2), max(1.0, np.linalg.norm(p, ord=2) ** 2)))
        return PropertyCheck("projector_idempotence", worst, IDEMPOTENCE_TOLERANCE, self.samples,
                             "‖P² - P‖ / max(1, ‖P‖²)")

    def projector_partition(self) -> PropertyCheck:
        worst = 0.0
        identity = np.eye(self.clv.dim)
        split = [name for name in ("plus", "minus", "zero") if name in self.families]
        for i in self._steps():
            total = sum(projector(self.clv, i, j) for j in range(self.clv.dim))
            worst = max(worst, float(np.max(np.abs(total - identity))))
            if split:
                total = sum(projector(self.clv, i, name) for name in split)
                worst = max(worst, float(np.max(np.abs(total - identity))))
        return PropertyCheck("projector_partition", worst, PARTITION_TOLERANCE, self.samples,
                             f"max |Σ P - I| über {self.clv.dim} Einzel-CLVs und {'+'.join(split) or '-'}")

    def tangent_residual(self) -> PropertyCheck:
        """Inhomogene Tangentengleichung für die konstruierte Schattenrichtung."""
        shadow = self.experiment.tangent_shadowing
        traj, clv = self.traj, self.clv
        lo_w, hi_w = shadow.window
        ks = np.arange(lo_w, hi_w)
        idx = shadow.start + ks
        phi = traj.propagators[idx]
        if traj.kind == FLOW:
            v = shadow.v_pm
            h = traj.step
            offset = shadow.start - clv.start
            forcing = project_all(clv, "pm", traj.param_forcing[clv.start:clv.stop + 1])
            q = forcing[offset:offset + v.shape[0]]
            predicted = np.einsum("kij,kj->ki", phi, v[ks] + 0.5 * h * q[ks]) + 0.5 * h * q[ks + 1]
            residual = np.linalg.norm(v[ks + 1] - predicted, axis=-1) / h
            scale = np.linalg.norm(q[ks], axis=-1) + np.linalg.norm(
                np.einsum("kij,kj->ki", traj.jacobians[idx], v[ks]), axis=-1)
            sup_jac = float(np.max(np.linalg.norm(traj.jacobians[idx], ord=2, axis=(-2, -1)), initial=0.0))
            limit = 10.0 * (h * sup_jac) ** 2 / 12.0
        else:
            v = shadow.v
            predicted = np.einsum("kij,kj->ki", phi, v[ks]) + traj.param_forcing[idx]
            residual = np.linalg.norm(v[ks + 1] - predicted, axis=-1)
            scale = np.linalg.norm(traj.param_forcing[idx], axis=-1) + np.linalg.norm(predicted, axis=-1)
            limit = MAP_TANGENT_RESIDUAL
        measured = _relative(float(np.max(residual, initial=0.0)), float(np.max(scale, initial=0.0)))
        return PropertyCheck("tangent_residual", measured, limit, int(ks.size), "Residuum der Tangentengleichung")

    def tangent_neutral_component(self) -> PropertyCheck:
        shadow = self.experiment.tangent_shadowing
        offset = shadow.start - self.clv.start
        frames = self.clv.frames[offset:offset + shadow.v_pm.shape[0]]
        inverse = self.clv.inverse_frames[offset:offset + shadow.v_pm.shape[0]]
        j = self.clv.neutral_index
        neutral = frames[:, :, j] * np.einsum("km,km->k", inverse[:, j, :], shadow.v_pm)[:, None]
        measured = _relative(float(np.max(np.linalg.norm(neutral, axis=-1))),
                             float(np.max(np.linalg.norm(shadow.v_pm, axis=-1))))
        return PropertyCheck("tangent_neutral_component", measured, TANGENT_NEUTRAL_TOLERANCE,
                             shadow.v_pm.shape[0], "max ‖P⁰ v^±‖ / max ‖v^±‖")

    # --- Adjungierte Seite ---

    def window_pairing_drift(self) -> float:
        """
        Drift von ⟨w̄, w⟩ über das ganze CLV-Fenster für ein einzelnes Paar.

        w läuft vorwärts ab clv.start, w̄ rückwärts ab clv.stop, blockweise
        renormiert. An jeder Blockgrenze k ist c_k = ⟨ŵ̄_k, ŵ_k⟩ und L_k die
        Summe der Log-Normen; die Paarung ist konstant genau dann, wenn
        c_k = c_ref · exp(L_ref - L_k) gilt (Referenz: größtes |c|).
        """
        span = PAIRING_SPAN[self.traj.kind]
        bounds = list(range(self.clv.start, self.clv.stop, span)) + [self.clv.stop]
        count = len(bounds)
        forward = [np.empty(0)] * count
        backward = [np.empty(0)] * count
        log_forward = np.zeros(count)
        log_backward = np.zeros(count)

        w = self._vector()
        forward[0] = w / np.linalg.norm(w)
        log_forward[0] = np.log(np.linalg.norm(w))
        for j in range(count - 1):
            w = propagate(self.traj, bounds[j], bounds[j + 1], forward[j])
            norm = np.linalg.norm(w)
            forward[j + 1], log_forward[j + 1] = w / norm, log_forward[j] + np.log(norm)

        w_bar = self._vector()
        backward[-1] = w_bar / np.linalg.norm(w_bar)
        log_backward[-1] = np.log(np.linalg.norm(w_bar))
        for j in range(count - 1, 0, -1):
            w_bar = adjoint_propagate(self.traj, bounds[j], bounds[j - 1], backward[j])
            norm = np.linalg.norm(w_bar)
            backward[j - 1], log_backward[j - 1] = w_bar / norm, log_backward[j] + np.log(norm)

        cosines = np.array([float(b @ f) for b, f in zip(backward, forward)])
        logs = log_forward + log_backward
        ref = int(np.argmax(np.abs(cosines)))
        expected = cosines[ref] * np.exp(logs[ref] - logs)
        return float(np.max(np.abs(cosines - expected)))

    def pairing_constancy(self) -> PropertyCheck:
        kind = self.traj.kind
        worst = self.window_pairing_drift()
        for i1, i2 in zip(*self._pairs(0, self.traj.n_steps, PAIRING_SPAN[kind])):
            w, w_bar = self._vector(), self._vector()
            w_moved = propagate(self.traj, i1, i2, w)
            w_bar_moved = adjoint_propagate(self.traj, i2, i1, w_bar)
            error = abs(float(w_bar_moved @ w) - float(w_bar @ w_moved))
            scale = np.linalg.norm(w_bar) * np.linalg.norm(w_moved) + np.linalg.norm(w_bar_moved) * np.linalg.norm(w)
            worst = max(worst, _relative(error, scale))
        return PropertyCheck("pairing_constancy", worst, PAIRING_TOLERANCE[kind], self.samples + 1,
                             "|⟨w̄(i1), w(i1)⟩ - ⟨w̄(i2), w(i2)⟩| relativ, Zufallsziehungen plus ganzes CLV-Fenster")

    def biorthogonality(self) -> PropertyCheck:
        worst = 0.0
        identity = np.eye(self.clv.dim)
        for i in self._steps():
            k = self.clv.local(i)
            dual = self.adj.frames[k] * self.adj.dual_scale[k]
            worst = max(worst, float(np.max(np.abs(dual.T @ self.clv.frames[k] - identity))))
        return PropertyCheck("biorthogonality", worst, BIORTHOGONALITY_TOLERANCE, self.samples,
                             "max |⟨ȳ_j, z_k⟩ - δ_jk| mit ungenormten dualen Vektoren")

    def adjoint_commutation(self) -> PropertyCheck:
        worst = 0.0
        for i1, i2 in zip(*self._pairs(self.clv.start, self.clv.stop, self._commutation_span())):
            w_bar, which = self._vector(), self._family()
            moved = adjoint_propagate(self.traj, i2, i1, w_bar)
            a = adjoint_propagate(self.traj, i2, i1, adjoint_project(self.adj, self.clv, i2, which, w_bar))
            b = adjoint_project(self.adj, self.clv, i1, which, moved)
            worst = max(worst, _relative(np.linalg.norm(a - b), np.linalg.norm(moved)))
        return PropertyCheck("adjoint_commutation", worst, COMMUTATION_TOLERANCE, self.samples,
                             "‖D̄ P̄ w̄ - P̄ D̄ w̄‖ / ‖D̄ w̄‖")

    def adjoint_projection_bound(self) -> PropertyCheck:
        return self._bound("adjoint_projection_bound",
                           lambda i, which, v: adjoint_project(self.adj, self.clv, i, which, v))

    def adjoint_exponent_match(self) -> PropertyCheck:
        """
        Wachstumsraten der adjungierten CLVs gegen die tangentialen Exponenten.

        Die Differenz enthält den Randterm (log s_0 - log s_L) / (L h) der
        dualen Normierung; dessen obere Schranke wird zur Toleranz addiert.
        """
        rates = adjoint_exponents(self.adj, self.clv, self.traj)
        measured = float(np.max(np.abs(rates - self.clv.exponents)))
        log_scale = np.log(self.adj.dual_scale)
        boundary = float(np.max(np.ptp(log_scale, axis=0))) / (self.clv.n_window_steps * self.traj.step)
        return PropertyCheck("adjoint_exponents", measured, EXPONENT_TOLERANCE + boundary, 1,
                             f"max |λ̄_j - λ_j|, Randterm <= {boundary:.3g}")

    def neutral_projection_formula(self) -> PropertyCheck:
        worst = 0.0
        drifts = self.traj.drifts
        for i in self._steps():
            k = self.clv.local(i)
            v = self._vector()
            matrix = adjoint_project(self.adj, self.clv, i, "zero", v)
            formula = neutral_project_via_y(v, drifts[i], self.adj.neutral[k])
            worst = max(worst, _relative(np.linalg.norm(matrix - formula),
                                         max(np.linalg.norm(matrix), np.linalg.norm(formula))))
        return PropertyCheck("neutral_projection_formula", worst, NEUTRAL_FORMULA_TOLERANCE, self.samples,
                             "⟨v, f⟩ ȳ / ⟨ȳ, f⟩ gegen Z^{-T} D Zᵀ v")

    # --- Schattenrichtungen und Sensitivitäten ---

    def shadowing_properties(self, shadow) -> List[PropertyCheck]:
        report = verify_properties(shadow, self.traj, self.clv, self.adj)
        checks = []
        for name, limit in report.thresholds.items():
            value = getattr(report, name)
            checks.append(PropertyCheck(name, float(value), float(limit), shadow.n_steps + 1,
                                        "definierende Eigenschaft der adjungierten Schattenrichtung"))
        return checks

    def map_identity(self, adjoint_shadow) -> PropertyCheck:
        lhs, rhs = map_identity_sums(self.traj, self.experiment.tangent_shadowing, adjoint_shadow)
        measured = _relative(abs(lhs - rhs), max(abs(lhs), abs(rhs)))
        return PropertyCheck("map_identity", measured, MAP_IDENTITY_TOLERANCE, 1,
                             f"Σ⟨J_u, v⟩ = {lhs:.12g}, Σ⟨v̄, f_s⟩ = {rhs:.12g}")

    def f_pairing_trend(self, shadow) -> PropertyCheck:
        """
        Trend des gemittelten ⟨v̄, f⟩ über geschachtelte Anfangsstücke des Fensters.

        Gemessen wird |⟨v̄, f⟩_avg| über das ganze vertrauenswürdige Fenster
        geteilt durch das größte Mittel über die Anfangsstücke der Längen
        T/16, 2T/16, ..., T/2. Werte <= 1 heißen: der volle Horizont liegt
        nicht über den kürzeren.
        """
        lo_w, hi_w = shadow.window
        length = hi_w - lo_w
        pairing = np.einsum("km,km->k", shadow.v_bar[lo_w:hi_w + 1],
                            self.traj.drifts[shadow.start + lo_w:shadow.start + hi_w + 1])
        scale = float(np.linalg.norm(shadow.v_bar[lo_w:hi_w + 1], axis=-1).mean()
                      * np.linalg.norm(self.traj.drifts[shadow.start + lo_w:shadow.start + hi_w + 1], axis=-1).mean())

        def average(steps: int) -> float:
            weights = trapezoid_weights(steps + 1, self.traj.step)
            return _relative(abs(float(weights @ pairing[:steps + 1] / weights.sum())), scale)

        prefixes = {j: average(max(1, (j * length) // PREFIX_PARTS)) for j in range(1, PREFIX_PARTS // 2 + 1)}
        full = average(length)
        measured = _relative(full, max(prefixes.values()))
        quarter, half = prefixes[PREFIX_PARTS // 4], prefixes[PREFIX_PARTS // 2]
        return PropertyCheck("f_pairing_trend", measured, 1.0, len(prefixes) + 1,
                             f"|⟨v̄, f⟩_avg| relativ: T/4 {quarter:.3e}, T/2 {half:.3e}, T {full:.3e}")

    def flow_equivalence(self) -> PropertyCheck:
        """Tangential gegen adjungiert, beide über den ganzen Konstruktionsbereich gemittelt."""
        tangent = sensitivity_tangent_flow(self.traj, self.experiment.tangent_shadowing, averaging="full")
        adjoint = sensitivity_adjoint_flow(self.traj, self.experiment.adjoint_shadowing, averaging="full")
        measured = _relative(abs(tangent.value - adjoint.value), max(abs(tangent.value), abs(adjoint.value)))
        return PropertyCheck("flow_equivalence", measured, FLOW_EQUIVALENCE_TOLERANCE, 1,
                             f"tangential {tangent.value:.10g}, adjungiert {adjoint.value:.10g}")


def run_verification(experiment, samples: int = 100, seed: int = 0,
                     inject_fault: Optional[float] = None) -> VerificationReport:
    """
    Führt alle Prüfungen für ein Experiment aus.

    Mit `inject_fault` wird die adjungierte Schattenrichtung vor der Prüfung
    ihrer definierenden Eigenschaften um ε in Richtung des führenden instabilen
    adjungierten CLV verfälscht (Flüsse: homogen fortgesetzt, Abbildungen:
    nur v̄_0). Die Gleichheit tangential/adjungiert der Flüsse wird stets mit
    der unverfälschten Richtung gemessen.

    Returns:
        VerificationReport: Alle Messwerte; wirft bei Verletzungen nicht
    """
    suite = PropertySuite(experiment, samples=samples, seed=seed)
    kind = experiment.kind
    report = VerificationReport(system=experiment.spec.name, kind=kind)

    steps: List[Callable[[], PropertyCheck]] = [
        suite.tangent_commutation, suite.projection_bound, suite.projector_idempotence,
        suite.projector_partition, suite.tangent_residual, suite.pairing_constancy,
        suite.biorthogonality, suite.adjoint_commutation, suite.adjoint_projection_bound,
        suite.adjoint_exponent_match,
    ]
    if kind == FLOW and experiment.clv.neutral_index is not None:
        steps += [suite.tangent_neutral_component, suite.neutral_projection_formula]
    for step in steps:
        check = step()
        logger.info(f"{check.name}: {check.measured:.3e} (Schranke {check.threshold:.3e})")
        report.checks.append(check)

    shadow = experiment.adjoint_shadowing
    if inject_fault is not None:
        mode = FAULT_MODES[0] if kind == FLOW else FAULT_MODES[1]
        shadow = inject_unstable_fault(shadow, experiment.clv, experiment.adjoint_basis, inject_fault, mode)
        report.fault_epsilon, report.fault_mode = float(inject_fault), mode
    report.checks.extend(suite.shadowing_properties(shadow))

    if kind == FLOW:
        report.checks.append(suite.f_pairing_trend(shadow))
        report.checks.append(suite.flow_equivalence())
    else:
        report.checks.append(suite.map_identity(shadow))

    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Prüfung {report.system}: {len(report.checks) - len(report.failures())}/"
                      f"{len(report.checks)} bestanden")
    return report


def print_verification_report(report: VerificationReport):
    """Gibt den Bericht zeilenweise mit ✅/❌ auf der Konsole aus."""
    print(f"--- Eigenschaftsprüfung {report.system} ({report.kind}) ---")
    if report.fault_epsilon is not None:
        print(Fore.YELLOW + f"⚠️ Fehlerinjektion aktiv: ε = {report.fault_epsilon:g} ({report.fault_mode})"
              + Style.RESET_ALL)
    for check in report.checks:
        line = f"{check.name:<28} {check.measured:10.3e} <= {check.threshold:10.3e}  (n={check.samples})"
        if check.passed:
            print(Fore.GREEN + f"  ✅ {line}" + Style.RESET_ALL)
        else:
            print(Fore.RED + f"  ❌ {line}" + Style.RESET_ALL)

    print("\n--- Zusammenfassung ---")
    if report.passed:
        print(Fore.GREEN + f"✅ Alle {len(report.checks)} Eigenschaften erfüllt." + Style.RESET_ALL)
    else:
        print(Fore.RED + f"❌ Verletzt: {', '.join(report.failures())}" + Style.RESET_ALL)


def summarize(report: VerificationReport) -> Dict[str, float]:
    """Messwerte nach Namen, für Tests und Vergleiche."""
    return {check.name: check.measured for check in report.checks}
