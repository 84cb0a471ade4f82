"""
/shadowlab/sensitivity.py
Version: 1.0.0
------------------------------
ID: SHADOWLAB-SENSITIVITY-01
Beschreibung: Sensitivitäten d⟨J⟩/ds aus tangentialen und adjungierten
Schattenrichtungen (Fluss und Abbildung) sowie die Referenz durch zentrale
Differenzen über Ensemblemittel.

Flüsse verwenden die normierte Form mit 1/T. Der statistische Fehler wird
aus 10 gleich langen Teilsegmenten geschätzt (Batch-Mittel).

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from shadowlab.dynamics import FLOW, MAP, Spec, Trajectory, advance, spinup, trapezoid_weights
from shadowlab.error_handler import InputError
from shadowlab.shadowing import AdjointShadowing, MapShadowing, TangentShadowing

# Logger für dieses Modul
logger = logging.getLogger("Sensitivity")

DEFAULT_SEGMENTS = 10
# interior: vertrauenswürdiges Fenster [buffer, n - buffer]; full: ganzer Konstruktionsbereich
AVERAGING_MODES = ("interior", "full")
DEFAULT_AVERAGING = "interior"
DEFAULT_FD_STEPS = {"lorenz63": 0.5, "catmap": 0.01}
FALLBACK_FD_STEP = 0.01

TANGENT_FLOW = "tangent-flow"
ADJOINT_FLOW = "adjoint-flow"
TANGENT_MAP = "tangent-map"
ADJOINT_MAP = "adjoint-map"
FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class SensitivityResult:
    """
    Schätzung von d⟨J⟩/ds.

    Attributes:
        value (float): Schätzwert
        horizon (float): Mittelungsdauer T (Flüsse) bzw. Schrittzahl N (Abbildungen)
        stderr (float): statistischer Fehler aus Batch-Mitteln oder Ensemblestreuung
        method (str): tangent-flow, adjoint-flow, tangent-map, adjoint-map oder finite-difference
        system (str): Systemname
        parameter (float): Parameterwert s
        direction (str): Parameterrichtung ("s" für den Hauptparameter)
    """
    value: float
    horizon: float
    stderr: float
    method: str
    system: str = ""
    parameter: float = 0.0
    direction: str = "s"

    def __post_init__(self):
        if not self.stderr >= 0:
            raise InputError(f"stderr muss >= 0 sein, erhalten: {self.stderr}")
        if not self.horizon > 0:
            raise InputError(f"horizon muss > 0 sein, erhalten: {self.horizon}")

    def as_dict(self) -> dict:
        return {"method": self.method, "value": self.value, "stderr": self.stderr,
                "horizon": self.horizon, "system": self.system, "parameter": self.parameter,
                "direction": self.direction}


def batch_stderr(series, weights=None, segments: int = DEFAULT_SEGMENTS) -> float:
    """
    Standardfehler des (gewichteten) Mittels aus zusammenhängenden Teilsegmenten.

    Args:
        series: Werte der Form (n,)
        weights: Quadraturgewichte der Form (n,), None = gleichgewichtet
        segments (int): Anzahl der Segmente

    Returns:
        float: std(Segmentmittel, ddof=1) / sqrt(K), 0 bei weniger als zwei Segmenten
    """
    series = np.asarray(series, dtype=float)
    weights = np.ones_like(series) if weights is None else np.asarray(weights, dtype=float)
    count = min(int(segments), series.size)
    if count < 2:
        return 0.0
    means = []
    for part, w in zip(np.array_split(series, count), np.array_split(weights, count)):
        total = w.sum()
        means.append(float(part @ w / total) if total > 0 else float(part.mean()))
    return float(np.std(means, ddof=1) / np.sqrt(count))


def _parameter_terms(traj: Trajectory, direction: Optional[str]) -> Tuple[np.ndarray, np.ndarray]:
    """(f_s, J_s) an allen Gitterpunkten für den Haupt- oder einen Zusatzparameter."""
    if direction is None or direction == "s":
        return traj.param_forcing, traj.objective_param_derivatives
    return traj.direction_forcing(direction)


def _check_spec(traj: Trajectory, spec: Optional[Spec], kind: str) -> Spec:
    spec = spec or traj.spec
    if spec.name != traj.spec.name:
        raise InputError(f"System {spec.name} passt nicht zur Trajektorie von {traj.spec.name}")
    if traj.kind != kind:
        raise InputError(f"Formel für {kind} auf {traj.kind} angewendet")
    return spec


def averaging_bounds(shadow, averaging: str = DEFAULT_AVERAGING) -> Tuple[int, int]:
    """Mittelungsbereich (lo, hi) relativ zum Konstruktionsbeginn."""
    if averaging not in AVERAGING_MODES:
        raise InputError(f"Unbekannte Mittelung '{averaging}' (erlaubt: {', '.join(AVERAGING_MODES)})")
    lo, hi = (0, shadow.n_steps) if averaging == "full" else shadow.window
    if hi - lo < 1:
        raise InputError("Leeres Mittelungsfenster")
    return int(lo), int(hi)


def _flow_range(shadow, averaging: str) -> np.ndarray:
    lo, hi = averaging_bounds(shadow, averaging)
    return np.arange(lo, hi + 1)


def _flow_result(integrand: np.ndarray, h: float, method: str, traj: Trajectory, direction: str) -> SensitivityResult:
    weights = trapezoid_weights(integrand.size, h)
    value = float(weights @ integrand / weights.sum())
    stderr = batch_stderr(integrand, weights)
    result = SensitivityResult(value=value, horizon=float(weights.sum()), stderr=stderr, method=method,
                               system=traj.spec.name, parameter=traj.parameter, direction=direction or "s")
    logger.info(f"{method} ({result.direction}): {value:.6g} ± {stderr:.2g} über T = {result.horizon:g}")
    return result


def sensitivity_tangent_flow(traj: Trajectory, shadow: TangentShadowing, spec: Optional[Spec] = None,
                             averaging: str = DEFAULT_AVERAGING, direction: Optional[str] = None) -> SensitivityResult:
    """
    Tangentiale Flussformel: Trapezmittel von ⟨J_u, v^±⟩ + η J̃ + J_s.

    Für eine Zusatzrichtung muss `shadow` mit deren f_p aufgebaut sein.
    """
    _check_spec(traj, spec, FLOW)
    ks = _flow_range(shadow, averaging)
    idx = shadow.start + ks
    _, param_objective = _parameter_terms(traj, direction)
    fluctuation = traj.objective_values[idx] - traj.objective_mean
    integrand = (np.einsum("km,km->k", traj.objective_gradients[idx], shadow.v_pm[ks])
                 + shadow.eta[ks] * fluctuation + param_objective[idx])
    return _flow_result(integrand, traj.step, TANGENT_FLOW, traj, direction)


def sensitivity_adjoint_flow(traj: Trajectory, shadow: AdjointShadowing, spec: Optional[Spec] = None,
                             averaging: str = DEFAULT_AVERAGING, direction: Optional[str] = None) -> SensitivityResult:
    """Adjungierte Flussformel: Trapezmittel von ⟨v̄, f_s⟩ + J_s."""
    _check_spec(traj, spec, FLOW)
    ks = _flow_range(shadow, averaging)
    idx = shadow.start + ks
    forcing, param_objective = _parameter_terms(traj, direction)
    integrand = np.einsum("km,km->k", shadow.v_bar[ks], forcing[idx]) + param_objective[idx]
    return _flow_result(integrand, traj.step, ADJOINT_FLOW, traj, direction)


def _map_result(integrand: np.ndarray, method: str, traj: Trajectory, direction: Optional[str]) -> SensitivityResult:
    if integrand.size < 1:
        raise InputError("Leeres Mittelungsfenster")
    value = float(integrand.mean())
    stderr = batch_stderr(integrand)
    result = SensitivityResult(value=value, horizon=float(integrand.size), stderr=stderr, method=method,
                               system=traj.spec.name, parameter=traj.parameter, direction=direction or "s")
    logger.info(f"{method} ({result.direction}): {value:.6g} ± {stderr:.2g} über N = {integrand.size}")
    return result


def sensitivity_tangent_map(traj: Trajectory, shadow: MapShadowing, spec: Optional[Spec] = None,
                            direction: Optional[str] = None, averaging: str = DEFAULT_AVERAGING) -> SensitivityResult:
    """Tangentiale Abbildungsformel: (1/N) Σ_{lo<=i<hi} (⟨J_{ui}, v_{Ni}⟩ + J_{si})."""
    _check_spec(traj, spec, MAP)
    if shadow.v is None:
        raise InputError("Tangentiale Schattenfolge fehlt")
    ks = np.arange(*averaging_bounds(shadow, averaging))
    idx = shadow.start + ks
    _, param_objective = _parameter_terms(traj, direction)
    integrand = np.einsum("km,km->k", traj.objective_gradients[idx], shadow.v[ks]) + param_objective[idx]
    return _map_result(integrand, TANGENT_MAP, traj, direction)


def sensitivity_adjoint_map(traj: Trajectory, shadow: MapShadowing, spec: Optional[Spec] = None,
                            direction: Optional[str] = None, averaging: str = DEFAULT_AVERAGING) -> SensitivityResult:
    """Adjungierte Abbildungsformel: (1/N) Σ_{lo<=l<hi} (⟨v̄_{l+1}, f_{sl}⟩ + J_{sl}); v̄_0 entfällt."""
    _check_spec(traj, spec, MAP)
    if shadow.v_bar is None:
        raise InputError("Adjungierte Schattenfolge fehlt")
    ks = np.arange(*averaging_bounds(shadow, averaging))
    idx = shadow.start + ks
    forcing, param_objective = _parameter_terms(traj, direction)
    integrand = np.einsum("km,km->k", shadow.v_bar[ks + 1], forcing[idx]) + param_objective[idx]
    return _map_result(integrand, ADJOINT_MAP, traj, direction)


def map_identity_sums(traj: Trajectory, tangent: MapShadowing, adjoint: MapShadowing) -> Tuple[float, float]:
    """
    Beide Seiten der exakten Identität Σ_{i<N} ⟨J_{ui}, v_i⟩ = Σ_{l<N} ⟨v̄_{l+1}, f_{sl}⟩.
    """
    if tangent.v is None or adjoint.v_bar is None:
        raise InputError("Beide Schattenfolgen werden benötigt")
    if tangent.start != adjoint.start or tangent.n_steps != adjoint.n_steps:
        raise InputError("Tangentiale und adjungierte Folge haben verschiedene Bereiche")
    n = tangent.n_steps
    idx = tangent.start + np.arange(n)
    lhs = float(np.einsum("km,km->", traj.objective_gradients[idx], tangent.v[:n]))
    rhs = float(np.einsum("km,km->", adjoint.v_bar[1:], traj.param_forcing[idx]))
    return lhs, rhs


def sensitivity_adjoint_directions(traj: Trajectory, shadow, spec: Optional[Spec] = None,
                                   names: Iterable[str] = ("s",),
                                   averaging: str = DEFAULT_AVERAGING) -> List[SensitivityResult]:
    """
    Wertet eine adjungierte Schattenrichtung für mehrere Parameterrichtungen aus.

    v̄ hängt nicht vom Parameter ab; je Richtung ist nur das Skalarprodukt
    mit f_p neu zu bilden.
    """
    results = []
    for name in names:
        if traj.kind == FLOW:
            results.append(sensitivity_adjoint_flow(traj, shadow, spec, averaging=averaging, direction=name))
        else:
            results.append(sensitivity_adjoint_map(traj, shadow, spec, direction=name, averaging=averaging))
    return results


class _SegmentAverager:
    """Beobachter für advance: summiert J je Teilsegment (linke Riemann-Summe)."""

    def __init__(self, spec: Spec, s: float, n_steps: int, members: int, segments: int):
        self.spec = spec
        self.s = s
        self.n_steps = n_steps
        self.segments = segments
        self.sums = np.zeros((segments, members))
        self.counts = np.zeros(segments)

    def __call__(self, i: int, u: np.ndarray):
        seg = i * self.segments // self.n_steps
        self.sums[seg] += self.spec.objective_value(u, self.s)
        self.counts[seg] += 1

    def member_means(self) -> np.ndarray:
        return self.sums.sum(axis=0) / self.counts.sum()

    def segment_means(self) -> np.ndarray:
        return self.sums / self.counts[:, None]


def finite_difference_oracle(spec: Spec, s: float, ds: Optional[float] = None, horizon: float = 100.0,
                             n_ensemble: int = 1, seed: int = 0, step: Optional[float] = None,
                             spinup_duration: Optional[float] = None, segments: int = DEFAULT_SEGMENTS,
                             progress: bool = False) -> SensitivityResult:
    """
    Zentrale Differenz (⟨J⟩_{s+ds} - ⟨J⟩_{s-ds}) / (2 ds) über Ensemblemittel.

    Beide Seiten starten von denselben Anfangszuständen. Das Ensemble wird als
    ein Batch integriert.

    Args:
        spec: Fluss oder Abbildung
        s (float): Parameterwert
        ds (float | None): Differenzschritt > 0, None = Systemstandard
        horizon (float): Mittelungsdauer (Zeit bzw. Schritte) nach dem Einschwingen
        n_ensemble (int): Anzahl der Anfangszustände >= 1
        seed (int): Seed für die Anfangszustände
        step (float | None): Schrittweite für Flüsse
        spinup_duration (float | None): Einschwingdauer, None = Systemstandard
        segments (int): Segmente für den Fehler bei einem einzelnen Ensemblemitglied
        progress (bool): Fortschrittsbalken anzeigen

    Raises:
        InputError: Bei ds <= 0, n_ensemble < 1 oder horizon <= 0
        DivergenceError: Aus der Integration
    """
    ds = DEFAULT_FD_STEPS.get(spec.name, FALLBACK_FD_STEP) if ds is None else float(ds)
    if not ds > 0:
        raise InputError(f"ds muss > 0 sein, erhalten: {ds}")
    if int(n_ensemble) < 1:
        raise InputError(f"n_ensemble muss >= 1 sein, erhalten: {n_ensemble}")
    if not horizon > 0:
        raise InputError(f"horizon muss > 0 sein, erhalten: {horizon}")
    h = spec.default_step if step is None else float(step)
    n_steps = int(round(horizon / h)) if spec.kind == FLOW else int(round(horizon))
    if n_steps < segments:
        raise InputError(f"horizon {horizon} ergibt nur {n_steps} Schritte (mindestens {segments})")
    duration = spec.spinup_duration if spinup_duration is None else spinup_duration

    rng = np.random.default_rng(seed)
    initial = spec.sample_initial(rng, int(n_ensemble))
    averagers = []
    for label, value in (("s+ds", s + ds), ("s-ds", s - ds)):
        logger.info(f"Differenzenreferenz {spec.name}: {label} = {value:g}, {n_ensemble} Mitglieder")
        start = spinup(spec, initial, value, duration, h=h, progress=progress)
        averager = _SegmentAverager(spec, value, n_steps, int(n_ensemble), segments)
        advance(spec, start, value, n_steps, h=h, progress=progress, observer=averager,
                desc=f"Differenzen {label}")
        averagers.append(averager)

    plus, minus = averagers
    per_member = (plus.member_means() - minus.member_means()) / (2.0 * ds)
    value = float(per_member.mean())
    if per_member.size >= 2:
        stderr = float(np.std(per_member, ddof=1) / np.sqrt(per_member.size))
    else:
        per_segment = (plus.segment_means() - minus.segment_means())[:, 0] / (2.0 * ds)
        stderr = float(np.std(per_segment, ddof=1) / np.sqrt(per_segment.size))
    logger.info(f"Differenzenreferenz: {value:.6g} ± {stderr:.2g}")
    return SensitivityResult(value=value, horizon=float(horizon), stderr=stderr, method=FINITE_DIFFERENCE,
                             system=spec.name, parameter=float(s))
