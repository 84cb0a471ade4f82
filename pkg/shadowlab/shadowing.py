"""
/shadowlab/shadowing.py
Version: 1.0.0
------------------------------
ID: SHADOWLAB-SHADOWING-01
Beschreibung: Tangentiale und adjungierte Schattenrichtungen für Flüsse und
Abbildungen sowie die Prüfung ihrer definierenden Eigenschaften.

Alle Konstruktionen laufen in CLV-Koordinaten: die Inhomogenität (f_s auf
der Tangentenseite, J_u auf der adjungierten Seite) wird je Schritt in der
(dualen) CLV-Basis zerlegt, die Koeffizienten werden mit den skalaren
Wachstumsfaktoren e^{r} transportiert und per Trapezregel (Flüsse) bzw.
direkter Summe (Abbildungen) akkumuliert. Stabile Anteile laufen dabei immer
in die Richtung, in der sie abklingen.

Indexkonvention: lokaler Index k = 0..n über den Konstruktionsbereich, k = 0
liegt am Trajektorienindex `start` (Fensteranfang der CLV-Basis, τ = 0).
`window` markiert das vertrauenswürdige Innere [buffer, n - buffer].

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from shadowlab.adjoint import AdjointClvBasis, adjoint_project, adjoint_propagate
from shadowlab.dynamics import FLOW, MAP, Trajectory, trapezoid_weights
from shadowlab.error_handler import InputError, TruncationError
from shadowlab.tangent import ClvBasis, project, propagate

# Logger für dieses Modul
logger = logging.getLogger("Shadowing")

BUFFER_TOLERANCE = 1e-8
TRUNCATION_TOLERANCE = 1e-6
FAULT_MODES = ("homogeneous", "point")

Span = Optional[Tuple[int, int]]


@dataclass(frozen=True, eq=False)
class TangentShadowing:
    """
    Tangentiales Schattenpaar (v^±, η) eines Flusses.

    Attributes:
        v_pm (np.ndarray): v^± an jedem lokalen Schritt, Form (n+1, m)
        eta (np.ndarray): Zeitdehnungsrate η, Form (n+1,)
        window (Tuple[int, int]): vertrauenswürdiges Inneres in lokalen Indizes
        start (int): Trajektorienindex des lokalen Schritts 0
        step (float): Schrittweite h
        buffer (int): Puffer in Schritten
    """
    v_pm: np.ndarray
    eta: np.ndarray
    window: Tuple[int, int]
    start: int
    step: float
    buffer: int
    kind: str = FLOW

    @property
    def n_steps(self) -> int:
        return self.v_pm.shape[0] - 1


@dataclass(frozen=True, eq=False)
class AdjointShadowing:
    """
    Adjungierte Schattenrichtung v̄ = v̄^± + v̄⁰ eines Flusses.

    `diagnostics` wird von verify_properties befüllt.
    """
    v_bar: np.ndarray
    v_bar_pm: np.ndarray
    v_bar_0: np.ndarray
    window: Tuple[int, int]
    start: int
    step: float
    buffer: int
    objective_mean: float
    objective_mean_source: str
    diagnostics: Dict[str, float] = field(default_factory=dict)
    kind: str = FLOW

    @property
    def n_steps(self) -> int:
        return self.v_bar.shape[0] - 1


@dataclass(frozen=True, eq=False)
class MapShadowing:
    """
    Schattenfolgen eines Diffeomorphismus: tangential v_{Ni} und/oder
    adjungiert v̄_l, jeweils für l = 0..n des Konstruktionsbereichs.
    """
    start: int
    window: Tuple[int, int]
    buffer: int
    v: Optional[np.ndarray] = None
    v_bar: Optional[np.ndarray] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)
    kind: str = MAP

    @property
    def n_steps(self) -> int:
        values = self.v if self.v is not None else self.v_bar
        return values.shape[0] - 1


Shadowing = Union[TangentShadowing, AdjointShadowing, MapShadowing]


def default_buffer(clv: ClvBasis, tolerance: float = BUFFER_TOLERANCE) -> int:
    """
    Kleinster Puffer (Schritte) mit e^{-λ̂·buffer·h} <= tolerance.

    Raises:
        TruncationError: Wenn kein nicht-neutraler Exponent von 0 getrennt ist
    """
    gap = clv.spectral_gap
    if not gap > 0:
        raise TruncationError("Spektrallücke ist 0; Abschneidefehler nicht abschätzbar")
    return int(np.ceil(np.log(1.0 / tolerance) / (gap * clv.step)))


def _construction_range(clv: ClvBasis, span: Span) -> Tuple[int, int]:
    if span is None:
        return clv.window
    lo, hi = int(span[0]), int(span[1])
    if not clv.start <= lo < hi <= clv.stop:
        raise InputError(f"Bereich [{lo}, {hi}] liegt nicht im CLV-Fenster [{clv.start}, {clv.stop}]")
    return lo, hi


def _trusted_window(clv: ClvBasis, n: int, buffer: Optional[int]) -> Tuple[int, Tuple[int, int]]:
    """
    Bestimmt Puffer und vertrauenswürdiges Fenster.

    buffer = 0 fordert die endliche Form ohne Abschneideprüfung an.
    """
    if buffer is None:
        buffer = default_buffer(clv)
    buffer = int(buffer)
    if buffer < 0:
        raise InputError(f"Puffer muss >= 0 sein, erhalten: {buffer}")
    if buffer == 0:
        logger.info("Puffer 0: endliche Form ohne Abschneidegarantie")
        return 0, (0, n)
    estimate = float(np.exp(-clv.spectral_gap * buffer * clv.step))
    if estimate > TRUNCATION_TOLERANCE:
        raise TruncationError(
            f"Puffer {buffer} zu klein: geschätzter Abschneidefehler {estimate:.2e} > {TRUNCATION_TOLERANCE:.0e}")
    if 2 * buffer >= n:
        raise TruncationError(f"Fenster entartet: 2·Puffer = {2 * buffer} >= {n} Schritte")
    return buffer, (buffer, n - buffer)


def _frames(clv: ClvBasis, lo: int, hi: int):
    a, b = lo - clv.start, hi - clv.start
    return clv.frames[a:b + 1], clv.inverse_frames[a:b + 1], clv.log_growth[a:b]


def _stable_forward(coords: np.ndarray, growth: np.ndarray, h: Optional[float]) -> np.ndarray:
    """Akkumuliert stabile Koeffizienten vorwärts (Trapez für h, sonst Summe mit Versatz)."""
    out = np.zeros_like(coords)
    factor = np.exp(growth)
    for k in range(coords.shape[0] - 1):
        if h is None:
            out[k + 1] = factor[k] * out[k] + coords[k + 1]
        else:
            out[k + 1] = factor[k] * out[k] + 0.5 * h * (factor[k] * coords[k] + coords[k + 1])
    return out


def _unstable_backward(coords: np.ndarray, growth: np.ndarray, h: Optional[float]) -> np.ndarray:
    out = np.zeros_like(coords)
    factor = np.exp(-growth)
    for k in range(coords.shape[0] - 2, -1, -1):
        if h is None:
            out[k] = factor[k] * (coords[k + 1] + out[k + 1])
        else:
            out[k] = factor[k] * out[k + 1] + 0.5 * h * (coords[k] + factor[k] * coords[k + 1])
    return out


def _split_masks(clv: ClvBasis) -> Tuple[np.ndarray, np.ndarray]:
    return clv.selection("plus"), clv.selection("minus")


def tangent_shadowing_flow(traj: Trajectory, clv: ClvBasis, buffer: Optional[int] = None,
                           forcing: Optional[np.ndarray] = None) -> TangentShadowing:
    """
    Tangentiales Schattenpaar eines Flusses.

    v^±(t) = ∫₀ᵗ D P⁻ f_s dτ - ∫ₜᵀ D P⁺ f_s dτ in CLV-Koordinaten,
    η = -⟨f, P⁰ f_s⟩ / ⟨f, f⟩ punktweise.

    Args:
        traj (Trajectory): Bahn, aus der clv berechnet wurde
        clv (ClvBasis): CLV-Basis
        buffer (int | None): Puffer in Schritten, None = default_buffer
        forcing (np.ndarray | None): alternative Inhomogenität der Form (N+1, m), Standard f_s

    Raises:
        TruncationError: Bei zu kleinem Puffer oder entartetem Fenster
    """
    if traj.kind != FLOW:
        raise InputError("tangent_shadowing_flow erwartet einen Fluss")
    lo, hi = clv.window
    n = hi - lo
    buffer, window = _trusted_window(clv, n, buffer)
    frames, inverse, growth = _frames(clv, lo, hi)
    f_s = traj.param_forcing if forcing is None else np.broadcast_to(forcing, traj.states.shape)
    coords = np.einsum("kjm,km->kj", inverse, f_s[lo:hi + 1])

    plus, minus = _split_masks(clv)
    coef = np.zeros_like(coords)
    coef[:, minus] = _stable_forward(coords[:, minus], growth[:, minus], traj.step)
    coef[:, plus] = -_unstable_backward(coords[:, plus], growth[:, plus], traj.step)
    v_pm = np.einsum("kmj,kj->km", frames, coef)

    if clv.neutral_index is None:
        logger.warning("Kein neutraler CLV: η wird auf 0 gesetzt")
        eta = np.zeros(n + 1)
    else:
        drift_norm = np.linalg.norm(traj.drifts[lo:hi + 1], axis=-1)
        eta = -coords[:, clv.neutral_index] / drift_norm

    logger.info(f"Tangentiale Schattenrichtung über {n} Schritte, Puffer {buffer}, "
                f"max ‖v^±‖ = {np.max(np.linalg.norm(v_pm, axis=-1)):.4g}")
    return TangentShadowing(v_pm=v_pm, eta=eta, window=window, start=lo, step=traj.step, buffer=buffer)


def adjoint_shadowing_flow(traj: Trajectory, clv: ClvBasis, adj: AdjointClvBasis,
                           buffer: Optional[int] = None) -> AdjointShadowing:
    """
    Adjungierte Schattenrichtung eines Flusses.

    v̄^±(τ) = ∫_τ^T D̄ P̄⁻ J_u dt - ∫₀^τ D̄ P̄⁺ J_u dt in dualen CLV-Koordinaten,
    v̄⁰ = -J̃ ȳ / ⟨ȳ, f⟩ mit J̃ = J - ⟨J⟩ (Mittel über die ganze Trajektorie).

    Raises:
        TruncationError: Bei zu kleinem Puffer oder entartetem Fenster
        DegeneratePairingError: Über die duale Basis
    """
    if traj.kind != FLOW:
        raise InputError("adjoint_shadowing_flow erwartet einen Fluss")
    if adj.window != clv.window:
        raise InputError("Duale Basis und CLV-Basis gehören zu verschiedenen Fenstern")
    lo, hi = clv.window
    n = hi - lo
    buffer, window = _trusted_window(clv, n, buffer)
    frames, inverse, growth = _frames(clv, lo, hi)
    coords = np.einsum("kmj,km->kj", frames, traj.objective_gradients[lo:hi + 1])

    plus, minus = _split_masks(clv)
    coef = np.zeros_like(coords)
    coef[:, minus] = _unstable_backward(coords[:, minus], -growth[:, minus], traj.step)
    coef[:, plus] = -_stable_forward(coords[:, plus], -growth[:, plus], traj.step)
    v_bar_pm = np.einsum("kjm,kj->km", inverse, coef)

    mean = traj.objective_mean
    source = f"trajectory average over {traj.n_steps} steps"
    if adj.neutral is None:
        logger.warning("Kein neutraler adjungierter CLV: v̄⁰ wird auf 0 gesetzt")
        v_bar_0 = np.zeros_like(v_bar_pm)
    else:
        fluctuation = traj.objective_values[lo:hi + 1] - mean
        v_bar_0 = -(fluctuation / adj.pairing)[:, None] * adj.neutral

    logger.info(f"Adjungierte Schattenrichtung über {n} Schritte, Puffer {buffer}, ⟨J⟩ = {mean:.6g}")
    return AdjointShadowing(v_bar=v_bar_pm + v_bar_0, v_bar_pm=v_bar_pm, v_bar_0=v_bar_0, window=window,
                            start=lo, step=traj.step, buffer=buffer, objective_mean=mean,
                            objective_mean_source=source)


def tangent_shadowing_map(traj: Trajectory, clv: ClvBasis, buffer: Optional[int] = None,
                          span: Span = None, forcing: Optional[np.ndarray] = None) -> MapShadowing:
    """
    Tangentiale Schattenfolge v_{Ni} = Σ_{l<i} D P⁻ f_{sl} - Σ_{l>=i} D P⁺ f_{sl}.

    f_{sl} wirkt im Schritt l -> l+1 und wird daher im Rahmen l+1 zerlegt.
    Die Folge erfüllt v_{i+1} = f_{ui} v_i + f_{si} exakt (Rundung).

    Args:
        span (Tuple[int, int] | None): Teilbereich des CLV-Fensters (Trajektorienindizes)
    """
    if traj.kind != MAP:
        raise InputError("tangent_shadowing_map erwartet eine Abbildung")
    lo, hi = _construction_range(clv, span)
    n = hi - lo
    buffer, window = _trusted_window(clv, n, buffer)
    frames, inverse, growth = _frames(clv, lo, hi)
    f_s = traj.param_forcing if forcing is None else np.broadcast_to(forcing, traj.states.shape)
    coords = np.zeros((n + 1, traj.dim))
    coords[1:] = np.einsum("kjm,km->kj", inverse[1:], f_s[lo:hi])

    plus, minus = _split_masks(clv)
    coef = np.zeros_like(coords)
    coef[:, minus] = _stable_forward(coords[:, minus], growth[:, minus], None)
    coef[:, plus] = -_unstable_backward(coords[:, plus], growth[:, plus], None)
    v = np.einsum("kmj,kj->km", frames, coef)
    logger.info(f"Tangentiale Schattenfolge über {n} Schritte, Puffer {buffer}")
    return MapShadowing(start=lo, window=window, buffer=buffer, v=v)


def adjoint_shadowing_map(traj: Trajectory, clv: ClvBasis, adj: AdjointClvBasis,
                          buffer: Optional[int] = None, span: Span = None) -> MapShadowing:
    """
    Adjungierte Schattenfolge v̄_{Nl} = Σ_{i>=l} D̄ P̄⁻ J_{ui} - Σ_{i<l} D̄ P̄⁺ J_{ui}.

    Die Summen laufen über i < n; v̄_l erfüllt v̄_l = f_{ul}ᵀ v̄_{l+1} + J_{ul}
    exakt für l < n, und v̄_0 hat keinen instabilen adjungierten Anteil.
    """
    if traj.kind != MAP:
        raise InputError("adjoint_shadowing_map erwartet eine Abbildung")
    if adj.window != clv.window:
        raise InputError("Duale Basis und CLV-Basis gehören zu verschiedenen Fenstern")
    lo, hi = _construction_range(clv, span)
    n = hi - lo
    buffer, window = _trusted_window(clv, n, buffer)
    frames, inverse, growth = _frames(clv, lo, hi)
    coords = np.zeros((n + 1, traj.dim))
    coords[:-1] = np.einsum("kmj,km->kj", frames[:-1], traj.objective_gradients[lo:hi])

    plus, minus = _split_masks(clv)
    coef = np.zeros_like(coords)
    stable = np.zeros((n + 1, int(minus.sum())))
    factor = np.exp(growth[:, minus])
    for k in range(n - 1, -1, -1):
        stable[k] = coords[k, minus] + factor[k] * stable[k + 1]
    unstable = np.zeros((n + 1, int(plus.sum())))
    factor = np.exp(-growth[:, plus])
    for k in range(1, n + 1):
        unstable[k] = factor[k - 1] * (unstable[k - 1] + coords[k - 1, plus])
    coef[:, minus] = stable
    coef[:, plus] = -unstable
    v_bar = np.einsum("kjm,kj->km", inverse, coef)
    logger.info(f"Adjungierte Schattenfolge über {n} Schritte, Puffer {buffer}")
    return MapShadowing(start=lo, window=window, buffer=buffer, v_bar=v_bar)


def tangent_shadowing_map_direct(traj: Trajectory, clv: ClvBasis, span: Span = None) -> np.ndarray:
    """
    Referenz: v_{Ni} durch explizites Propagieren und Projizieren (O(N²)).

    Nur für kurze Bereiche; die Rückwärtspropagation verstärkt Rundungsfehler.
    """
    lo, hi = _construction_range(clv, span)
    f_s = traj.param_forcing
    values = np.zeros((hi - lo + 1, traj.dim))
    for i in range(lo, hi + 1):
        for l in range(lo, hi):
            if l < i:
                values[i - lo] += propagate(traj, l + 1, i, project(clv, l + 1, "minus", f_s[l]))
            else:
                values[i - lo] -= propagate(traj, l + 1, i, project(clv, l + 1, "plus", f_s[l]))
    return values


def adjoint_shadowing_map_direct(traj: Trajectory, clv: ClvBasis, adj: AdjointClvBasis,
                                 span: Span = None) -> np.ndarray:
    """Referenz: v̄_{Nl} durch explizites adjungiertes Propagieren (O(N²))."""
    lo, hi = _construction_range(clv, span)
    grad = traj.objective_gradients
    values = np.zeros((hi - lo + 1, traj.dim))
    for l in range(lo, hi + 1):
        for i in range(lo, hi):
            if i >= l:
                values[l - lo] += adjoint_propagate(traj, i, l, adjoint_project(adj, clv, i, "minus", grad[i]))
            else:
                values[l - lo] -= adjoint_propagate(traj, i, l, adjoint_project(adj, clv, i, "plus", grad[i]))
    return values


@dataclass
class PropertyReport:
    """
    Messwerte der definierenden Eigenschaften einer adjungierten Schattenrichtung.

    `thresholds` ordnet jedem geprüften Messwert seine Schranke zu; Messwerte
    ohne Schranke (sup_norm) werden nur berichtet.
    """
    kind: str
    adjoint_residual: float
    unstable_component_at_0: float
    sup_norm: float
    growth_ratio: float
    f_inner_product_avg: Optional[float] = None
    pm_f_orthogonality: Optional[float] = None
    objective_mean: Optional[float] = None
    objective_mean_source: Optional[str] = None
    thresholds: Dict[str, float] = field(default_factory=dict)

    def failures(self) -> List[str]:
        return [name for name, limit in self.thresholds.items()
                if getattr(self, name) is not None and not getattr(self, name) <= limit]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def as_dict(self) -> dict:
        data = {
            "kind": self.kind,
            "adjoint_residual": self.adjoint_residual,
            "unstable_component_at_0": self.unstable_component_at_0,
            "sup_norm": self.sup_norm,
            "growth_ratio": self.growth_ratio,
            "thresholds": dict(self.thresholds),
            "passed": self.passed,
        }
        if self.kind == FLOW:
            data.update(f_inner_product_avg=self.f_inner_product_avg,
                        pm_f_orthogonality=self.pm_f_orthogonality,
                        objective_mean=self.objective_mean,
                        objective_mean_source=self.objective_mean_source)
        return data


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float(np.inf)
    return float(numerator / denominator)


def _growth_ratio(norms: np.ndarray) -> float:
    quarter = max(1, norms.size // 4)
    return _ratio(float(np.max(norms[-quarter:])), float(np.max(norms[:quarter])))


def verify_properties(shadow: Union[AdjointShadowing, MapShadowing], traj: Trajectory, clv: ClvBasis,
                      adj: AdjointClvBasis) -> PropertyReport:
    """
    Misst die definierenden Eigenschaften einer adjungierten Schattenrichtung.

    1. Residuum der adjungierten Gleichung im vertrauenswürdigen Fenster
    2. Anteil im instabilen adjungierten Unterraum bei τ = 0
    3. Supremumsnorm und Wachstumstrend (letztes / erstes Viertel)
    4. Nur Flüsse: gemitteltes ⟨v̄, f⟩ und punktweise ⟨v̄^±, f⟩

    Wirft keine Ausnahme; die Schranken stehen in `thresholds`.
    """
    if shadow.kind == MAP and shadow.v_bar is None:
        raise InputError("verify_properties benötigt eine adjungierte Schattenfolge")
    v_bar = shadow.v_bar
    lo_w, hi_w = shadow.window
    start = shadow.start
    phi = traj.propagators
    grad = traj.objective_gradients
    norms = np.linalg.norm(v_bar, axis=-1)

    # 1. Residuum
    ks = np.arange(lo_w, hi_w)
    idx = start + ks
    phi_t = np.swapaxes(phi[idx], -1, -2)
    transported = np.einsum("kij,kj->ki", phi_t, v_bar[ks + 1])
    if shadow.kind == FLOW:
        h = traj.step
        forcing = 0.5 * h * (grad[idx] + np.einsum("kij,kj->ki", phi_t, grad[idx + 1]))
        residual = np.linalg.norm(v_bar[ks] - transported - forcing, axis=-1) / h
        scale = np.linalg.norm(grad[idx], axis=-1) + np.linalg.norm(
            np.einsum("kji,kj->ki", traj.jacobians[idx], v_bar[ks]), axis=-1)
        sup_jac = float(np.max(np.linalg.norm(traj.jacobians[idx], ord=2, axis=(-2, -1)), initial=0.0))
        residual_limit = 10.0 * (h * sup_jac) ** 2 / 12.0
    else:
        residual = np.linalg.norm(v_bar[ks] - transported - grad[idx], axis=-1)
        scale = np.linalg.norm(grad[idx], axis=-1) + np.linalg.norm(transported, axis=-1)
        residual_limit = 1e-10
    adjoint_residual = _ratio(float(np.max(residual, initial=0.0)), float(np.max(scale, initial=0.0)))

    # 2. instabiler Anteil am Anfang
    unstable = np.linalg.norm(adjoint_project(adj, clv, start, "plus", v_bar[0])) if clv.n_unstable else 0.0
    unstable_component = _ratio(float(unstable), float(norms[0]))

    # 3. Beschränktheit
    interior = norms[lo_w:hi_w + 1]
    sup_norm = float(np.max(interior, initial=0.0))
    growth_ratio = _growth_ratio(interior)

    thresholds = {"adjoint_residual": residual_limit,
                  "unstable_component_at_0": 1e-6 if shadow.kind == FLOW else 1e-8,
                  "growth_ratio": 2.0}
    report = PropertyReport(kind=shadow.kind, adjoint_residual=adjoint_residual,
                            unstable_component_at_0=unstable_component, sup_norm=sup_norm,
                            growth_ratio=growth_ratio, thresholds=thresholds)

    # 4. Paarung mit f
    if shadow.kind == FLOW:
        drift = traj.drifts[start + lo_w:start + hi_w + 1]
        drift_norm = np.linalg.norm(drift, axis=-1)
        weights = trapezoid_weights(interior.size, traj.step)
        pairing = np.einsum("km,km->k", v_bar[lo_w:hi_w + 1], drift)
        average = abs(float(weights @ pairing / weights.sum())) if weights.sum() > 0 else 0.0
        report.f_inner_product_avg = _ratio(average, float(interior.mean() * drift_norm.mean()))
        pm = shadow.v_bar_pm[lo_w:hi_w + 1]
        pm_scale = np.linalg.norm(pm, axis=-1) * drift_norm
        pm_pairing = np.abs(np.einsum("km,km->k", pm, drift))
        safe = np.where(pm_scale > 0, pm_scale, 1.0)
        report.pm_f_orthogonality = float(np.max(np.where(pm_scale > 0, pm_pairing / safe, 0.0), initial=0.0))
        report.objective_mean = shadow.objective_mean
        report.objective_mean_source = shadow.objective_mean_source
        thresholds.update(f_inner_product_avg=0.05, pm_f_orthogonality=1e-6)

    shadow.diagnostics.clear()
    shadow.diagnostics.update({k: v for k, v in report.as_dict().items() if isinstance(v, float)})
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(level, f"Eigenschaftsprüfung ({shadow.kind}): "
                      f"{'bestanden' if report.passed else 'verletzt: ' + ', '.join(report.failures())}")
    return report


def inject_unstable_fault(shadow: Union[AdjointShadowing, MapShadowing], clv: ClvBasis, adj: AdjointClvBasis,
                          epsilon: float, mode: str = "homogeneous"):
    """
    Verfälscht v̄ um ε·‖v̄‖ in Richtung des führenden instabilen adjungierten CLV.

    - "homogeneous": am Anfang des vertrauenswürdigen Fensters angesetzt und als
      homogene adjungierte Lösung fortgesetzt; wächst zum Fensteranfang hin.
    - "point": nur v̄_0 wird verändert.

    Returns:
        Kopie der Schattenrichtung mit leeren Diagnosen
    """
    if mode not in FAULT_MODES:
        raise InputError(f"Unbekannter Fehlermodus '{mode}' (erlaubt: {', '.join(FAULT_MODES)})")
    if shadow.v_bar is None:
        raise InputError("Fehlerinjektion benötigt eine adjungierte Schattenrichtung")
    if clv.n_unstable < 1:
        raise InputError("Keine instabile Richtung für die Fehlerinjektion vorhanden")
    v_bar = np.array(shadow.v_bar)
    offset = shadow.start - clv.start
    dual = clv.inverse_frames[offset:offset + v_bar.shape[0], 0, :]
    scale = adj.dual_scale[offset:offset + v_bar.shape[0], 0]
    perturbation = np.zeros_like(v_bar)
    if mode == "point":
        size = np.linalg.norm(v_bar[0]) or 1.0
        perturbation[0] = epsilon * size * dual[0] / scale[0]
    else:
        anchor = shadow.window[0]
        size = np.linalg.norm(v_bar[anchor]) or 1.0
        growth = clv.log_growth[offset:offset + v_bar.shape[0] - 1, 0]
        cumulative = np.concatenate([[0.0], np.cumsum(growth)])
        coefficient = epsilon * size / scale[anchor] * np.exp(cumulative[anchor] - cumulative)
        perturbation = coefficient[:, None] * dual
    logger.info(f"Fehlerinjektion ({mode}) mit ε = {epsilon:g}")
    if isinstance(shadow, AdjointShadowing):
        return replace(shadow, v_bar=v_bar + perturbation, v_bar_pm=shadow.v_bar_pm + perturbation,
                       diagnostics={})
    return replace(shadow, v_bar=v_bar + perturbation, diagnostics={})
