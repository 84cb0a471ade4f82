"""
/shadowlab/tangent.py
Version: 1.0.0
------------------------------
ID: SHADOWLAB-TANGENT-01
Beschreibung: Tangentenlöser, Tangentenfluss-Operator, kovariante
Lyapunov-Vektoren (CLVs) und die schiefen Projektionen auf CLV-Unterräume.

Die CLVs werden mit dem zweistufigen Verfahren nach Ginelli berechnet:
1. Vorwärtslauf: QR-Zerlegung der Schrittprodukte an Kontrollpunkten
   (alle `qr_stride` Schritte), liefert Gram-Schmidt-Vektoren Q_k und R_k.
2. Rückwärtslauf: C_k = R_{k+1}^{-1} C_{k+1} mit Spaltennormierung; die
   kovarianten Vektoren sind V_k = Q_k C_k.
Zwischen den Kontrollpunkten werden die Vektoren mit den Schrittpropagatoren
vorwärts transportiert. Vorder- und Rückwärtstransienten werden verworfen.

Bei Flüssen wird die neutrale Spalte durch f/‖f‖ ersetzt; die Ausrichtung
vor dem Ersetzen wird als Diagnose gespeichert.

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import qr, solve_triangular

from shadowlab.dynamics import FLOW, MAP, Trajectory, rk4_linear_step
from shadowlab.error_handler import (
    ClvConvergenceError,
    ConditioningError,
    InputError,
    InversionError,
    TangentGrowthError,
)

# Logger für dieses Modul
logger = logging.getLogger("Tangent")

GROWTH_LIMIT = 1e300
INVERSION_LIMIT = 1e12
MIN_CHECKPOINTS = 8

HOMOGENEOUS = "homogeneous"
INHOMOGENEOUS = "inhomogeneous"
SELECTIONS = ("plus", "minus", "zero", "pm")

Selection = Union[int, str]

__all__ = [
    "TangentSolution", "ClvOptions", "ClvBasis", "rk4_linear_step",
    "solve_homogeneous_tangent", "solve_inhomogeneous_tangent", "propagate",
    "compute_clvs", "project", "project_all", "projector",
]


@dataclass(frozen=True, eq=False)
class TangentSolution:
    """Tangentenlösung w_0..w_N, indexgleich mit der Trajektorie."""
    values: np.ndarray
    kind: str


def _check_growth(value: np.ndarray, step: int, what: str = "Tangentenlösung"):
    norm = np.linalg.norm(value)
    if not np.isfinite(norm) or norm > GROWTH_LIMIT:
        logger.error(f"{what} überläuft in Schritt {step} (Norm {norm:.3e})")
        raise TangentGrowthError(f"{what} überläuft in Schritt {step}; bitte renormieren", step=step)


def _check_vector(traj: Trajectory, w, name: str) -> np.ndarray:
    w = np.array(w, dtype=float)
    if w.shape != (traj.dim,):
        raise InputError(f"{name} hat Form {w.shape}, erwartet ({traj.dim},)")
    return w


def _aligned_forcing(traj: Trajectory, forcing) -> np.ndarray:
    forcing = np.asarray(forcing, dtype=float)
    try:
        return np.broadcast_to(forcing, traj.states.shape)
    except ValueError:
        raise InputError(f"Inhomogenität der Form {forcing.shape} passt nicht zur Trajektorie {traj.states.shape}")


def forcing_increments(traj: Trajectory, forcing: np.ndarray) -> np.ndarray:
    """
    Beitrag der Inhomogenität zu jedem Tangentenschritt, Form (N, m).

    Flüsse: RK4-Schritt von dv/dt = f_u v + g mit v = 0 und g in der Mitte als
    Mittelwert der Randwerte. Abbildungen: g_i selbst.
    """
    g = _aligned_forcing(traj, forcing)
    if traj.kind == MAP:
        return np.array(g[:-1])
    jac = traj.jacobians
    g_mid = 0.5 * (g[:-1] + g[1:])
    return rk4_linear_step(jac[:-1], traj.midpoint_jacobians, jac[1:], np.zeros_like(g[:-1]),
                           g[:-1], g_mid, g[1:], h=traj.step)


def solve_homogeneous_tangent(traj: Trajectory, w0) -> TangentSolution:
    """
    Löst die homogene Tangentengleichung vorwärts.

    Flüsse verwenden die RK4-Schrittpropagatoren der Trajektorie, Abbildungen
    die exakte Rekursion w_{i+1} = f_u(u_i) w_i.

    Raises:
        TangentGrowthError: Wenn die Norm 1e300 überschreitet
    """
    w = _check_vector(traj, w0, "w0")
    phi = traj.propagators
    values = np.empty((traj.n_steps + 1, traj.dim))
    values[0] = w
    for i in range(traj.n_steps):
        w = phi[i] @ w
        _check_growth(w, i + 1)
        values[i + 1] = w
    return TangentSolution(values, HOMOGENEOUS)


def solve_inhomogeneous_tangent(traj: Trajectory, v0, forcing) -> TangentSolution:
    """
    Löst dv/dt = f_u v + g (Fluss) bzw. v_{i+1} = f_{ui} v_i + g_i (Abbildung).

    Args:
        traj (Trajectory): Die Bahn
        v0: Anfangswert
        forcing: Inhomogenität an den Gitterpunkten, Form (N+1, m)

    Returns:
        TangentSolution: Lösung v_0..v_N
    """
    v = _check_vector(traj, v0, "v0")
    phi = traj.propagators
    increments = forcing_increments(traj, forcing)
    values = np.empty((traj.n_steps + 1, traj.dim))
    values[0] = v
    for i in range(traj.n_steps):
        v = phi[i] @ v + increments[i]
        _check_growth(v, i + 1)
        values[i + 1] = v
    return TangentSolution(values, INHOMOGENEOUS)


def _check_index(traj: Trajectory, i: int, name: str) -> int:
    if not 0 <= int(i) <= traj.n_steps:
        raise InputError(f"Index {name}={i} liegt außerhalb von [0, {traj.n_steps}]")
    return int(i)


def inverse_step(matrix: np.ndarray, w: np.ndarray, step: int) -> np.ndarray:
    """Löst matrix x = w mit Konditionsprüfung (Rückwärtsschritt)."""
    if np.linalg.cond(matrix) > INVERSION_LIMIT:
        logger.error(f"Singulärer Schrittpropagator in Schritt {step}")
        raise InversionError(f"Schrittpropagator in Schritt {step} ist numerisch singulär")
    return np.linalg.solve(matrix, w)


def propagate(traj: Trajectory, i1: int, i2: int, w) -> np.ndarray:
    """
    Tangentenfluss-Operator: bildet w vom Gitterpunkt i1 auf i2 ab.

    Für i2 < i1 wird rückwärts mit den inversen Schrittpropagatoren gerechnet.

    Raises:
        InversionError: Bei singulärem Propagator auf dem Rückweg
        TangentGrowthError: Bei Überlauf
    """
    i1 = _check_index(traj, i1, "i1")
    i2 = _check_index(traj, i2, "i2")
    w = _check_vector(traj, w, "w")
    phi = traj.propagators
    if i2 >= i1:
        for i in range(i1, i2):
            w = phi[i] @ w
            _check_growth(w, i + 1)
    else:
        for i in range(i1 - 1, i2 - 1, -1):
            w = inverse_step(phi[i], w, i)
            _check_growth(w, i)
    return w


@dataclass(frozen=True)
class ClvOptions:
    """
    Optionen der CLV-Berechnung.

    Attributes:
        qr_stride (int | None): Schritte zwischen QR-Kontrollpunkten (None: 1 für Abbildungen, 10 für Flüsse)
        neutral_tolerance (float | None): Schranke für |λ| eines neutralen Exponenten (None: automatisch)
        transient_forward (float): verworfener Anteil am Anfang
        transient_backward (float): verworfener Anteil am Ende
        convergence_tolerance (float): zulässige Abweichung 1-|cos| im Konvergenztest
        seed (int): Seed der zufälligen Dreiecksmatrix im Konvergenztest
        max_condition (float): größte zulässige Kondition einer CLV-Matrix
    """
    qr_stride: Optional[int] = None
    neutral_tolerance: Optional[float] = None
    transient_forward: float = 0.2
    transient_backward: float = 0.2
    convergence_tolerance: float = 1e-6
    seed: int = 0
    max_condition: float = 1e12

    def __post_init__(self):
        if self.qr_stride is not None and int(self.qr_stride) < 1:
            raise InputError(f"qr_stride muss >= 1 sein, erhalten: {self.qr_stride}")
        for name in ("transient_forward", "transient_backward"):
            value = getattr(self, name)
            if not 0.0 <= value < 0.5:
                raise InputError(f"{name} muss in [0, 0.5) liegen, erhalten: {value}")
        if self.neutral_tolerance is not None and not self.neutral_tolerance > 0:
            raise InputError(f"neutral_tolerance muss positiv sein, erhalten: {self.neutral_tolerance}")
        if not self.convergence_tolerance > 0:
            raise InputError("convergence_tolerance muss positiv sein")

    def stride_for(self, kind: str) -> int:
        if self.qr_stride is not None:
            return int(self.qr_stride)
        return 1 if kind == MAP else 10


@dataclass(frozen=True, eq=False)
class ClvBasis:
    """
    Normierte CLV-Rahmen über dem konvergierten Fenster.

    frames[k] gehört zum Gitterpunkt window[0] + k, ihre Spalten sind nach
    absteigendem Exponenten sortiert. log_growth[k, j] ist der Logarithmus des
    Normwachstums von Spalte j über den Schritt k -> k+1.
    """
    kind: str
    step: float
    window: Tuple[int, int]
    frames: np.ndarray
    inverse_frames: np.ndarray
    log_growth: np.ndarray
    exponents: np.ndarray
    n_unstable: int
    neutral_index: Optional[int]
    neutral_tolerance: float
    min_angle: float
    neutral_count: int = 0
    neutral_alignment: Optional[float] = None
    qr_stride: int = 1
    max_condition: float = 1e12

    @property
    def dim(self) -> int:
        return self.frames.shape[-1]

    @property
    def start(self) -> int:
        return self.window[0]

    @property
    def stop(self) -> int:
        return self.window[1]

    @property
    def n_window_steps(self) -> int:
        return self.frames.shape[0] - 1

    @property
    def projection_bound(self) -> float:
        """C_α = (1 - cos² α)^(-1/2) aus dem kleinsten Winkel α."""
        sin_alpha = np.sin(self.min_angle)
        return float(np.inf) if sin_alpha == 0 else float(1.0 / sin_alpha)

    @property
    def spectral_gap(self) -> float:
        """Kleinster Betrag eines nicht-neutralen Exponenten."""
        mask = np.ones(self.dim, dtype=bool)
        if self.neutral_index is not None:
            mask[self.neutral_index] = False
        if not mask.any():
            return 0.0
        return float(np.min(np.abs(self.exponents[mask])))

    def local(self, i: int) -> int:
        """Übersetzt einen Trajektorienindex in einen Fensterindex."""
        if not self.start <= int(i) <= self.stop:
            raise InputError(f"Index {i} liegt außerhalb des konvergierten Fensters [{self.start}, {self.stop}]")
        return int(i) - self.start

    def selection(self, which: Selection) -> np.ndarray:
        """Boolesche Auswahl der CLV-Indizes für j, plus, minus, zero oder pm."""
        m = self.dim
        if isinstance(which, (int, np.integer)):
            if not 0 <= which < m:
                raise InputError(f"CLV-Index {which} außerhalb von [0, {m})")
            mask = np.zeros(m, dtype=bool)
            mask[which] = True
            return mask
        if which not in SELECTIONS:
            raise InputError(f"Unbekannte Auswahl '{which}' (erlaubt: Index oder {', '.join(SELECTIONS)})")
        zero = np.zeros(m, dtype=bool)
        if self.neutral_index is not None:
            zero[self.neutral_index] = True
        plus = np.arange(m) < self.n_unstable
        if which == "zero":
            if self.kind != FLOW or self.neutral_index is None:
                raise InputError("Die neutrale Auswahl ist nur für Flüsse mit neutralem CLV definiert")
            return zero
        if which == "plus":
            return plus
        if which == "minus":
            return ~plus & ~zero
        return ~zero

    def condition_number(self, k: int) -> float:
        return float(np.linalg.cond(self.frames[k]))

    def check_conditioning(self, k: int):
        cond = self.condition_number(k)
        if not np.isfinite(cond) or cond > self.max_condition:
            raise ConditioningError(f"CLV-Matrix im Fensterschritt {k} hat Kondition {cond:.3e}")


def _sign_fixed_qr(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    q, r = qr(matrix, check_finite=False)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, signs[:, None] * r


def _backward_pass(r_factors: np.ndarray, c_end: np.ndarray, k_end: int, k_stop: int) -> np.ndarray:
    """Rückwärtsiteration der Dreieckskoeffizienten von k_end bis k_stop."""
    coeffs = np.empty((k_end - k_stop + 1,) + c_end.shape)
    coeffs[-1] = c_end
    current = c_end
    for k in range(k_end - 1, k_stop - 1, -1):
        current = solve_triangular(r_factors[k], current, lower=False, check_finite=False)
        norms = np.linalg.norm(current, axis=0)
        if not np.all(np.isfinite(norms)) or np.any(norms == 0):
            raise ClvConvergenceError(f"Rückwärtskoeffizienten entartet am Kontrollpunkt {k}")
        current = current / norms
        coeffs[k - k_stop] = current
    return coeffs


def _segment_products(phi: np.ndarray, stride: int, count: int) -> np.ndarray:
    m = phi.shape[-1]
    blocks = phi[:count * stride].reshape(count, stride, m, m)
    product = blocks[:, 0].copy()
    for j in range(1, stride):
        product = blocks[:, j] @ product
    return product


def _log_column_growth(phi: np.ndarray, frames: np.ndarray) -> np.ndarray:
    return np.log(np.linalg.norm(phi @ frames, axis=-2))


def _projector_norms(frames: np.ndarray, inverse: np.ndarray, masks) -> np.ndarray:
    """Größte Spektralnorm der Projektoren je Fensterschritt."""
    m = frames.shape[-1]
    single = np.linalg.norm(frames, axis=-2) * np.linalg.norm(inverse, axis=-1)
    worst = single.max(axis=-1)
    for mask in masks:
        size = int(mask.sum())
        if size <= 1 or size >= m - 1:
            # Rang 1 oder Komplement von Rang 1: Norm eines Einzelprojektors
            continue
        proj = frames[:, :, mask] @ inverse[:, mask, :]
        worst = np.maximum(worst, np.linalg.norm(proj, ord=2, axis=(-2, -1)))
    return worst


def compute_clvs(traj: Trajectory, options: Optional[ClvOptions] = None) -> ClvBasis:
    """
    Berechnet alle m CLVs mit dem Zwei-Pass-Verfahren nach Ginelli.

    Args:
        traj (Trajectory): Bahn auf dem Attraktor
        options (ClvOptions | None): Optionen, None = Standardwerte

    Returns:
        ClvBasis: Rahmen, Wachstumsraten und Exponenten über dem Fenster

    Raises:
        InputError: Wenn die Bahn für die Transienten zu kurz ist
        ClvConvergenceError: Wenn zwei unterschiedlich gestartete Rückwärtsläufe
            am Fensterende nicht übereinstimmen
    """
    options = options or ClvOptions()
    m = traj.dim
    stride = options.stride_for(traj.kind)
    count = traj.n_steps // stride
    k_lo = int(np.ceil(options.transient_forward * count))
    k_hi = count - int(np.ceil(options.transient_backward * count))
    if count < MIN_CHECKPOINTS or k_hi - k_lo < 2:
        raise InputError(
            f"Trajektorie mit {traj.n_steps} Schritten ist zu kurz für qr_stride={stride} "
            f"und Transienten ({options.transient_forward}, {options.transient_backward})")

    phi = traj.propagators
    products = _segment_products(phi, stride, count)

    # Vorwärtslauf
    q_frames = np.empty((count + 1, m, m))
    r_factors = np.empty((count, m, m))
    q_frames[0] = np.eye(m)
    for k in range(count):
        advanced = products[k] @ q_frames[k]
        if not np.all(np.isfinite(advanced)):
            raise TangentGrowthError(f"Überlauf im QR-Vorwärtslauf bei Kontrollpunkt {k}; qr_stride verkleinern",
                                     step=k * stride)
        q_frames[k + 1], r_factors[k] = _sign_fixed_qr(advanced)

    # Rückwärtslauf und Konvergenztest mit zufälliger Dreiecksmatrix
    coeffs = _backward_pass(r_factors, np.eye(m), count, k_lo)
    rng = np.random.default_rng(options.seed)
    alternative = np.triu(rng.standard_normal((m, m)))
    np.fill_diagonal(alternative, 1.0 + np.abs(np.diag(alternative)))
    alternative /= np.linalg.norm(alternative, axis=0)
    check = _backward_pass(r_factors, alternative, count, k_hi)[0]
    v_ref = q_frames[k_hi] @ coeffs[k_hi - k_lo]
    v_alt = q_frames[k_hi] @ check
    mismatch = float(np.max(1.0 - np.abs(np.sum(v_ref * v_alt, axis=0))))
    if mismatch > options.convergence_tolerance:
        logger.warning(f"CLV-Rückwärtslauf nicht konvergiert (Abweichung {mismatch:.2e})")
        raise ClvConvergenceError(
            f"Rückwärtskoeffizienten nicht konvergiert (1-|cos| = {mismatch:.2e}); längere Trajektorie verwenden")

    # Rahmen an Kontrollpunkten und dazwischen
    c_lo, c_hi = k_lo * stride, k_hi * stride
    checkpoints = q_frames[k_lo:k_hi + 1] @ coeffs[: k_hi - k_lo + 1]
    checkpoints /= np.linalg.norm(checkpoints, axis=-2, keepdims=True)
    frames = np.empty((c_hi - c_lo + 1, m, m))
    frames[::stride] = checkpoints
    current = checkpoints[:-1]
    base = c_lo + stride * np.arange(k_hi - k_lo)
    for j in range(1, stride):
        current = phi[base + j - 1] @ current
        current = current / np.linalg.norm(current, axis=-2, keepdims=True)
        frames[j::stride] = current

    log_growth = _log_column_growth(phi[c_lo:c_hi], frames[:-1])
    exponents = log_growth.mean(axis=0) / traj.step

    tolerance = options.neutral_tolerance
    if tolerance is None:
        tolerance = max(1e-3, 0.005 * float(exponents.max() - exponents.min()))

    neutral_index, neutral_count, alignment = None, 0, None
    if traj.kind == FLOW:
        candidates = np.flatnonzero(np.abs(exponents) <= tolerance)
        neutral_count = int(candidates.size)
        drift = traj.drifts[c_lo:c_hi + 1]
        drift_norm = np.linalg.norm(drift, axis=-1)
        if candidates.size == 0:
            logger.warning(f"Kein Exponent innerhalb von {tolerance:.3g} um 0; kein neutraler CLV")
        elif np.any(drift_norm == 0.0):
            logger.warning("Vektorfeld verschwindet im Fenster; neutraler CLV bleibt unverändert")
        else:
            if candidates.size > 1:
                logger.warning(f"{candidates.size} Exponenten nahe 0, wähle den am besten zu f ausgerichteten")
            unit_drift = drift / drift_norm[:, None]
            cosines = np.abs(np.einsum("kij,ki->kj", frames[:, :, candidates], unit_drift))
            worst = cosines.min(axis=0)
            best = int(np.argmax(worst))
            neutral_index = int(candidates[best])
            alignment = float(worst[best])
            frames[:, :, neutral_index] = unit_drift
            log_growth[:, neutral_index] = np.log(np.linalg.norm(
                np.einsum("kij,kj->ki", phi[c_lo:c_hi], unit_drift[:-1]), axis=-1))
            exponents[neutral_index] = log_growth[:, neutral_index].mean() / traj.step
            logger.debug(f"Neutraler CLV {neutral_index}: Ausrichtung an f vor dem Ersetzen {alignment:.6f}")

    order = np.argsort(-exponents, kind="stable")
    if np.any(order != np.arange(m)):
        frames = frames[:, :, order]
        log_growth = log_growth[:, order]
        exponents = exponents[order]
        if neutral_index is not None:
            neutral_index = int(np.flatnonzero(order == neutral_index)[0])

    is_neutral = np.zeros(m, dtype=bool)
    if neutral_index is not None:
        is_neutral[neutral_index] = True
    n_unstable = int(np.sum((exponents > tolerance) & ~is_neutral))

    inverse = np.linalg.inv(frames)
    plus = np.arange(m) < n_unstable
    masks = [plus, ~plus & ~is_neutral, ~is_neutral]
    bound = float(np.max(_projector_norms(frames, inverse, masks)))
    min_angle = float(np.arcsin(min(1.0, 1.0 / bound))) if np.isfinite(bound) else 0.0

    logger.info(f"CLVs über Schritte [{c_lo}, {c_hi}]: Exponenten {np.array2string(exponents, precision=4)}, "
                f"m_us={n_unstable}, neutral={neutral_index}, min. Winkel {min_angle:.3e}")
    basis = ClvBasis(
        kind=traj.kind, step=traj.step, window=(c_lo, c_hi), frames=frames, inverse_frames=inverse,
        log_growth=log_growth, exponents=exponents, n_unstable=n_unstable, neutral_index=neutral_index,
        neutral_tolerance=float(tolerance), min_angle=min_angle, neutral_count=neutral_count,
        neutral_alignment=alignment, qr_stride=stride, max_condition=options.max_condition,
    )
    return basis


def project(clv: ClvBasis, i: int, which: Selection, v) -> np.ndarray:
    """
    Schiefe Projektion Z_i D Z_i^{-1} v auf die ausgewählten CLVs.

    `which` ist ein CLV-Index j oder "plus", "minus", "zero", "pm".

    Raises:
        ConditioningError: Wenn Z_i zu schlecht konditioniert ist
    """
    k = clv.local(i)
    clv.check_conditioning(k)
    mask = clv.selection(which)
    v = np.asarray(v, dtype=float)
    return clv.frames[k][:, mask] @ (clv.inverse_frames[k][mask] @ v)


def projector(clv: ClvBasis, i: int, which: Selection) -> np.ndarray:
    """Projektionsmatrix Z_i D Z_i^{-1} am Trajektorienindex i."""
    k = clv.local(i)
    clv.check_conditioning(k)
    mask = clv.selection(which)
    return clv.frames[k][:, mask] @ clv.inverse_frames[k][mask]


def project_all(clv: ClvBasis, which: Selection, values) -> np.ndarray:
    """Projiziert Werte der Form (L, m) über das ganze Fenster."""
    mask = clv.selection(which)
    values = np.asarray(values, dtype=float)
    coords = np.einsum("kjm,km->kj", clv.inverse_frames[:, mask, :], values)
    return np.einsum("kmj,kj->km", clv.frames[:, :, mask], coords)
