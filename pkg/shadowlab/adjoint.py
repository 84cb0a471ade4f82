"""
/shadowlab/adjoint.py
Version: 1.0.0
------------------------------
ID: SHADOWLAB-ADJOINT-01
Beschreibung: Adjungierte Löser (rückwärts in der Zeit), adjungierter
Flussoperator, duale CLV-Basis und adjungierte Projektionen P̄ = Pᵀ.

Der adjungierte Schritt ist die exakte Transponierte des Tangentenschritts:
w̄_i = Φ_iᵀ w̄_{i+1}. Damit bleibt ⟨w̄_i, w_i⟩ für gepaarte homogene Lösungen
bis auf Rundungsfehler konstant, bei Flüssen wie bei Abbildungen.

Vorzeichenkonvention der Inhomogenität:
- Flüsse:      dw̄/dt + f_uᵀ w̄ = -g
- Abbildungen: w̄_l = f_{ul}ᵀ w̄_{l+1} + g_l   (g_N wird nicht verwendet)

Die adjungierten CLVs sind die normierten Spalten von Z^{-T}; ihre Paarung
mit den tangentialen CLVs ist damit stets positiv.

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from shadowlab.dynamics import FLOW, MAP, Trajectory, rk4_linear_step
from shadowlab.error_handler import (
    ConditioningError,
    DegeneratePairingError,
    InputError,
    InversionError,
)
from shadowlab.tangent import (
    INVERSION_LIMIT,
    ClvBasis,
    Selection,
    _aligned_forcing,
    _check_growth,
    _check_index,
    _check_vector,
    _sign_fixed_qr,
)

# Logger für dieses Modul
logger = logging.getLogger("Adjoint")

PAIRING_THRESHOLD = 1e-6

__all__ = [
    "AdjointSolution", "AdjointClvBasis", "solve_homogeneous_adjoint",
    "solve_inhomogeneous_adjoint", "adjoint_propagate", "dual_basis",
    "adjoint_project", "adjoint_project_all", "neutral_project_via_y",
    "adjoint_exponents", "backward_adjoint_spectrum",
]


@dataclass(frozen=True, eq=False)
class AdjointSolution:
    """Adjungierte Lösung w̄_0..w̄_N, indexgleich mit der Trajektorie."""
    values: np.ndarray
    kind: str


def adjoint_forcing_increments(traj: Trajectory, forcing) -> np.ndarray:
    """
    Beitrag der Inhomogenität zu jedem Rückwärtsschritt, Form (N, m).

    Flüsse: RK4-Schritt in der Rückwärtszeit τ für dw̄/dτ = f_uᵀ w̄ + g mit
    Startwert 0, Stufenmatrizen in umgekehrter Reihenfolge.
    """
    g = _aligned_forcing(traj, forcing)
    if traj.kind == MAP:
        return np.array(g[:-1])
    jac_t = np.swapaxes(traj.jacobians, -1, -2)
    mid_t = np.swapaxes(traj.midpoint_jacobians, -1, -2)
    g_mid = 0.5 * (g[:-1] + g[1:])
    return rk4_linear_step(jac_t[1:], mid_t, jac_t[:-1], np.zeros_like(g[:-1]),
                           g[1:], g_mid, g[:-1], h=traj.step)


def _solve_backward(traj: Trajectory, terminal, increments: Optional[np.ndarray], kind: str) -> AdjointSolution:
    w = _check_vector(traj, terminal, "w̄_terminal")
    phi = traj.propagators
    values = np.empty((traj.n_steps + 1, traj.dim))
    values[-1] = w
    for i in range(traj.n_steps - 1, -1, -1):
        w = phi[i].T @ w
        if increments is not None:
            w = w + increments[i]
        _check_growth(w, i, "Adjungierte Lösung")
        values[i] = w
    return AdjointSolution(values, kind)


def solve_homogeneous_adjoint(traj: Trajectory, w_terminal) -> AdjointSolution:
    """
    Löst die homogene adjungierte Gleichung rückwärts von Schritt N bis 0.

    Raises:
        TangentGrowthError: Wenn instabile adjungierte Richtungen überlaufen
    """
    return _solve_backward(traj, w_terminal, None, "homogeneous")


def solve_inhomogeneous_adjoint(traj: Trajectory, w_terminal, forcing) -> AdjointSolution:
    """
    Löst die inhomogene adjungierte Gleichung rückwärts.

    Args:
        traj (Trajectory): Die Bahn
        w_terminal: Endwert w̄_N
        forcing: Inhomogenität g an den Gitterpunkten, Form (N+1, m)

    Returns:
        AdjointSolution: Lösung w̄_0..w̄_N
    """
    increments = adjoint_forcing_increments(traj, forcing)
    return _solve_backward(traj, w_terminal, increments, "inhomogeneous")


def adjoint_propagate(traj: Trajectory, i2: int, i1: int, w_bar) -> np.ndarray:
    """
    Adjungierter Flussoperator: bildet w̄ vom Gitterpunkt i2 auf i1 ab.

    Für i1 < i2 wird rückwärts mit Φᵀ gerechnet, für i1 > i2 vorwärts durch
    Lösen von Φᵀ x = w̄ (nur für kurze Fenster gedacht).

    Raises:
        InversionError: Bei singulärem transponiertem Propagator
    """
    i1 = _check_index(traj, i1, "i1")
    i2 = _check_index(traj, i2, "i2")
    w = _check_vector(traj, w_bar, "w̄")
    phi = traj.propagators
    if i1 <= i2:
        for i in range(i2 - 1, i1 - 1, -1):
            w = phi[i].T @ w
            _check_growth(w, i, "Adjungierte Lösung")
    else:
        for i in range(i2, i1):
            if np.linalg.cond(phi[i]) > INVERSION_LIMIT:
                raise InversionError(f"Transponierter Propagator in Schritt {i} ist numerisch singulär")
            w = np.linalg.solve(phi[i].T, w)
            _check_growth(w, i + 1, "Adjungierte Lösung")
    return w


@dataclass(frozen=True, eq=False)
class AdjointClvBasis:
    """
    Duale CLV-Rahmen über dem Fenster der tangentialen Basis.

    frames[k] hat als Spalte j den normierten adjungierten CLV, dual_scale[k, j]
    ist der entfernte Normierungsfaktor ‖(Z_k^{-T})_j‖. Für Flüsse ist
    neutral[k] der neutrale adjungierte CLV ȳ, skaliert auf ⟨ȳ, f⟩ = pairing.
    """
    kind: str
    window: Tuple[int, int]
    frames: np.ndarray
    dual_scale: np.ndarray
    neutral: Optional[np.ndarray] = None
    pairing: Optional[float] = None
    neutral_index: Optional[int] = None

    @property
    def start(self) -> int:
        return self.window[0]

    @property
    def stop(self) -> int:
        return self.window[1]

    def local(self, i: int) -> int:
        if not self.start <= int(i) <= self.stop:
            raise InputError(f"Index {i} liegt außerhalb des Fensters [{self.start}, {self.stop}]")
        return int(i) - self.start


def dual_basis(clv: ClvBasis, traj: Trajectory) -> AdjointClvBasis:
    """
    Bildet die adjungierten CLVs als normierte Spalten von Z_i^{-T}.

    Args:
        clv (ClvBasis): Tangentiale CLV-Basis
        traj (Trajectory): Dieselbe Bahn, aus der clv berechnet wurde

    Returns:
        AdjointClvBasis: Duale Rahmen, Skalen und für Flüsse ȳ mit ⟨ȳ, f⟩ = 1

    Raises:
        ConditioningError: Wenn eine CLV-Matrix die Konditionsschranke verletzt
        DegeneratePairingError: Wenn ⟨ȳ, f⟩ relativ zu ‖ȳ‖‖f‖ verschwindet
    """
    if traj.kind != clv.kind or clv.stop > traj.n_steps:
        raise InputError("CLV-Basis passt nicht zur Trajektorie")
    cond = np.linalg.cond(clv.frames)
    worst = int(np.argmax(cond))
    if not np.all(np.isfinite(cond)) or cond[worst] > clv.max_condition:
        raise ConditioningError(f"CLV-Matrix im Fensterschritt {worst} hat Kondition {cond[worst]:.3e}")

    dual = np.swapaxes(clv.inverse_frames, -1, -2)
    scale = np.linalg.norm(dual, axis=-2)
    frames = dual / scale[:, None, :]

    neutral, pairing = None, None
    if traj.kind == FLOW and clv.neutral_index is not None:
        j = clv.neutral_index
        # ‖ȳ‖‖f‖ / ⟨ȳ, f⟩ = ‖ẑ_j‖ bei normiertem neutralem CLV f/‖f‖
        relative_pairing = 1.0 / scale[:, j]
        if np.min(relative_pairing) < PAIRING_THRESHOLD:
            step = clv.start + int(np.argmin(relative_pairing))
            logger.error(f"Entartete Paarung ⟨ȳ, f⟩ in Schritt {step}")
            raise DegeneratePairingError(
                f"Neutraler adjungierter CLV nahezu orthogonal zu f in Schritt {step} "
                f"(relative Paarung {np.min(relative_pairing):.2e})")
        drift_norm = np.linalg.norm(traj.drifts[clv.start:clv.stop + 1], axis=-1)
        neutral = dual[:, :, j] / drift_norm[:, None]
        pairing = 1.0

    logger.debug(f"Duale Basis über [{clv.start}, {clv.stop}] gebildet, größte Kondition {cond[worst]:.3e}")
    return AdjointClvBasis(kind=clv.kind, window=clv.window, frames=frames, dual_scale=scale,
                           neutral=neutral, pairing=pairing, neutral_index=clv.neutral_index)


def adjoint_project(adj: AdjointClvBasis, clv: ClvBasis, i: int, which: Selection, v) -> np.ndarray:
    """
    Adjungierte Projektion Z_i^{-T} D Z_iᵀ v mit denselben Auswahlregeln wie project.

    Raises:
        ConditioningError: Wenn Z_i zu schlecht konditioniert ist
    """
    if adj.window != clv.window:
        raise InputError("Duale Basis und CLV-Basis gehören zu verschiedenen Fenstern")
    k = clv.local(i)
    clv.check_conditioning(k)
    mask = clv.selection(which)
    v = np.asarray(v, dtype=float)
    return clv.inverse_frames[k][mask].T @ (clv.frames[k][:, mask].T @ v)


def adjoint_project_all(clv: ClvBasis, which: Selection, values) -> np.ndarray:
    """Adjungierte Projektion für Werte der Form (L, m) über das ganze Fenster."""
    mask = clv.selection(which)
    values = np.asarray(values, dtype=float)
    coords = np.einsum("kmj,km->kj", clv.frames[:, :, mask], values)
    return np.einsum("kjm,kj->km", clv.inverse_frames[:, mask, :], coords)


def neutral_project_via_y(v, f_val, y_val, threshold: float = PAIRING_THRESHOLD) -> np.ndarray:
    """
    Neutrale adjungierte Projektion ⟨v, f⟩ ȳ / ⟨ȳ, f⟩.

    Raises:
        DegeneratePairingError: Wenn |⟨ȳ, f⟩| < threshold·‖ȳ‖‖f‖
    """
    v = np.asarray(v, dtype=float)
    f_val = np.asarray(f_val, dtype=float)
    y_val = np.asarray(y_val, dtype=float)
    pairing = float(y_val @ f_val)
    scale = np.linalg.norm(y_val) * np.linalg.norm(f_val)
    if scale == 0.0 or abs(pairing) < threshold * scale:
        raise DegeneratePairingError(f"Paarung ⟨ȳ, f⟩ = {pairing:.3e} ist entartet")
    return (v @ f_val) / pairing * y_val


def adjoint_exponents(adj: AdjointClvBasis, clv: ClvBasis, traj: Trajectory) -> np.ndarray:
    """
    Rückwärts-Wachstumsraten der adjungierten CLVs über das Fenster.

    Jede Spalte von frames[k+1] wird einen Schritt adjungiert propagiert;
    das Zeitmittel der logarithmischen Normänderung ergibt die Rate.
    """
    phi_t = np.swapaxes(traj.propagators[clv.start:clv.stop], -1, -2)
    growth = np.log(np.linalg.norm(phi_t @ adj.frames[1:], axis=-2))
    return growth.mean(axis=0) / traj.step


def backward_adjoint_spectrum(traj: Trajectory, qr_stride: Optional[int] = None,
                              transient_fraction: float = 0.2) -> np.ndarray:
    """
    Unabhängige Referenz: QR-Verfahren (Benettin) auf der adjungierten
    Gleichung rückwärts in der Zeit.

    Returns:
        np.ndarray: Wachstumsraten absteigend sortiert
    """
    stride = qr_stride or (1 if traj.kind == MAP else 10)
    count = traj.n_steps // stride
    skip = int(np.ceil(transient_fraction * count))
    if count - skip < 1:
        raise InputError(f"Trajektorie zu kurz für das Rückwärts-QR-Verfahren ({count} Kontrollpunkte)")
    m = traj.dim
    start = traj.n_steps - count * stride
    blocks = np.swapaxes(traj.propagators[start:], -1, -2).reshape(count, stride, m, m)
    products = blocks[:, -1].copy()
    for j in range(stride - 2, -1, -1):
        products = blocks[:, j] @ products

    q = np.eye(m)
    totals = np.zeros(m)
    for n, b in enumerate(range(count - 1, -1, -1)):
        q, r = _sign_fixed_qr(products[b] @ q)
        if n >= skip:
            totals += np.log(np.abs(np.diag(r)))
    rates = totals / ((count - skip) * stride * traj.step)
    return np.sort(rates)[::-1]
