"""
/shadowlab/systems.py
Version: 1.0.0
------------------------------
Registrierung und Bereitstellung der eingebauten Testsysteme.

Dieses Modul ist verantwortlich für:
- die Systemregistrierung (Name -> Fabrikfunktion), ansprechbar aus CLI und Konfiguration
- die eingebauten Systeme mit analytischen Ableitungen:
  * `lorenz63`: Lorenz-System mit sigma=10, beta=8/3, Parameter s = rho, J = z
  * `catmap`: gestörte Arnold-Katzenabbildung auf dem Torus [0,1)^2
  * `linear-saddle`: du/dt = diag(1, -2) u + s (0, 1), Orakel für Konvergenzordnung
  * `linear-sink`: du/dt = -(u - s), J = u^2, Orakel für die Differenzenreferenz

Die Störung der Katzenabbildung ist fest vorgegeben:
    g(u) = (sin 2πu₂, sin 2πu₁) / (2π)
Für |s| <= 0.1 bleibt det(M + s g_u) >= 2 - 1.1² > 0, die Abbildung also ein
Diffeomorphismus.

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from shadowlab.dynamics import MapSpec, ParameterDirection, Spec, SystemSpec
from shadowlab.error_handler import ConfigError

# Logger für dieses Modul
logger = logging.getLogger("Systems")

LORENZ_SIGMA = 10.0
LORENZ_BETA = 8.0 / 3.0
CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])
TWO_PI = 2.0 * np.pi
SADDLE_RATES = np.array([1.0, -2.0])


@dataclass(frozen=True)
class SystemInfo:
    """
    Eintrag der Systemregistrierung.

    Attributes:
        name (str): Registrierungsname
        factory: Fabrikfunktion, die eine neue Spezifikation liefert
        description (str): Kurzbeschreibung für Listen und Banner
    """
    name: str
    factory: Callable[[], Spec]
    description: str = ""


_REGISTRY: Dict[str, SystemInfo] = {}


def register_system(name: str, factory: Callable[[], Spec], description: str = "") -> None:
    """`factory` liefert ohne Argumente eine SystemSpec oder MapSpec; doppelte Namen sind ein ConfigError."""
    if name in _REGISTRY:
        raise ConfigError(f"System '{name}' ist bereits registriert")
    _REGISTRY[name] = SystemInfo(name, factory, description)
    logger.debug(f"System registriert: {name}")


def get_system(name: str) -> Spec:
    """
    Liefert die Spezifikation eines registrierten Systems.

    Raises:
        ConfigError: Wenn kein System dieses Namens existiert
    """
    info = _REGISTRY.get(name)
    if info is None:
        known = ", ".join(sorted(_REGISTRY))
        raise ConfigError(f"Unbekanntes System '{name}' (verfügbar: {known})")
    return info.factory()


def list_systems() -> List[SystemInfo]:
    return [_REGISTRY[name] for name in sorted(_REGISTRY)]


# --- Lorenz 63 ---

def _lorenz_drift(u, rho):
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    return np.stack([LORENZ_SIGMA * (y - x), x * (rho - z) - y, x * y - LORENZ_BETA * z], axis=-1)


def _lorenz_jac_u(u, rho):
    x, y, z = u[..., 0], u[..., 1], u[..., 2]
    zero = np.zeros_like(x)
    rows = [
        np.stack([np.full_like(x, -LORENZ_SIGMA), np.full_like(x, LORENZ_SIGMA), zero], axis=-1),
        np.stack([rho - z, np.full_like(x, -1.0), -x], axis=-1),
        np.stack([y, x, np.full_like(x, -LORENZ_BETA)], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def _lorenz_jac_rho(u, rho):
    zero = np.zeros_like(u[..., 0])
    return np.stack([zero, u[..., 0], zero], axis=-1)


def _lorenz_jac_sigma(u, rho):
    zero = np.zeros_like(u[..., 0])
    return np.stack([u[..., 1] - u[..., 0], zero, zero], axis=-1)


def _lorenz_jac_beta(u, rho):
    zero = np.zeros_like(u[..., 0])
    return np.stack([zero, zero, -u[..., 2]], axis=-1)


def _unit_gradient(index: int):
    def grad(u, s):
        g = np.zeros(np.shape(u))
        g[..., index] = 1.0
        return g
    return grad


def _zero_scalar(u, s):
    return np.zeros(np.shape(u)[:-1])


def lorenz63() -> SystemSpec:
    """Lorenz 63 mit s = rho und Zielfunktional J = z."""
    return SystemSpec(
        name="lorenz63",
        dim=3,
        drift=_lorenz_drift,
        objective=lambda u, s: np.asarray(u)[..., 2],
        drift_jac_u=_lorenz_jac_u,
        drift_jac_s=_lorenz_jac_rho,
        objective_grad_u=_unit_gradient(2),
        objective_grad_s=_zero_scalar,
        default_step=0.01,
        spinup_duration=100.0,
        default_parameter=28.0,
        initial_sampler=lambda rng, n: rng.standard_normal((n, 3)) + np.array([0.0, 0.0, 25.0]),
        parameter_directions={
            "sigma": ParameterDirection("sigma", _lorenz_jac_sigma),
            "beta": ParameterDirection("beta", _lorenz_jac_beta),
        },
    )


# --- Gestörte Katzenabbildung ---

def _cat_perturbation(u):
    return np.stack([np.sin(TWO_PI * u[..., 1]), np.sin(TWO_PI * u[..., 0])], axis=-1) / TWO_PI


def _cat_map(u, s):
    return np.mod(u @ CAT_MATRIX.T + s * _cat_perturbation(u), 1.0)


def _cat_jac_u(u, s):
    zero = np.zeros_like(u[..., 0])
    g_u = np.stack([
        np.stack([zero, np.cos(TWO_PI * u[..., 1])], axis=-1),
        np.stack([np.cos(TWO_PI * u[..., 0]), zero], axis=-1),
    ], axis=-2)
    return CAT_MATRIX + s * g_u


def _cat_objective(u, s):
    return np.cos(TWO_PI * u[..., 0]) + 0.5 * np.sin(TWO_PI * u[..., 1])


def _cat_objective_grad(u, s):
    return np.stack([-TWO_PI * np.sin(TWO_PI * u[..., 0]), np.pi * np.cos(TWO_PI * u[..., 1])], axis=-1)


def catmap() -> MapSpec:
    """Katzenabbildung M u + s g(u) mod 1 mit J = cos 2πu₁ + 0.5 sin 2πu₂."""
    return MapSpec(
        name="catmap",
        dim=2,
        step_map=_cat_map,
        objective=_cat_objective,
        map_jac_u=_cat_jac_u,
        map_jac_s=lambda u, s: _cat_perturbation(u),
        objective_grad_u=_cat_objective_grad,
        objective_grad_s=_zero_scalar,
        period=1.0,
        spinup_duration=1000,
        default_parameter=0.0,
        initial_sampler=lambda rng, n: rng.random((n, 2)),
    )


# --- Lineare Orakelsysteme ---

def linear_saddle() -> SystemSpec:
    """Entkoppelter Sattel du/dt = diag(1, -2) u + s (0, 1) mit J = u₂."""
    forcing = np.array([0.0, 1.0])
    return SystemSpec(
        name="linear-saddle",
        dim=2,
        drift=lambda u, s: u * SADDLE_RATES + s * forcing,
        objective=lambda u, s: np.asarray(u)[..., 1],
        drift_jac_u=lambda u, s: np.broadcast_to(np.diag(SADDLE_RATES), np.shape(u) + (2,)),
        drift_jac_s=lambda u, s: np.broadcast_to(forcing, np.shape(u)),
        objective_grad_u=_unit_gradient(1),
        objective_grad_s=_zero_scalar,
        default_step=0.01,
        spinup_duration=0.0,
        default_parameter=0.0,
        initial_sampler=lambda rng, n: np.zeros((n, 2)),
    )


def linear_sink() -> SystemSpec:
    """Skalare Senke du/dt = -(u - s) mit J = u², also <J> = s²."""
    return SystemSpec(
        name="linear-sink",
        dim=1,
        drift=lambda u, s: -(u - s),
        objective=lambda u, s: np.asarray(u)[..., 0] ** 2,
        drift_jac_u=lambda u, s: np.full(np.shape(u) + (1,), -1.0),
        drift_jac_s=lambda u, s: np.ones(np.shape(u)),
        objective_grad_u=lambda u, s: 2.0 * np.asarray(u),
        objective_grad_s=_zero_scalar,
        default_step=0.01,
        spinup_duration=20.0,
        default_parameter=0.5,
    )


register_system("lorenz63", lorenz63, "Lorenz 63, s = rho, J = z")
register_system("catmap", catmap, "gestörte Katzenabbildung auf dem Torus")
register_system("linear-saddle", linear_saddle, "linearer Sattel diag(1, -2)")
register_system("linear-sink", linear_sink, "skalare lineare Senke, J = u^2")
