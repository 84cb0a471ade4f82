"""
/shadowlab/dynamics.py
Version: 1.0.0
------------------------------
ID: SHADOWLAB-DYNAMICS-01
Beschreibung: Parametrisierte Flüsse und Abbildungen samt erster Ableitungen.

Dieses Modul definiert die Systembeschreibungen (SystemSpec für Flüsse,
MapSpec für Diffeomorphismen), die diskretisierte Trajektorie und die
Operationen zum Erzeugen von Trajektorien:
- integrate: klassisches RK4 mit fester Schrittweite
- iterate: exakte Iteration einer Abbildung
- spinup: Einschwingen auf den Attraktor ohne Speichern der Zustände
- check_derivatives: Vergleich der analytischen Ableitungen mit zentralen Differenzen

Alle Rückruffunktionen arbeiten vektorisiert über führende Achsen:
ein Zustand hat die Form (..., m), die Jacobi-Matrix (..., m, m).
Fehlende Ableitungen werden durch zentrale Differenzen ersetzt.

Stand: Oktober 2026
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, ClassVar, Mapping, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from shadowlab.error_handler import DivergenceError, InputError

# Logger für dieses Modul
logger = logging.getLogger("Dynamics")

FLOW = "flow"
MAP = "map"
DEFAULT_FD_STEP = 1e-6

Callback = Callable[[np.ndarray, float], np.ndarray]
Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _difference(plus, minus, period):
    delta = np.asarray(plus, dtype=float) - np.asarray(minus, dtype=float)
    if period is not None:
        # Sprünge der Torus-Einbettung herausrechnen
        delta = delta - period * np.round(delta / period)
    return delta


def fd_state_derivative(fun: Callback, u, s: float, eps: float, period=None) -> np.ndarray:
    """
    Zentrale Differenz einer Funktion nach dem Zustand.

    Args:
        fun: Rückruf (u, s) -> Wert der Form (...,) oder (..., k)
        u: Zustand(e) der Form (..., m)
        s (float): Parameterwert
        eps (float): Schrittweite der Differenz
        period (float | None): Periode für Abbildungen auf dem Torus

    Returns:
        np.ndarray: Ableitung, die letzte Achse indiziert die Zustandskomponente
    """
    u = np.asarray(u, dtype=float)
    columns = []
    for k in range(u.shape[-1]):
        offset = np.zeros(u.shape[-1])
        offset[k] = eps
        delta = _difference(fun(u + offset, s), fun(u - offset, s), period)
        columns.append(delta / (2.0 * eps))
    return np.stack(columns, axis=-1)


def fd_parameter_derivative(fun: Callback, u, s: float, eps: float, period=None) -> np.ndarray:
    """Zentrale Differenz einer Funktion nach dem Parameter s."""
    u = np.asarray(u, dtype=float)
    return _difference(fun(u, s + eps), fun(u, s - eps), period) / (2.0 * eps)


def trapezoid_weights(n_points: int, h: float) -> np.ndarray:
    """Gewichte der Trapezregel auf einem äquidistanten Gitter."""
    if n_points < 2:
        return np.zeros(max(n_points, 0))
    weights = np.full(n_points, float(h))
    weights[0] = weights[-1] = 0.5 * h
    return weights


@dataclass(frozen=True)
class ParameterDirection:
    """
    Zusätzlicher Systemparameter, nach dem differenziert werden kann.

    Attributes:
        name (str): Name des Parameters (z.B. "sigma")
        rhs_derivative: (u, s) -> Ableitung der rechten Seite nach dem Parameter
        objective_derivative: (u, s) -> Ableitung des Zielfunktionals, None = 0
    """
    name: str
    rhs_derivative: Callback
    objective_derivative: Optional[Callback] = None


class _DerivativeAccess:
    """
    Gemeinsamer Zugriff auf rechte Seite, Zielfunktional und Ableitungen.

    Jede Ableitung wird vom analytischen Rückruf geliefert oder, falls dieser
    fehlt, durch zentrale Differenzen mit Schrittweite `fd_step` ersetzt.
    """
    kind: ClassVar[str] = FLOW
    period: Optional[float] = None
    default_step: float = 1.0

    def _callbacks(self) -> Tuple[Callback, Optional[Callback], Optional[Callback]]:
        raise NotImplementedError

    def _validate(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InputError(f"Dimension muss positiv sein, erhalten: {self.dim}")
        if self.fd_step <= 0:
            raise InputError(f"fd_step muss positiv sein, erhalten: {self.fd_step}")

    def rhs(self, u, s) -> np.ndarray:
        """Rechte Seite f(u, s) (Fluss) bzw. Abbildung (Diffeomorphismus)."""
        fun, _, _ = self._callbacks()
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(np.asarray(fun(u, s), dtype=float), u.shape)

    def jac_u(self, u, s) -> np.ndarray:
        """Jacobi-Matrix f_u der Form (..., m, m)."""
        fun, jac, _ = self._callbacks()
        u = np.asarray(u, dtype=float)
        shape = u.shape + (self.dim,)
        if jac is None:
            return fd_state_derivative(fun, u, s, self.fd_step, self.period)
        return np.broadcast_to(np.asarray(jac(u, s), dtype=float), shape)

    def jac_s(self, u, s) -> np.ndarray:
        """Parameterableitung f_s der Form (..., m)."""
        fun, _, jac = self._callbacks()
        u = np.asarray(u, dtype=float)
        if jac is None:
            return fd_parameter_derivative(fun, u, s, self.fd_step, self.period)
        return np.broadcast_to(np.asarray(jac(u, s), dtype=float), u.shape)

    def objective_value(self, u, s) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(np.asarray(self.objective(u, s), dtype=float), u.shape[:-1])

    def grad_u(self, u, s) -> np.ndarray:
        """Gradient J_u der Form (..., m)."""
        u = np.asarray(u, dtype=float)
        if self.objective_grad_u is None:
            return fd_state_derivative(self.objective, u, s, self.fd_step)
        return np.broadcast_to(np.asarray(self.objective_grad_u(u, s), dtype=float), u.shape)

    def grad_s(self, u, s) -> np.ndarray:
        """Parameterableitung J_s der Form (...)."""
        u = np.asarray(u, dtype=float)
        if self.objective_grad_s is None:
            return fd_parameter_derivative(self.objective, u, s, self.fd_step)
        return np.broadcast_to(np.asarray(self.objective_grad_s(u, s), dtype=float), u.shape[:-1])

    def fallback_derivatives(self) -> Tuple[str, ...]:
        """Namen der Ableitungen, die durch Differenzen ersetzt werden."""
        _, jac_u, jac_s = self._callbacks()
        names = {"f_u": jac_u, "f_s": jac_s,
                 "J_u": self.objective_grad_u, "J_s": self.objective_grad_s}
        return tuple(name for name, cb in names.items() if cb is None)

    def direction(self, name: str) -> ParameterDirection:
        try:
            return self.parameter_directions[name]
        except KeyError:
            known = ", ".join(sorted(self.parameter_directions)) or "keine"
            raise InputError(f"Unbekannte Parameterrichtung '{name}' für {self.name} (bekannt: {known})")

    def sample_initial(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Zufällige Anfangszustände der Form (count, m)."""
        if self.initial_sampler is not None:
            return np.asarray(self.initial_sampler(rng, count), dtype=float).reshape(count, self.dim)
        return rng.standard_normal((count, self.dim))


@dataclass(frozen=True, eq=False)
class SystemSpec(_DerivativeAccess):
    """
    Parametrisierter autonomer Fluss du/dt = f(u, s) mit Zielfunktional J(u, s).

    Attributes:
        name (str): Registrierungsname
        dim (int): Zustandsdimension m
        drift: f(u, s)
        objective: J(u, s)
        drift_jac_u, drift_jac_s, objective_grad_u, objective_grad_s: Ableitungen oder None
        default_step (float): Standardschrittweite h
        spinup_duration (float): Standard-Einschwingdauer in Zeiteinheiten
        default_parameter (float): Standardwert von s
    """
    name: str
    dim: int
    drift: Callback
    objective: Callback
    drift_jac_u: Optional[Callback] = None
    drift_jac_s: Optional[Callback] = None
    objective_grad_u: Optional[Callback] = None
    objective_grad_s: Optional[Callback] = None
    default_step: float = 0.01
    spinup_duration: float = 100.0
    default_parameter: float = 0.0
    fd_step: float = DEFAULT_FD_STEP
    initial_sampler: Optional[Sampler] = None
    parameter_directions: Mapping[str, ParameterDirection] = field(default_factory=dict)

    kind: ClassVar[str] = FLOW

    def __post_init__(self):
        self._validate()
        if self.default_step <= 0:
            raise InputError(f"default_step muss positiv sein, erhalten: {self.default_step}")

    def _callbacks(self):
        return self.drift, self.drift_jac_u, self.drift_jac_s


@dataclass(frozen=True, eq=False)
class MapSpec(_DerivativeAccess):
    """
    Parametrisierter Diffeomorphismus u_{i+1} = step_map(u_i, s).

    `period` kennzeichnet Abbildungen auf dem Torus [0, period)^m; Differenzen
    werden dann modulo der Periode gebildet. `spinup_duration` zählt Schritte.
    """
    name: str
    dim: int
    step_map: Callback
    objective: Callback
    map_jac_u: Optional[Callback] = None
    map_jac_s: Optional[Callback] = None
    objective_grad_u: Optional[Callback] = None
    objective_grad_s: Optional[Callback] = None
    period: Optional[float] = None
    spinup_duration: float = 1000
    default_parameter: float = 0.0
    fd_step: float = DEFAULT_FD_STEP
    initial_sampler: Optional[Sampler] = None
    parameter_directions: Mapping[str, ParameterDirection] = field(default_factory=dict)

    kind: ClassVar[str] = MAP
    default_step: ClassVar[float] = 1.0

    def __post_init__(self):
        self._validate()

    def _callbacks(self):
        return self.step_map, self.map_jac_u, self.map_jac_s


Spec = Union[SystemSpec, MapSpec]


def rk4_linear_step(a_start, a_mid, a_end, x, g_start=None, g_mid=None, g_end=None,
                    h: float = 1.0, vector: bool = True):
    """
    Ein klassischer RK4-Schritt für dx/dt = A(t) x + g(t) mit festen Stufenmatrizen.

    Die Stufen 2 und 3 verwenden die Mittelpunktsmatrix, Stufe 4 die Endmatrix.
    Alle Argumente dürfen führende Batch-Achsen tragen.

    Args:
        a_start, a_mid, a_end: Matrizen (..., m, m) am Anfang, in der Mitte, am Ende
        x: Anfangswert (..., m) oder Matrix (..., m, m) bei vector=False
        g_start, g_mid, g_end: Inhomogenität (..., m) bzw. (..., m, m) oder None
        h (float): Schrittweite (negativ für Rückwärtsschritte)
        vector (bool): True für Vektoren, False für Matrizen als x

    Returns:
        np.ndarray: x nach einem Schritt
    """
    def apply(a, y):
        if vector:
            return np.matmul(a, y[..., None])[..., 0]
        return np.matmul(a, y)

    def add(k, g):
        return k if g is None else k + g

    k1 = add(apply(a_start, x), g_start)
    k2 = add(apply(a_mid, x + 0.5 * h * k1), g_mid)
    k3 = add(apply(a_mid, x + 0.5 * h * k2), g_mid)
    k4 = add(apply(a_end, x + h * k3), g_end)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Diskretisierte Bahn u_0..u_N mit Schrittweite und Parameterwert.

    Abgeleitete Größen entlang der Bahn (Jacobi-Matrizen, Schrittpropagatoren,
    Ableitungen des Zielfunktionals) werden beim ersten Zugriff berechnet und
    zwischengespeichert.
    """
    spec: Spec
    states: np.ndarray
    step: float
    parameter: float
    spinup_discarded: float = 0.0

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] != self.spec.dim or states.shape[0] < 2:
            raise InputError(f"Trajektorie braucht mindestens zwei Zustände der Dimension {self.spec.dim}, "
                             f"erhalten Form {states.shape}")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def kind(self) -> str:
        return self.spec.kind

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_steps + 1)

    @cached_property
    def drifts(self) -> np.ndarray:
        """f(u_i, s) an allen Gitterpunkten (nur Flüsse)."""
        if self.kind != FLOW:
            raise InputError("Vektorfeldwerte sind nur für Flüsse definiert")
        return self.spec.rhs(self.states, self.parameter)

    @cached_property
    def jacobians(self) -> np.ndarray:
        return self.spec.jac_u(self.states, self.parameter)

    @cached_property
    def param_forcing(self) -> np.ndarray:
        """f_s an allen Gitterpunkten, Form (N+1, m)."""
        return self.spec.jac_s(self.states, self.parameter)

    @cached_property
    def objective_values(self) -> np.ndarray:
        return self.spec.objective_value(self.states, self.parameter)

    @cached_property
    def objective_gradients(self) -> np.ndarray:
        return self.spec.grad_u(self.states, self.parameter)

    @cached_property
    def objective_param_derivatives(self) -> np.ndarray:
        return self.spec.grad_s(self.states, self.parameter)

    @cached_property
    def objective_mean(self) -> float:
        """Zeitmittel von J über die gesamte Bahn (Trapez bzw. Summe über 0..N-1)."""
        values = self.objective_values
        if self.kind == FLOW:
            weights = trapezoid_weights(values.shape[0], self.step)
            return float(weights @ values / weights.sum())
        return float(values[:-1].mean())

    @cached_property
    def midpoint_states(self) -> np.ndarray:
        """Kubische Hermite-Interpolation von u in den Schrittmitten (Flüsse)."""
        f = self.drifts
        u = self.states
        return 0.5 * (u[:-1] + u[1:]) + (self.step / 8.0) * (f[:-1] - f[1:])

    @cached_property
    def midpoint_jacobians(self) -> np.ndarray:
        return self.spec.jac_u(self.midpoint_states, self.parameter)

    @cached_property
    def propagators(self) -> np.ndarray:
        """
        Schrittpropagatoren Φ_i der Form (N, m, m).

        Flüsse: RK4 der Tangentengleichung mit eingefrorenen Jacobi-Matrizen am
        Anfang, in der Mitte und am Ende des Schritts. Abbildungen: f_u(u_i).
        """
        if self.kind == MAP:
            return np.ascontiguousarray(self.jacobians[:-1])
        jac = self.jacobians
        identity = np.broadcast_to(np.eye(self.dim), jac[:-1].shape)
        return rk4_linear_step(jac[:-1], self.midpoint_jacobians, jac[1:], identity,
                               h=self.step, vector=False)

    def direction_forcing(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        """
        Parameterableitungen für eine zusätzliche Parameterrichtung.

        Returns:
            Tuple[np.ndarray, np.ndarray]: (f_p der Form (N+1, m), J_p der Form (N+1,))
        """
        direction = self.spec.direction(name)
        forcing = np.broadcast_to(
            np.asarray(direction.rhs_derivative(self.states, self.parameter), dtype=float),
            self.states.shape)
        if direction.objective_derivative is None:
            objective = np.zeros(self.n_steps + 1)
        else:
            objective = np.broadcast_to(
                np.asarray(direction.objective_derivative(self.states, self.parameter), dtype=float),
                (self.n_steps + 1,))
        return forcing, objective


def rk4_step(spec: SystemSpec, u, s: float, h: float) -> np.ndarray:
    """Ein klassischer RK4-Schritt der Zustandsgleichung (batch-fähig)."""
    k1 = spec.rhs(u, s)
    k2 = spec.rhs(u + 0.5 * h * k1, s)
    k3 = spec.rhs(u + 0.5 * h * k2, s)
    k4 = spec.rhs(u + h * k3, s)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _checked_state(spec: Spec, u0) -> np.ndarray:
    u = np.array(u0, dtype=float)
    if u.shape[-1:] != (spec.dim,):
        raise InputError(f"Anfangszustand hat Form {u.shape}, erwartet (..., {spec.dim})")
    return u


def advance(spec: Spec, u0, s: float, n: int, h: Optional[float] = None,
            progress: bool = False, observer: Optional[Callable[[int, np.ndarray], None]] = None,
            desc: Optional[str] = None) -> np.ndarray:
    """
    Führt n Schritte aus, ohne die Zwischenzustände zu speichern.

    Args:
        spec: Fluss oder Abbildung
        u0: Anfangszustand(e) der Form (..., m)
        s (float): Parameterwert
        n (int): Anzahl der Schritte
        h (float | None): Schrittweite (nur Flüsse; None = Standard des Systems)
        progress (bool): tqdm-Fortschrittsbalken anzeigen
        observer: optionaler Rückruf (i, u_i) vor jedem Schritt i

    Returns:
        np.ndarray: Zustand(e) nach n Schritten

    Raises:
        DivergenceError: Bei nicht-endlichem Zustand
    """
    u = _checked_state(spec, u0)
    h = spec.default_step if h is None else h
    label = desc or f"{spec.name}"
    for i in tqdm(range(int(n)), disable=not progress, desc=label, unit="Schritt", leave=False):
        if observer is not None:
            observer(i, u)
        if spec.kind == FLOW:
            u = rk4_step(spec, u, s, h)
        else:
            u = np.array(spec.rhs(u, s))
        if not np.all(np.isfinite(u)):
            logger.error(f"Divergenz von {spec.name} in Schritt {i + 1} (s={s})")
            raise DivergenceError(f"Nicht-endlicher Zustand in Schritt {i + 1}", step=i + 1)
    return u


def integrate(spec: SystemSpec, u0, s: float, h: float, n: int, progress: bool = False) -> Trajectory:
    """
    Integriert einen Fluss mit klassischem RK4 und fester Schrittweite.

    Args:
        spec (SystemSpec): Der Fluss
        u0: Anfangszustand der Länge m
        s (float): Parameterwert
        h (float): Schrittweite > 0
        n (int): Anzahl der Schritte >= 1
        progress (bool): Fortschrittsbalken anzeigen

    Returns:
        Trajectory: n+1 Zustände mit states[0] = u0

    Raises:
        InputError: Bei ungültigen Argumenten
        DivergenceError: Bei nicht-endlichem Zustand (mit Schrittindex)
    """
    if spec.kind != FLOW:
        raise InputError(f"integrate erwartet einen Fluss, {spec.name} ist eine Abbildung")
    if not h > 0 or int(n) < 1:
        raise InputError(f"Ungültige Schrittweite oder Schrittzahl: h={h}, n={n}")
    u = _checked_state(spec, u0)
    if u.ndim != 1:
        raise InputError("integrate erwartet genau einen Anfangszustand")

    states = np.empty((int(n) + 1, spec.dim))
    states[0] = u

    def record(i, state):
        states[i] = state

    last = advance(spec, u, s, n, h=h, progress=progress, observer=record, desc=f"RK4 {spec.name}")
    states[-1] = last
    logger.debug(f"{spec.name}: {n} RK4-Schritte mit h={h} integriert")
    return Trajectory(spec, states, float(h), float(s))


def iterate(spec: MapSpec, u0, s: float, n: int, progress: bool = False) -> Trajectory:
    """
    Iteriert eine Abbildung n-mal: states[i+1] = step_map(states[i], s).

    Raises:
        InputError: Bei ungültigen Argumenten
        DivergenceError: Bei nicht-endlichem Zustand
    """
    if spec.kind != MAP:
        raise InputError(f"iterate erwartet eine Abbildung, {spec.name} ist ein Fluss")
    if int(n) < 1:
        raise InputError(f"Schrittzahl muss >= 1 sein, erhalten: {n}")
    u = _checked_state(spec, u0)
    if u.ndim != 1:
        raise InputError("iterate erwartet genau einen Anfangszustand")

    states = np.empty((int(n) + 1, spec.dim))
    states[0] = u

    def record(i, state):
        states[i] = state

    states[-1] = advance(spec, u, s, n, progress=progress, observer=record, desc=f"Iteration {spec.name}")
    return Trajectory(spec, states, 1.0, float(s))


def spinup(spec: Spec, u0, s: float, duration: float, h: Optional[float] = None,
           progress: bool = False) -> np.ndarray:
    """
    Lässt das System einschwingen und verwirft den Transienten.

    Args:
        spec: Fluss oder Abbildung
        u0: Anfangszustand(e) der Form (..., m)
        s (float): Parameterwert
        duration (float): Zeiteinheiten (Flüsse) bzw. Schritte (Abbildungen), >= 0
        h (float | None): Schrittweite für Flüsse

    Returns:
        np.ndarray: Zustand nach der Einschwingphase
    """
    if duration < 0:
        raise InputError(f"Einschwingdauer muss >= 0 sein, erhalten: {duration}")
    h = spec.default_step if h is None else h
    n = int(round(duration / h)) if spec.kind == FLOW else int(round(duration))
    if n == 0:
        return _checked_state(spec, u0)
    logger.debug(f"Einschwingen von {spec.name}: {n} Schritte")
    return advance(spec, u0, s, n, h=h, progress=progress, desc=f"Einschwingen {spec.name}")


@dataclass(frozen=True)
class DerivativeReport:
    """Größter relativer Fehler je Ableitung gegenüber zentralen Differenzen."""
    f_u: float
    f_s: float
    J_u: float
    J_s: float
    fallback: Tuple[str, ...] = ()

    def worst(self) -> float:
        return max(self.f_u, self.f_s, self.J_u, self.J_s)

    def as_dict(self) -> dict:
        return {"f_u": self.f_u, "f_s": self.f_s, "J_u": self.J_u, "J_s": self.J_s,
                "fallback": list(self.fallback)}


def _relative_error(analytic, reference) -> float:
    analytic = np.asarray(analytic, dtype=float)
    reference = np.asarray(reference, dtype=float)
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(reference), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - reference)) / scale)


def check_derivatives(spec: Spec, u, s: float, eps: float = 1e-5) -> DerivativeReport:
    """
    Vergleicht alle analytischen Ableitungen mit zentralen Differenzen.

    Ableitungen ohne analytischen Rückruf werden Differenz gegen Differenz
    verglichen und in `fallback` aufgeführt.

    Args:
        spec: Fluss oder Abbildung
        u: Zustand(e) der Form (..., m)
        s (float): Parameterwert
        eps (float): Schrittweite der Differenzen > 0

    Returns:
        DerivativeReport: Worst-Case-Fehler für f_u, f_s, J_u, J_s
    """
    if not eps > 0:
        raise InputError(f"eps muss positiv sein, erhalten: {eps}")
    u = _checked_state(spec, u)
    fun = spec._callbacks()[0]
    report = DerivativeReport(
        f_u=_relative_error(spec.jac_u(u, s), fd_state_derivative(fun, u, s, eps, spec.period)),
        f_s=_relative_error(spec.jac_s(u, s), fd_parameter_derivative(fun, u, s, eps, spec.period)),
        J_u=_relative_error(spec.grad_u(u, s), fd_state_derivative(spec.objective, u, s, eps)),
        J_s=_relative_error(spec.grad_s(u, s), fd_parameter_derivative(spec.objective, u, s, eps)),
        fallback=spec.fallback_derivatives(),
    )
    logger.debug(f"Ableitungsprüfung {spec.name}: {report.as_dict()}")
    return report
