"""
/shadowlab/artifact_cache.py
Version: 1.0.0
------------------------------
Schreibt und liest alle Ergebnisdateien und den CLV-Cache.

Funktionen:
- JSON-Dateien mit `schema`-Feld, sortierten Schlüsseln und ohne Zeitstempel
- CSV-Dateien mit optionalem `#`-Kopfblock
- Trajektorien als CSV (`t,u_1..u_m`)
- CLV-Basis als `clv_cache.npz`, abgesichert durch einen Fingerabdruck
  aus System, Parameter, Schrittweite, Zuständen und Optionen

Stand: Oktober 2026
"""

import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from shadowlab.dynamics import FLOW, Spec, Trajectory
from shadowlab.error_handler import InputError, safe_file_operation
from shadowlab.tangent import ClvBasis, ClvOptions

# Logger für dieses Modul
logger = logging.getLogger("ArtifactCache")

SCHEMA_VERSION = 1
CLV_CACHE_NAME = "clv_cache.npz"
FLOAT_FORMAT = "%.17g"


def _plain(value):
    """Wandelt numpy-Werte rekursiv in JSON-taugliche Python-Werte."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def render_json(data: Dict) -> str:
    """Deterministische JSON-Darstellung mit Schema-Version."""
    payload = {"schema": SCHEMA_VERSION}
    payload.update(_plain(data))
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


@safe_file_operation
def write_json(path: Path, data: Dict) -> Path:
    path = Path(path)
    path.write_text(render_json(data), encoding="utf-8")
    logger.info(f"JSON geschrieben: {path}")
    return path


@safe_file_operation
def read_json(path: Path) -> Dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


@safe_file_operation
def write_csv(path: Path, columns: Sequence[str], rows, header: Optional[Dict[str, object]] = None) -> Path:
    """
    Schreibt eine Tabelle als CSV.

    Args:
        path (Path): Zieldatei
        columns: Spaltennamen
        rows: Werte der Form (n, len(columns))
        header (dict | None): Diagnosewerte, als `# key=value`-Zeilen vorangestellt
    """
    path = Path(path)
    lines = [f"# {key}={_plain(value)}" for key, value in sorted((header or {}).items())]
    lines.append(",".join(columns))
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    np.savetxt(path, rows, delimiter=",", fmt=FLOAT_FORMAT, header="\n".join(lines), comments="")
    logger.info(f"CSV geschrieben: {path} ({rows.shape[0]} Zeilen)")
    return path


def state_columns(dim: int, prefix: str = "u") -> List[str]:
    return [f"{prefix}_{j + 1}" for j in range(dim)]


def save_trajectory_csv(traj: Trajectory, path: Path) -> Path:
    """Speichert eine Trajektorie als CSV mit Kopfzeile `t,u_1..u_m`."""
    rows = np.column_stack([traj.times, traj.states])
    return write_csv(path, ["t"] + state_columns(traj.dim), rows)


@safe_file_operation
def load_trajectory_csv(path: Path, spec: Spec, parameter: float) -> Trajectory:
    """
    Lädt eine Trajektorie aus einer CSV-Datei.

    Die Schrittweite wird aus der Zeitspalte bestimmt (Abbildungen: 1).

    Raises:
        InputError: Bei falscher Spaltenzahl oder ungleichmäßigem Zeitgitter
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != spec.dim + 1:
        raise InputError(f"{path}: {data.shape[1]} Spalten, erwartet {spec.dim + 1}")
    times, states = data[:, 0], data[:, 1:]
    step = 1.0
    if spec.kind == FLOW:
        steps = np.diff(times)
        step = float(steps.mean()) if steps.size else spec.default_step
        if steps.size and not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
            raise InputError(f"{path}: Zeitgitter ist nicht äquidistant")
    return Trajectory(spec, states, step, float(parameter))


def trajectory_fingerprint(traj: Trajectory, options: ClvOptions) -> str:
    """SHA-256 über System, Parameter, Schrittweite, Zustände und CLV-Optionen."""
    digest = hashlib.sha256()
    digest.update(f"{traj.spec.name}|{traj.parameter!r}|{traj.step!r}|".encode())
    digest.update(np.ascontiguousarray(traj.states).tobytes())
    digest.update(json.dumps(asdict(options), sort_keys=True).encode())
    return digest.hexdigest()


@safe_file_operation
def save_clv_cache(path: Path, clv: ClvBasis, fingerprint: str) -> Path:
    """Speichert die CLV-Basis samt Fingerabdruck als komprimiertes npz."""
    path = Path(path)
    with open(path, "wb") as f:
        np.savez_compressed(
            f,
            fingerprint=np.array(fingerprint),
            kind=np.array(clv.kind),
            step=clv.step,
            window=np.array(clv.window),
            frames=clv.frames,
            log_growth=clv.log_growth,
            exponents=clv.exponents,
            n_unstable=clv.n_unstable,
            neutral_index=-1 if clv.neutral_index is None else clv.neutral_index,
            neutral_tolerance=clv.neutral_tolerance,
            min_angle=clv.min_angle,
            neutral_count=clv.neutral_count,
            neutral_alignment=np.nan if clv.neutral_alignment is None else clv.neutral_alignment,
            qr_stride=clv.qr_stride,
            max_condition=clv.max_condition,
        )
    logger.info(f"CLV-Cache geschrieben: {path}")
    return path


def validate_cache_entry(path: Path, fingerprint: str) -> bool:
    """
    Prüft, ob ein CLV-Cache zum aktuellen Lauf gehört.

    Returns:
        bool: True, wenn die Datei existiert, lesbar ist und der Fingerabdruck passt
    """
    path = Path(path)
    if not path.exists():
        return False
    try:
        with np.load(path) as data:
            return str(data["fingerprint"]) == fingerprint
    except (OSError, ValueError, KeyError) as e:
        logger.warning(f"CLV-Cache {path} unlesbar: {e}")
        return False


def load_clv_cache(path: Path, fingerprint: str) -> Optional[ClvBasis]:
    """
    Lädt eine CLV-Basis aus dem Cache oder liefert None bei ungültigem Eintrag.
    """
    if not validate_cache_entry(path, fingerprint):
        logger.info(f"Kein gültiger CLV-Cache unter {path}")
        return None
    with np.load(path) as data:
        frames = np.array(data["frames"])
        neutral = int(data["neutral_index"])
        alignment = float(data["neutral_alignment"])
        clv = ClvBasis(
            kind=str(data["kind"]),
            step=float(data["step"]),
            window=tuple(int(v) for v in data["window"]),
            frames=frames,
            inverse_frames=np.linalg.inv(frames),
            log_growth=np.array(data["log_growth"]),
            exponents=np.array(data["exponents"]),
            n_unstable=int(data["n_unstable"]),
            neutral_index=None if neutral < 0 else neutral,
            neutral_tolerance=float(data["neutral_tolerance"]),
            min_angle=float(data["min_angle"]),
            neutral_count=int(data["neutral_count"]),
            neutral_alignment=None if np.isnan(alignment) else alignment,
            qr_stride=int(data["qr_stride"]),
            max_condition=float(data["max_condition"]),
        )
    logger.info(f"CLV-Basis aus Cache geladen: {path}")
    return clv


def exponents_record(clv: ClvBasis) -> Dict:
    """Inhalt von exponents.json."""
    return {
        "exponents": [float(x) for x in clv.exponents],
        "n_unstable": clv.n_unstable,
        "neutral_index": clv.neutral_index,
        "neutral_count": clv.neutral_count,
        "neutral_alignment": clv.neutral_alignment,
        "neutral_tolerance": clv.neutral_tolerance,
        "min_angle": clv.min_angle,
        "projection_bound": clv.projection_bound,
        "spectral_gap": clv.spectral_gap,
        "window": list(clv.window),
        "qr_stride": clv.qr_stride,
        "kind": clv.kind,
    }


def write_frames_csv(path: Path, clv: ClvBasis) -> Path:
    """Schreibt die CLV-Rahmen zeilenweise: step, dann Spalte für Spalte."""
    m = clv.dim
    steps = np.arange(clv.start, clv.stop + 1)
    flat = np.swapaxes(clv.frames, -1, -2).reshape(steps.size, m * m)
    columns = ["step"] + [f"z{j + 1}_{i + 1}" for j in range(m) for i in range(m)]
    return write_csv(path, columns, np.column_stack([steps, flat]))


def shadow_rows(start: int, step: float, values: np.ndarray, extra: Iterable[np.ndarray] = ()) -> np.ndarray:
    """Zeilen `step,t,v_1..v_m[,extra]` für Schatten-CSV-Dateien."""
    steps = start + np.arange(values.shape[0])
    columns = [steps, steps * step, values] + [np.asarray(e)[:, None] for e in extra]
    return np.column_stack(columns)
