"""
/shadowlab/utils/memory_estimator.py
Version: 1.0.0
------------------------------
Schätzt den Speicherbedarf der zwischengespeicherten Bahngrößen.

Stand: Oktober 2026
"""

BYTES_PER_FLOAT = 8

# Anzahl gespeicherter Felder je Gitterpunkt: (Vektoren, Matrizen)
# Zustände, f, f_s, J_u, v, v̄ / Jacobi-Matrizen, Propagatoren, CLV-Rahmen, Inverse
ARRAYS_PER_STEP = {
    "flow": (6, 5),
    "map": (4, 4),
}


def estimate_memory(n_steps: int, dim: int, kind: str = "flow") -> int:
    """Geschätzter Bedarf in Bytes für eine Bahn mit n_steps Schritten."""
    if n_steps <= 0 or dim <= 0:
        return 0
    vectors, matrices = ARRAYS_PER_STEP.get(kind, ARRAYS_PER_STEP["flow"])
    per_step = vectors * dim + matrices * dim * dim
    return int((n_steps + 1) * per_step * BYTES_PER_FLOAT)


def format_memory_info(n_steps: int, dim: int, kind: str = "flow") -> str:
    size = estimate_memory(n_steps, dim, kind)
    if size == 0:
        return "unbekannt"
    mb = size / 2 ** 20
    if mb >= 1024:
        return f"~{mb / 1024:.1f} GB RAM"
    return f"~{mb:.1f} MB RAM"
