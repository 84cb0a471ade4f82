"""
/shadowlab/commands/comparison_table.py
Version: 1.0.0
------------------------------
Erzeugt die Vergleichstabelle für den Befehl `sens`.

Funktionen:
- Vergleicht jedes Paar von Verfahren (relative Differenz, kombinierter Fehler)
- Formatiert die Tabelle für die Konsole

Stand: Oktober 2026
"""

from itertools import combinations
from typing import Dict, List

import numpy as np

from shadowlab.sensitivity import SensitivityResult


def compare_results(results: Dict[str, SensitivityResult]) -> List[dict]:
    """
    Paarweiser Vergleich in der Reihenfolge der Verfahren.

    Returns:
        list[dict]: je Paar die Werte, die relative Differenz, der kombinierte
        Standardfehler und ob die Differenz innerhalb von 2σ liegt
    """
    rows = []
    for (name_a, a), (name_b, b) in combinations(results.items(), 2):
        difference = abs(a.value - b.value)
        scale = max(abs(a.value), abs(b.value))
        combined = float(np.hypot(a.stderr, b.stderr))
        rows.append({
            "methods": [name_a, name_b],
            "values": [a.value, b.value],
            "relative_difference": difference / scale if scale > 0 else 0.0,
            "combined_stderr": combined,
            "within_two_stderr": bool(difference <= 2.0 * combined),
        })
    return rows


def format_comparison_table(results: Dict[str, SensitivityResult]) -> str:
    if not results:
        return "\n❌ Keine Sensitivitäten berechnet."

    lines = ["\n📐 Sensitivitäten:"]
    for name, result in results.items():
        lines.append(f"[{name}] {result.value:.10g} ± {result.stderr:.2g}  (Horizont {result.horizon:g})")
    rows = compare_results(results)
    if rows:
        lines.append("\n🔀 Paarweiser Vergleich:")
    for row in rows:
        marker = "✅" if row["within_two_stderr"] else "⚠️"
        lines.append(f"{marker} {row['methods'][0]} ↔ {row['methods'][1]}: "
                     f"rel. Differenz {row['relative_difference']:.3e}, "
                     f"kombinierter Fehler {row['combined_stderr']:.2g}")
    return "\n".join(lines)
