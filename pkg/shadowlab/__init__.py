"""
Shadowlab: kovariante Lyapunov-Vektoren, tangentiale und adjungierte
Schattenrichtungen und Sensitivitäten langzeitgemittelter Zielfunktionale.
"""

__version__ = "1.0.0"
