"""
/shadowlab/error_handler.py
Version: 1.0.0
------------------------------
Zentrales Fehlerbehandlungsmodul für Shadowlab

Dieses Modul stellt die Ausnahmehierarchie und die Hilfsfunktionen für eine
einheitliche Fehlerbehandlung in allen numerischen Modulen und der CLI bereit:
- Benutzerdefinierte Ausnahmen mit Fehlercode und Exit-Status
- Hilfsfunktionen für Protokollierung und Benutzermeldungen
- Dekoratoren für CLI-Befehle und Dateioperationen

Stand: Oktober 2026
"""

import logging
import sys
import traceback
from functools import wraps
from typing import Optional

from colorama import Fore, Style

from shadowlab.config import SETTINGS

# Logger für dieses Modul
logger = logging.getLogger("ErrorHandler")


# Benutzerdefinierte Ausnahmen
class ShadowlabError(Exception):
    """Basisklasse für alle Shadowlab-spezifischen Ausnahmen."""
    error_code = "error"
    exit_code = 1


class InputError(ShadowlabError):
    """Ungültige Eingabe an eine Operation (Indizes, Längen, Optionen)."""
    error_code = "invalid-input"
    exit_code = 2


class ConfigError(InputError):
    """Fehler in der Experimentkonfiguration."""
    error_code = "invalid-config"


class NumericalError(ShadowlabError):
    """Basisklasse für numerische Fehlschläge."""
    error_code = "numerical-failure"
    exit_code = 3


class DivergenceError(NumericalError):
    """Nicht-endlicher Zustand während Integration oder Iteration."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class TangentGrowthError(NumericalError):
    """Tangenten- oder Adjungiertenlösung überschreitet die Überlaufschranke."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class InversionError(NumericalError):
    """Singuläre Jacobi-Matrix bei Rückwärtspropagation."""
    pass


class ClvConvergenceError(NumericalError):
    """Rückwärtsdurchlauf der CLV-Berechnung ist nicht konvergiert."""
    pass


class ConditioningError(NumericalError):
    """CLV-Basis ist zu schlecht konditioniert für Projektionen."""
    pass


class DegeneratePairingError(NumericalError):
    """Paarung von neutralem adjungiertem CLV und Vektorfeld ist entartet."""
    pass


class TruncationError(NumericalError):
    """Puffer zu klein oder Fenster entartet."""
    pass


class PropertyFailure(ShadowlabError):
    """Mindestens eine geprüfte Eigenschaft hat ihre Schranke verfehlt."""
    error_code = "property-failure"
    exit_code = 4


class NothingToDoError(ShadowlabError):
    """Die Konfiguration fordert keine Berechnung an."""
    error_code = "nothing-to-do"
    exit_code = 5


class OutputError(ShadowlabError):
    """Ausgabedateien konnten nicht geschrieben oder gelesen werden."""
    error_code = "io-failure"
    exit_code = 1


# Hilfsfunktionen für die Fehlerbehandlung
def log_error(error, level=logging.ERROR, show_traceback=False):
    """
    Protokolliert einen Fehler mit optionalem Stacktrace.

    Args:
        error (Exception): Die aufgetretene Ausnahme
        level (int): Logging-Level (default: ERROR)
        show_traceback (bool): Ob der Stacktrace protokolliert werden soll
    """
    error_type = type(error).__name__
    error_msg = str(error)

    if show_traceback:
        tb = traceback.format_exc()
        logger.log(level, f"{error_type}: {error_msg}\n{tb}")
    else:
        logger.log(level, f"{error_type}: {error_msg}")


def format_error_for_user(error, verbose=False):
    """
    Formatiert eine Fehlermeldung für die Ausgabe an den Benutzer.

    Args:
        error (Exception): Die aufgetretene Ausnahme
        verbose (bool): Ob detaillierte Informationen angezeigt werden sollen

    Returns:
        str: Formatierte Fehlermeldung
    """
    error_type = type(error).__name__
    error_msg = str(error)

    if isinstance(error, ShadowlabError):
        if isinstance(error, ConfigError):
            prefix = "⚙️ Konfigurationsfehler"
        elif isinstance(error, InputError):
            prefix = "🔍 Eingabefehler"
        elif isinstance(error, NumericalError):
            prefix = "📉 Numerischer Fehler"
        elif isinstance(error, PropertyFailure):
            prefix = "🧪 Eigenschaft verletzt"
        elif isinstance(error, NothingToDoError):
            prefix = "💤 Nichts zu tun"
        elif isinstance(error, OutputError):
            prefix = "📁 Dateifehler"
        else:
            prefix = "❌ Fehler"
    else:
        prefix = "❌ Systemfehler"

    if verbose:
        return f"{prefix}: {error_type} - {error_msg}"
    return f"{prefix}: {error_msg}"


def format_error_line(error) -> str:
    """z.B. ``shadowlab: error=invalid-config exit=2 type=ConfigError: ...``"""
    code = getattr(error, "error_code", "internal-error")
    exit_code = getattr(error, "exit_code", 1)
    text = " ".join(str(error).split())
    return f"shadowlab: error={code} exit={exit_code} type={type(error).__name__}: {text}"


def handle_errors(func=None, *, show_traceback=False):
    """
    Dekorator für CLI-Befehle: wandelt Ausnahmen in Exit-Codes um.

    Die dekorierte Funktion gibt im Erfolgsfall ihren eigenen Exit-Code zurück.
    Bei einer Shadowlab-Ausnahme wird eine maschinenlesbare Zeile auf stderr
    und eine farbige Meldung auf stdout ausgegeben.

    Args:
        func: Die zu dekorierende Funktion
        show_traceback (bool): Ob der Stacktrace protokolliert werden soll

    Returns:
        Dekorierte Funktion mit Fehlerbehandlung
    """
    def decorator(f):
        @wraps(f)
        def wrapper(*args, **kwargs):
            try:
                return f(*args, **kwargs)
            except ShadowlabError as e:
                log_error(e, level=logging.WARNING,
                          show_traceback=show_traceback or SETTINGS.is_debug())
                print(format_error_line(e), file=sys.stderr)
                print(Fore.RED + format_error_for_user(e) + Style.RESET_ALL)
                return e.exit_code
            except Exception as e:
                log_error(e, show_traceback=True)
                print(format_error_line(e), file=sys.stderr)
                print(Fore.RED + format_error_for_user(e, verbose=True) + Style.RESET_ALL)
                return 1
        return wrapper

    if func is None:
        return decorator
    return decorator(func)


def safe_file_operation(operation):
    """
    Dekorator für sichere Dateioperationen mit Fehlerbehandlung.

    Betriebssystemfehler werden als OutputError weitergereicht, damit die
    CLI einen definierten Exit-Code melden kann.

    Args:
        operation: Die zu dekorierende Dateioperation

    Returns:
        Dekorierte Funktion mit Fehlerbehandlung für Dateioperationen
    """
    @wraps(operation)
    def wrapper(*args, **kwargs):
        try:
            return operation(*args, **kwargs)
        except FileNotFoundError as e:
            log_error(e)
            raise OutputError(f"Datei nicht gefunden: {e}") from e
        except PermissionError as e:
            log_error(e)
            raise OutputError(f"Keine Berechtigung: {e}") from e
        except IsADirectoryError as e:
            log_error(e)
            raise OutputError(f"Ist ein Verzeichnis: {e}") from e
        except OSError as e:
            log_error(e, show_traceback=True)
            raise OutputError(f"Dateifehler: {e}") from e
    return wrapper
