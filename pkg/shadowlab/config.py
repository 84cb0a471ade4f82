# shadowlab/config.py
"""
Laufzeitschalter der Shadowlab-CLI

SETTINGS bündelt die beiden Schalter, die nur die Darstellung betreffen:
Stacktraces im Log (debug) und tqdm-Fortschrittsbalken (progress). Die CLI
setzt sie aus den Argumenten und reicht `progress` explizit an die
Rechenfunktionen weiter; die Numerik selbst liest SETTINGS nie.
"""


class SETTINGS:
    """
    Klassenweite Laufzeitschalter.

    Attributes:
        debug (bool): Stacktraces bei Fehlern protokollieren
        progress (bool): Fortschrittsbalken für lange Schleifen anzeigen
    """
    debug = False
    progress = True

    @classmethod
    def set_debug(cls, value: bool):
        """Aktiviert oder deaktiviert den Debug-Modus."""
        cls.debug = bool(value)

    @classmethod
    def is_debug(cls) -> bool:
        return cls.debug

    @classmethod
    def set_progress(cls, value: bool):
        """Schaltet die Fortschrittsbalken der CLI ein oder aus."""
        cls.progress = bool(value)

    @classmethod
    def show_progress(cls) -> bool:
        return cls.progress
