# shadowlab/main.py
"""
Shadowlab - Startpunkt (Version 1.0.0)
-------------------------------------------------
ID: SHADOWLAB-MAIN-01
Beschreibung: Einstiegspunkt der Shadowlab-Kommandozeile.

Beispiele:
    python main.py clv --config config/settings.yaml
    python main.py sens --config config/catmap.yaml --out results/catmap
    python main.py verify --config config/catmap.yaml --inject-fault 1e-6
"""
import logging
import os
import sys

from shadowlab.cli import main as cli_main


def main() -> int:
    """Konfiguriert das Logging und übergibt an die CLI."""
    log_level = os.getenv("LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=log_level, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    try:
        return cli_main()
    except KeyboardInterrupt:
        print("\n👋 Lauf durch Benutzer abgebrochen.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
