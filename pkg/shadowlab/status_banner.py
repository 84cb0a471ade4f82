# /shadowlab/status_banner.py
"""
Version: 1.0.0
------------------------------
ID: SHADOWLAB-STATUSBANNER-01
Beschreibung: Konsolenbanner für die CLI-Befehle.

Zeigt vor einem Lauf die Eckdaten des Experiments und danach die erzeugten
Dateien an. Die Klasse liest nur aus dem Experiment und schreibt nur auf
stdout.

Stand: Oktober 2026
"""
from typing import Iterable

from colorama import Fore, Style

from shadowlab.utils.memory_estimator import format_memory_info


class StatusBanner:
    def __init__(self, experiment, command: str):
        """
        Args:
            experiment (ShadowingExperiment): Das laufende Experiment
            command (str): Name des CLI-Befehls
        """
        self.experiment = experiment
        self.command = command

    def display(self):
        """Zeigt den Startbanner an."""
        info = self.experiment.summary()
        title = f" Shadowlab {self.command} "
        print(Fore.CYAN + "=" * 50)
        print(Fore.CYAN + title.center(50, "="))
        print(Fore.CYAN + "=" * 50 + Style.RESET_ALL)
        print(f"- System       : {info['system']} ({info['kind']})")
        print(f"- Parameter s  : {info['parameter']:g}")
        if info["kind"] == "flow":
            print(f"- Schrittweite : {info['step']:g}")
        print(f"- Schritte     : {info['n_steps']} "
              f"({format_memory_info(info['n_steps'], self.experiment.spec.dim, info['kind'])})")
        print(f"- Seed         : {info['seed']}")
        print(Fore.CYAN + "=" * 50 + Style.RESET_ALL)

    def print_clv_summary(self):
        clv = self.experiment.clv
        exponents = ", ".join(f"{x:+.4f}" for x in clv.exponents)
        print(Fore.YELLOW + "\n📊 CLV-Spektrum:" + Style.RESET_ALL)
        print(f"- Exponenten   : {exponents}")
        print(f"- instabil     : {clv.n_unstable}")
        if clv.neutral_index is not None:
            print(f"- neutral      : Index {clv.neutral_index}")
        print(f"- min. Winkel  : {clv.min_angle:.3e} (C_α = {clv.projection_bound:.3g})")
        if self.experiment.clv_from_cache:
            print(Fore.YELLOW + "  └ aus dem CLV-Cache geladen" + Style.RESET_ALL)

    def print_outputs(self, paths: Iterable):
        paths = list(paths)
        if not paths:
            return
        print(Fore.GREEN + "\n📁 Geschriebene Dateien:" + Style.RESET_ALL)
        for path in paths:
            print(f"  ├ {path}")
