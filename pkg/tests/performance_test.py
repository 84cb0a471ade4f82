#!/usr/bin/env python3
"""
Performance measurements for the shadowing pipeline.

This script times the individual stages of an experiment (trajectory, CLVs,
tangent and adjoint shadowing, sensitivities) for the cat map and for
Lorenz 63 and prints the results as JSON.

Usage:
    python tests/performance_test.py
    python tests/performance_test.py --system catmap --horizon 20000 --iterations 5

Note: This script runs the real computations and is not collected by pytest.
"""

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

# Add the parent directory to sys.path to import the shadowlab modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from shadowlab.experiment import ShadowingExperiment
from shadowlab.utils.config_handler import parse_experiment_config

STAGES = ("trajectory", "clv", "adjoint_basis", "tangent_shadowing", "adjoint_shadowing")

DEFAULT_HORIZONS = {"catmap": 10000, "lorenz63": 200.0}


def build_experiment(system, horizon, seed):
    data = {
        "system": {"name": system},
        "trajectory": {"seed": seed, "horizon": horizon},
    }
    if system == "catmap":
        data["system"]["parameter"] = 0.05
        data["shadowing"] = {"buffer": 40}
    return ShadowingExperiment(parse_experiment_config(data))


def measure_pipeline(system, horizon, iterations=3):
    """
    Time every stage of one experiment.

    Args:
        system (str): Registered system name
        horizon (float): Horizon in time units (flows) or steps (maps)
        iterations (int): Number of repetitions with different seeds

    Returns:
        dict: Timings per stage in seconds
    """
    print(f"\n=== {system}, horizon {horizon} ===")
    timings = {stage: [] for stage in STAGES + ("sensitivities",)}

    for i in range(iterations):
        print(f"  Iteration {i + 1}/{iterations}...")
        experiment = build_experiment(system, horizon, seed=i)
        for stage in STAGES:
            start = time.perf_counter()
            getattr(experiment, stage)
            timings[stage].append(time.perf_counter() - start)

        start = time.perf_counter()
        results = experiment.sensitivities()
        timings["sensitivities"].append(time.perf_counter() - start)
        for method, result in results.items():
            print(f"    {method}: {result.value:.6g} ± {result.stderr:.2g}")

    summary = {}
    for stage, values in timings.items():
        summary[stage] = {
            "results": values,
            "average": statistics.mean(values),
            "min": min(values),
            "max": max(values),
        }
        print(f"  {stage:<18} avg {summary[stage]['average']:.3f} s")

    return {"system": system, "horizon": horizon, "iterations": iterations, "stages": summary}


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Time the stages of the shadowing pipeline")
    parser.add_argument("--system", choices=sorted(DEFAULT_HORIZONS), default=None,
                        help="Measure only this system")
    parser.add_argument("--horizon", type=float, default=None, help="Override the default horizon")
    parser.add_argument("--iterations", type=int, default=3, help="Number of iterations per system")
    args = parser.parse_args()

    systems = [args.system] if args.system else sorted(DEFAULT_HORIZONS)
    report = []
    for name in systems:
        horizon = args.horizon if args.horizon is not None else DEFAULT_HORIZONS[name]
        if name == "catmap":
            horizon = int(horizon)
        report.append(measure_pipeline(name, horizon, args.iterations))

    print(json.dumps(report, indent=2))
