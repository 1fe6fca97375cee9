"""Shared fixtures: small interchange files generated by the producer CLI.

The trainer package itself never imports the producer; tests shell out to
its CLI to create real interchange files, and a few tests import the
producer's Python decoder as the boundary-contract oracle (the exported
weight files must load and decode identically over there).
"""

from __future__ import annotations

import shutil
import subprocess

import pytest

RTQEC = shutil.which("rtqec") or "rtqec"


def run_rtqec(args):
    cmd = [RTQEC] + [str(a) for a in args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"{' '.join(cmd)}\n{proc.stderr}"
    return proc


@pytest.fixture(scope="session")
def small_data(tmp_path_factory):
    """Shot + defect file pairs at several depths (Z basis + one X)."""
    root = tmp_path_factory.mktemp("smalldata")
    files = {}
    for key, basis, rounds, shots, seed in [
        (1, "Z", 1, 2000, 101),
        (3, "Z", 3, 2000, 103),
        (7, "Z", 7, 2000, 107),
        (12, "Z", 12, 1000, 112),
        ("X3", "X", 3, 2000, 201),
    ]:
        shot_path = root / f"shots_{key}.qecds"
        defect_path = root / f"defects_{key}.qecdf"
        run_rtqec(["simulate", "--rounds", rounds, "--basis", basis,
                   "--shots", shots, "--seed", seed, "--out", shot_path])
        run_rtqec(["defects", "--input", shot_path, "--out", defect_path])
        files[key] = (shot_path, defect_path)
    return files
