"""
Run an external Minion executable on an emitted model and decode its first solution.

Only used when a Minion binary is installed; nothing else in the pipeline
depends on it.
"""
from __future__ import annotations

import logging
import shutil
import subprocess
import tempfile
from pathlib import Path

from confweave import get_run_defaults
from csp import Assignment
from emit import emit_minion, minion_names

logger = logging.getLogger(__name__)


def find_minion(executable=None):
    """Absolute path of the Minion executable, or None when it is not installed."""
    return shutil.which(executable or get_run_defaults()["minion"])


def parse_minion_solution(output, csp):
    """Decode the first ``Sol:`` line of Minion output into an Assignment (None if there is none)."""
    for line in output.splitlines():
        if not line.startswith("Sol:"):
            continue
        values = [int(v) for v in line[len("Sol:"):].split()]
        printed = minion_names(csp).printed()
        if len(values) != len(printed):
            raise ValueError(f"expected {len(printed)} values in solution line, got {len(values)}")
        comps, bits, channels = {}, {}, {}
        for (_, key), value in zip(printed, values):
            if isinstance(key, str):
                comps[key] = value
            elif isinstance(key, tuple):
                if key[0] == "channel":
                    channels[key[1]] = value
            else:
                bits[key] = value
        return Assignment(comps, bits, channels)
    return None


def run_minion(csp, executable=None, timeout=60):
    """Emit csp, solve it with Minion and return the decoded first solution (None when unsatisfiable)."""
    binary = find_minion(executable)
    if binary is None:
        raise FileNotFoundError(f"Minion executable not found: {executable or get_run_defaults()['minion']}")
    with tempfile.TemporaryDirectory() as tmp:
        model = Path(tmp) / "model.minion"
        model.write_text(emit_minion(csp), encoding="utf-8")
        result = subprocess.run(
            [binary, str(model)],
            check=True,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    logger.debug("Minion finished with %d output lines", len(result.stdout.splitlines()))
    return parse_minion_solution(result.stdout, csp)
