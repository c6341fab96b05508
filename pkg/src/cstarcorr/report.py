"""JSON reports for verification suites."""
from __future__ import annotations

import json
import math
from typing import Sequence

# Non-finite residuals are replaced by this value and the check is failed.
RESIDUAL_CAP = 1.0e300


def _finite(x: float) -> tuple[float, bool]:
    x = float(x)
    if math.isfinite(x):
        return x, True
    return RESIDUAL_CAP, False


def emit_report(suite: str, seed: int, checks: Sequence, extra: dict | None = None,
                elapsed: float | None = None) -> dict:
    """{"suite", "seed", "checks": [{"name", "paper_ref", "residual", "pass"}], "pass"} plus optional details."""
    rows = []
    for c in checks:
        residual, finite = _finite(c.residual)
        rows.append({"name": c.name, "paper_ref": c.paper_ref, "residual": residual,
                     "pass": bool(c.passed and finite)})
    out = {"suite": suite, "seed": seed, "checks": rows, "pass": all(r["pass"] for r in rows)}
    if extra:
        out["details"] = extra
    if elapsed is not None:
        out["elapsed_seconds"] = round(elapsed, 3)
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False, default=str)
