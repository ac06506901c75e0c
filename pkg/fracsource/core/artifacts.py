"""CSV and JSON artifact writers. Every writer is deterministic: same inputs, same bytes."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
import pydantic as pyd
from numpy.typing import ArrayLike

from fracsource.core.numerics.forward import SpaceTimeField
from fracsource.core.numerics.fractional_time import TimeSignal
from fracsource.core.numerics.grid_elliptic import DiscreteOperator

logger = logging.getLogger("fracsource")

FLOAT_FORMAT = "%.17g"

FIELD_FILE = "field.csv"
H_FILE = "h.csv"
MU_FILE = "mu.csv"
SINGULAR_VALUES_FILE = "singular_values.csv"
REPORT_FILE = "report.json"
MANIFEST_FILE = "manifest.json"

AXIS_NAMES = ("x", "y")


def _coordinate_label(point: np.ndarray) -> str:
    if point.size == 1:
        return f"x={point[0]:.17g}"
    return "x=(" + ",".join(f"{c:.17g}" for c in point) + ")"


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path} ({len(frame)} rows)")
    return path


def dof_coordinates(op: DiscreteOperator) -> np.ndarray:
    """Coordinates of the degrees of freedom, shape (n_dof, dimension)."""
    return op.mesh.nodes[op.dofs]


def write_field_csv(path: Path, u: SpaceTimeField, op: DiscreteOperator) -> Path:
    """First column t, then one column per degree of freedom headed by its coordinates."""

    labels = [_coordinate_label(point) for point in dof_coordinates(op)]
    frame = pd.DataFrame(np.asarray(u.values), columns=labels)
    frame.insert(0, "t", u.t)
    return _write_frame(frame, path)


def write_h_csv(path: Path, op: DiscreteOperator, h: ArrayLike) -> Path:
    coords = dof_coordinates(op)
    frame = pd.DataFrame({AXIS_NAMES[k]: coords[:, k] for k in range(coords.shape[1])})
    frame["h"] = np.asarray(h, dtype=float)
    return _write_frame(frame, path)


def write_mu_csv(path: Path, mu: TimeSignal) -> Path:
    return _write_frame(pd.DataFrame({"t": mu.t, "mu": mu.values}), path)


def write_singular_values_csv(path: Path, sigma: Sequence[float]) -> Path:
    sigma = np.asarray(sigma, dtype=float)
    return _write_frame(pd.DataFrame({"index": np.arange(sigma.size), "sigma": sigma}), path)


def write_json(path: Path, model: pyd.BaseModel, exclude: Optional[set[str]] = None) -> Path:
    """Pretty JSON with sorted keys."""

    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.loads(model.json(exclude=exclude))
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    logger.debug(f"Wrote {path}")
    return path


__all__ = [
    "FIELD_FILE",
    "H_FILE",
    "MU_FILE",
    "SINGULAR_VALUES_FILE",
    "REPORT_FILE",
    "MANIFEST_FILE",
    "dof_coordinates",
    "write_field_csv",
    "write_h_csv",
    "write_mu_csv",
    "write_singular_values_csv",
    "write_json",
]
