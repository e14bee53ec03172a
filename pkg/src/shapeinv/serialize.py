"""CSV and JSON readers/writers for inputs, solutions and reports.

Curves go to CSV with a header row and full-precision scientific notation;
everything else goes to JSON.  An input CSV is accompanied by a sidecar
``<stem>.json`` holding its kernel, provenance and model-problem metadata.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .kernels import KernelSpec
from .model_problem import ModelProblem, Provenance, SampledInput

FMT = "{:.17e}"


def _num(v):
    return FMT.format(v) if v is not None and math.isfinite(v) else ("nan" if v is not None else "")


def write_csv(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_num(float(v)) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    return header, np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def _plain(obj):
    """Make numpy scalars/arrays, tuples and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_input(data: SampledInput, path, problem: ModelProblem | None = None) -> Path:
    """Input CSV (sigma, phi, weight) plus its JSON sidecar."""
    path = write_csv(path, ["sigma", "phi", "weight"], [data.sigma, data.phi, data.weights])
    meta = {
        "kernel": data.kernel.to_dict(),
        "provenance": data.provenance.to_dict(),
        "provenance_label": str(data.provenance),
        "n_samples": len(data),
    }
    if problem is not None:
        meta["model_problem"] = problem.to_dict()
    write_json(sidecar_path(path), meta)
    return path


def read_input(path) -> tuple[SampledInput, ModelProblem | None]:
    """Inverse of write_input; the sidecar is required."""
    header, table = read_csv(path)
    if header[:2] != ["sigma", "phi"]:
        raise ValueError(f"{path}: expected columns sigma, phi[, weight], got {header}")
    meta = read_json(sidecar_path(path))
    spec = KernelSpec.from_dict(meta["kernel"])
    weights = table[:, 2] if table.shape[1] > 2 else None
    data = SampledInput(spec, table[:, 0], table[:, 1], weights,
                        Provenance.from_dict(meta["provenance"]))
    problem = None
    if "model_problem" in meta:
        mp = meta["model_problem"]
        problem = ModelProblem(eta=mp["eta"], hbar2_over_2M=mp["hbar2_over_2M"])
    return data, problem


def write_solution(path, E, f_appr, f_true=None) -> Path:
    if f_true is None:
        return write_csv(path, ["E", "f_appr"], [E, f_appr])
    return write_csv(path, ["E", "f_appr", "f_true"], [E, f_appr, f_true])
