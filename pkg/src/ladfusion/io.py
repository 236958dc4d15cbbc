"""CSV and JSON serialization of datasets, landmarks, embeddings and reports."""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.17g"


def write_matrix(path, A, header=None):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    kw = {"header": ",".join(header), "comments": ""} if header else {}
    np.savetxt(path, A, delimiter=",", fmt=FLOAT_FMT, **kw)
    return Path(path)


def write_json(path, obj):
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return Path(path)


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "name") and hasattr(obj, "params") and hasattr(obj, "embed"):
        return {"name": obj.name, "params": obj.params}
    return obj


def write_rows(path, rows, fields=None):
    """One CSV row per dict, columns in ``fields`` order (default: first row)."""
    rows = list(rows)
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in fields})
    return Path(path)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return v


def write_embedding(prefix, embedding, seed=None):
    """``<prefix>.csv`` with n rows of q coordinates and ``<prefix>.json``."""
    prefix = Path(prefix)
    csv_path = write_matrix(prefix.with_suffix(".csv"), embedding.coords)
    meta = embedding.metadata
    side = {
        "eigenvalues": [float(v) for v in embedding.eigenvalues_used],
        "max_imag_ratio": meta.get("max_imag_ratio"),
        "alpha": meta.get("alpha"),
        "eps1": meta.get("eps1", meta.get("eps")),
        "eps2": meta.get("eps2", meta.get("eps")),
        "t": embedding.diffusion_time,
        "start_sensor": embedding.start_sensor,
        "seed": seed,
    }
    return csv_path, write_json(prefix.with_suffix(".json"), side)


def write_landmarks(prefix, landmarks):
    """Landmark coordinates (sensor 1 columns then sensor 2) plus provenance."""
    prefix = Path(prefix)
    csv_path = write_matrix(prefix.with_suffix(".csv"),
                           np.hstack([landmarks.points1, landmarks.points2]))
    side = {
        "m": landmarks.m,
        "provenance": landmarks.provenance,
        "seed": landmarks.seed,
        "weight_id": landmarks.weight_id,
        "dims": [landmarks.points1.shape[1], landmarks.points2.shape[1]],
        "indices": None if landmarks.indices is None else landmarks.indices,
    }
    return csv_path, write_json(prefix.with_suffix(".json"), side)


def write_dataset(out_dir, dataset):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [write_matrix(out / "sensor1.csv", dataset.sensor1),
            write_matrix(out / "sensor2.csv", dataset.sensor2),
            write_matrix(out / "params.csv", dataset.params)]


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
