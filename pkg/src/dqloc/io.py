"""JSON and CSV artifacts. Node indices are 1-based on disk."""

import hashlib
import json

import numpy as np

from .algebra import dq_to_pose
from .scene import CameraNetwork, MeasurementSet, NoiseParams


def _vec(d):
    return [float(x) for x in np.asarray(d, dtype=float)]


def instance_to_dict(net, measurements, seed=None, noise=None, extra=None):
    doc = {
        "n": net.n,
        "edges": [[i + 1, j + 1] for i, j in net.edges],
        "truth": [_vec(d) for d in net.truth_dq()],
        "measurements": [{"from": i + 1, "to": j + 1, "d": _vec(d)} for (i, j), d in measurements.items()],
        "seed": seed,
        "noise": noise.as_dict() if noise is not None else None,
    }
    if extra:
        doc.update(extra)
    doc["instance_id"] = instance_id(doc)
    return doc


def instance_id(doc):
    """Short content hash of the network, truth and measurements."""
    core = {k: doc[k] for k in ("n", "edges", "truth", "measurements")}
    blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def instance_from_dict(doc):
    """Return ``(net, measurements, meta)`` from a document written by ``instance_to_dict``."""
    n = int(doc["n"])
    edges = [(int(i) - 1, int(j) - 1) for i, j in doc["edges"]]
    truth = [dq_to_pose(np.array(d, dtype=float)) for d in doc["truth"]]
    net = CameraNetwork(n, tuple(edges), tuple(truth))
    meas = MeasurementSet({(int(m["from"]) - 1, int(m["to"]) - 1): m["d"] for m in doc["measurements"]})
    meta = {k: v for k, v in doc.items() if k not in ("n", "edges", "truth", "measurements")}
    if meta.get("noise") is not None:
        meta["noise"] = NoiseParams(**meta["noise"])
    return net, meas, meta


def dump_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def load_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def estimates_to_list(estimates):
    return [_vec(d) for d in np.asarray(estimates, dtype=float).reshape(-1, 8)]
