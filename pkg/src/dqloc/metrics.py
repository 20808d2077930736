"""Pose error metrics, anchor gauge checks and solver traces."""

import csv
import io
import math
import warnings

import numpy as np

from .algebra import DQ_IDENTITY, Pose, dq_translation_batch, quat_to_rotation_batch

TRACE_COLUMNS = ("t", "rho", "rho_R", "rho_T", "e_R", "e_T", "window_k")


class GaugeWarning(UserWarning):
    """The anchor estimate drifted away from the identity."""


def as_rotations_positions(poses):
    """Split estimates into ``(R, p)`` arrays of shape (n, 3, 3) and (n, 3).

    Accepts an (n, 8) array of unit dual quaternions, a sequence of
    :class:`Pose`, or an ``(R, p)`` tuple of arrays.
    """
    if isinstance(poses, tuple) and len(poses) == 2 and np.ndim(poses[0]) == 3:
        return np.asarray(poses[0], dtype=float), np.asarray(poses[1], dtype=float)
    if len(poses) and isinstance(poses[0], Pose):
        return np.array([p.rotation for p in poses]), np.array([p.position for p in poses])
    X = np.asarray(poses, dtype=float).reshape(-1, 8)
    return quat_to_rotation_batch(X[:, :4]), dq_translation_batch(X)


def error_rotation(estimates, truth):
    """Mean squared Frobenius distance between estimated and true rotations."""
    R_hat, _ = as_rotations_positions(estimates)
    R, _ = as_rotations_positions(truth)
    return float(np.mean(np.sum((R - R_hat) ** 2, axis=(1, 2))))


def error_translation(estimates, truth):
    """Mean squared distance between estimated and true positions."""
    _, p_hat = as_rotations_positions(estimates)
    _, p = as_rotations_positions(truth)
    return float(np.mean(np.sum((p - p_hat) ** 2, axis=1)))


def gauge_note(estimates, anchor=0, tol=1e-8):
    """Return the anchor's distance from the identity, warning above ``tol``.

    Ground truth is generated in the anchor's frame, so no alignment transform
    is applied before computing pose errors.
    """
    X = np.asarray(estimates, dtype=float).reshape(-1, 8)
    # both signs of the real part encode the identity
    residual = float(min(np.max(np.abs(X[anchor] - DQ_IDENTITY)), np.max(np.abs(X[anchor] + DQ_IDENTITY))))
    if residual > tol:
        warnings.warn(f"anchor estimate is {residual:.3g} away from the identity", GaugeWarning, stacklevel=2)
    return residual


class SolverTrace:
    """Append-only per-iteration record of cost and errors.

    Missing values are stored as NaN and written as empty CSV cells.
    """

    def __init__(self, meta=None):
        self.meta = dict(meta or {})
        self._rows = []

    def __len__(self):
        return len(self._rows)

    def append(self, t, rho, rho_R=math.nan, rho_T=math.nan, e_R=math.nan, e_T=math.nan, window_k=0):
        if self._rows and t <= self._rows[-1][0]:
            raise ValueError(f"trace iterations must increase: {t} after {self._rows[-1][0]}")
        self._rows.append((int(t), float(rho), float(rho_R), float(rho_T), float(e_R), float(e_T), int(window_k)))

    def extend(self, other, t_offset=0):
        for row in other._rows:
            self.append(row[0] + t_offset, *row[1:])

    def column(self, name):
        idx = TRACE_COLUMNS.index(name)
        dtype = int if name in ("t", "window_k") else float
        return np.array([r[idx] for r in self._rows], dtype=dtype)

    @property
    def t(self):
        return self.column("t")

    @property
    def rho(self):
        return self.column("rho")

    def sampled(self, name):
        """``(t, values)`` of a metric column at the rows where it was sampled."""
        vals = self.column(name)
        mask = ~np.isnan(vals)
        return self.t[mask], vals[mask]

    def last(self, name):
        _, vals = self.sampled(name)
        return float(vals[-1]) if len(vals) else math.nan

    def first(self, name):
        _, vals = self.sampled(name)
        return float(vals[0]) if len(vals) else math.nan

    def window_starts(self):
        """Iterations at which a new measurement window begins (excluding t = 0)."""
        k = self.column("window_k")
        t = self.t
        return [int(t[i]) for i in range(1, len(k)) if k[i] != k[i - 1]]

    def summary(self):
        rho = self.rho
        return {
            "rho_initial": float(rho[0]),
            "rho_final": float(rho[-1]),
            "rho_ratio": float(rho[-1] / rho[0]) if rho[0] != 0 else math.nan,
            "e_R_final": self.last("e_R"),
            "e_T_final": self.last("e_T"),
        }

    def to_csv(self, path=None, columns=None):
        """Write the trace as CSV; returns the text when ``path`` is None."""
        columns = tuple(columns or self.default_columns())
        idx = [TRACE_COLUMNS.index(c) for c in columns]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in self._rows:
            w.writerow([_fmt(row[i]) for i in idx])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        return None

    def default_columns(self):
        cols = ["t", "rho"]
        if any(not math.isnan(r[2]) for r in self._rows):
            cols += ["rho_R", "rho_T"]
        return cols + ["e_R", "e_T", "window_k"]

    @classmethod
    def from_csv(cls, path, meta=None):
        trace = cls(meta)
        with open(path, encoding="utf-8", newline="") as f:
            for rec in csv.DictReader(f):
                vals = {k: _parse(rec.get(k, "")) for k in TRACE_COLUMNS}
                trace.append(
                    int(vals["t"]),
                    vals["rho"],
                    vals["rho_R"],
                    vals["rho_T"],
                    vals["e_R"],
                    vals["e_T"],
                    int(0 if math.isnan(vals["window_k"]) else vals["window_k"]),
                )
        return trace


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    if math.isnan(v):
        return ""
    return repr(float(v))


def _parse(s):
    if s is None or s == "":
        return math.nan
    return float(s)
