"""Synthetic camera networks and noisy relative pose measurements.

Nodes are indexed from 0 internally; node 0 is the anchor and its true pose is
the identity. Serialized documents use 1-based indices (see ``dqloc.io``).
"""

from collections.abc import Mapping
from dataclasses import dataclass, field
import zlib

import networkx as nx
import numpy as np
from scipy.spatial.transform import Rotation

from .algebra import DQ_IDENTITY, Pose, dq_compose, dq_conjugate, dq_from_pose


def make_rng(seed, purpose, *counter):
    """Independent counter-based stream for ``(seed, purpose, *counter)``.

    Streams are keyed by a stable hash of the purpose name so adding a new
    purpose never shifts the draws of an existing one.
    """
    key = (zlib.crc32(purpose.encode("utf-8")),) + tuple(int(c) for c in counter)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class NoiseParams:
    """Gaussian noise on absolute poses.

    Rotation stds are in degrees: ``rot_std_xz`` for tilt (X) and roll (Z),
    ``rot_std_y`` for pan (Y). ``pos_std`` is meters per axis.
    """

    rot_std_xz: float = 0.0
    rot_std_y: float = 0.0
    pos_std: float = 0.0

    def __post_init__(self):
        for name in ("rot_std_xz", "rot_std_y", "pos_std"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite non-negative number, got {v!r}")

    @property
    def is_zero(self):
        return self.rot_std_xz == 0 and self.rot_std_y == 0 and self.pos_std == 0

    def as_dict(self):
        return {"rot_std_xz": self.rot_std_xz, "rot_std_y": self.rot_std_y, "pos_std": self.pos_std}


NOISE_FREE = NoiseParams()
NOISE_LOW = NoiseParams(np.sqrt(5.0), 5.0, np.sqrt(0.005))
NOISE_HIGH = NoiseParams(10.0, 100.0, np.sqrt(0.5))


@dataclass(frozen=True)
class CameraNetwork:
    n: int
    edges: tuple
    truth: tuple
    _neighbors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted({(min(i, j), max(i, j)) for i, j in self.edges}))
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) references a node outside 0..{self.n - 1}")
        if len(self.truth) != self.n:
            raise ValueError(f"expected {self.n} truth poses, got {len(self.truth)}")
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(edges)
        if self.n > 0 and not nx.is_connected(g):
            raise ValueError("camera graph must be connected")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "truth", tuple(self.truth))
        nbrs = tuple(tuple(sorted(g.neighbors(i))) for i in range(self.n))
        object.__setattr__(self, "_neighbors", nbrs)

    def neighbors(self, i):
        return self._neighbors[i]

    @property
    def directed_edges(self):
        """Both orientations of every edge, sorted."""
        return sorted([(i, j) for i, j in self.edges] + [(j, i) for i, j in self.edges])

    def truth_dq(self):
        return np.array([dq_from_pose(p) for p in self.truth])


class MeasurementSet(Mapping):
    """Noisy relative unit dual quaternions keyed by directed edge ``(i, j)``."""

    def __init__(self, data):
        self._data = {}
        for key in sorted(data):
            v = np.array(data[key], dtype=float)
            v.flags.writeable = False
            self._data[(int(key[0]), int(key[1]))] = v

    def __getitem__(self, key):
        return self._data[key]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __repr__(self):
        return f"MeasurementSet({len(self)} directed edges)"

    def arrays(self):
        """``(src, dst, values)`` arrays in sorted edge order."""
        keys = list(self._data)
        src = np.array([k[0] for k in keys], dtype=int)
        dst = np.array([k[1] for k in keys], dtype=int)
        vals = np.array([self._data[k] for k in keys]).reshape(-1, 8)
        return src, dst, vals

    def check_covers(self, net):
        missing = [e for e in net.directed_edges if e not in self._data]
        if missing:
            raise KeyError(f"missing measurements for directed edges {missing}")


def relative_pose(d_i, d_j):
    """``conj(d_i) (.) d_j``: pose of frame j expressed in frame i."""
    return dq_compose(dq_conjugate(d_i), d_j)


def corrupt_pose(pose, noise, rng):
    """Perturb a pose by intrinsic X-Y-Z Euler noise and additive position noise."""
    if noise.is_zero:
        return pose
    angles = rng.normal(0.0, 1.0, size=3) * np.array([noise.rot_std_xz, noise.rot_std_y, noise.rot_std_xz])
    dp = rng.normal(0.0, 1.0, size=3) * noise.pos_std
    R_noise = Rotation.from_euler("XYZ", angles, degrees=True).as_matrix()
    return Pose(pose.rotation @ R_noise, pose.position + dp)


def gen_measurements(net, noise, rng):
    """One measurement per directed edge, with fresh corruption of both endpoints."""
    data = {}
    for i, j in net.directed_edges:
        gi = corrupt_pose(net.truth[i], noise, rng)
        gj = corrupt_pose(net.truth[j], noise, rng)
        data[(i, j)] = relative_pose(dq_from_pose(gi), dq_from_pose(gj))
    return MeasurementSet(data)


# Chord set of the 6-camera reference instance. With the bad initialization
# it traps the two-stage baseline in a local minimum, while the joint dual
# quaternion descent still recovers the truth within 1e5 iterations.
_CHORDS_6 = [(0, 3), (1, 3), (1, 4), (1, 5), (2, 4), (3, 5)]


def ring_edges(n, chords=True):
    """Ring graph, optionally with chords across the ring."""
    if n < 2:
        return []
    edges = {(i, (i + 1) % n) for i in range(n)} if n > 2 else {(0, 1)}
    if chords and n == 6:
        edges |= set(_CHORDS_6)
    elif chords and n >= 5:
        edges |= {(i, (i + 2) % n) for i in range(0, n, 2)}
    return sorted((min(e), max(e)) for e in edges)


EDGE_PRESETS = {
    "ring": lambda n: ring_edges(n, chords=False),
    "ring-with-chords": lambda n: ring_edges(n, chords=True),
    "complete": lambda n: [(i, j) for i in range(n) for j in range(i + 1, n)],
}


def _look_at(position, target, up=(0.0, 1.0, 0.0)):
    z = np.asarray(target, dtype=float) - position
    z /= np.linalg.norm(z)
    x = np.cross(up, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack((x, y, z))


def build_planar_network(n, layout="ellipse", edges="ring-with-chords", radius=1.6, height=2.5):
    """Cameras at equal height around a common interior point they all face.

    ``edges`` is either a preset name from ``EDGE_PRESETS`` or an explicit
    list of 0-based pairs. The returned truth is expressed in camera 0's
    frame, so node 0 sits at the identity.
    """
    if n < 1:
        raise ValueError("need at least one camera")
    if isinstance(edges, str):
        try:
            edges = EDGE_PRESETS[edges](n)
        except KeyError:
            raise ValueError(f"unknown edge preset {edges!r}; choose from {sorted(EDGE_PRESETS)}") from None
    if n == 1:
        return CameraNetwork(1, (), (Pose.identity(),))

    phi = 2 * np.pi * np.arange(n) / n
    if layout == "circle":
        a = b = radius
    elif layout == "ellipse":
        a, b = radius, 0.7 * radius
    else:
        raise ValueError(f"unknown layout {layout!r}")
    # world frame: Y up, cameras in the horizontal X-Z plane at fixed height
    centers = np.column_stack((a * np.cos(phi), np.full(n, height), b * np.sin(phi)))
    target = np.array([0.0, height, 0.0])
    world = [Pose(_look_at(c, target), c) for c in centers]
    to_anchor = world[0].inverse()
    truth = [Pose.identity()] + [to_anchor.compose(g) for g in world[1:]]
    return CameraNetwork(n, tuple(edges), tuple(truth))


def init_bad(net, source=1):
    """Every non-anchor estimate starts at the true pose of node ``source``."""
    est = np.tile(dq_from_pose(net.truth[min(source, net.n - 1)]), (net.n, 1))
    est[0] = DQ_IDENTITY
    return est


def init_truth(net):
    return net.truth_dq()


def init_perturbed(net, noise, rng):
    """Truth corrupted node-wise by ``noise``; the anchor stays at identity."""
    est = np.array([dq_from_pose(corrupt_pose(p, noise, rng)) for p in net.truth])
    est[0] = DQ_IDENTITY
    return est


def measurement_schedule(T_s, t_max):
    """Iterations ``k * T_s <= t_max`` (k >= 1) at which new measurements arrive."""
    T_s, t_max = int(T_s), int(t_max)
    if not 0 < T_s < t_max:
        raise ValueError(f"need 0 < T_s < t_max, got T_s={T_s}, t_max={t_max}")
    return list(range(T_s, t_max + 1, T_s))
