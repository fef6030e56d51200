"""Hidden-variable spaces, uniform sampling, and deterministic quadrature grids.

Two spaces are supported: the unit sphere (spin-like hidden variables,
represented as unit 3-vectors) and the circle (polarisation-like hidden
variables, represented as angles in [0, 2*pi)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "HvSpace",
    "HiddenVariable",
    "RandomStream",
    "sample_uniform",
    "sample_uniform_array",
    "quadrature_grid",
]

TWO_PI = 2.0 * math.pi

UNIT_NORM_TOL = 1e-12


class HvSpace(Enum):
    """Geometry of the hidden-variable space."""

    SPHERE = "sphere"
    CIRCLE = "circle"


def _check_sphere_vector(value) -> np.ndarray:
    vec = np.asarray(value, dtype=float)
    if vec.shape != (3,):
        raise ValueError(f"sphere point must be a 3-vector, got shape {vec.shape}")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"sphere point must be unit length, |v| = {norm!r}")
    vec.setflags(write=False)
    return vec


@dataclass(frozen=True, eq=False)
class HiddenVariable:
    """A single hidden-variable value: unit 3-vector (sphere) or angle (circle)."""

    space: HvSpace
    value: np.ndarray | float

    def __post_init__(self):
        if self.space is HvSpace.SPHERE:
            object.__setattr__(self, "value", _check_sphere_vector(self.value))
        else:
            angle = float(self.value)
            if not (0.0 <= angle < TWO_PI):
                angle = angle % TWO_PI
            object.__setattr__(self, "value", angle)


@dataclass
class RandomStream:
    """Counter-based random stream, splittable by ``stream_index``.

    Equal (seed, stream_index) pairs reproduce the identical sample sequence
    bit-exactly; distinct stream indices give statistically independent
    sequences.  Each stream instance is stateful and must be owned by a
    single worker at a time.
    """

    seed: int
    stream_index: int = 0
    _generator: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")
        self.seed = int(self.seed) % (1 << 64)
        self.stream_index = int(self.stream_index)

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator (Philox keyed by seed and stream)."""
        if self._generator is None:
            key = np.array([self.seed, self.stream_index], dtype=np.uint64)
            self._generator = np.random.Generator(np.random.Philox(key=key))
        return self._generator

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self.generator.random(size)

    def split(self, stream_index: int) -> "RandomStream":
        """A fresh independent stream with the same seed and a new index."""
        return RandomStream(self.seed, stream_index)


def sample_uniform(space: HvSpace, stream: RandomStream) -> HiddenVariable:
    """Draw one uniformly distributed point of the given space.

    Sphere points use the z-uniform construction: z uniform on [-1, 1],
    azimuth uniform on [0, 2*pi).  Circle points are uniform angles.
    """
    if space is HvSpace.SPHERE:
        gen = stream.generator
        z = 2.0 * gen.random() - 1.0
        psi = TWO_PI * gen.random()
        r = math.sqrt(max(0.0, 1.0 - z * z))
        vec = np.array([r * math.cos(psi), r * math.sin(psi), z])
        return HiddenVariable(space, vec)
    angle = TWO_PI * stream.generator.random()
    return HiddenVariable(space, angle)


def sample_uniform_array(space: HvSpace, stream: RandomStream, n: int) -> np.ndarray:
    """Vectorised uniform sampling.

    Returns an (n, 3) array of unit vectors for the sphere, or an (n,) array
    of angles for the circle.  Consumes the stream in the same per-point
    order as repeated :func:`sample_uniform` calls.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = stream.generator
    if space is HvSpace.SPHERE:
        u = gen.random((n, 2))
        z = 2.0 * u[:, 0] - 1.0
        psi = TWO_PI * u[:, 1]
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        return np.column_stack([r * np.cos(psi), r * np.sin(psi), z])
    return TWO_PI * gen.random(n)


def quadrature_grid(
    space: HvSpace, resolution: int
) -> list[tuple[HiddenVariable, float]]:
    """Deterministic midpoint-rule grid with weights summing to one.

    The sphere grid is a product of ``resolution`` midpoints in z and
    ``2 * resolution`` midpoints in azimuth (uniform measure in both).  The
    circle grid has ``resolution`` midpoints in angle.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    nodes: list[tuple[HiddenVariable, float]] = []
    if space is HvSpace.SPHERE:
        nz, npsi = resolution, 2 * resolution
        weight = 1.0 / (nz * npsi)
        z = -1.0 + (np.arange(nz) + 0.5) * (2.0 / nz)
        psi = (np.arange(npsi) + 0.5) * (TWO_PI / npsi)
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        cos_p = np.cos(psi)
        sin_p = np.sin(psi)
        for i in range(nz):
            for j in range(npsi):
                vec = np.array([r[i] * cos_p[j], r[i] * sin_p[j], z[i]])
                nodes.append((HiddenVariable(space, vec), weight))
        return nodes
    weight = 1.0 / resolution
    for k in range(resolution):
        angle = (k + 0.5) * (TWO_PI / resolution)
        nodes.append((HiddenVariable(space, angle), weight))
    return nodes
