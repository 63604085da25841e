"""Sampled complex functions on rectangular group grids plus binary file IO.

Axis order is row-major with the 2n horizontal axes first, then the m center
axes. The on-disk format ("HTGF") stores a fixed-width header (magic, version,
n, m, per-axis counts) followed by per-axis spacings and origins and the
interleaved (re, im) float64 samples, all little-endian.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .algebra import HTypeStructure, build_structure
from .errors import GridError, GridMismatchError

_MAGIC = b"HTGF"
_VERSION = 1


@dataclass(frozen=True)
class GridFunction:
    """Immutable complex samples on a rectangular lattice."""

    structure: HTypeStructure
    counts: tuple
    spacings: tuple
    origins: tuple
    values: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        naxes = 2 * self.structure.n + self.structure.m
        counts = tuple(int(c) for c in self.counts)
        spacings = tuple(float(h) for h in self.spacings)
        origins = tuple(float(o) for o in self.origins)
        if len(counts) != naxes or len(spacings) != naxes \
                or len(origins) != naxes:
            raise GridError("expected %d axes" % naxes)
        if any(c < 3 for c in counts):
            raise GridError("every axis needs at least 3 samples")
        if any(h <= 0 for h in spacings):
            raise GridError("spacings must be positive")
        values = np.ascontiguousarray(self.values, dtype=complex)
        if values.shape != counts:
            raise GridError("value shape %s does not match counts %s"
                            % (values.shape, counts))
        values.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "spacings", spacings)
        object.__setattr__(self, "origins", origins)
        object.__setattr__(self, "values", values)

    @property
    def naxes(self):
        return len(self.counts)

    def axis(self, i):
        """Coordinate array of axis i."""
        return self.origins[i] + self.spacings[i] * np.arange(self.counts[i])

    def axes(self):
        return [self.axis(i) for i in range(self.naxes)]

    def meshgrid(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def cell_volume(self):
        return float(np.prod(self.spacings))

    def boundary_max(self):
        """Largest |value| on any boundary face."""
        worst = 0.0
        for ax in range(self.naxes):
            sl = [slice(None)] * self.naxes
            for edge in (0, -1):
                sl[ax] = edge
                worst = max(worst, float(np.max(np.abs(self.values[tuple(sl)]))))
        return worst

    def with_values(self, values, **metadata):
        """Sibling grid carrying new samples (geometry reused)."""
        return GridFunction(self.structure, self.counts, self.spacings,
                            self.origins, values,
                            dict(self.metadata, **metadata))

    def save(self, path):
        with open(path, "wb") as fh:
            self._write(fh)

    def _write(self, fh):
        fh.write(_MAGIC)
        head = np.array([_VERSION, self.structure.n, self.structure.m]
                        + list(self.counts), dtype="<u4")
        fh.write(head.tobytes())
        fh.write(np.array(self.spacings, dtype="<f8").tobytes())
        fh.write(np.array(self.origins, dtype="<f8").tobytes())
        inter = np.empty(self.counts + (2,), dtype="<f8")
        inter[..., 0] = self.values.real
        inter[..., 1] = self.values.imag
        fh.write(inter.tobytes())


def load_grid(path):
    """Read a GridFunction written by GridFunction.save."""
    with open(path, "rb") as fh:
        data = fh.read()
    buf = io.BytesIO(data)
    if buf.read(4) != _MAGIC:
        raise GridError("not an HTGF file: %s" % path)
    version, n, m = np.frombuffer(buf.read(12), dtype="<u4")
    if version != _VERSION:
        raise GridError("unsupported HTGF version %d" % version)
    naxes = 2 * int(n) + int(m)
    counts = np.frombuffer(buf.read(4 * naxes), dtype="<u4").astype(int)
    spacings = np.frombuffer(buf.read(8 * naxes), dtype="<f8")
    origins = np.frombuffer(buf.read(8 * naxes), dtype="<f8")
    total = int(np.prod(counts))
    inter = np.frombuffer(buf.read(16 * total), dtype="<f8")
    inter = inter.reshape(tuple(counts) + (2,))
    values = inter[..., 0] + 1j * inter[..., 1]
    structure = build_structure(int(n), int(m))
    return GridFunction(structure, tuple(counts), tuple(spacings),
                        tuple(origins), values)


def centered_origins(counts, spacings):
    """Origins that center each axis on 0 (odd counts hit 0 exactly)."""
    return tuple(-h * (c - 1) / 2.0 for c, h in zip(counts, spacings))


def sample_function(structure, counts, spacings, fn, origins=None,
                    metadata=None):
    """Sample fn over the lattice; fn receives the meshgrid coordinate arrays."""
    counts = tuple(int(c) for c in counts)
    spacings = tuple(float(h) for h in spacings)
    if origins is None:
        origins = centered_origins(counts, spacings)
    probe = GridFunction(structure, counts, spacings, tuple(origins),
                         np.zeros(counts, dtype=complex))
    values = np.asarray(fn(*probe.meshgrid()), dtype=complex)
    return probe.with_values(values, **(metadata or {}))


def check_same_geometry(f, g):
    """Spacing and lattice-alignment check for same-shape grid pairs."""
    if f.structure.n != g.structure.n or f.structure.m != g.structure.m:
        raise GridMismatchError("structures differ")
    if f.counts != g.counts:
        raise GridMismatchError("counts differ: %s vs %s"
                                % (f.counts, g.counts))
    for h1, h2 in zip(f.spacings, g.spacings):
        if abs(h1 - h2) > 1e-12 * max(h1, h2):
            raise GridMismatchError("spacings differ")
    for o1, o2, h in zip(f.origins, g.origins, f.spacings):
        if abs(o1 - o2) > 1e-9 * h:
            raise GridMismatchError("origins differ")
