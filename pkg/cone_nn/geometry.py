"""Decision regions of a single neuron ``a = g(w.x + b)``.

For ReLU-like activations the inputs with a positive output form a half-space, for cone-like
activations they form a hyperstrip ``0 < w.x + b < 2`` bounded by two parallel hyperplanes.
"""
import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import xarray as xr
from affine import Affine
from shapely import LineString, Polygon, box

from . import activations
from .errors import DimensionError, DomainError, NoBoundaryError, ValidationError
from .tensor import Matrix

logger = logging.getLogger(__name__)

DEFAULT_BOUNDARY_TOL = 1e-9


class RegionLabel(enum.IntEnum):
    """Where a point falls relative to a neuron. Values are the raster codes."""
    NEGATIVE_SET = 0
    BOUNDARY = 1
    POSITIVE_SET = 2


class Hyperplane(NamedTuple):
    """The hyperplane ``w.x + b == offset``, in the frame of the neuron it belongs to"""
    w: np.ndarray
    offset: float


@dataclass(frozen=True)
class NeuronGeometry:
    """
    A single neuron.

    Parameters
    ----------
    w: array_like
        weight vector, at least one entry must be nonzero
    b: float
        bias
    kind: activations.ActivationKind
        activation of the neuron
    """
    w: np.ndarray
    b: float
    kind: activations.ActivationKind

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).ravel()
        w.setflags(write=False)
        if w.size == 0 or not np.any(w != 0.0):
            raise ValidationError("Neuron weight vector must have a nonzero entry")
        if not (np.isfinite(w).all() and np.isfinite(self.b)):
            raise DomainError("Neuron parameters must be finite")
        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'b', float(self.b))

    @property
    def dim(self):
        return self.w.size

    @classmethod
    def parse(cls, spec):
        """
        Parse ``kind:w1,w2,...:b``, e.g. ``cone:1,0:0`` or ``parameterized-cone:2:1,1:0``

        Parameters
        ----------
        spec: str
            analytic neuron description

        Returns
        -------
        NeuronGeometry
        """
        parts = spec.strip().split(':')
        if len(parts) < 3:
            raise ValidationError(f"Neuron spec {spec!r} must read kind:w1,w2,...:b")
        kind_text, w_text, b_text = ':'.join(parts[:-2]), parts[-2], parts[-1]
        try:
            w = [float(v) for v in w_text.split(',')]
            b = float(b_text)
        except ValueError:
            raise ValidationError(f"Non-numeric weights or bias in neuron spec {spec!r}") from None
        return cls(w, b, activations.ActivationKind.parse(kind_text))

    def pre_activation(self, points):
        """
        z = w.x + b for every point

        Parameters
        ----------
        points: numpy.ndarray
            shape (n_points, dim) or a single point of shape (dim,)

        Returns
        -------
        numpy.ndarray
            shape (n_points,)
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.dim:
            raise DimensionError(f"Points of dimension {points.shape[1]} for a neuron of dimension {self.dim}",
                                 shapes=[points.shape, self.w.shape])
        return points @ self.w + self.b


def _labels_from_output(g, boundary_tol):
    labels = np.where(g > 0.0, RegionLabel.POSITIVE_SET, RegionLabel.NEGATIVE_SET)
    return np.where(np.abs(g) <= boundary_tol, RegionLabel.BOUNDARY, labels).astype(np.int64)


def classify_points(geom, points, boundary_tol=DEFAULT_BOUNDARY_TOL):
    """
    Vectorized `classify_point`

    Returns
    -------
    numpy.ndarray
        integer `RegionLabel` codes, one per point
    """
    if boundary_tol < 0:
        raise ValidationError(f"boundary_tol must be >= 0, got {boundary_tol}")
    g = np.asarray(activations.forward(geom.kind, geom.pre_activation(points)))
    return _labels_from_output(g, boundary_tol)


def classify_point(geom, x, boundary_tol=DEFAULT_BOUNDARY_TOL):
    """
    Decide whether a point is in C+, in C- or on the decision boundary of a neuron

    Parameters
    ----------
    geom: NeuronGeometry
        the neuron
    x: array_like
        point of the neuron's input dimension
    boundary_tol: float
        outputs with ``|g| <= boundary_tol`` are labelled `RegionLabel.BOUNDARY`

    Returns
    -------
    RegionLabel
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"A point is a vector, got shape {x.shape}", shapes=[x.shape])
    return RegionLabel(int(classify_points(geom, x, boundary_tol)[0]))


def boundary_hyperplanes(geom):
    """
    Hyperplanes on which the neuron output is zero.

    Cone-like neurons have two, ``w.x + b == 0`` and ``w.x + b == 2``, the other kinds the single
    hyperplane ``w.x + b == 0``.

    Parameters
    ----------
    geom: NeuronGeometry

    Returns
    -------
    list of Hyperplane
    """
    levels = activations.zeros(geom.kind)
    if not levels:
        raise NoBoundaryError(f"{geom.kind.name} is never zero, a {geom.kind.name} neuron has no decision boundary")
    return [Hyperplane(geom.w.copy(), float(level)) for level in levels]


def _check_bounds(xy_bounds):
    x_min, x_max, y_min, y_max = (float(v) for v in xy_bounds)
    if not all(np.isfinite([x_min, x_max, y_min, y_max])) or x_min >= x_max or y_min >= y_max:
        raise DomainError(f"Bounds {tuple(xy_bounds)} do not form a nonempty rectangle")
    return x_min, x_max, y_min, y_max


def grid_transform(xy_bounds, resolution):
    """
    Affine map from (column, row) lattice indices to plane coordinates (x1, x2)

    Parameters
    ----------
    xy_bounds: (float, float, float, float)
        x_min, x_max, y_min, y_max
    resolution: int
        samples per axis, the corners are sampled exactly

    Returns
    -------
    affine.Affine
    """
    x_min, x_max, y_min, y_max = _check_bounds(xy_bounds)
    if resolution < 2:
        raise ValidationError(f"resolution must be >= 2, got {resolution}")
    return (Affine.translation(x_min, y_min)
            * Affine.scale((x_max - x_min) / (resolution - 1), (y_max - y_min) / (resolution - 1)))


def lattice(xy_bounds, resolution):
    """
    Coordinates of the raster samples

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        x1 values (columns) and x2 values (rows)
    """
    x_min, x_max, y_min, y_max = _check_bounds(xy_bounds)
    transform = grid_transform(xy_bounds, resolution)
    index = np.arange(resolution, dtype=np.float64)
    x1, _ = transform * (index, np.zeros(resolution))
    _, x2 = transform * (np.zeros(resolution), index)
    x1, x2 = np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64)
    # pin the far corners against rounding in the transform
    x1[-1], x2[-1] = x_max, y_max
    return x1, x2


def raster_regions(classifier, xy_bounds, resolution, boundary_tol=DEFAULT_BOUNDARY_TOL):
    """
    Sample a 2-D classifier over a rectangle.

    Parameters
    ----------
    classifier: NeuronGeometry | network.Network
        a neuron gives `RegionLabel` codes, a network gives its predicted class
    xy_bounds: (float, float, float, float)
        x_min, x_max, y_min, y_max
    resolution: int
        samples per axis, at least 2
    boundary_tol: float
        used for neurons only

    Returns
    -------
    xarray.DataArray
        integer grid of dims (x2, x1): row i samples ``x2[i]``, column j samples ``x1[j]``.
        ``attrs['class_count']`` holds the number of possible values.
    """
    x1, x2 = lattice(xy_bounds, resolution)
    mesh_x1, mesh_x2 = np.meshgrid(x1, x2, indexing='xy')
    points = np.column_stack([mesh_x1.ravel(), mesh_x2.ravel()])
    if isinstance(classifier, NeuronGeometry):
        values = classify_points(classifier, points, boundary_tol)
        class_count = len(RegionLabel)
        kind = 'neuron'
    else:
        values = np.asarray(classifier.predict_classes(Matrix(points.T)), dtype=np.int64)
        class_count = classifier.class_count
        kind = 'network'
    grid = xr.DataArray(values.reshape(resolution, resolution), dims=('x2', 'x1'),
                        coords={'x2': x2, 'x1': x1}, name='label')
    grid.attrs.update(class_count=class_count, classifier=kind)
    return grid


def _half_plane(geom, level, extent):
    """Polygon approximating {x : w.x + b >= level} over a disk of radius `extent`"""
    norm = np.linalg.norm(geom.w)
    normal = geom.w / norm
    direction = np.array([-normal[1], normal[0]])
    foot = (level - geom.b) / norm * normal
    return Polygon([foot - extent * direction, foot + extent * direction,
                    foot + extent * direction + extent * normal, foot - extent * direction + extent * normal])


def _extent(geom, frame):
    x_min, y_min, x_max, y_max = frame.bounds
    reach = np.hypot(max(abs(x_min), abs(x_max)), max(abs(y_min), abs(y_max)))
    return 4.0 * (reach + (abs(geom.b) + activations.CONE_DELTA) / np.linalg.norm(geom.w) + 1.0)


def positive_region(geom, xy_bounds):
    """
    The set C+ of a 2-D neuron clipped to a rectangle: a strip for cone-like kinds, a half-plane
    for the others

    Parameters
    ----------
    geom: NeuronGeometry
        neuron with 2 inputs
    xy_bounds: (float, float, float, float)
        x_min, x_max, y_min, y_max

    Returns
    -------
    shapely.Polygon
        possibly empty
    """
    if geom.dim != 2:
        raise DimensionError(f"positive_region needs a 2-D neuron, got dimension {geom.dim}", shapes=[geom.w.shape])
    x_min, x_max, y_min, y_max = _check_bounds(xy_bounds)
    frame = box(x_min, y_min, x_max, y_max)
    extent = _extent(geom, frame)
    interval = activations.positive_interval(geom.kind)
    if interval is not None:
        lo, hi = interval
        return frame.intersection(_half_plane(geom, lo, extent)).difference(_half_plane(geom, hi, extent))
    if geom.kind.tag in (activations.Tag.SIGMOID, activations.Tag.SOFTPLUS, activations.Tag.LISHT):
        # positive everywhere, up to the zero-area line z = 0 for LiSHT
        return frame
    return frame.intersection(_half_plane(geom, 0.0, extent))


def _line(geom, level, extent):
    norm = np.linalg.norm(geom.w)
    normal = geom.w / norm
    direction = np.array([-normal[1], normal[0]])
    foot = (level - geom.b) / norm * normal
    return [tuple(foot - extent * direction), tuple(foot + extent * direction)]


def boundary_lines(geom, xy_bounds):
    """
    Decision boundary of a 2-D neuron clipped to a rectangle

    Returns
    -------
    list of shapely.LineString
        one per boundary hyperplane, empty geometries when the line misses the rectangle
    """
    if geom.dim != 2:
        raise DimensionError(f"boundary_lines needs a 2-D neuron, got dimension {geom.dim}", shapes=[geom.w.shape])
    x_min, x_max, y_min, y_max = _check_bounds(xy_bounds)
    frame = box(x_min, y_min, x_max, y_max)
    extent = _extent(geom, frame)
    return [LineString(_line(geom, plane.offset, extent)).intersection(frame) for plane in boundary_hyperplanes(geom)]
