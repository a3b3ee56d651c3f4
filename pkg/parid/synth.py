from .parid_logging import logging

import collections
import os

import numpy as np
from scipy.spatial import cKDTree

from .features import DEFAULT_DESCRIPTOR_DIM, ImageFeatures, write_feature_file
from .manifest import ROLE_DATABASE, ROLE_QUERY, Manifest, ManifestEntry, write_manifest

_logger = logging.getLogger(__name__)

# neighbours that shape a point's descriptor
_SIGNATURE_NEIGHBORS = 4
_SIGNATURE_WEIGHT    = 0.5
_POINT_MARGIN        = 0.05
_FRAME_SCALE_RANGE   = (2.0, 6.0)

MANIFEST_NAME = 'manifest.csv'
FEATURES_DIR  = 'features'


class SynthConfig(object):
    '''
    Parameters of a synthetic benchmark. Every output is a pure function of these values.
    '''

    def __init__(
            self,
            seed=0,
            n_individuals=1,
            views_per_individual=2,
            points_per_individual=80,
            descriptor_dim=DEFAULT_DESCRIPTOR_DIM,
            descriptor_noise_sigma=0.05,
            dropout_rate=0.2,
            clutter_rate=0.2,
            max_perspective=0.15,
            image_size=256):
        super(SynthConfig, self).__init__()
        for name, value in (
                ('n_individuals', n_individuals),
                ('views_per_individual', views_per_individual),
                ('points_per_individual', points_per_individual),
                ('descriptor_dim', descriptor_dim)):
            if int(value) != value or value < 1:
                raise ValueError('%s must be a positive integer but got %r' % (name, value))
        if seed < 0:
            raise ValueError('seed must be non-negative but got %r' % seed)
        if not descriptor_noise_sigma >= 0:
            raise ValueError('descriptor_noise_sigma must be non-negative but got %r' % descriptor_noise_sigma)
        if not 0 <= dropout_rate < 1:
            raise ValueError('dropout_rate must be in [0, 1) but got %r' % dropout_rate)
        if not clutter_rate >= 0:
            raise ValueError('clutter_rate must be non-negative but got %r' % clutter_rate)
        if not 0 <= max_perspective < 0.5:
            raise ValueError('max_perspective must be in [0, 0.5) but got %r' % max_perspective)
        if not image_size > 0:
            raise ValueError('image_size must be positive but got %r' % image_size)
        self.seed                   = int(seed)
        self.n_individuals          = int(n_individuals)
        self.views_per_individual   = int(views_per_individual)
        self.points_per_individual  = int(points_per_individual)
        self.descriptor_dim         = int(descriptor_dim)
        self.descriptor_noise_sigma = float(descriptor_noise_sigma)
        self.dropout_rate           = float(dropout_rate)
        self.clutter_rate           = float(clutter_rate)
        self.max_perspective        = float(max_perspective)
        self.image_size             = float(image_size)

    def __repr__(self):
        return ('SynthConfig(seed=%d, n_individuals=%d, views=%d, points=%d, D=%d, noise=%r, dropout=%r, clutter=%r, perspective=%r)' % (
            self.seed, self.n_individuals, self.views_per_individual, self.points_per_individual, self.descriptor_dim,
            self.descriptor_noise_sigma, self.dropout_rate, self.clutter_rate, self.max_perspective))


class Constellation(object):

    def __init__(self, individual_id, canonical_points, canonical_descriptors, index=0):
        super(Constellation, self).__init__()
        self.individual_id         = individual_id
        self.index                 = index
        self.canonical_points      = np.asarray(canonical_points, dtype=np.float64)
        self.canonical_descriptors = np.asarray(canonical_descriptors, dtype=np.float64)

    def __len__(self):
        return self.canonical_points.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Constellation)
                and self.individual_id == other.individual_id
                and np.array_equal(self.canonical_points, other.canonical_points)
                and np.array_equal(self.canonical_descriptors, other.canonical_descriptors))

    def __repr__(self):
        return 'Constellation(individual_id=%s, points=%d)' % (self.individual_id, len(self))


# source_indices: canonical point per feature row, -1 for clutter
Observation = collections.namedtuple('Observation', ('features', 'homography', 'source_indices'))


def individual_id(index):
    return 'ind%03d' % index


def image_id(index, view_index):
    return '%s_v%d' % (individual_id(index), view_index)


def _unit_rows(rows):
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _neighborhood_signatures(points):
    '''
    Sorted distances to the nearest neighbours, scaled by the point density and centered over
    the constellation. Missing neighbours contribute zeros.
    '''
    n         = points.shape[0]
    k         = min(_SIGNATURE_NEIGHBORS, n - 1)
    signature = np.zeros((n, _SIGNATURE_NEIGHBORS))
    if k > 0:
        distances, _ = cKDTree(points).query(points, k=k + 1)
        signature[:, :k] = np.reshape(distances, (n, k + 1))[:, 1:] * np.sqrt(n)
        signature[:, :k] -= signature[:, :k].mean(axis=0)
    return signature


def generate_individual(config, index):
    '''
    Canonical pattern of individual ``index``: points uniform in the unit square (away from
    the border) and descriptors mixing a random vector per point with a projection of the
    point's neighbourhood signature onto a random basis owned by the individual.
    '''
    if not 0 <= index < config.n_individuals:
        raise ValueError('Individual index %d outside [0, %d)' % (index, config.n_individuals))
    rng    = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    n, dim = config.points_per_individual, config.descriptor_dim

    points      = rng.uniform(_POINT_MARGIN, 1.0 - _POINT_MARGIN, size=(n, 2))
    basis       = rng.standard_normal((dim, _SIGNATURE_NEIGHBORS)) / np.sqrt(dim)
    randomness  = rng.standard_normal((n, dim)) / np.sqrt(dim)
    descriptors = randomness + _SIGNATURE_WEIGHT * _neighborhood_signatures(points) @ basis.T
    return Constellation(individual_id(index), points, _unit_rows(descriptors), index=index)


def _homography_center(image_size):
    return np.array([
        [2.0 / image_size, 0., -1.],
        [0., 2.0 / image_size, -1.],
        [0., 0., 1.]])


def random_homography(rng, max_perspective, image_size):
    '''
    ``C^-1 (I + E) C`` in pixel coordinates, where ``C`` maps the image to ``[-1, 1]^2`` and
    every entry of ``E`` except ``e33`` is uniform in ``[-max_perspective, max_perspective]``.
    '''
    perturbation = rng.uniform(-max_perspective, max_perspective, size=(3, 3))
    perturbation[2, 2] = 0.0
    center = _homography_center(image_size)
    H = np.linalg.inv(center) @ (np.eye(3) + perturbation) @ center
    return H / H[2, 2]


def _map_points(H, points):
    mapped = np.concatenate([points, np.ones((points.shape[0], 1))], axis=1) @ H.T
    return mapped[:, :2] / mapped[:, 2:]


def _jacobians(H, points, mapped):
    w = (np.concatenate([points, np.ones((points.shape[0], 1))], axis=1) @ H[2])[:, np.newaxis, np.newaxis]
    top = H[np.newaxis, :2, :2] - mapped[:, :, np.newaxis] * H[np.newaxis, 2:3, :2]
    return top / w


def render_observation(constellation, config, view_index):
    '''
    One distorted view of ``constellation``. View 0 is the clean reference: no dropout,
    clutter or descriptor noise and a homography bounded by half of ``max_perspective``.

    :return: ``Observation(features, homography, source_indices)``; ``homography`` maps
             canonical pixel coordinates onto the observation
    '''
    index = constellation.index
    rng   = np.random.default_rng(np.random.SeedSequence([config.seed, index, view_index + 1]))
    clean = view_index == 0
    size  = config.image_size
    dim   = config.descriptor_dim

    H = random_homography(rng, config.max_perspective * (0.5 if clean else 1.0), size)
    scales = rng.uniform(*_FRAME_SCALE_RANGE, size=len(constellation))
    keep   = np.ones(len(constellation), dtype=bool) if clean else rng.random(len(constellation)) >= config.dropout_rate
    source = np.flatnonzero(keep)

    canonical   = constellation.canonical_points[source] * size
    points      = _map_points(H, canonical)
    shapes      = scales[source, np.newaxis, np.newaxis] * _jacobians(H, canonical, points)
    descriptors = constellation.canonical_descriptors[source]
    if not clean and config.descriptor_noise_sigma > 0:
        descriptors = _unit_rows(descriptors + config.descriptor_noise_sigma * rng.standard_normal(descriptors.shape))

    n_clutter = 0 if clean else int(round(config.clutter_rate * len(constellation)))
    if n_clutter > 0:
        clutter_points = rng.uniform(0.0, size, size=(n_clutter, 2))
        clutter_shapes = rng.uniform(*_FRAME_SCALE_RANGE, size=n_clutter)[:, np.newaxis, np.newaxis] * np.eye(2)
        points      = np.concatenate([points, clutter_points])
        shapes      = np.concatenate([shapes, clutter_shapes])
        descriptors = np.concatenate([descriptors, _unit_rows(rng.standard_normal((n_clutter, dim)))])
        source      = np.concatenate([source, -np.ones(n_clutter, dtype=source.dtype)])

    features = ImageFeatures.from_points(
        image_id(index, view_index),
        points,
        descriptors.reshape(-1, dim),
        shapes=shapes,
        normalize=False,
        individual_id=constellation.individual_id)
    _logger.trace('Rendered %s with %d true and %d clutter features', features.image_id, len(source) - n_clutter, n_clutter)
    return Observation(features, H, source)


def write_homography(H, path):
    H = np.asarray(H, dtype=np.float64) / H[2, 2]
    with open(path, 'w', encoding='utf-8') as f:
        f.write(' '.join(repr(float(v)) for v in H.ravel()))
        f.write('\n')


def read_homography(path):
    with open(path, 'r', encoding='utf-8') as f:
        values = [float(t) for t in f.read().split()]
    if len(values) != 9:
        raise ValueError('%s: expected 9 homography entries but got %d' % (path, len(values)))
    return np.array(values).reshape(3, 3)


def generate_benchmark(config, out_dir):
    '''
    Write a benchmark into ``out_dir``: ``features/<image_id>.patf`` with a ``.h`` sidecar
    holding the ground-truth homography for every view, and ``manifest.csv``. View 0 of each
    individual is a database image, the remaining views are queries.
    '''
    features_dir = os.path.join(out_dir, FEATURES_DIR)
    os.makedirs(features_dir, exist_ok=True)
    entries = []
    for index in range(config.n_individuals):
        constellation = generate_individual(config, index)
        for view_index in range(config.views_per_individual):
            observation = render_observation(constellation, config, view_index)
            features    = observation.features
            stem        = os.path.join(features_dir, features.image_id)
            write_feature_file(features, stem + '.patf')
            write_homography(observation.homography, stem + '.h')
            entries.append(ManifestEntry(
                image_id      = features.image_id,
                individual_id = constellation.individual_id,
                viewpoint     = '',
                role          = ROLE_DATABASE if view_index == 0 else ROLE_QUERY,
                feature_path  = os.path.abspath(stem + '.patf')))

    manifest_path = os.path.join(out_dir, MANIFEST_NAME)
    manifest = Manifest(entries, path=manifest_path)
    write_manifest(manifest, manifest_path)
    _logger.info('Wrote benchmark with %d images of %d individuals to %s', len(entries), config.n_individuals, out_dir)
    return manifest
