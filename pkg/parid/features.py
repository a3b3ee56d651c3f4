from .parid_logging import logging

import numpy as np

from .version_info import _version

_logger = logging.getLogger(__name__)

_MAGIC                 = 'PATF'
_FRAME_COLUMNS         = 6
_UNIT_NORM_TOLERANCE   = 1e-3
# descriptors this close to unit norm are stored as read so files re-parse bitwise
_RENORMALIZE_TOLERANCE = 1e-12

DEFAULT_DESCRIPTOR_DIM = 128


class FeatureFileError(Exception):

    def __init__(self, path, line_number, reason):
        super(FeatureFileError, self).__init__('%s:%s: %s' % (path, line_number, reason))
        self.path        = path
        self.line_number = line_number
        self.reason      = reason


class AffineFrame(object):
    '''
    Center and local affine shape of a detected region. The 2x2 matrix ``A`` maps the unit
    circle onto the measurement region around ``(x, y)``.
    '''

    def __init__(self, x, y, a11, a12, a21, a22):
        super(AffineFrame, self).__init__()
        self.x   = float(x)
        self.y   = float(y)
        self.a11 = float(a11)
        self.a12 = float(a12)
        self.a21 = float(a21)
        self.a22 = float(a22)

    @staticmethod
    def from_row(row):
        return AffineFrame(*row[:_FRAME_COLUMNS])

    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    def center(self):
        return self.x, self.y

    def shape_matrix(self):
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def as_row(self):
        return np.array([self.x, self.y, self.a11, self.a12, self.a21, self.a22])

    def __eq__(self, other):
        return isinstance(other, AffineFrame) and np.array_equal(self.as_row(), other.as_row())

    def __repr__(self):
        return 'AffineFrame(x=%r, y=%r, A=[[%r, %r], [%r, %r]])' % (
            self.x, self.y, self.a11, self.a12, self.a21, self.a22)


def _frozen(array):
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


class ImageFeatures(object):
    '''
    All local features detected on one pattern image: an ``M x 6`` array of affine frames
    ``(x, y, a11, a12, a21, a22)`` and an ``M x D`` array of descriptors, aligned row by row.
    An image without features is valid but degenerate.
    '''

    def __init__(self, image_id, frames, descriptors, individual_id=None, viewpoint=None):
        super(ImageFeatures, self).__init__()
        frames      = np.asarray(frames, dtype=np.float64)
        descriptors = np.asarray(descriptors, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != _FRAME_COLUMNS:
            raise ValueError('Frames for image %s must have shape (M, %d) but got %s' % (image_id, _FRAME_COLUMNS, frames.shape))
        if descriptors.ndim != 2 or descriptors.shape[0] != frames.shape[0]:
            raise ValueError('Descriptors for image %s must have shape (%d, D) but got %s' % (image_id, frames.shape[0], descriptors.shape))
        if not (np.all(np.isfinite(frames)) and np.all(np.isfinite(descriptors))):
            raise ValueError('Features for image %s contain non-finite values' % image_id)
        self.image_id      = image_id
        self.individual_id = individual_id or None
        self.viewpoint     = viewpoint or None
        self.frames        = _frozen(frames)
        self.descriptors   = _frozen(descriptors)

    @staticmethod
    def from_points(image_id, points, descriptors, shapes=None, normalize=True, individual_id=None, viewpoint=None):
        '''

        :param points: ``M x 2`` frame centers
        :param descriptors: ``M x D`` descriptors
        :param shapes: optional ``M x 2 x 2`` affine shape matrices, identity when omitted
        :param normalize: rescale descriptors to unit L2 norm
        '''
        points      = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        descriptors = np.asarray(descriptors, dtype=np.float64)
        if descriptors.ndim != 2:
            descriptors = descriptors.reshape(points.shape[0], -1)
        if shapes is None:
            shapes = np.broadcast_to(np.eye(2), (points.shape[0], 2, 2))
        shapes = np.asarray(shapes, dtype=np.float64).reshape(points.shape[0], 4)
        if normalize and descriptors.shape[0] > 0:
            descriptors = unit_normalize_descriptors(descriptors)
        return ImageFeatures(
            image_id      = image_id,
            frames        = np.concatenate([points, shapes], axis=1),
            descriptors   = descriptors,
            individual_id = individual_id,
            viewpoint     = viewpoint)

    @property
    def points(self):
        return self.frames[:, :2]

    @property
    def descriptor_dim(self):
        return self.descriptors.shape[1]

    @property
    def degenerate(self):
        return self.frames.shape[0] == 0

    def frame(self, index):
        return AffineFrame.from_row(self.frames[index])

    def pairs(self):
        for frame, descriptor in zip(self.frames, self.descriptors):
            yield AffineFrame.from_row(frame), descriptor

    def with_labels(self, individual_id, viewpoint):
        return ImageFeatures(
            image_id      = self.image_id,
            frames        = self.frames,
            descriptors   = self.descriptors,
            individual_id = individual_id,
            viewpoint     = viewpoint)

    def __len__(self):
        return self.frames.shape[0]

    def __repr__(self):
        return 'ImageFeatures(image_id=%s, individual_id=%s, viewpoint=%s, M=%d, D=%d)' % (
            self.image_id, self.individual_id, self.viewpoint, len(self), self.descriptor_dim)


def unit_normalize_descriptors(descriptors):
    descriptors = np.asarray(descriptors, dtype=np.float64)
    norms = np.linalg.norm(descriptors, axis=1)
    if np.any(norms == 0):
        raise ValueError('Cannot normalize zero-norm descriptor(s) at rows %s' % np.flatnonzero(norms == 0).tolist())
    rescale = np.abs(norms - 1.0) > _RENORMALIZE_TOLERANCE
    descriptors = descriptors.copy()
    descriptors[rescale] /= norms[rescale, np.newaxis]
    return descriptors


def _parse_float(token, path, line_number):
    try:
        value = float(token)
    except ValueError:
        raise FeatureFileError(path, line_number, 'cannot parse `%s\' as decimal float' % token)
    if not np.isfinite(value):
        raise FeatureFileError(path, line_number, 'non-finite value `%s\'' % token)
    return value


def _parse_count(token, path, line_number, what):
    try:
        value = int(token)
    except ValueError:
        raise FeatureFileError(path, line_number, 'cannot parse %s `%s\' as integer' % (what, token))
    if value < 0:
        raise FeatureFileError(path, line_number, '%s must not be negative but got %d' % (what, value))
    return value


def parse_feature_file(path):
    '''
    Read a PATF feature file. Descriptors are rescaled to unit L2 norm, feature order is kept.

    :raises FeatureFileError: on any malformed content, with the offending line number
    '''
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()

    if len(lines) < 3:
        raise FeatureFileError(path, len(lines) + 1, 'truncated header: expected 3 header lines but found %d' % len(lines))

    header = lines[0].split()
    expected_version = str(_version.format_version('features'))
    if len(header) != 2 or header[0] != _MAGIC:
        raise FeatureFileError(path, 1, 'malformed header `%s\', expected `%s %s\'' % (lines[0], _MAGIC, expected_version))
    if header[1] != expected_version:
        raise FeatureFileError(path, 1, 'unsupported format version `%s\'' % header[1])

    image_id = lines[1].strip()
    if not image_id or len(image_id.split()) != 1:
        raise FeatureFileError(path, 2, 'image id must be a single token but got `%s\'' % lines[1])

    sizes = lines[2].split()
    if len(sizes) != 2:
        raise FeatureFileError(path, 3, 'expected `<D_raw> <M>\' but got `%s\'' % lines[2])
    descriptor_dim = _parse_count(sizes[0], path, 3, 'descriptor dimension')
    count          = _parse_count(sizes[1], path, 3, 'feature count')
    if descriptor_dim == 0:
        raise FeatureFileError(path, 3, 'descriptor dimension must be positive')

    body = lines[3:]
    if len(body) != count:
        line_number = 4 + min(len(body), count)
        raise FeatureFileError(path, line_number, 'count mismatch: header declares %d features but file has %d feature lines' % (count, len(body)))

    columns = _FRAME_COLUMNS + descriptor_dim
    rows    = np.empty((count, columns), dtype=np.float64)
    for index, line in enumerate(body):
        line_number = 4 + index
        tokens = line.split()
        if len(tokens) != columns:
            raise FeatureFileError(path, line_number, 'dimension inconsistency: expected %d values (6 frame + %d descriptor) but got %d' % (columns, descriptor_dim, len(tokens)))
        rows[index] = [_parse_float(t, path, line_number) for t in tokens]
        a11, a12, a21, a22 = rows[index, 2:_FRAME_COLUMNS]
        if a11 * a22 - a12 * a21 == 0:
            raise FeatureFileError(path, line_number, 'singular affine shape matrix')
        if not np.any(rows[index, _FRAME_COLUMNS:]):
            raise FeatureFileError(path, line_number, 'zero-norm descriptor')

    descriptors = rows[:, _FRAME_COLUMNS:]
    if count > 0:
        descriptors = unit_normalize_descriptors(descriptors)
    features = ImageFeatures(image_id=image_id, frames=rows[:, :_FRAME_COLUMNS], descriptors=descriptors)
    if features.degenerate:
        _logger.debug('Feature file %s for image %s declares no features', path, image_id)
    _logger.trace('Parsed %s from %s', features, path)
    return features


def _format_row(values):
    return ' '.join(repr(float(v)) for v in values)


def write_feature_file(features, path):
    '''
    Write ``features`` as PATF. Values are written with ``repr`` so that parsing the file
    reproduces them exactly.
    '''
    lines = [
        '%s %d' % (_MAGIC, _version.format_version('features')),
        features.image_id,
        '%d %d' % (features.descriptor_dim, len(features))]
    lines.extend(_format_row(np.concatenate([frame, descriptor])) for frame, descriptor in zip(features.frames, features.descriptors))
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines))
        f.write('\n')
    _logger.trace('Wrote %s to %s', features, path)
