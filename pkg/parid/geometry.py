from .parid_logging import logging

import collections
import hashlib

import numpy as np
from scipy.spatial.distance import cdist

_logger = logging.getLogger(__name__)

MINIMAL_SAMPLE_SIZE = 4

_COINCIDENT_TOLERANCE  = 1e-12
_H33_TOLERANCE         = 1e-9
_RANK_TOLERANCE        = 1e-10
_MIN_TRIANGLE_AREA     = 1e-8
_MIN_ABS_DETERMINANT   = 1e-8
_HYPOTHESIS_BATCH      = 256
# bound on drawn samples, counting degenerate ones, relative to max_iters
_MAX_DRAW_FACTOR       = 10

RESIDUALS          = ('forward', 'symmetric')
OMEGA_DENOMINATORS = ('matches', 'points')


class DegenerateConfiguration(Exception):

    def __init__(self, reason):
        super(DegenerateConfiguration, self).__init__('Degenerate point configuration: %s' % reason)
        self.reason = reason


class GeometryParams(object):
    '''
    Matching and RANSAC settings for one geometric verification run. ``seed`` is the global
    seed from which every image pair derives its own RANSAC stream.
    '''

    def __init__(
            self,
            inlier_threshold=0.1,
            max_distance=0.9,
            mutual=True,
            ratio=None,
            confidence=0.99,
            max_iters=2000,
            residual='forward',
            omega_denominator='matches',
            seed=0):
        super(GeometryParams, self).__init__()
        if not inlier_threshold > 0:
            raise ValueError('inlier_threshold must be positive but got %r' % inlier_threshold)
        if not 0 <= max_distance <= 2:
            raise ValueError('max_distance must be in [0, 2] but got %r' % max_distance)
        if ratio is not None and not 0 < ratio <= 1:
            raise ValueError('ratio must be in (0, 1] but got %r' % ratio)
        if not 0 < confidence < 1:
            raise ValueError('confidence must be in (0, 1) but got %r' % confidence)
        if max_iters < 1:
            raise ValueError('max_iters must be positive but got %r' % max_iters)
        if residual not in RESIDUALS:
            raise ValueError('residual must be one of %s but got %r' % (RESIDUALS, residual))
        if omega_denominator not in OMEGA_DENOMINATORS:
            raise ValueError('omega_denominator must be one of %s but got %r' % (OMEGA_DENOMINATORS, omega_denominator))
        self.inlier_threshold  = float(inlier_threshold)
        self.max_distance      = float(max_distance)
        self.mutual            = bool(mutual)
        self.ratio             = ratio
        self.confidence        = float(confidence)
        self.max_iters         = int(max_iters)
        self.residual          = residual
        self.omega_denominator = omega_denominator
        self.seed              = int(seed)

    def key(self):
        return (self.inlier_threshold, self.max_distance, self.mutual, self.ratio, self.confidence,
                self.max_iters, self.residual, self.omega_denominator, self.seed)

    def __repr__(self):
        return 'GeometryParams(inlier_threshold=%r, max_distance=%r, mutual=%s, ratio=%r, residual=%s, omega_denominator=%s, seed=%d)' % (
            self.inlier_threshold, self.max_distance, self.mutual, self.ratio, self.residual, self.omega_denominator, self.seed)


Correspondence = collections.namedtuple('Correspondence', ('query_point', 'db_point', 'descriptor_distance', 'query_index', 'db_index'))


class NormalizationTransform(object):
    '''
    ``p' = (p - centroid) / scale``. ``degenerate`` marks point sets that collapse to one point.
    '''

    def __init__(self, centroid, scale, degenerate=False):
        super(NormalizationTransform, self).__init__()
        self.centroid   = np.asarray(centroid, dtype=np.float64)
        self.scale      = float(scale)
        self.degenerate = degenerate

    def matrix(self):
        s = 1.0 / self.scale
        return np.array([
            [s, 0., -s * self.centroid[0]],
            [0., s, -s * self.centroid[1]],
            [0., 0., 1.]])

    def inverse_matrix(self):
        return np.array([
            [self.scale, 0., self.centroid[0]],
            [0., self.scale, self.centroid[1]],
            [0., 0., 1.]])


def normalize_points(points):
    '''
    Shift ``points`` to zero mean and scale them so the farthest lies at distance 1.

    :return: ``(normalized points, NormalizationTransform)``
    '''
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if points.shape[0] == 0:
        raise ValueError('Cannot normalize an empty point set')
    centroid = points.mean(axis=0)
    centered = points - centroid
    scale    = np.sqrt((centered ** 2).sum(axis=1)).max()
    if scale < _COINCIDENT_TOLERANCE:
        return centered, NormalizationTransform(centroid, 1.0, degenerate=True)
    return centered / scale, NormalizationTransform(centroid, scale)


def _adjugate(matrices):
    # rows r0, r1, r2 -> columns r1 x r2, r2 x r0, r0 x r1
    r0, r1, r2 = matrices[..., 0, :], matrices[..., 1, :], matrices[..., 2, :]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-1)


def _project(matrices, points):
    '''
    Apply one (``3 x 3``) or many (``B x 3 x 3``) homographies to ``N x 2`` points. Points sent
    to infinity come back as ``inf``.
    '''
    homogeneous = np.concatenate([points, np.ones((points.shape[0], 1))], axis=1)
    mapped = np.matmul(matrices, homogeneous.T)
    w = mapped[..., 2, :]
    at_infinity = np.abs(w) < 1e-12
    w = np.where(at_infinity, 1.0, w)
    projected = mapped[..., :2, :] / w[..., np.newaxis, :]
    projected = np.where(at_infinity[..., np.newaxis, :], np.inf, projected)
    return np.swapaxes(projected, -1, -2)


class Homography(object):
    '''
    Projective map as a ``3 x 3`` matrix scaled to ``h33 = 1``, or to unit Frobenius norm
    (``at_infinity``) when ``h33`` vanishes.
    '''

    def __init__(self, matrix):
        super(Homography, self).__init__()
        matrix = np.asarray(matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(matrix)):
            raise ValueError('Homography entries must be finite')
        if abs(matrix[2, 2]) > _H33_TOLERANCE:
            self.matrix      = matrix / matrix[2, 2]
            self.at_infinity = False
        else:
            self.matrix      = matrix / np.linalg.norm(matrix)
            self.at_infinity = True

    def project(self, points):
        return _project(self.matrix, np.asarray(points, dtype=np.float64).reshape(-1, 2))

    def inverse(self):
        return Homography(_adjugate(self.matrix))

    def __repr__(self):
        return 'Homography(%s)' % np.array2string(self.matrix, precision=6).replace('\n', '')


class GeomVerdict(object):
    '''
    Outcome of geometric verification for one image pair: inlier count ``n``, inlier ratio
    ``omega``, the homography in normalized coordinates (``None`` when nothing could be
    estimated) and an inlier mask aligned with ``correspondences``.
    '''

    def __init__(self, n, omega, homography, inlier_mask, correspondences=(), query_transform=None, db_transform=None, iterations=0):
        super(GeomVerdict, self).__init__()
        self.n               = int(n)
        self.omega           = float(omega)
        self.homography      = homography
        self.inlier_mask     = np.asarray(inlier_mask, dtype=bool)
        self.correspondences = tuple(correspondences)
        self.query_transform = query_transform
        self.db_transform    = db_transform
        self.iterations      = iterations

    @staticmethod
    def empty(correspondences=()):
        return GeomVerdict(0, 0.0, None, np.zeros(len(correspondences), dtype=bool), correspondences)

    def pixel_homography(self):
        '''
        The estimate mapped back to the images' own coordinates (query to database).
        '''
        if self.homography is None or self.query_transform is None or self.db_transform is None:
            return None
        return Homography(self.db_transform.inverse_matrix() @ self.homography.matrix @ self.query_transform.matrix())

    def __repr__(self):
        return 'GeomVerdict(n=%d, omega=%.4f, correspondences=%d, homography=%s)' % (
            self.n, self.omega, len(self.inlier_mask), self.homography is not None)


def match_descriptors(query, db, max_distance=0.9, mutual=True, ratio=None):
    '''
    Nearest-neighbour matching of unit descriptors by cosine distance.

    A query descriptor is paired with its nearest database descriptor if the distance is at most
    ``max_distance`` and, with ``mutual``, the query descriptor is also the nearest to that
    database descriptor. ``ratio`` enables a Lowe ratio test on the equivalent Euclidean
    distances. Output is sorted by distance, then query index, then database index.
    '''
    if query.degenerate or db.degenerate:
        return []
    distances = np.clip(cdist(query.descriptors, db.descriptors, metric='cosine'), 0.0, 2.0)
    query_indices = np.arange(distances.shape[0])
    nearest       = np.argmin(distances, axis=1)
    best          = distances[query_indices, nearest]
    keep          = best <= max_distance
    if mutual:
        keep &= np.argmin(distances, axis=0)[nearest] == query_indices
    if ratio is not None and distances.shape[1] > 1:
        second = np.partition(distances, 1, axis=1)[:, 1]
        keep &= np.sqrt(2.0 * best) <= ratio * np.sqrt(2.0 * second)

    kept  = np.flatnonzero(keep)
    order = np.lexsort((nearest[kept], kept, best[kept]))
    query_points, db_points = query.points, db.points
    return [
        Correspondence(
            query_point         = tuple(query_points[q]),
            db_point            = tuple(db_points[nearest[q]]),
            descriptor_distance = float(best[q]),
            query_index         = int(q),
            db_index            = int(nearest[q]))
        for q in kept[order]]


def _dlt_system(source, target):
    x, y = source[..., 0], source[..., 1]
    u, v = target[..., 0], target[..., 1]
    zeros, ones = np.zeros_like(x), np.ones_like(x)
    first  = np.stack([x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u], axis=-1)
    second = np.stack([zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v], axis=-1)
    rows = np.stack([first, second], axis=-2)
    return rows.reshape(rows.shape[:-3] + (-1, 9))


def dlt_homography(source, target):
    '''
    Direct linear transform: least-squares homography mapping ``source`` onto ``target``
    (both ``N x 2``, ``N >= 4``, already normalized) from the smallest singular direction of
    the stacked system.

    :raises DegenerateConfiguration: fewer than four points or a rank-deficient system
    '''
    source = np.asarray(source, dtype=np.float64).reshape(-1, 2)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 2)
    if source.shape != target.shape:
        raise ValueError('Source and target must have the same shape but got %s and %s' % (source.shape, target.shape))
    if source.shape[0] < MINIMAL_SAMPLE_SIZE:
        raise DegenerateConfiguration('need at least %d correspondences but got %d' % (MINIMAL_SAMPLE_SIZE, source.shape[0]))
    _, singular_values, vt = np.linalg.svd(_dlt_system(source, target))
    rank = int(np.sum(singular_values > _RANK_TOLERANCE * singular_values[0]))
    if rank < 8:
        raise DegenerateConfiguration('DLT system has rank %d < 8' % rank)
    return Homography(vt[-1].reshape(3, 3))


def _triangle_areas(points):
    # points: B x 4 x 2, areas of the four triangles spanned by each triple
    areas = []
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        a, b, c = points[:, i], points[:, j], points[:, k]
        areas.append(0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])))
    return np.stack(areas, axis=1)


def _minimal_hypotheses(source, target):
    '''
    Exact homographies for a batch of 4-point samples (``B x 4 x 2`` each), solving the DLT
    system with ``h33 = 1``. Returns the ``B' x 3 x 3`` estimates and the indices of the
    samples they belong to; degenerate samples are dropped.
    '''
    usable = (_triangle_areas(source).min(axis=1) > _MIN_TRIANGLE_AREA) & (_triangle_areas(target).min(axis=1) > _MIN_TRIANGLE_AREA)
    indices = np.flatnonzero(usable)
    if indices.size == 0:
        return np.zeros((0, 3, 3)), indices
    system = _dlt_system(source[indices], target[indices])
    try:
        h = np.linalg.solve(system[..., :8], -system[..., 8, np.newaxis])[..., 0]
    except np.linalg.LinAlgError:
        solved, kept = [], []
        for row, index in zip(system, indices):
            try:
                solved.append(np.linalg.solve(row[:, :8], -row[:, 8, np.newaxis])[:, 0])
                kept.append(index)
            except np.linalg.LinAlgError:
                continue
        if not solved:
            return np.zeros((0, 3, 3)), np.zeros(0, dtype=int)
        h, indices = np.stack(solved), np.array(kept)
    matrices = np.concatenate([h, np.ones((h.shape[0], 1))], axis=1).reshape(-1, 3, 3)
    finite = np.all(np.isfinite(matrices), axis=(1, 2))
    finite &= np.abs(np.linalg.det(np.where(finite[:, np.newaxis, np.newaxis], matrices, 0.0))) > _MIN_ABS_DETERMINANT
    return matrices[finite], indices[finite]


def _residuals(matrices, source, target, residual):
    forward = np.linalg.norm(_project(matrices, source) - target, axis=-1)
    if residual == 'forward':
        return forward
    backward = np.linalg.norm(_project(_adjugate(matrices), target) - source, axis=-1)
    return np.sqrt(forward ** 2 + backward ** 2)


def _required_iterations(inlier_ratio, confidence, max_iters):
    if inlier_ratio <= 0:
        return max_iters
    all_inlier_probability = inlier_ratio ** MINIMAL_SAMPLE_SIZE
    if all_inlier_probability >= 1.0 - 1e-12:
        return 0
    return min(max_iters, int(np.ceil(np.log(1.0 - confidence) / np.log(1.0 - all_inlier_probability))))


def ransac_homography(source, target, inlier_threshold, seed, confidence=0.99, max_iters=2000, residual='forward'):
    '''
    Robust homography between two normalized point sets (``N x 2`` each, aligned rows).

    Minimal 4-point samples are drawn from a generator seeded with ``seed``; a correspondence
    is an inlier when its reprojection distance is below ``inlier_threshold``. The number of
    hypotheses adapts to the best inlier ratio so far and never exceeds ``max_iters``. The
    winning consensus set is refit with ``dlt_homography``.

    :param seed: anything ``numpy.random.default_rng`` accepts
    '''
    source = np.asarray(source, dtype=np.float64).reshape(-1, 2)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 2)
    total  = source.shape[0]
    if total < MINIMAL_SAMPLE_SIZE:
        return GeomVerdict(0, 0.0, None, np.zeros(total, dtype=bool))

    rng        = np.random.default_rng(seed)
    best_count = 0
    best_mask  = np.zeros(total, dtype=bool)
    best_H     = None
    required   = max_iters
    evaluated  = 0
    drawn      = 0
    while evaluated < required and drawn < _MAX_DRAW_FACTOR * max_iters:
        batch   = min(_HYPOTHESIS_BATCH, required - evaluated)
        samples = np.argsort(rng.random((batch, total)), axis=1)[:, :MINIMAL_SAMPLE_SIZE]
        drawn  += batch
        matrices, _ = _minimal_hypotheses(source[samples], target[samples])
        if matrices.shape[0] == 0:
            continue
        matrices   = matrices[:required - evaluated]
        evaluated += matrices.shape[0]
        inliers    = _residuals(matrices, source, target, residual) < inlier_threshold
        counts     = inliers.sum(axis=1)
        winner     = int(np.argmax(counts))
        if counts[winner] > best_count:
            best_count = int(counts[winner])
            best_mask  = inliers[winner]
            best_H     = matrices[winner]
            required   = max(evaluated, _required_iterations(best_count / total, confidence, max_iters))

    if best_H is None:
        _logger.trace('No non-degenerate sample among %d draws', drawn)
        return GeomVerdict(0, 0.0, None, np.zeros(total, dtype=bool), iterations=evaluated)

    try:
        refit      = dlt_homography(source[best_mask], target[best_mask])
        refit_mask = _residuals(refit.matrix, source, target, residual) < inlier_threshold
        if refit_mask.sum() >= best_count:
            best_H, best_mask = refit.matrix, refit_mask
    except DegenerateConfiguration as e:
        _logger.trace('Keeping minimal-sample estimate: %s', e)

    n = int(best_mask.sum())
    return GeomVerdict(n, n / max(1, total), Homography(best_H), best_mask, iterations=evaluated)


def pair_seed(seed, query_id, db_id):
    '''
    Seed sequence for the RANSAC stream of one (query, database) image pair.
    '''
    digest = hashlib.sha256(('%s\x00%s' % (query_id, db_id)).encode('utf-8')).digest()
    return np.random.SeedSequence([int(seed), int.from_bytes(digest[:8], 'big'), int.from_bytes(digest[8:16], 'big')])


def geometric_similarity(query, db, params):
    '''
    Match descriptors, normalize each side's matched coordinates and run RANSAC.
    '''
    correspondences = match_descriptors(query, db, max_distance=params.max_distance, mutual=params.mutual, ratio=params.ratio)
    if len(correspondences) < MINIMAL_SAMPLE_SIZE:
        _logger.trace('%s vs %s: only %d correspondences', query.image_id, db.image_id, len(correspondences))
        return GeomVerdict.empty(correspondences)

    query_points, query_transform = normalize_points([c.query_point for c in correspondences])
    db_points, db_transform       = normalize_points([c.db_point for c in correspondences])
    verdict = ransac_homography(
        query_points,
        db_points,
        inlier_threshold = params.inlier_threshold,
        seed             = pair_seed(params.seed, query.image_id, db.image_id),
        confidence       = params.confidence,
        max_iters        = params.max_iters,
        residual         = params.residual)

    denominator = len(correspondences) if params.omega_denominator == 'matches' else len(query)
    verdict = GeomVerdict(
        n               = verdict.n,
        omega           = verdict.n / max(1, denominator) if verdict.homography is not None else 0.0,
        homography      = verdict.homography,
        inlier_mask     = verdict.inlier_mask,
        correspondences = correspondences,
        query_transform = query_transform,
        db_transform    = db_transform,
        iterations      = verdict.iterations)
    _logger.debug('%s vs %s: %s after %d hypotheses', query.image_id, db.image_id, verdict, verdict.iterations)
    return verdict


def write_match_dump(verdict, path):
    '''
    One line per correspondence, ``qx qy dbx dby distance inlier``, for plotting inliers and
    outliers on the image pair.
    '''
    with open(path, 'w', encoding='utf-8') as f:
        f.write('# n=%d omega=%r\n' % (verdict.n, verdict.omega))
        f.write('# qx qy dbx dby distance inlier\n')
        for correspondence, inlier in zip(verdict.correspondences, verdict.inlier_mask):
            f.write('%r %r %r %r %r %d\n' % (
                float(correspondence.query_point[0]), float(correspondence.query_point[1]),
                float(correspondence.db_point[0]), float(correspondence.db_point[1]),
                correspondence.descriptor_distance, int(inlier)))
