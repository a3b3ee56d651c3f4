from .parid_logging import logging

import collections

import numpy as np

from .embedding import Embedding
from .kpca import apply_kpca
from .pca import DimensionMismatch, apply_pca
from .version_info import _version

_logger = logging.getLogger(__name__)

_EMBEDDING_MAGIC   = 'PARID-EMBEDDINGS'
DEGENERATE_DISTANCE = 2.0


class EmbeddingStoreError(Exception):

    def __init__(self, path, reason, line_number=None):
        location = path if line_number is None else '%s:%d' % (path, line_number)
        super(EmbeddingStoreError, self).__init__('%s: %s' % (location, reason))
        self.path        = path
        self.reason      = reason
        self.line_number = line_number


def fisher_vector(x, gmm):
    '''
    Mean and variance gradient blocks of the average log-likelihood of ``x`` (``T x D``)
    under ``gmm``, scaled by ``1 / (T sqrt(pi_k))`` and ``1 / (T sqrt(2 pi_k))``. The result
    is laid out component by component, ``[G_mu_1, G_sigma_1, ..., G_mu_K, G_sigma_K]``,
    and has length ``2 K D``.
    '''
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != gmm.dim:
        raise DimensionMismatch(gmm.dim, x.shape[1], 'PCA-projected descriptor')
    # canonical row order makes the sums independent of the input order
    x = x[np.lexsort(x.T[::-1])]
    t = x.shape[0]

    gamma = gmm.posteriors(x)
    sigma = np.sqrt(gmm.variances)
    standardized = (x[:, np.newaxis, :] - gmm.means[np.newaxis]) / sigma[np.newaxis]

    mean_block     = np.einsum('tk,tkd->kd', gamma, standardized)
    variance_block = np.einsum('tk,tkd->kd', gamma, standardized * standardized - 1.0)
    mean_block     /= (t * np.sqrt(gmm.weights))[:, np.newaxis]
    variance_block /= (t * np.sqrt(2.0 * gmm.weights))[:, np.newaxis]
    return np.concatenate([mean_block, variance_block], axis=1).ravel()


def fisher_encode(features, pca, gmm):
    '''
    Fisher vector of an image's descriptors after PCA. Returns ``None`` for an image without
    features so the caller can mark it degenerate.
    '''
    if features.degenerate:
        _logger.debug('No features to encode for image %s', features.image_id)
        return None
    return fisher_vector(apply_pca(pca, features.descriptors), gmm)


def power_l2_normalize(v, alpha=0.5):
    '''
    Signed power ``sign(z) |z|^alpha`` followed by L2 normalization. A zero vector stays zero.
    '''
    v = np.asarray(v, dtype=np.float64)
    powered = np.sign(v) * np.abs(v) ** alpha
    norm = np.linalg.norm(powered)
    if norm == 0:
        return powered
    return powered / norm


def embed_image(features, vocab):
    '''
    Full appearance encoding: PCA, Fisher vector, power and L2 normalization, kernel PCA,
    unit normalization.
    '''
    if features.descriptor_dim != vocab.descriptor_dim:
        raise DimensionMismatch(vocab.descriptor_dim, features.descriptor_dim, 'descriptor of image %s' % features.image_id)
    encoded = fisher_encode(features, vocab.pca, vocab.gmm)
    if encoded is None:
        return Embedding.degenerate_of(vocab.kpca.output_dim)
    normalized = power_l2_normalize(encoded, alpha=vocab.alpha)
    if not np.any(normalized):
        return Embedding.degenerate_of(vocab.kpca.output_dim)
    embedding = apply_kpca(vocab.kpca, normalized)
    _logger.trace('Embedded image %s: %s', features.image_id, embedding)
    return embedding


def cosine_distance(a, b):
    '''
    ``1 - a.b / (|a| |b|)``, in ``[0, 2]``. Any degenerate operand gives the maximal distance 2.
    '''
    if a.dim != b.dim:
        raise DimensionMismatch(a.dim, b.dim, 'embedding')
    if a.degenerate or b.degenerate:
        return DEGENERATE_DISTANCE
    similarity = np.dot(a.values, b.values) / (np.linalg.norm(a.values) * np.linalg.norm(b.values))
    return float(min(max(1.0 - similarity, 0.0), 2.0))


def write_embeddings(embeddings, path):
    '''
    :param embeddings: iterable of ``(image_id, Embedding)`` pairs, written in order
    '''
    with open(path, 'w', encoding='utf-8') as f:
        f.write('%s %d\n' % (_EMBEDDING_MAGIC, _version.format_version('embeddings')))
        for image_id, embedding in embeddings:
            f.write('%s %d %s\n' % (image_id, embedding.dim, ' '.join(repr(float(v)) for v in embedding.values)))


def read_embeddings(path):
    '''
    :return: ``OrderedDict`` from image id to ``Embedding``; all-zero rows are degenerate
    '''
    embeddings = collections.OrderedDict()
    with open(path, 'r', encoding='utf-8') as f:
        lines = f.read().splitlines()
    expected = '%s %d' % (_EMBEDDING_MAGIC, _version.format_version('embeddings'))
    if not lines or lines[0].strip() != expected:
        raise EmbeddingStoreError(path, 'expected header `%s\'' % expected, line_number=1)
    for line_number, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        try:
            dim    = int(tokens[1])
            values = np.array([float(t) for t in tokens[2:]])
        except (IndexError, ValueError) as e:
            raise EmbeddingStoreError(path, 'malformed row: %s' % e, line_number=line_number)
        if values.shape[0] != dim:
            raise EmbeddingStoreError(path, 'declared dimension %d but found %d values' % (dim, values.shape[0]), line_number=line_number)
        if tokens[0] in embeddings:
            raise EmbeddingStoreError(path, 'duplicate image id `%s\'' % tokens[0], line_number=line_number)
        embeddings[tokens[0]] = Embedding(values, degenerate=not np.any(values))
    return embeddings
