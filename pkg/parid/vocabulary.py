from .parid_logging import logging

import numpy as np

from .encode import fisher_encode, power_l2_normalize
from .gmm import Gmm, fit_gmm
from .kpca import KpcaModel, fit_kpca
from .pca import DimensionMismatch, InsufficientData, PcaModel, fit_pca
from .version_info import _version

_logger = logging.getLogger(__name__)

_MAGIC = 'PARID-VOCABULARY'

DEFAULT_GMM_COMPONENTS = 16
DEFAULT_PCA_DIM        = 64
DEFAULT_KPCA_DIM       = 512
DEFAULT_ALPHA          = 0.5


class VocabularyFormatError(Exception):

    def __init__(self, path, reason, line_number=None):
        location = path if line_number is None else '%s:%d' % (path, line_number)
        super(VocabularyFormatError, self).__init__('%s: %s' % (location, reason))
        self.path        = path
        self.reason      = reason
        self.line_number = line_number


class Vocabulary(object):
    '''
    Trained appearance encoder: PCA decorrelation, GMM visual vocabulary and kernel PCA
    compressor, plus the power-normalization exponent used between GMM and kernel PCA.
    Immutable once built; embeddings are only comparable within one vocabulary.
    '''

    def __init__(self, pca, gmm, kpca, alpha=DEFAULT_ALPHA, version=None):
        super(Vocabulary, self).__init__()
        if gmm.dim != pca.output_dim:
            raise DimensionMismatch(pca.output_dim, gmm.dim, 'GMM dimension')
        if kpca.input_dim != 2 * gmm.n_components * gmm.dim:
            raise DimensionMismatch(2 * gmm.n_components * gmm.dim, kpca.input_dim, 'kernel PCA input dimension')
        self.pca     = pca
        self.gmm     = gmm
        self.kpca    = kpca
        self.alpha   = float(alpha)
        self.version = _version.format_version('vocabulary') if version is None else version

    @property
    def descriptor_dim(self):
        return self.pca.input_dim

    @property
    def fisher_dim(self):
        return self.kpca.input_dim

    @property
    def embedding_dim(self):
        return self.kpca.output_dim

    def __repr__(self):
        return 'Vocabulary(D_raw=%d, D_pca=%d, K=%d, F=%d, D_kpca=%d, alpha=%r)' % (
            self.descriptor_dim, self.pca.output_dim, self.gmm.n_components, self.fisher_dim, self.embedding_dim, self.alpha)


def default_kpca_dim(n_training):
    return max(1, min(n_training - 1, DEFAULT_KPCA_DIM))


def build_vocabulary(
        training_features,
        pca_dim=DEFAULT_PCA_DIM,
        gmm_components=DEFAULT_GMM_COMPONENTS,
        kpca_dim=None,
        whiten=True,
        alpha=DEFAULT_ALPHA,
        seed=0,
        max_iters=200,
        tol=1e-6):
    '''
    Train the full encoder on the images in ``training_features``: PCA on the pooled
    descriptors, GMM on their projections, then kernel PCA on the normalized Fisher vectors
    of the training images.

    :param training_features: sequence of ``ImageFeatures``; images without features are skipped
    :param kpca_dim: defaults to ``min(N - 1, 512)`` for ``N`` usable training images
    :raises InsufficientData: too few descriptors or images for the requested sizes
    '''
    usable = [f for f in training_features if not f.degenerate]
    if len(usable) < 2:
        raise InsufficientData(2, len(usable), 'training images with features')
    dims = {f.descriptor_dim for f in usable}
    if len(dims) != 1:
        raise DimensionMismatch(min(dims), max(dims), 'descriptor (training images disagree)')

    descriptors = np.concatenate([f.descriptors for f in usable], axis=0)
    _logger.info('Training vocabulary on %d descriptors from %d images', descriptors.shape[0], len(usable))

    pca = fit_pca(descriptors, out_dim=pca_dim, whiten=whiten)
    gmm = fit_gmm(pca.transform(descriptors), gmm_components, seed=seed, max_iters=max_iters, tol=tol)
    _logger.info('GMM with %d components after %d EM evaluations (converged=%s)', gmm.n_components, len(gmm.log_likelihoods), gmm.converged)

    fisher_vectors = np.stack([power_l2_normalize(fisher_encode(f, pca, gmm), alpha=alpha) for f in usable])
    kpca = fit_kpca(fisher_vectors, default_kpca_dim(len(usable)) if kpca_dim is None else kpca_dim)

    vocab = Vocabulary(pca=pca, gmm=gmm, kpca=kpca, alpha=alpha)
    _logger.info('Trained %s', vocab)
    return vocab


def _format(values):
    return ' '.join(repr(float(v)) for v in np.ravel(values))


def save_vocabulary(vocab, path):
    '''
    Write ``vocab`` as text: a version header and ``[PCA]``, ``[GMM]``, ``[KPCA]`` sections of
    ``key values...`` lines. Floats use ``repr`` so loading reproduces them exactly.
    '''
    pca, gmm, kpca = vocab.pca, vocab.gmm, vocab.kpca
    lines = [
        '%s %d' % (_MAGIC, vocab.version),
        'descriptor_dim %d' % vocab.descriptor_dim,
        'alpha %s' % repr(vocab.alpha),
        '[PCA]',
        'whiten %d' % int(pca.whiten),
        'shape %d %d' % (pca.output_dim, pca.input_dim),
        'mean %s' % _format(pca.mean),
        'eigenvalues %s' % _format(pca.eigenvalues)]
    lines.extend('basis %s' % _format(row) for row in pca.basis)
    lines.extend([
        '[GMM]',
        'shape %d %d' % (gmm.n_components, gmm.dim),
        'converged %d' % int(gmm.converged),
        'log_likelihoods %s' % _format(gmm.log_likelihoods),
        'weights %s' % _format(gmm.weights)])
    lines.extend('means %s' % _format(row) for row in gmm.means)
    lines.extend('variances %s' % _format(row) for row in gmm.variances)
    lines.extend([
        '[KPCA]',
        'kernel %s' % kpca.kernel,
        'shape %d %d %d' % (kpca.n_training, kpca.input_dim, kpca.output_dim),
        'requested_dim %d' % kpca.requested_dim,
        'eigenvalues %s' % _format(kpca.eigenvalues)])
    lines.extend('training_vector %s' % _format(row) for row in kpca.training_vectors)
    lines.extend('alphas %s' % _format(row) for row in kpca.alphas)
    lines.append('[END]')
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines))
        f.write('\n')
    _logger.debug('Saved %s to %s', vocab, path)


class _SectionReader(object):

    def __init__(self, path, lines):
        super(_SectionReader, self).__init__()
        self.path     = path
        self.lines    = lines
        self.position = 0

    def error(self, reason):
        return VocabularyFormatError(self.path, reason, line_number=self.position + 1)

    def expect_section(self, name):
        if self.position >= len(self.lines) or self.lines[self.position].strip() != '[%s]' % name:
            raise self.error('expected section [%s]' % name)
        self.position += 1

    def values(self, key, count=None):
        if self.position >= len(self.lines):
            raise self.error('unexpected end of file, expected `%s\'' % key)
        tokens = self.lines[self.position].split()
        if not tokens or tokens[0] != key:
            raise self.error('expected `%s\' but found `%s\'' % (key, tokens[0] if tokens else ''))
        try:
            values = np.array([float(t) for t in tokens[1:]], dtype=np.float64)
        except ValueError as e:
            raise self.error('malformed values for `%s\': %s' % (key, e))
        if count is not None and values.shape[0] != count:
            raise self.error('expected %d values for `%s\' but got %d' % (count, key, values.shape[0]))
        self.position += 1
        return values

    def word(self, key):
        tokens = self.lines[self.position].split() if self.position < len(self.lines) else []
        if len(tokens) != 2 or tokens[0] != key:
            raise self.error('expected `%s <value>\'' % key)
        self.position += 1
        return tokens[1]

    def integers(self, key, count):
        values = self.values(key, count)
        if np.any(values < 0) or np.any(values != np.round(values)):
            raise self.error('expected non-negative integers for `%s\'' % key)
        return [int(v) for v in values]

    def rows(self, key, n_rows, n_columns):
        return np.stack([self.values(key, n_columns) for _ in range(n_rows)]) if n_rows > 0 else np.zeros((0, n_columns))

    def build(self, model_type, **parameters):
        # reports the line after the section that was just read
        try:
            return model_type(**parameters)
        except (ValueError, DimensionMismatch) as e:
            raise self.error('inconsistent %s: %s' % (model_type.__name__, e))


def load_vocabulary(path):
    '''
    :raises VocabularyFormatError: wrong header, version, section layout or sizes, or values
        the models reject
    '''
    with open(path, 'r', encoding='utf-8') as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    reader = _SectionReader(path, lines)

    header = lines[0].split() if lines else []
    if len(header) != 2 or header[0] != _MAGIC:
        raise reader.error('expected header `%s <version>\'' % _MAGIC)
    if header[1] != str(_version.format_version('vocabulary')):
        raise reader.error('unsupported vocabulary format version `%s\'' % header[1])
    reader.position = 1

    descriptor_dim, = reader.integers('descriptor_dim', 1)
    alpha, = reader.values('alpha', 1)

    reader.expect_section('PCA')
    whiten, = reader.integers('whiten', 1)
    pca_out, pca_in = reader.integers('shape', 2)
    if pca_in != descriptor_dim:
        raise reader.error('PCA input dimension %d differs from descriptor dimension %d' % (pca_in, descriptor_dim))
    pca = reader.build(
        PcaModel,
        mean        = reader.values('mean', pca_in),
        eigenvalues = reader.values('eigenvalues', pca_out),
        basis       = reader.rows('basis', pca_out, pca_in),
        whiten      = bool(whiten))

    reader.expect_section('GMM')
    n_components, gmm_dim = reader.integers('shape', 2)
    converged, = reader.integers('converged', 1)
    log_likelihoods = reader.values('log_likelihoods')
    gmm = reader.build(
        Gmm,
        weights         = reader.values('weights', n_components),
        means           = reader.rows('means', n_components, gmm_dim),
        variances       = reader.rows('variances', n_components, gmm_dim),
        log_likelihoods = log_likelihoods,
        converged       = bool(converged))

    reader.expect_section('KPCA')
    kernel = reader.word('kernel')
    if kernel != KpcaModel.kernel:
        raise reader.error('unsupported kernel `%s\'' % kernel)
    n_training, fisher_dim, kpca_out = reader.integers('shape', 3)
    requested_dim, = reader.integers('requested_dim', 1)
    eigenvalues      = reader.values('eigenvalues', kpca_out)
    training_vectors = reader.rows('training_vector', n_training, fisher_dim)
    alphas           = reader.rows('alphas', n_training, kpca_out)
    kpca = reader.build(KpcaModel, training_vectors=training_vectors, alphas=alphas, eigenvalues=eigenvalues, requested_dim=requested_dim)
    reader.expect_section('END')

    vocab = reader.build(Vocabulary, pca=pca, gmm=gmm, kpca=kpca, alpha=alpha, version=int(header[1]))
    _logger.debug('Loaded %s from %s', vocab, path)
    return vocab
