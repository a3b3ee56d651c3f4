from .parid_logging import logging

import warnings

import numpy as np
import scipy.linalg
from sklearn.preprocessing import KernelCenterer

from .embedding import Embedding
from .pca import DimensionMismatch, InsufficientData, sign_normalize_rows

_logger = logging.getLogger(__name__)

# eigenvalues below this fraction of the largest count as zero
_RELATIVE_EIGENVALUE_TOLERANCE = 1e-10


class RankDeficiencyWarning(UserWarning):
    pass


class KpcaModel(object):
    '''
    Kernel PCA with the dot-product kernel. Stores the training vectors, the coefficient
    matrix ``alphas`` (``N x d``, eigenvector columns scaled by ``1 / sqrt(lambda)``) and the
    centering statistics of the training Gram matrix.
    '''

    kernel = 'dot'

    def __init__(self, training_vectors, alphas, eigenvalues, requested_dim=None):
        super(KpcaModel, self).__init__()
        training_vectors = np.ascontiguousarray(training_vectors, dtype=np.float64)
        alphas           = np.ascontiguousarray(alphas, dtype=np.float64)
        eigenvalues      = np.ascontiguousarray(eigenvalues, dtype=np.float64)
        if alphas.shape != (training_vectors.shape[0], eigenvalues.shape[0]):
            raise DimensionMismatch((training_vectors.shape[0], eigenvalues.shape[0]), alphas.shape, 'kernel PCA coefficients')
        self.training_vectors = training_vectors
        self.alphas           = alphas
        self.eigenvalues      = eigenvalues
        self.requested_dim    = eigenvalues.shape[0] if requested_dim is None else requested_dim
        self.centerer         = KernelCenterer().fit(self.kernel_rows(training_vectors))

    @property
    def input_dim(self):
        return self.training_vectors.shape[1]

    @property
    def output_dim(self):
        return self.alphas.shape[1]

    @property
    def n_training(self):
        return self.training_vectors.shape[0]

    def kernel_rows(self, vectors):
        return np.atleast_2d(vectors) @ self.training_vectors.T

    def project(self, vectors):
        '''
        Unnormalized kernel PCA coordinates of ``vectors`` (``n x F``), shape ``n x d``.
        '''
        vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        if vectors.shape[1] != self.input_dim:
            raise DimensionMismatch(self.input_dim, vectors.shape[1], 'Fisher vector')
        centered = self.centerer.transform(self.kernel_rows(vectors))
        return centered @ self.alphas

    def training_coordinates(self):
        return self.project(self.training_vectors)

    def __repr__(self):
        return 'KpcaModel(N=%d, F=%d, d=%d, requested=%d)' % (self.n_training, self.input_dim, self.output_dim, self.requested_dim)


def fit_kpca(fisher_vectors, out_dim):
    '''
    Fit kernel PCA on the rows of ``fisher_vectors``.

    Only eigenpairs with positive eigenvalues are kept; when fewer than ``out_dim`` remain the
    model is smaller than requested and a ``RankDeficiencyWarning`` is issued.

    :raises InsufficientData: fewer than two vectors, or a Gram matrix without positive eigenvalues
    '''
    X = np.asarray(fisher_vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError('Kernel PCA training data must be a 2-D array but got shape %s' % (X.shape,))
    n = X.shape[0]
    if n < 2:
        raise InsufficientData(2, n, 'vectors for kernel PCA')
    if out_dim < 1:
        raise ValueError('Kernel PCA output dimension must be positive but got %d' % out_dim)

    gram     = X @ X.T
    centered = KernelCenterer().fit_transform(gram)
    centered = 0.5 * (centered + centered.T)
    eigenvalues, eigenvectors = scipy.linalg.eigh(centered)
    order       = np.argsort(eigenvalues, kind='stable')[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    if eigenvalues[0] <= 0:
        raise InsufficientData(1, 0, 'positive kernel eigenvalues (all training vectors coincide)')
    n_positive = int(np.sum(eigenvalues > _RELATIVE_EIGENVALUE_TOLERANCE * eigenvalues[0]))
    kept       = min(out_dim, n_positive, n - 1)
    if kept < out_dim:
        message = 'Kernel PCA reduced from %d to %d dimensions (%d training vectors, %d positive eigenvalues)' % (out_dim, kept, n, n_positive)
        _logger.warning(message)
        warnings.warn(message, RankDeficiencyWarning)

    eigenvalues  = eigenvalues[:kept]
    eigenvectors = sign_normalize_rows(eigenvectors[:, :kept].T).T
    alphas       = eigenvectors / np.sqrt(eigenvalues)

    model = KpcaModel(training_vectors=X, alphas=alphas, eigenvalues=eigenvalues, requested_dim=out_dim)
    _logger.debug('Fitted %s', model)
    return model


def apply_kpca(model, fisher_vector):
    '''
    Project one Fisher vector and scale the result to unit length. A projection that is
    exactly zero yields a degenerate embedding.
    '''
    fisher_vector = np.asarray(fisher_vector, dtype=np.float64)
    if fisher_vector.ndim != 1:
        raise DimensionMismatch(model.input_dim, fisher_vector.shape, 'Fisher vector')
    return Embedding.from_vector(model.project(fisher_vector)[0])
