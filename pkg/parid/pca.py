from .parid_logging import logging

import numpy as np
import scipy.linalg

_logger = logging.getLogger(__name__)

_WHITEN_FLOOR = 1e-12


class DimensionMismatch(Exception):

    def __init__(self, expected, actual, what='vector'):
        super(DimensionMismatch, self).__init__('Expected %s of dimension %s but got %s' % (what, expected, actual))
        self.expected = expected
        self.actual   = actual
        self.what     = what


class InsufficientData(Exception):

    def __init__(self, required, actual, what):
        super(InsufficientData, self).__init__('Need at least %s %s but got %s' % (required, what, actual))
        self.required = required
        self.actual   = actual
        self.what     = what


def sign_normalize_rows(rows):
    '''
    Flip each row so that its entry of largest magnitude is positive.
    '''
    rows    = np.array(rows, dtype=np.float64)
    if rows.size == 0:
        return rows
    largest = np.argmax(np.abs(rows), axis=1)
    signs   = np.sign(rows[np.arange(rows.shape[0]), largest])
    signs[signs == 0] = 1.0
    return rows * signs[:, np.newaxis]


class PcaModel(object):

    def __init__(self, mean, basis, eigenvalues, whiten):
        super(PcaModel, self).__init__()
        mean        = np.ascontiguousarray(mean, dtype=np.float64)
        basis       = np.ascontiguousarray(basis, dtype=np.float64)
        eigenvalues = np.ascontiguousarray(eigenvalues, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[1] != mean.shape[0]:
            raise DimensionMismatch(mean.shape[0], basis.shape, 'PCA basis columns')
        if eigenvalues.shape != (basis.shape[0],):
            raise DimensionMismatch(basis.shape[0], eigenvalues.shape, 'PCA eigenvalues')
        self.mean        = mean
        self.basis       = basis
        self.eigenvalues = eigenvalues
        self.whiten      = bool(whiten)

    @property
    def input_dim(self):
        return self.mean.shape[0]

    @property
    def output_dim(self):
        return self.basis.shape[0]

    def transform(self, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.shape[-1] != self.input_dim:
            raise DimensionMismatch(self.input_dim, vectors.shape[-1], 'descriptor')
        projected = (vectors - self.mean) @ self.basis.T
        if self.whiten:
            projected = projected / np.sqrt(np.maximum(self.eigenvalues, _WHITEN_FLOOR))
        return projected

    def __repr__(self):
        return 'PcaModel(%d -> %d, whiten=%s)' % (self.input_dim, self.output_dim, self.whiten)


def fit_pca(descriptors, out_dim, whiten=True):
    '''
    Principal axes of the biased sample covariance (divided by N), strongest first.

    :param descriptors: ``N x D`` array
    :param out_dim: number of retained axes, at most ``D``
    :param whiten: scale projections to unit variance in ``apply_pca``
    :raises InsufficientData: when ``N < out_dim + 1``
    '''
    X = np.asarray(descriptors, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError('Descriptors must be a 2-D array but got shape %s' % (X.shape,))
    n, dim = X.shape
    if out_dim < 1 or out_dim > dim:
        raise ValueError('PCA output dimension must be in [1, %d] but got %d' % (dim, out_dim))
    if n < out_dim + 1:
        raise InsufficientData(out_dim + 1, n, 'descriptors for PCA')

    mean     = X.mean(axis=0)
    centered = X - mean
    covariance = centered.T @ centered / n
    eigenvalues, eigenvectors = scipy.linalg.eigh(covariance)
    order       = np.argsort(eigenvalues, kind='stable')[::-1][:out_dim]
    eigenvalues = np.maximum(eigenvalues[order], 0.0)
    basis       = sign_normalize_rows(eigenvectors[:, order].T)

    model = PcaModel(mean=mean, basis=basis, eigenvalues=eigenvalues, whiten=whiten)
    _logger.debug('Fitted %s on %d descriptors, retained variance %.4f', model, n, eigenvalues.sum() / max(np.trace(covariance), np.finfo(float).tiny))
    return model


def apply_pca(model, descriptor):
    '''
    ``y = basis (x - mean)``, divided by the root eigenvalues when the model whitens.
    Accepts a single vector or an ``N x D`` batch.
    '''
    return model.transform(descriptor)
