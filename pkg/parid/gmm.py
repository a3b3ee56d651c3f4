from .parid_logging import logging

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from .pca import DimensionMismatch, InsufficientData

_logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-6
_LOG_2PI       = np.log(2.0 * np.pi)
# keeps empty components alive with a vanishing weight
_EMPTY_MASS    = 10.0 * np.finfo(np.float64).eps
_CHUNK_ROWS    = 4096


class Gmm(object):
    '''
    Mixture of ``K`` diagonal-covariance Gaussians: weights ``pi_k``, means ``mu_k`` and
    variances ``sigma_k^2`` (both ``K x D``).
    '''

    def __init__(self, weights, means, variances, log_likelihoods=(), converged=False):
        super(Gmm, self).__init__()
        weights   = np.ascontiguousarray(weights, dtype=np.float64)
        means     = np.ascontiguousarray(means, dtype=np.float64)
        variances = np.ascontiguousarray(variances, dtype=np.float64)
        if means.ndim != 2 or means.shape != variances.shape or weights.shape != (means.shape[0],):
            raise DimensionMismatch((weights.shape, means.shape), variances.shape, 'GMM parameter')
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError('GMM weights must be positive and sum to one but got %s' % weights)
        if np.any(variances <= 0):
            raise ValueError('GMM variances must be positive')
        self.weights         = weights
        self.means           = means
        self.variances       = variances
        self.log_likelihoods = tuple(log_likelihoods)
        self.converged       = converged

    @property
    def n_components(self):
        return self.means.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    def _check(self, X):
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(self.dim, X.shape[-1], 'GMM input')

    def log_weighted_densities(self, X):
        '''
        ``log pi_k + log N(x; mu_k, sigma_k)`` for every row of ``X``, shape ``N x K``.
        '''
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self._check(X)
        log_norm = -0.5 * (self.dim * _LOG_2PI + np.log(self.variances).sum(axis=1)) + np.log(self.weights)
        out = np.empty((X.shape[0], self.n_components))
        for start in range(0, X.shape[0], _CHUNK_ROWS):
            chunk = X[start:start + _CHUNK_ROWS]
            diff  = chunk[:, np.newaxis, :] - self.means[np.newaxis]
            out[start:start + _CHUNK_ROWS] = log_norm - 0.5 * np.sum(diff * diff / self.variances[np.newaxis], axis=2)
        return out

    def log_responsibilities(self, X):
        weighted = self.log_weighted_densities(X)
        log_evidence = logsumexp(weighted, axis=1)
        return weighted - log_evidence[:, np.newaxis], log_evidence

    def posteriors(self, X):
        log_resp, _ = self.log_responsibilities(X)
        return np.exp(log_resp)

    def average_log_likelihood(self, X):
        _, log_evidence = self.log_responsibilities(X)
        return float(log_evidence.mean())

    def __repr__(self):
        return 'Gmm(K=%d, D=%d, converged=%s, iterations=%d)' % (self.n_components, self.dim, self.converged, len(self.log_likelihoods))


def gmm_posteriors(gmm, x):
    '''
    Soft assignment ``gamma(k)`` of ``x`` to every component, computed in the log domain.
    Returns a ``K`` vector for a single input and ``N x K`` for a batch.
    '''
    x = np.asarray(x, dtype=np.float64)
    posteriors = gmm.posteriors(x)
    return posteriors[0] if x.ndim == 1 else posteriors


def _m_step(X, responsibilities, fallback_means=None):
    mass    = responsibilities.sum(axis=0) + _EMPTY_MASS
    weights = mass / mass.sum()
    means   = (responsibilities.T @ X) / mass[:, np.newaxis]
    if fallback_means is not None:
        empty = responsibilities.sum(axis=0) == 0
        means[empty] = fallback_means[empty]
    variances = np.empty_like(means)
    for k in range(means.shape[0]):
        diff = X - means[k]
        variances[k] = responsibilities[:, k] @ (diff * diff) / mass[k]
    np.maximum(variances, VARIANCE_FLOOR, out=variances)
    return weights, means, variances


def _initialize(X, n_components, seed):
    centers, _ = kmeans_plusplus(X, n_clusters=n_components, random_state=seed)
    distances  = ((X[:, np.newaxis, :] - centers[np.newaxis]) ** 2).sum(axis=2)
    labels     = np.argmin(distances, axis=1)
    hard       = np.zeros((X.shape[0], n_components))
    hard[np.arange(X.shape[0]), labels] = 1.0
    return _m_step(X, hard, fallback_means=centers)


def fit_gmm(vectors, n_components, seed=0, max_iters=200, tol=1e-6):
    '''
    Expectation maximization for a diagonal-covariance mixture, seeded with k-means++.

    Stops once the average log-likelihood improves by less than ``tol`` or after
    ``max_iters`` iterations. Variances are floored at ``VARIANCE_FLOOR``.

    :raises InsufficientData: when there are fewer vectors than components
    '''
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError('GMM training data must be a 2-D array but got shape %s' % (X.shape,))
    if n_components < 1:
        raise ValueError('Number of GMM components must be positive but got %d' % n_components)
    if X.shape[0] < n_components:
        raise InsufficientData(n_components, X.shape[0], 'vectors for a GMM with %d components' % n_components)

    weights, means, variances = _initialize(X, n_components, seed)
    history   = []
    converged = False
    for iteration in range(max_iters):
        gmm = Gmm(weights, means, variances)
        log_resp, log_evidence = gmm.log_responsibilities(X)
        log_likelihood = float(log_evidence.mean())
        _logger.trace('EM iteration %d: average log-likelihood %r', iteration, log_likelihood)
        if history and log_likelihood - history[-1] < tol:
            history.append(log_likelihood)
            converged = True
            break
        history.append(log_likelihood)
        weights, means, variances = _m_step(X, np.exp(log_resp))

    if not converged:
        history.append(Gmm(weights, means, variances).average_log_likelihood(X))

    gmm = Gmm(weights, means, variances, log_likelihoods=history, converged=converged)
    _logger.debug('Fitted %s on %d vectors, final average log-likelihood %.6f', gmm, X.shape[0], history[-1])
    return gmm
