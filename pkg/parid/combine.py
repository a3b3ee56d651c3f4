import numpy as np

from .geometry import GeometryParams

APPEARANCE_ONLY = 'appearance_only'
GEOMETRY_ONLY   = 'geometry_only'
POLYNOMIAL      = 'polynomial'
EXPONENTIAL     = 'exponential'
RULES           = (APPEARANCE_ONLY, GEOMETRY_ONLY, POLYNOMIAL, EXPONENTIAL)

RULE_ALIASES = {
    'app'  : APPEARANCE_ONLY,
    'geom' : GEOMETRY_ONLY,
    'poly' : POLYNOMIAL,
    'exp'  : EXPONENTIAL}

DEFAULT_EPSILON = 1e-9


def resolve_rule(name):
    rule = RULE_ALIASES.get(name, name)
    if rule not in RULES:
        raise ValueError('Unknown combination rule `%s\', expected one of %s' % (name, sorted(RULES + tuple(RULE_ALIASES))))
    return rule


def combine_polynomial(d_L, omega, a):
    '''
    ``d_L (1 - omega)^a``
    '''
    return d_L * (1.0 - omega) ** a


def combine_exponential(d_L, n, epsilon=DEFAULT_EPSILON):
    '''
    ``clamp(d_L, epsilon, 1)^n``; exactly 1 without geometric support.
    '''
    if n == 0:
        return 1.0
    return float(np.clip(d_L, epsilon, 1.0) ** n)


class CombineParams(object):
    '''
    How appearance distance and geometric verification merge into the final distance, and
    how many appearance-ranked candidates are verified (``shortlist_size``, 0 for all).
    '''

    def __init__(self, rule=EXPONENTIAL, a=2.0, shortlist_size=50, inlier_threshold=0.1, epsilon=DEFAULT_EPSILON, geometry=None):
        super(CombineParams, self).__init__()
        if not a >= 0:
            raise ValueError('a must be non-negative but got %r' % a)
        if int(shortlist_size) != shortlist_size or shortlist_size < 0:
            raise ValueError('shortlist_size must be a non-negative integer but got %r' % shortlist_size)
        if not epsilon > 0:
            raise ValueError('epsilon must be positive but got %r' % epsilon)
        self.rule           = resolve_rule(rule)
        self.a              = float(a)
        self.shortlist_size = int(shortlist_size)
        self.epsilon        = float(epsilon)
        self.geometry       = GeometryParams(inlier_threshold=inlier_threshold) if geometry is None else geometry

    @property
    def inlier_threshold(self):
        return self.geometry.inlier_threshold

    @property
    def uses_geometry(self):
        return self.rule != APPEARANCE_ONLY

    def with_rule(self, rule):
        return CombineParams(
            rule           = rule,
            a              = self.a,
            shortlist_size = self.shortlist_size,
            epsilon        = self.epsilon,
            geometry       = self.geometry)

    def combine(self, d_L, verdict):
        '''
        Final distance ``d_C`` from the appearance distance and a ``GeomVerdict`` (ignored, and
        may be ``None``, for ``appearance_only``).
        '''
        if self.rule == APPEARANCE_ONLY:
            return d_L
        if self.rule == GEOMETRY_ONLY:
            return float(-verdict.n)
        if self.rule == POLYNOMIAL:
            return combine_polynomial(d_L, verdict.omega, self.a)
        return combine_exponential(d_L, verdict.n, self.epsilon)

    def __repr__(self):
        return 'CombineParams(rule=%s, a=%r, shortlist_size=%d, epsilon=%r, geometry=%r)' % (
            self.rule, self.a, self.shortlist_size, self.epsilon, self.geometry)
