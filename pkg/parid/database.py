from .parid_logging import logging

import threading

from .combine import CombineParams
from .encode import cosine_distance, embed_image
from .geometry import geometric_similarity
from .pca import DimensionMismatch

_logger = logging.getLogger(__name__)

_APPEARANCE_ONLY = CombineParams(rule='appearance_only')


class EmptyDatabase(Exception):

    def __init__(self, reason='database has no entries'):
        super(EmptyDatabase, self).__init__(reason)
        self.reason = reason


def identity_of(individual_id, viewpoint=None, use_viewpoint=False):
    '''
    Unit of identification: the individual, or individual and viewpoint for data sets whose
    sides are matched separately.
    '''
    if use_viewpoint and viewpoint:
        return '%s/%s' % (individual_id, viewpoint)
    return individual_id


class ReidEntry(object):

    def __init__(self, image_id, individual_id, embedding, features, viewpoint=None, identity=None):
        super(ReidEntry, self).__init__()
        self.image_id      = image_id
        self.individual_id = individual_id
        self.viewpoint     = viewpoint
        self.embedding     = embedding
        self.features      = features
        self.identity      = individual_id if identity is None else identity

    def __repr__(self):
        return 'ReidEntry(image_id=%s, identity=%s, degenerate=%s)' % (self.image_id, self.identity, self.embedding.degenerate)


class ReidDatabase(object):
    '''
    Known images with their embeddings under one vocabulary. Immutable once built and shared
    read-only between query workers.
    '''

    def __init__(self, vocabulary, entries):
        super(ReidDatabase, self).__init__()
        self.logger     = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.vocabulary = vocabulary
        self.entries    = tuple(entries)
        self._index     = {}
        for entry in self.entries:
            if entry.image_id in self._index:
                raise ValueError('Duplicate database image id `%s\'' % entry.image_id)
            if entry.embedding.dim != vocabulary.embedding_dim:
                raise DimensionMismatch(vocabulary.embedding_dim, entry.embedding.dim, 'embedding of database image %s' % entry.image_id)
            self._index[entry.image_id] = entry
        self.logger.debug('Database with %d images of %d identities', len(self.entries), len(self.identities()))

    @staticmethod
    def build(vocabulary, features, embeddings=None, use_viewpoint=False):
        '''
        :param features: labelled ``ImageFeatures`` of the database images
        :param embeddings: optional map from image id to a precomputed ``Embedding``
        '''
        entries = []
        for f in features:
            embedding = embeddings[f.image_id] if embeddings is not None and f.image_id in embeddings else embed_image(f, vocabulary)
            entries.append(ReidEntry(
                image_id      = f.image_id,
                individual_id = f.individual_id,
                viewpoint     = f.viewpoint,
                embedding     = embedding,
                features      = f,
                identity      = identity_of(f.individual_id, f.viewpoint, use_viewpoint)))
        return ReidDatabase(vocabulary, entries)

    def entry(self, image_id):
        return self._index[image_id]

    def identities(self):
        return sorted({entry.identity for entry in self.entries})

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, image_id):
        return image_id in self._index


class VerdictCache(object):
    '''
    Geometric verdicts keyed by image pair and geometry settings, so that rules sharing the
    same settings verify every pair once.
    '''

    def __init__(self):
        super(VerdictCache, self).__init__()
        self.logger   = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.verdicts = {}
        self.lock     = threading.RLock()
        self.hits     = 0

    def get(self, query, db_features, geometry):
        key = (query.image_id, db_features.image_id, geometry.key())
        with self.lock:
            verdict = self.verdicts.get(key)
            if verdict is not None:
                self.hits += 1
                return verdict
        verdict = geometric_similarity(query, db_features, geometry)
        with self.lock:
            return self.verdicts.setdefault(key, verdict)

    def __len__(self):
        with self.lock:
            return len(self.verdicts)


class MatchCandidate(object):

    def __init__(self, db_image_id, individual_id, d_L, n=0, omega=0.0, d_C=None, identity=None, verified=False, degenerate=False):
        super(MatchCandidate, self).__init__()
        self.db_image_id   = db_image_id
        self.individual_id = individual_id
        self.identity      = individual_id if identity is None else identity
        self.d_L           = float(d_L)
        self.n             = int(n)
        self.omega         = float(omega)
        self.d_C           = self.d_L if d_C is None else float(d_C)
        self.verified      = verified
        self.degenerate    = degenerate

    def __repr__(self):
        return 'MatchCandidate(%s, identity=%s, d_L=%.6f, n=%d, omega=%.4f, d_C=%.6g, verified=%s)' % (
            self.db_image_id, self.identity, self.d_L, self.n, self.omega, self.d_C, self.verified)


class RankedResult(object):
    '''
    Candidates of one query in final order and the induced order of distinct identities,
    each ranked by its best image.
    '''

    def __init__(self, query_image_id, candidates):
        super(RankedResult, self).__init__()
        self.query_image_id = query_image_id
        self.candidates     = tuple(candidates)
        individuals, seen = [], set()
        for candidate in self.candidates:
            if candidate.identity not in seen:
                seen.add(candidate.identity)
                individuals.append(candidate.identity)
        self.individuals = tuple(individuals)

    def individual_rank(self, identity):
        '''
        1-based position of ``identity`` among distinct identities, ``None`` if absent.
        '''
        try:
            return self.individuals.index(identity) + 1
        except ValueError:
            return None

    def image_rank(self, identity):
        for position, candidate in enumerate(self.candidates, start=1):
            if candidate.identity == identity:
                return position
        return None

    def top(self, k):
        return self.individuals[:k]

    def best_candidate(self, identity):
        for candidate in self.candidates:
            if candidate.identity == identity:
                return candidate
        return None

    def __repr__(self):
        return 'RankedResult(%s, candidates=%d, top=%s)' % (self.query_image_id, len(self.candidates), self.individuals[:3])


def score_pair(query, query_embedding, db_entry, params, verdict_cache=None):
    '''
    Appearance distance, geometric verdict when ``params.rule`` needs one, and the combined
    distance of one (query, database image) pair.
    '''
    d_L = cosine_distance(query_embedding, db_entry.embedding)
    degenerate = query_embedding.degenerate or db_entry.embedding.degenerate
    if not params.uses_geometry:
        return MatchCandidate(db_entry.image_id, db_entry.individual_id, d_L, identity=db_entry.identity, degenerate=degenerate)

    if verdict_cache is None:
        verdict = geometric_similarity(query, db_entry.features, params.geometry)
    else:
        verdict = verdict_cache.get(query, db_entry.features, params.geometry)
    return MatchCandidate(
        db_image_id   = db_entry.image_id,
        individual_id = db_entry.individual_id,
        identity      = db_entry.identity,
        d_L           = d_L,
        n             = verdict.n,
        omega         = verdict.omega,
        d_C           = params.combine(d_L, verdict),
        verified      = True,
        degenerate    = degenerate)


def _final_order(candidate):
    return (not candidate.verified, candidate.d_C, candidate.d_L, candidate.db_image_id)


def query_database(db, query, params, query_embedding=None, verdict_cache=None, exclude=()):
    '''
    Two-stage search: rank all entries by appearance distance, then verify the
    ``params.shortlist_size`` best (all for 0) geometrically and combine. Unverified entries
    keep ``d_C = d_L`` and rank after every verified one.

    :param exclude: image ids left out of the search (the query itself for leave-one-out)
    :raises EmptyDatabase: nothing left to search
    '''
    entries = [entry for entry in db if entry.image_id not in exclude]
    if not entries:
        raise EmptyDatabase('no database entries to search for query %s' % query.image_id)
    if query_embedding is None:
        query_embedding = embed_image(query, db.vocabulary)
    if query_embedding.degenerate:
        _logger.debug('Query %s has a degenerate embedding', query.image_id)

    appearance = sorted(
        (score_pair(query, query_embedding, entry, _APPEARANCE_ONLY) for entry in entries),
        key=lambda candidate: (candidate.d_L, candidate.db_image_id))
    if not params.uses_geometry:
        return RankedResult(query.image_id, appearance)

    n_verified = len(appearance) if params.shortlist_size == 0 else min(params.shortlist_size, len(appearance))
    verified = [score_pair(query, query_embedding, db.entry(candidate.db_image_id), params, verdict_cache=verdict_cache)
                for candidate in appearance[:n_verified]]
    result = RankedResult(query.image_id, sorted(verified + appearance[n_verified:], key=_final_order))
    _logger.debug('%s', result)
    return result
