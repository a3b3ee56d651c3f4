from .parid_logging import logging

import collections
import csv
import threading

from .database import EmptyDatabase, ReidDatabase, VerdictCache, query_database
from .encode import embed_image
from .feature_cache import FeatureCache
from .workflow import QueryWorkflow

SPLIT         = 'split'
LEAVE_ONE_OUT = 'leave_one_out'
PROTOCOLS     = (SPLIT, LEAVE_ONE_OUT)
PROTOCOL_ALIASES = {'loo': LEAVE_ONE_OUT}

LEVELS = ('individual', 'image')

_SPLIT_EXCLUSION = 'individual has no database image'
_LOO_EXCLUSION   = 'no other image of the same identity'

CSV_HEADER = ('rule', 'query_id', 'truth', 'rank_of_truth', 'image_rank_of_truth', 'top_image_id', 'top_identity', 'd_L', 'n', 'omega', 'd_C')


class MissingTruthLabel(Exception):

    def __init__(self, query_id):
        super(MissingTruthLabel, self).__init__('No truth label for query `%s\'' % query_id)
        self.query_id = query_id


class NoQueries(Exception):

    def __init__(self, reason):
        super(NoQueries, self).__init__('Nothing to evaluate: %s' % reason)
        self.reason = reason


def resolve_protocol(name):
    protocol = PROTOCOL_ALIASES.get(name, name)
    if protocol not in PROTOCOLS:
        raise ValueError('Unknown protocol `%s\', expected one of %s' % (name, PROTOCOLS + tuple(PROTOCOL_ALIASES)))
    return protocol


def _is_hit(result, truth, k, level):
    if level == 'image':
        rank = result.image_rank(truth)
    else:
        rank = result.individual_rank(truth)
    return rank is not None and rank <= k


def topk_accuracy(results, truths, k, level='individual'):
    '''
    Fraction of queries whose true identity is among the first ``k`` distinct identities
    (``level='individual'``) or the first ``k`` images (``level='image'``) of their result.

    :param truths: map from query image id to true identity
    :raises MissingTruthLabel: a query without an entry in ``truths``
    '''
    if k < 1:
        raise ValueError('k must be positive but got %d' % k)
    if level not in LEVELS:
        raise ValueError('level must be one of %s but got %r' % (LEVELS, level))
    results = list(results)
    if not results:
        raise NoQueries('no results')
    hits = 0
    for result in results:
        truth = truths.get(result.query_image_id)
        if truth is None:
            raise MissingTruthLabel(result.query_image_id)
        hits += _is_hit(result, truth, k, level)
    return hits / len(results)


QueryRecord = collections.namedtuple('QueryRecord', ('query_id', 'truth', 'result'))

Comparison = collections.namedtuple('Comparison', ('gained', 'lost'))


class EvalReport(object):
    '''
    Outcome of one rule under one protocol: per-query results in manifest order, queries
    excluded because no correct answer exists, and top-k accuracies for ``k = 1..k_max``.
    '''

    def __init__(self, protocol, rule, k_max, records, excluded=(), excluded_reason=None, level='individual'):
        super(EvalReport, self).__init__()
        if k_max < 1:
            raise ValueError('k_max must be positive but got %d' % k_max)
        self.protocol        = protocol
        self.rule            = rule
        self.k_max           = k_max
        self.records         = tuple(records)
        self.excluded        = tuple(excluded)
        self.excluded_reason = excluded_reason
        self.level           = level
        truths = {record.query_id: record.truth for record in self.records}
        self.accuracies = collections.OrderedDict(
            (k, topk_accuracy((record.result for record in self.records), truths, k, level=level))
            for k in range(1, k_max + 1))

    def accuracy(self, k):
        return self.accuracies[k]

    def hits(self, k=1):
        return {record.query_id for record in self.records if _is_hit(record.result, record.truth, k, self.level)}

    def csv_rows(self):
        for record in self.records:
            result = record.result
            top    = result.candidates[0]
            rank   = result.individual_rank(record.truth)
            image  = result.image_rank(record.truth)
            yield (self.rule, record.query_id, record.truth, '' if rank is None else rank, '' if image is None else image,
                   top.db_image_id, top.identity, repr(top.d_L), top.n, repr(top.omega), repr(top.d_C))

    def __repr__(self):
        return 'EvalReport(protocol=%s, rule=%s, queries=%d, excluded=%d, top-1=%.4f)' % (
            self.protocol, self.rule, len(self.records), len(self.excluded), self.accuracies[1])


def compare_reports(baseline, candidate, k=1):
    '''
    Queries ``candidate`` answers correctly at top-``k`` where ``baseline`` fails (gained) and
    vice versa (lost), in the candidate's record order.
    '''
    baseline_hits  = baseline.hits(k)
    candidate_hits = candidate.hits(k)
    common = [record.query_id for record in candidate.records if record.query_id in {r.query_id for r in baseline.records}]
    return Comparison(
        gained = tuple(q for q in common if q in candidate_hits and q not in baseline_hits),
        lost   = tuple(q for q in common if q in baseline_hits and q not in candidate_hits))


def write_reports_csv(reports, path):
    '''
    Per-query rows of every report followed by ``#``-prefixed summary rows with the top-k
    accuracies and exclusions.
    '''
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerows(report.csv_rows())
        for report in reports:
            for k, accuracy in report.accuracies.items():
                writer.writerow(('#top-k', report.rule, report.protocol, report.level, k, repr(accuracy)))
            writer.writerow(('#excluded', report.rule, report.protocol, len(report.excluded), report.excluded_reason or ''))


def format_grid(reports):
    '''
    Text table, one row per rule and one column per ``k``.
    '''
    k_max = min(report.k_max for report in reports)
    width = max(len(report.rule) for report in reports)
    lines = ['%-*s  %s' % (width, 'rule', '  '.join('top-%-3d' % k for k in range(1, k_max + 1)))]
    for report in reports:
        lines.append('%-*s  %s' % (width, report.rule, '  '.join('%6.2f%%' % (100.0 * report.accuracy(k)) for k in range(1, k_max + 1))))
    return '\n'.join(lines)


class Evaluation(object):
    '''
    Evaluation state shared between rules on one manifest: parsed features, embeddings and
    geometric verdicts are computed once and reused by every rule.
    '''

    def __init__(self, manifest, vocabulary, feature_cache=None, workers=1, level='individual'):
        super(Evaluation, self).__init__()
        if level not in LEVELS:
            raise ValueError('level must be one of %s but got %r' % (LEVELS, level))
        self.logger        = logging.getLogger('{}.{}'.format(self.__module__, type(self).__name__))
        self.manifest      = manifest
        self.vocabulary    = vocabulary
        self.feature_cache = FeatureCache() if feature_cache is None else feature_cache
        self.verdict_cache = VerdictCache()
        self.workers       = workers
        self.level         = level
        self.embeddings    = {}
        self.lock          = threading.RLock()
        self._databases    = {}

    def features(self, entries):
        return self.feature_cache.get_all(entries)

    def embed(self, features):
        with self.lock:
            missing = [f for f in features if f.image_id not in self.embeddings]
        if missing:
            computed = QueryWorkflow(lambda f: embed_image(f, self.vocabulary), workers=self.workers, what='embeddings').map(missing)
            with self.lock:
                for f, embedding in zip(missing, computed):
                    self.embeddings.setdefault(f.image_id, embedding)
            self.logger.info('Embedded %d images', len(missing))
        with self.lock:
            return {f.image_id: self.embeddings[f.image_id] for f in features}

    def _database(self, protocol, entries, use_viewpoint):
        with self.lock:
            database = self._databases.get(protocol)
        if database is None:
            features = self.features(entries)
            database = ReidDatabase.build(self.vocabulary, features, embeddings=self.embed(features), use_viewpoint=use_viewpoint)
            with self.lock:
                database = self._databases.setdefault(protocol, database)
        return database

    def _run(self, protocol, params, k_max, database, queries, excluded, excluded_reason, exclude_self):
        embeddings = self.embed([query for query, _ in queries])

        def run_query(query_and_truth):
            query, _ = query_and_truth
            return query_database(
                database,
                query,
                params,
                query_embedding = embeddings[query.image_id],
                verdict_cache   = self.verdict_cache,
                exclude         = (query.image_id,) if exclude_self else ())

        results = QueryWorkflow(run_query, workers=self.workers).map(queries)
        records = [QueryRecord(query.image_id, truth, result) for (query, truth), result in zip(queries, results)]
        report  = EvalReport(protocol, params.rule, k_max, records, excluded=excluded, excluded_reason=excluded_reason, level=self.level)
        self.logger.info('%s', report)
        if excluded:
            self.logger.info('Excluded %d queries (%s)', len(excluded), excluded_reason)
        return report

    def split(self, params, k_max):
        db_entries    = self.manifest.database_entries()
        query_entries = self.manifest.query_entries()
        if not db_entries:
            raise EmptyDatabase('manifest has no database entries')
        if not query_entries:
            raise NoQueries('manifest has no query entries')
        for entry in query_entries:
            if not entry.individual_id:
                raise MissingTruthLabel(entry.image_id)

        database   = self._database(SPLIT, db_entries, use_viewpoint=False)
        identities = set(database.identities())
        queries, excluded = [], []
        for query in self.features(query_entries):
            if query.individual_id in identities:
                queries.append((query, query.individual_id))
            else:
                excluded.append(query.image_id)
        if not queries:
            raise NoQueries('no query individual has a database image')
        return self._run(SPLIT, params, k_max, database, queries, excluded, _SPLIT_EXCLUSION, exclude_self=False)

    def leave_one_out(self, params, k_max):
        entries = tuple(self.manifest)
        if len(entries) < 2:
            raise NoQueries('leave-one-out needs at least 2 images but got %d' % len(entries))
        for entry in entries:
            if not entry.individual_id:
                raise MissingTruthLabel(entry.image_id)

        use_viewpoint = self.manifest.has_viewpoints()
        database = self._database(LEAVE_ONE_OUT, entries, use_viewpoint=use_viewpoint)
        counts   = collections.Counter(entry.identity for entry in database)
        queries, excluded = [], []
        for entry in database:
            if counts[entry.identity] > 1:
                queries.append((entry.features, entry.identity))
            else:
                excluded.append(entry.image_id)
        if not queries:
            raise NoQueries('every identity has a single image')
        return self._run(LEAVE_ONE_OUT, params, k_max, database, queries, excluded, _LOO_EXCLUSION, exclude_self=True)

    def run(self, protocol, params, k_max):
        if resolve_protocol(protocol) == SPLIT:
            return self.split(params, k_max)
        return self.leave_one_out(params, k_max)


def evaluate_split(manifest, vocab, params, k_max, feature_cache=None, workers=1, level='individual'):
    '''
    Query every ``query`` image of ``manifest`` against the ``database`` images.
    '''
    return Evaluation(manifest, vocab, feature_cache=feature_cache, workers=workers, level=level).split(params, k_max)


def evaluate_leave_one_out(manifest, vocab, params, k_max, feature_cache=None, workers=1, level='individual'):
    '''
    Query every image against all others, regardless of role. Images that are the only one
    of their identity are excluded and reported. Identity includes the viewpoint whenever
    the manifest labels viewpoints.
    '''
    return Evaluation(manifest, vocab, feature_cache=feature_cache, workers=workers, level=level).leave_one_out(params, k_max)
