import unittest

import numpy as np

from parid import (
    CombineParams,
    EmptyDatabase,
    GeometryParams,
    ReidDatabase,
    SynthConfig,
    build_vocabulary,
    embed_image,
    generate_individual,
    query_database,
    render_observation,
    score_pair)
from parid.database import MatchCandidate, RankedResult, VerdictCache, identity_of


def _benchmark():
    config = SynthConfig(seed=13, n_individuals=5, views_per_individual=3, points_per_individual=40, descriptor_dim=16)
    views = {}
    for i in range(5):
        constellation = generate_individual(config, i)
        views[i] = [render_observation(constellation, config, v).features for v in range(3)]
    return views


class TestRankedResult(unittest.TestCase):

    def test_individual_order(self):
        result = RankedResult('q', [
            MatchCandidate('b1', 'B', 0.1),
            MatchCandidate('b2', 'B', 0.2),
            MatchCandidate('a1', 'A', 0.3)])
        self.assertEqual(result.individuals, ('B', 'A'))
        self.assertEqual(result.individual_rank('A'), 2)
        self.assertEqual(result.image_rank('A'), 3)
        self.assertIsNone(result.individual_rank('C'))
        self.assertEqual(result.top(1), ('B',))
        self.assertEqual(result.best_candidate('B').db_image_id, 'b1')

    def test_identity_of(self):
        self.assertEqual(identity_of('ind1', 'left', use_viewpoint=True), 'ind1/left')
        self.assertEqual(identity_of('ind1', 'left'), 'ind1')
        self.assertEqual(identity_of('ind1', None, use_viewpoint=True), 'ind1')


class TestQueryDatabase(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.views = _benchmark()
        database_features = [views[0] for views in cls.views.values()]
        cls.vocab = build_vocabulary([f for views in cls.views.values() for f in views], pca_dim=8, gmm_components=4, seed=0)
        cls.database = ReidDatabase.build(cls.vocab, database_features)
        cls.params = CombineParams(geometry=GeometryParams(seed=3))

    def test_build(self):
        self.assertEqual(len(self.database), 5)
        self.assertEqual(self.database.identities(), ['ind000', 'ind001', 'ind002', 'ind003', 'ind004'])
        self.assertIn('ind002_v0', self.database)
        self.assertRaises(ValueError, ReidDatabase.build, self.vocab, [self.views[0][0], self.views[0][0]])

    def test_self_match_ranks_first(self):
        query = self.views[2][0]
        for rule in ('appearance_only', 'geometry_only', 'polynomial', 'exponential'):
            result = query_database(self.database, query, self.params.with_rule(rule))
            self.assertEqual(result.candidates[0].db_image_id, 'ind002_v0', rule)
        top = query_database(self.database, query, self.params).candidates[0]
        self.assertLess(top.d_L, 1e-12)
        self.assertEqual(top.n, len(query))
        self.assertEqual(top.omega, 1.0)
        self.assertLess(top.d_C, 1e-12)

    def test_true_individual_ranks_first(self):
        for i in range(5):
            result = query_database(self.database, self.views[i][1], self.params)
            self.assertEqual(result.individual_rank('ind%03d' % i), 1)

    def test_ordering(self):
        result = query_database(self.database, self.views[1][2], self.params)
        keys = [(c.d_C, c.d_L, c.db_image_id) for c in result.candidates]
        self.assertEqual(keys, sorted(keys))
        appearance = query_database(self.database, self.views[1][2], self.params.with_rule('appearance_only'))
        self.assertEqual([c.d_L for c in appearance.candidates], sorted(c.d_L for c in appearance.candidates))
        self.assertTrue(all(c.d_C == c.d_L and not c.verified for c in appearance.candidates))

    def test_unverified_rank_after_verified(self):
        params = CombineParams(rule='geometry_only', shortlist_size=2, geometry=GeometryParams(seed=3))
        result = query_database(self.database, self.views[3][1], params)
        self.assertEqual([c.verified for c in result.candidates], [True, True, False, False, False])
        unverified = result.candidates[2:]
        self.assertTrue(all(c.d_C == c.d_L for c in unverified))
        self.assertEqual([c.d_L for c in unverified], sorted(c.d_L for c in unverified))

    def test_shortlist_keeps_pair_scores(self):
        query = self.views[4][2]
        full = query_database(self.database, query, CombineParams(shortlist_size=0, geometry=GeometryParams(seed=3)))
        short = query_database(self.database, query, CombineParams(shortlist_size=3, geometry=GeometryParams(seed=3)))
        scores = {c.db_image_id: c.d_C for c in full.candidates}
        for candidate in short.candidates:
            if candidate.verified:
                self.assertEqual(candidate.d_C, scores[candidate.db_image_id])
        self.assertTrue(all(c.verified for c in full.candidates))

    def test_shortlist_covering_database(self):
        def scores(shortlist_size):
            params = CombineParams(shortlist_size=shortlist_size, geometry=GeometryParams(seed=3))
            result = query_database(self.database, self.views[3][2], params)
            return [(c.db_image_id, c.individual_id, c.d_L, c.n, c.omega, c.d_C, c.verified) for c in result.candidates]

        exact = scores(len(self.database))
        self.assertEqual(scores(len(self.database) + 4), exact)
        self.assertEqual(scores(0), exact)
        self.assertTrue(all(entry[-1] for entry in exact))

    def test_deterministic(self):
        a = query_database(self.database, self.views[0][1], self.params)
        b = query_database(self.database, self.views[0][1], self.params)
        self.assertEqual([(c.db_image_id, c.d_C, c.n) for c in a.candidates], [(c.db_image_id, c.d_C, c.n) for c in b.candidates])

    def test_verdict_cache(self):
        cache = VerdictCache()
        query = self.views[0][2]
        first = query_database(self.database, query, self.params, verdict_cache=cache)
        self.assertEqual(len(cache), 5)
        second = query_database(self.database, query, self.params.with_rule('polynomial'), verdict_cache=cache)
        self.assertEqual(cache.hits, 5)
        self.assertEqual([c.n for c in sorted(first.candidates, key=lambda c: c.db_image_id)],
                         [c.n for c in sorted(second.candidates, key=lambda c: c.db_image_id)])

    def test_score_pair(self):
        query = self.views[1][1]
        embedding = embed_image(query, self.vocab)
        candidate = score_pair(query, embedding, self.database.entry('ind001_v0'), self.params.with_rule('geometry_only'))
        self.assertTrue(candidate.verified)
        self.assertEqual(candidate.d_C, -candidate.n)
        self.assertTrue(0 <= candidate.omega <= 1)

    def test_exclude(self):
        result = query_database(self.database, self.views[2][0], self.params, exclude=('ind002_v0',))
        self.assertEqual(len(result.candidates), 4)
        self.assertNotIn('ind002_v0', [c.db_image_id for c in result.candidates])
        everything = tuple(entry.image_id for entry in self.database)
        self.assertRaises(EmptyDatabase, query_database, self.database, self.views[2][0], self.params, exclude=everything)


if __name__ == '__main__':
    unittest.main()
