import contextlib
import os
import shutil
import tempfile
import unittest

import numpy as np

from parid import (
    CombineParams,
    EvalReport,
    Evaluation,
    FeatureCache,
    GeometryParams,
    ImageFeatures,
    Manifest,
    ManifestEntry,
    MissingTruthLabel,
    NoQueries,
    SynthConfig,
    build_vocabulary,
    compare_reports,
    evaluate_leave_one_out,
    evaluate_split,
    generate_benchmark,
    generate_individual,
    load_manifest,
    render_observation,
    topk_accuracy,
    write_feature_file,
    write_reports_csv)
from parid.database import MatchCandidate, RankedResult
from parid.evaluation import QueryRecord, format_grid

RULES = ('appearance_only', 'geometry_only', 'polynomial', 'exponential')


@contextlib.contextmanager
def _tempdir():
    """A context manager for creating and then deleting a temporary directory."""
    tmpdir = tempfile.mkdtemp()
    try:
        yield tmpdir
    finally:
        shutil.rmtree(tmpdir)


def _result(query_id, identities):
    return RankedResult(query_id, [MatchCandidate('%s%d' % (identity.lower(), i), identity, 0.1 * (i + 1)) for i, identity in enumerate(identities)])


def _write_images(directory, rows, seed=21):
    '''
    :param rows: ``(image_id, individual_id, viewpoint, role, individual index, view index)``
    '''
    config = SynthConfig(seed=seed, n_individuals=4, views_per_individual=3, points_per_individual=40, descriptor_dim=16)
    entries, features = [], []
    for image_id, individual_id, viewpoint, role, index, view in rows:
        rendered = render_observation(generate_individual(config, index), config, view).features
        f = ImageFeatures(image_id, rendered.frames, rendered.descriptors)
        path = os.path.join(directory, image_id + '.patf')
        write_feature_file(f, path)
        entries.append(ManifestEntry(image_id, individual_id, viewpoint, role, path))
        features.append(f)
    return Manifest(entries), features


_FIVE_IMAGES = (
    ('a0', 'A', '', 'database', 0, 0),
    ('a1', 'A', '', 'query', 0, 1),
    ('b0', 'B', '', 'database', 1, 0),
    ('b1', 'B', '', 'query', 1, 1),
    ('c0', 'C', '', 'database', 2, 0))


class TestTopkAccuracy(unittest.TestCase):

    def test_deduplicated_individuals(self):
        results = [_result('q', ['B', 'B', 'A'])]
        self.assertEqual(topk_accuracy(results, {'q': 'A'}, 1), 0.0)
        self.assertEqual(topk_accuracy(results, {'q': 'A'}, 2), 1.0)
        self.assertEqual(topk_accuracy(results, {'q': 'A'}, 2, level='image'), 0.0)
        self.assertEqual(topk_accuracy(results, {'q': 'A'}, 3, level='image'), 1.0)

    def test_fraction(self):
        results = [_result('q1', ['A', 'B']), _result('q2', ['A', 'B']), _result('q3', ['C', 'A']), _result('q4', ['A'])]
        truths = {'q1': 'A', 'q2': 'B', 'q3': 'C', 'q4': 'D'}
        self.assertEqual(topk_accuracy(results, truths, 1), 0.5)
        self.assertEqual(topk_accuracy(results, truths, 2), 0.75)

    def test_errors(self):
        self.assertRaises(MissingTruthLabel, topk_accuracy, [_result('q', ['A'])], {}, 1)
        self.assertRaises(ValueError, topk_accuracy, [_result('q', ['A'])], {'q': 'A'}, 0)
        self.assertRaises(NoQueries, topk_accuracy, [], {}, 1)


class TestReports(unittest.TestCase):

    def test_compare_reports(self):
        truths = {'q1': 'A', 'q2': 'B', 'q3': 'C'}
        baseline = EvalReport('split', 'appearance_only', 2, [
            QueryRecord('q1', 'A', _result('q1', ['A', 'B'])),
            QueryRecord('q2', 'B', _result('q2', ['A', 'B'])),
            QueryRecord('q3', 'C', _result('q3', ['C', 'A']))])
        candidate = EvalReport('split', 'exponential', 2, [
            QueryRecord(q, t, _result(q, [t, 'Z'] if q != 'q3' else ['A', 'C'])) for q, t in sorted(truths.items())])
        comparison = compare_reports(baseline, candidate)
        self.assertEqual(comparison.gained, ('q2',))
        self.assertEqual(comparison.lost, ('q3',))
        self.assertEqual(candidate.accuracies[1], 2.0 / 3.0)
        self.assertEqual(list(candidate.accuracies), [1, 2])

    def test_format_grid(self):
        report = EvalReport('split', 'exponential', 3, [QueryRecord('q', 'B', _result('q', ['A', 'B']))])
        lines = format_grid([report]).splitlines()
        self.assertEqual(len(lines), 2)
        self.assertIn('top-1', lines[0])
        self.assertIn('top-3', lines[0])
        self.assertTrue(lines[1].startswith('exponential'))
        self.assertIn('100.00%', lines[1])


class TestProtocols(unittest.TestCase):

    def test_leave_one_out_excludes_singletons(self):
        params = CombineParams(geometry=GeometryParams(seed=1))
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, _FIVE_IMAGES)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            report = evaluate_leave_one_out(manifest, vocab, params, 3)
        self.assertEqual(report.protocol, 'leave_one_out')
        self.assertEqual(report.excluded, ('c0',))
        self.assertEqual([record.query_id for record in report.records], ['a0', 'a1', 'b0', 'b1'])
        for record in report.records:
            self.assertEqual(len(record.result.candidates), 4)
            self.assertNotIn(record.query_id, [c.db_image_id for c in record.result.candidates])
            self.assertEqual(set(record.result.individuals), {'A', 'B', 'C'})
        expected = [sum(record.result.individuals.index(record.truth) < k for record in report.records) / 4.0 for k in (1, 2, 3)]
        self.assertEqual([report.accuracy(k) for k in (1, 2, 3)], expected)
        self.assertEqual(report.accuracy(3), 1.0)

    def test_leave_one_out_with_viewpoints(self):
        rows = (
            ('a0', 'A', 'left', 'database', 0, 0),
            ('a1', 'A', 'left', 'query', 0, 1),
            ('a2', 'A', 'right', 'query', 0, 2),
            ('b0', 'B', 'left', 'database', 1, 0),
            ('b1', 'B', 'left', 'query', 1, 1))
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, rows)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            report = evaluate_leave_one_out(manifest, vocab, CombineParams(), 2)
        self.assertEqual(report.excluded, ('a2',))
        self.assertEqual([record.truth for record in report.records], ['A/left', 'A/left', 'B/left', 'B/left'])

    def test_split_excludes_unknown_individuals(self):
        rows = _FIVE_IMAGES + (('d1', 'D', '', 'query', 3, 1),)
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, rows)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            report = evaluate_split(manifest, vocab, CombineParams(), 2)
        self.assertEqual(report.excluded, ('d1',))
        self.assertEqual([record.query_id for record in report.records], ['a1', 'b1'])
        for record in report.records:
            self.assertEqual(len(record.result.candidates), 3)

    def test_split_needs_truth_labels(self):
        rows = _FIVE_IMAGES + (('x', '', '', 'query', 3, 1),)
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, rows)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            self.assertRaises(MissingTruthLabel, evaluate_split, manifest, vocab, CombineParams(), 1)

    def test_nothing_to_evaluate(self):
        rows = (('a0', 'A', '', 'database', 0, 0), ('b0', 'B', '', 'database', 1, 0))
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, rows)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            self.assertRaises(NoQueries, evaluate_split, manifest, vocab, CombineParams(), 1)
            self.assertRaises(NoQueries, evaluate_leave_one_out, manifest, vocab, CombineParams(), 1)

    def test_csv_is_reproducible(self):
        contents = []
        with _tempdir() as tmpdir:
            manifest, features = _write_images(tmpdir, _FIVE_IMAGES)
            vocab = build_vocabulary(features, pca_dim=8, gmm_components=4, seed=0)
            for attempt in range(2):
                evaluation = Evaluation(manifest, vocab, workers=1 + attempt)
                params = CombineParams(geometry=GeometryParams(seed=4))
                reports = [evaluation.run('loo', params.with_rule(rule), 3) for rule in RULES]
                path = os.path.join(tmpdir, 'per-query-%d.csv' % attempt)
                write_reports_csv(reports, path)
                with open(path, 'rb') as f:
                    contents.append(f.read())
        self.assertEqual(contents[0], contents[1])
        lines = contents[0].decode('utf-8').splitlines()
        self.assertTrue(lines[0].startswith('rule,query_id,truth'))
        self.assertEqual(sum(line.startswith('#top-k') for line in lines), 4 * 3)
        self.assertEqual(sum(line.startswith('#excluded') for line in lines), 4)


class TestSyntheticBenchmark(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmpdir = tempfile.mkdtemp()
        manifest = generate_benchmark(SynthConfig(seed=42, n_individuals=25, views_per_individual=6), cls.tmpdir)
        manifest = load_manifest(manifest.path)
        cache = FeatureCache()
        vocab = build_vocabulary(cache.get_all(manifest.database_entries()), seed=42)
        evaluation = Evaluation(manifest, vocab, feature_cache=cache)
        params = CombineParams(geometry=GeometryParams(seed=42))
        cls.reports = {rule: evaluation.run('split', params.with_rule(rule), 5) for rule in RULES}

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmpdir)

    def test_queries(self):
        for report in self.reports.values():
            self.assertEqual(len(report.records), 125)
            self.assertEqual(report.excluded, ())

    def test_combined_rule_wins(self):
        exponential = self.reports['exponential'].accuracy(1)
        self.assertGreaterEqual(exponential, 0.9)
        self.assertGreaterEqual(exponential, self.reports['geometry_only'].accuracy(1))
        self.assertGreaterEqual(exponential, self.reports['appearance_only'].accuracy(1))

    def test_topk_non_decreasing(self):
        for rule, report in self.reports.items():
            accuracies = [report.accuracy(k) for k in range(1, 6)]
            self.assertEqual(accuracies, sorted(accuracies), rule)


if __name__ == '__main__':
    unittest.main()
