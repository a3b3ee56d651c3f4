from __future__ import print_function

import contextlib
import os
import shutil
import tempfile
import unittest

import numpy as np

from parid import AffineFrame, FeatureFileError, ImageFeatures, parse_feature_file, write_feature_file
from parid.synth import SynthConfig, generate_individual, render_observation


@contextlib.contextmanager
def _tempdir():
    """A context manager for creating and then deleting a temporary directory."""
    tmpdir = tempfile.mkdtemp()
    try:
        yield tmpdir
    finally:
        shutil.rmtree(tmpdir)


def _write(directory, text, name='features.patf'):
    path = os.path.join(directory, name)
    with open(path, 'w') as f:
        f.write(text)
    return path


def _feature_line(x, y, descriptor, shape=(1, 0, 0, 1)):
    return ' '.join(str(v) for v in (x, y) + tuple(shape) + tuple(descriptor))


class TestAffineFrame(unittest.TestCase):

    def test_accessors(self):
        frame = AffineFrame(3, 4, 2, 1, 0, 3)
        self.assertEqual(frame.center(), (3.0, 4.0))
        self.assertEqual(frame.det(), 6.0)
        np.testing.assert_array_equal(frame.shape_matrix(), [[2, 1], [0, 3]])
        self.assertEqual(AffineFrame.from_row(frame.as_row()), frame)


class TestParseFeatureFile(unittest.TestCase):

    def test_empty(self):
        with _tempdir() as tmpdir:
            features = parse_feature_file(_write(tmpdir, 'PATF 1\nimg0\n4 0\n'))
        self.assertEqual(features.image_id, 'img0')
        self.assertEqual(len(features), 0)
        self.assertEqual(features.descriptor_dim, 4)
        self.assertTrue(features.degenerate)

    def test_single_unit_descriptor(self):
        with _tempdir() as tmpdir:
            features = parse_feature_file(_write(tmpdir, 'PATF 1\nimg0\n4 1\n%s\n' % _feature_line(3, 4, (1, 0, 0, 0))))
        self.assertEqual(len(features), 1)
        self.assertFalse(features.degenerate)
        self.assertEqual(features.frame(0), AffineFrame(3, 4, 1, 0, 0, 1))
        np.testing.assert_array_equal(features.descriptors[0], [1, 0, 0, 0])

    def test_descriptor_renormalized(self):
        with _tempdir() as tmpdir:
            features = parse_feature_file(_write(tmpdir, 'PATF 1\nimg0\n4 2\n%s\n%s\n' % (
                _feature_line(3, 4, (2, 0, 0, 0)),
                _feature_line(5, 6, (1, 1, 1, 1)))))
        np.testing.assert_array_equal(features.descriptors[0], [1, 0, 0, 0])
        np.testing.assert_allclose(features.descriptors[1], [0.5, 0.5, 0.5, 0.5], rtol=0, atol=1e-15)
        np.testing.assert_allclose(np.linalg.norm(features.descriptors, axis=1), 1.0, rtol=0, atol=1e-12)

    def test_order_preserved(self):
        lines = [_feature_line(i, 2 * i, (0, 0, 1, 0)) for i in range(5)]
        with _tempdir() as tmpdir:
            features = parse_feature_file(_write(tmpdir, 'PATF 1\nimg0\n4 5\n%s\n' % '\n'.join(lines)))
        np.testing.assert_array_equal(features.points[:, 0], np.arange(5))

    def _assert_error(self, text, line_number, fragment):
        with _tempdir() as tmpdir:
            with self.assertRaises(FeatureFileError) as context:
                parse_feature_file(_write(tmpdir, text))
        self.assertEqual(context.exception.line_number, line_number)
        self.assertIn(fragment, context.exception.reason)

    def test_malformed_header(self):
        self._assert_error('PATX 1\nimg0\n4 0\n', 1, 'header')
        self._assert_error('PATF 2\nimg0\n4 0\n', 1, 'version')
        self._assert_error('PATF 1\nimg 0\n4 0\n', 2, 'single token')
        self._assert_error('PATF 1\nimg0\n4\n', 3, 'expected')

    def test_count_mismatch(self):
        self._assert_error('PATF 1\nimg0\n4 2\n%s\n' % _feature_line(0, 0, (1, 0, 0, 0)), 5, 'count mismatch')

    def test_dimension_inconsistency(self):
        self._assert_error('PATF 1\nimg0\n4 2\n%s\n%s\n' % (
            _feature_line(0, 0, (1, 0, 0, 0)),
            _feature_line(0, 0, (1, 0, 0))), 5, 'dimension inconsistency')

    def test_non_finite(self):
        self._assert_error('PATF 1\nimg0\n2 1\n0 0 1 0 0 1 nan 1\n', 4, 'non-finite')
        self._assert_error('PATF 1\nimg0\n2 1\n0 inf 1 0 0 1 0 1\n', 4, 'non-finite')

    def test_zero_norm_descriptor(self):
        self._assert_error('PATF 1\nimg0\n2 1\n0 0 1 0 0 1 0 0\n', 4, 'zero-norm')

    def test_singular_frame(self):
        self._assert_error('PATF 1\nimg0\n2 1\n0 0 1 2 2 4 1 0\n', 4, 'singular')


class TestWriteFeatureFile(unittest.TestCase):

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        features = ImageFeatures.from_points(
            'img-3',
            rng.uniform(0, 100, size=(3, 2)),
            rng.standard_normal((3, 8)),
            shapes=rng.uniform(1, 2, size=(3, 2, 2)) + 3 * np.eye(2))
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'f.patf')
            write_feature_file(features, path)
            parsed = parse_feature_file(path)
        self.assertEqual(parsed.image_id, features.image_id)
        np.testing.assert_allclose(parsed.frames, features.frames, rtol=0, atol=1e-12)
        np.testing.assert_allclose(parsed.descriptors, features.descriptors, rtol=0, atol=1e-12)

    def test_empty(self):
        features = ImageFeatures('empty', np.zeros((0, 6)), np.zeros((0, 16)))
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'f.patf')
            write_feature_file(features, path)
            with open(path) as f:
                self.assertEqual(f.read().splitlines()[2], '16 0')
            parsed = parse_feature_file(path)
        self.assertTrue(parsed.degenerate)
        self.assertEqual(parsed.descriptor_dim, 16)

    def test_synthetic_round_trip_is_bitwise(self):
        config = SynthConfig(seed=5, n_individuals=1, views_per_individual=2)
        features = render_observation(generate_individual(config, 0), config, 1).features
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'f.patf')
            write_feature_file(features, path)
            parsed = parse_feature_file(path)
        np.testing.assert_array_equal(parsed.frames, features.frames)
        np.testing.assert_array_equal(parsed.descriptors, features.descriptors)


if __name__ == '__main__':
    unittest.main()
