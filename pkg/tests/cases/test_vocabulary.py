import contextlib
import os
import shutil
import tempfile
import unittest

import numpy as np

from parid import (
    ImageFeatures,
    InsufficientData,
    SynthConfig,
    VocabularyFormatError,
    build_vocabulary,
    embed_image,
    generate_individual,
    load_vocabulary,
    render_observation,
    save_vocabulary)


@contextlib.contextmanager
def _tempdir():
    """A context manager for creating and then deleting a temporary directory."""
    tmpdir = tempfile.mkdtemp()
    try:
        yield tmpdir
    finally:
        shutil.rmtree(tmpdir)


def _training_features():
    config = SynthConfig(seed=6, n_individuals=3, views_per_individual=2, points_per_individual=30, descriptor_dim=12)
    return [render_observation(generate_individual(config, i), config, v).features for i in range(3) for v in range(2)]


class TestBuildVocabulary(unittest.TestCase):

    def test_dimensions(self):
        vocab = build_vocabulary(_training_features(), pca_dim=6, gmm_components=3, seed=1)
        self.assertEqual(vocab.descriptor_dim, 12)
        self.assertEqual(vocab.fisher_dim, 2 * 3 * 6)
        self.assertEqual(vocab.embedding_dim, 5)
        self.assertEqual(vocab.alpha, 0.5)

    def test_deterministic(self):
        a = build_vocabulary(_training_features(), pca_dim=6, gmm_components=3, seed=1)
        b = build_vocabulary(_training_features(), pca_dim=6, gmm_components=3, seed=1)
        np.testing.assert_array_equal(a.gmm.means, b.gmm.means)
        np.testing.assert_array_equal(a.kpca.alphas, b.kpca.alphas)

    def test_skips_empty_images(self):
        features = _training_features()[:1] + [ImageFeatures('empty', np.zeros((0, 6)), np.zeros((0, 12)))]
        self.assertRaises(InsufficientData, build_vocabulary, features, pca_dim=6, gmm_components=3)


class TestVocabularyFile(unittest.TestCase):

    def test_save_and_load(self):
        features = _training_features()
        vocab = build_vocabulary(features, pca_dim=6, gmm_components=3, seed=1)
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'vocabulary.txt')
            save_vocabulary(vocab, path)
            loaded = load_vocabulary(path)
        np.testing.assert_array_equal(loaded.pca.basis, vocab.pca.basis)
        np.testing.assert_array_equal(loaded.gmm.variances, vocab.gmm.variances)
        np.testing.assert_array_equal(loaded.kpca.training_vectors, vocab.kpca.training_vectors)
        np.testing.assert_array_equal(loaded.kpca.alphas, vocab.kpca.alphas)
        self.assertEqual(loaded.gmm.log_likelihoods, vocab.gmm.log_likelihoods)
        for f in features:
            self.assertEqual(embed_image(f, loaded), embed_image(f, vocab))

    def test_bad_header(self):
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'vocabulary.txt')
            with open(path, 'w') as f:
                f.write('PARID-VOCABULARY 99\n')
            with self.assertRaises(VocabularyFormatError) as context:
                load_vocabulary(path)
            self.assertIn('version', str(context.exception))

    def test_truncated(self):
        vocab = build_vocabulary(_training_features(), pca_dim=6, gmm_components=3, seed=1)
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'vocabulary.txt')
            save_vocabulary(vocab, path)
            with open(path) as f:
                lines = f.read().splitlines()
            with open(path, 'w') as f:
                f.write('\n'.join(lines[:-3]) + '\n')
            self.assertRaises(VocabularyFormatError, load_vocabulary, path)

    def _rewrite(self, path, key, replacement):
        with open(path) as f:
            lines = [replacement if line.split(' ', 1)[0] == key else line for line in f.read().splitlines()]
        with open(path, 'w') as f:
            f.write('\n'.join(lines) + '\n')

    def test_inconsistent_values(self):
        vocab = build_vocabulary(_training_features(), pca_dim=6, gmm_components=3, seed=1)
        with _tempdir() as tmpdir:
            path = os.path.join(tmpdir, 'vocabulary.txt')
            save_vocabulary(vocab, path)
            self._rewrite(path, 'weights', 'weights 0.5 0.5 0.5')
            with self.assertRaises(VocabularyFormatError) as context:
                load_vocabulary(path)
            self.assertIn('Gmm', str(context.exception))

            save_vocabulary(vocab, path)
            self._rewrite(path, 'requested_dim', 'requested_dim -2')
            self.assertRaises(VocabularyFormatError, load_vocabulary, path)


if __name__ == '__main__':
    unittest.main()
