import unittest

from parid import CombineParams, GeomVerdict, combine_exponential, combine_polynomial
from parid.combine import resolve_rule


def _verdict(n, omega):
    return GeomVerdict(n, omega, None, [])


class TestCombinePolynomial(unittest.TestCase):

    def test_examples(self):
        self.assertLess(abs(combine_polynomial(0.37, 0.0, 2.0) - 0.37), 1e-12)
        self.assertLess(abs(combine_polynomial(0.37, 1.0, 2.0)), 1e-12)
        self.assertLess(abs(combine_polynomial(0.5, 0.5, 2.0) - 0.125), 1e-12)
        self.assertEqual(combine_polynomial(0.4, 0.3, 0.0), 0.4)


class TestCombineExponential(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(combine_exponential(0.42, 0), 1.0)
        self.assertEqual(combine_exponential(0.0, 0), 1.0)
        self.assertLess(abs(combine_exponential(0.9, 10) - 0.34867844010000015), 1e-12)
        self.assertLess(abs(combine_exponential(0.9, 1) - 0.9), 1e-12)

    def test_clamped(self):
        self.assertEqual(combine_exponential(0.0, 2, epsilon=1e-3), 1e-3 ** 2)
        self.assertEqual(combine_exponential(1.7, 3), 1.0)

    def test_monotonic(self):
        values = [combine_exponential(0.6, n) for n in range(1, 20)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        values = [combine_exponential(d, 5) for d in (0.1, 0.3, 0.5, 0.7, 0.9)]
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])))


class TestCombineParams(unittest.TestCase):

    def test_rules(self):
        verdict = _verdict(17, 0.5)
        self.assertEqual(CombineParams(rule='appearance_only').combine(0.3, None), 0.3)
        self.assertEqual(CombineParams(rule='geometry_only').combine(0.3, verdict), -17.0)
        self.assertLess(abs(CombineParams(rule='polynomial').combine(0.3, verdict) - 0.075), 1e-12)
        self.assertLess(abs(CombineParams(rule='exponential').combine(0.3, verdict) - 0.3 ** 17), 1e-12)

    def test_aliases(self):
        self.assertEqual(resolve_rule('exp'), 'exponential')
        self.assertEqual(resolve_rule('geom'), 'geometry_only')
        self.assertEqual(CombineParams(rule='app').rule, 'appearance_only')
        self.assertRaises(ValueError, resolve_rule, 'harmonic')

    def test_with_rule(self):
        params = CombineParams(rule='polynomial', a=3.0, shortlist_size=7, inlier_threshold=0.05)
        other = params.with_rule('exponential')
        self.assertEqual(other.rule, 'exponential')
        self.assertEqual((other.a, other.shortlist_size, other.inlier_threshold), (3.0, 7, 0.05))
        self.assertIs(other.geometry, params.geometry)
        self.assertFalse(params.with_rule('appearance_only').uses_geometry)

    def test_invalid(self):
        self.assertRaises(ValueError, CombineParams, a=-1)
        self.assertRaises(ValueError, CombineParams, shortlist_size=-1)
        self.assertRaises(ValueError, CombineParams, epsilon=0)


if __name__ == '__main__':
    unittest.main()
