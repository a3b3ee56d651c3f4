from .parid_logging import logging, levels as log_levels, configure as configure_logging

import argparse
import os
import sys

import numpy as np

from .combine import APPEARANCE_ONLY, EXPONENTIAL, GEOMETRY_ONLY, POLYNOMIAL, RULE_ALIASES, RULES
from .config import PRESETS, MissingArtifact, RunConfig
from .database import EmptyDatabase, ReidDatabase, query_database
from .encode import EmbeddingStoreError, embed_image, read_embeddings, write_embeddings
from .evaluation import Evaluation, LEVELS, MissingTruthLabel, NoQueries, compare_reports, format_grid, write_reports_csv
from .feature_cache import FeatureCache
from .features import FeatureFileError, parse_feature_file
from .geometry import OMEGA_DENOMINATORS, RESIDUALS, geometric_similarity, write_match_dump
from .manifest import ManifestError, load_manifest
from .pca import DimensionMismatch, InsufficientData
from .synth import SynthConfig, generate_benchmark
from .version_info import _version as version
from .vocabulary import VocabularyFormatError, build_vocabulary, load_vocabulary, save_vocabulary

_logger = logging.getLogger(__name__)

EXIT_SUCCESS    = 0
EXIT_FAILURE    = 1
EXIT_VALIDATION = 2

VOCABULARY_NAME          = 'vocabulary.txt'
DATABASE_EMBEDDINGS_NAME = 'embeddings-database.txt'
QUERY_EMBEDDINGS_NAME    = 'embeddings-query.txt'

EVALUATED_RULES = (APPEARANCE_ONLY, GEOMETRY_ONLY, POLYNOMIAL, EXPONENTIAL)

_VALIDATION_ERRORS = (ManifestError, InsufficientData, DimensionMismatch, MissingArtifact, EmptyDatabase, NoQueries, MissingTruthLabel, ValueError)
# LinAlgError derives from ValueError, so failures are matched first
_FAILURES          = (OSError, FeatureFileError, VocabularyFormatError, EmbeddingStoreError, np.linalg.LinAlgError, FloatingPointError)


def _ranged(kind, low=None, high=None, high_inclusive=True):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError('invalid %s value: %r' % (kind.__name__, text))
        if low is not None and value < low:
            raise argparse.ArgumentTypeError('%r is below the minimum %r' % (value, low))
        if high is not None and (value > high or (not high_inclusive and value == high)):
            raise argparse.ArgumentTypeError('%r is above the %s %r' % (value, 'maximum' if high_inclusive else 'exclusive maximum', high))
        return value
    return parse


def _add_common(parser):
    parser.add_argument('--seed', type=_ranged(int, low=0), default=0, help='Global seed for every random choice (default: %(default)s)')
    parser.add_argument('--log-level', required=False, choices=log_levels, default='INFO')


def _add_vocabulary_input(parser, required=True):
    parser.add_argument('--manifest', required=required, help='Manifest CSV listing images, labels, roles and feature files')
    parser.add_argument('--vocab', required=required, help='Vocabulary file written by `build-vocab\'')


def _add_search(parser):
    parser.add_argument('--rule', choices=sorted(RULE_ALIASES) + list(RULES), default=EXPONENTIAL, help='Combination rule (default: %(default)s)')
    parser.add_argument('--a', type=_ranged(float, low=0.0), default=2.0, help='Exponent of the polynomial rule (default: %(default)s)')
    parser.add_argument('--inlier-thresh', type=_ranged(float, low=0.0), default=None, help='RANSAC inlier threshold in normalized coordinates (default: 0.1, or the preset)')
    parser.add_argument('--shortlist', type=_ranged(int, low=0), default=50, help='Database images verified geometrically, 0 for all (default: %(default)s)')
    parser.add_argument('--mutual', dest='mutual', action='store_true', default=True, help='Keep mutual nearest neighbours only (default)')
    parser.add_argument('--no-mutual', dest='mutual', action='store_false', help='Keep one-way nearest neighbours')
    parser.add_argument('--max-desc-dist', type=_ranged(float, low=0.0, high=2.0), default=0.9, help='Largest cosine distance of a descriptor match (default: %(default)s)')
    parser.add_argument('--ratio', type=_ranged(float, low=0.0, high=1.0), default=None, help='Enable a nearest neighbour ratio test with this ratio')
    parser.add_argument('--residual', choices=RESIDUALS, default='forward', help='Reprojection residual for the inlier test (default: %(default)s)')
    parser.add_argument('--omega-denominator', choices=OMEGA_DENOMINATORS, default='matches', help='Inlier ratio relative to matches or to all query points (default: %(default)s)')
    parser.add_argument('--ransac-iters', type=_ranged(int, low=1), default=2000, help='Upper bound on RANSAC hypotheses (default: %(default)s)')
    parser.add_argument('--workers', type=_ranged(int, low=1), default=1, help='Concurrent query workers (default: %(default)s)')


def _parser():
    parser = argparse.ArgumentParser(prog='parid', description='Pattern-based animal re-identification.')
    parser.add_argument('--version', action='version', version=version.describe())
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    synth = commands.add_parser('synth', help='Generate a synthetic benchmark')
    _add_common(synth)
    synth.add_argument('--out', required=True, help='Output directory')
    synth.add_argument('--individuals', type=_ranged(int, low=1), default=25)
    synth.add_argument('--views', type=_ranged(int, low=1), default=6, help='Views per individual, the first is the database image')
    synth.add_argument('--points', type=_ranged(int, low=1), default=80, help='Pattern points per individual')
    synth.add_argument('--descriptor-dim', type=_ranged(int, low=1), default=128)
    synth.add_argument('--noise', type=_ranged(float, low=0.0), default=0.05, help='Descriptor noise standard deviation')
    synth.add_argument('--dropout', type=_ranged(float, low=0.0, high=1.0, high_inclusive=False), default=0.2, help='Probability that a point is not observed')
    synth.add_argument('--clutter', type=_ranged(float, low=0.0), default=0.2, help='Clutter points as a fraction of pattern points')
    synth.add_argument('--max-perspective', type=_ranged(float, low=0.0, high=0.5, high_inclusive=False), default=0.15)
    synth.add_argument('--image-size', type=_ranged(float, low=1.0), default=256.0)

    vocab = commands.add_parser('build-vocab', help='Train PCA, GMM and kernel PCA on database images')
    _add_common(vocab)
    vocab.add_argument('--manifest', required=True)
    vocab.add_argument('--vocab', default=None, help=f'Output vocabulary file (default: OUT/{VOCABULARY_NAME})')
    vocab.add_argument('--out', default='.', help='Output directory')
    vocab.add_argument('--gmm-k', type=_ranged(int, low=1), default=16, help='GMM components (default: %(default)s)')
    vocab.add_argument('--pca-dim', type=_ranged(int, low=1), default=64, help='PCA output dimension (default: %(default)s)')
    vocab.add_argument('--kpca-dim', type=_ranged(int, low=1), default=None, help='Kernel PCA output dimension (default: min(N - 1, 512))')
    vocab.add_argument('--alpha', type=_ranged(float, low=0.0, high=1.0), default=0.5, help='Power normalization exponent (default: %(default)s)')
    vocab.add_argument('--no-whiten', dest='whiten', action='store_false', default=True, help='Skip PCA whitening')
    vocab.add_argument('--em-iters', type=_ranged(int, low=1), default=200, help='Maximum EM iterations (default: %(default)s)')
    vocab.add_argument('--all-images', action='store_true', help='Train on every manifest image, not only the database images')

    encode = commands.add_parser('encode', help='Write embeddings of all manifest images')
    _add_common(encode)
    _add_vocabulary_input(encode)
    encode.add_argument('--out', default='.', help='Output directory')

    query = commands.add_parser('query', help='Rank database individuals for one feature file')
    _add_common(query)
    _add_vocabulary_input(query)
    _add_search(query)
    query.add_argument('features', help='PATF feature file of the query image')
    query.add_argument('--embeddings', default=None, help='Database embeddings written by `encode\' (computed when omitted)')
    query.add_argument('--topk', type=_ranged(int, low=1), default=5, help='Distinct individuals to print (default: %(default)s)')
    query.add_argument('--dump-matches', default=None, metavar='DIR', help='Write the correspondences of every verified pair to DIR')

    evaluate = commands.add_parser('evaluate', help='Evaluate all combination rules on a manifest')
    _add_common(evaluate)
    _add_vocabulary_input(evaluate)
    _add_search(evaluate)
    evaluate.add_argument('--preset', choices=sorted(PRESETS), default=None, help='Protocol and inlier threshold of a reference data set')
    evaluate.add_argument('--protocol', choices=('split', 'loo'), default=None, help='Evaluation protocol (default: split, or the preset)')
    evaluate.add_argument('--topk', type=_ranged(int, low=1), default=5, help='Largest k of the top-k table (default: %(default)s)')
    evaluate.add_argument('--level', choices=LEVELS, default='individual', help='Count hits over distinct individuals or images (default: %(default)s)')
    evaluate.add_argument('--per-query-csv', default=None, metavar='PATH', help='Write per-query records of every rule to PATH')
    return parser


def cmd_synth(args):
    config = SynthConfig(
        seed                   = args.seed,
        n_individuals          = args.individuals,
        views_per_individual   = args.views,
        points_per_individual  = args.points,
        descriptor_dim         = args.descriptor_dim,
        descriptor_noise_sigma = args.noise,
        dropout_rate           = args.dropout,
        clutter_rate           = args.clutter,
        max_perspective        = args.max_perspective,
        image_size             = args.image_size)
    manifest = generate_benchmark(config, args.out)
    print(manifest.path)
    return EXIT_SUCCESS


def cmd_build_vocab(args):
    config   = RunConfig.from_args(args)
    manifest = load_manifest(config.require_manifest())
    entries  = tuple(manifest) if args.all_images else manifest.database_entries()
    if not entries:
        raise EmptyDatabase('manifest %s has no database entries' % manifest.path)
    vocab = build_vocabulary(
        FeatureCache().get_all(entries),
        pca_dim        = config.pca_dim,
        gmm_components = config.gmm_components,
        kpca_dim       = config.kpca_dim,
        whiten         = config.whiten,
        alpha          = config.alpha,
        seed           = config.seed,
        max_iters      = args.em_iters)
    path = args.vocab or config.output_path(VOCABULARY_NAME)
    save_vocabulary(vocab, path)
    print(path)
    return EXIT_SUCCESS


def cmd_encode(args):
    config   = RunConfig.from_args(args)
    manifest = load_manifest(config.require_manifest())
    vocab    = load_vocabulary(config.require_vocabulary())
    cache    = FeatureCache()
    for name, entries in ((DATABASE_EMBEDDINGS_NAME, manifest.database_entries()), (QUERY_EMBEDDINGS_NAME, manifest.query_entries())):
        path = config.output_path(name)
        write_embeddings(((f.image_id, embed_image(f, vocab)) for f in cache.get_all(entries)), path)
        _logger.info('Wrote %d embeddings to %s', len(entries), path)
        print(path)
    return EXIT_SUCCESS


def _database_embeddings(path, entries):
    if path is None:
        return None
    if not os.path.isfile(path):
        raise MissingArtifact('embeddings', path)
    embeddings = read_embeddings(path)
    missing = [entry.image_id for entry in entries if entry.image_id not in embeddings]
    if missing:
        raise MissingArtifact('embeddings of database images %s in' % ', '.join(missing), path)
    return embeddings


def cmd_query(args):
    config   = RunConfig.from_args(args)
    manifest = load_manifest(config.require_manifest())
    vocab    = load_vocabulary(config.require_vocabulary())
    if not os.path.isfile(args.features):
        raise MissingArtifact('feature file', args.features)
    db_entries = manifest.database_entries()
    if not db_entries:
        raise EmptyDatabase('manifest %s has no database entries' % manifest.path)

    features = FeatureCache().get_all(db_entries)
    database = ReidDatabase.build(vocab, features, embeddings=_database_embeddings(args.embeddings, db_entries))
    query    = parse_feature_file(args.features)
    result   = query_database(database, query, config.combine)

    print('%-4s  %-16s  %-20s  %-10s  %5s  %-8s  %s' % ('rank', 'individual', 'image', 'd_L', 'n', 'omega', 'd_C'))
    for rank, identity in enumerate(result.top(args.topk), start=1):
        candidate = result.best_candidate(identity)
        print('%-4d  %-16s  %-20s  %-10.6f  %5d  %-8.4f  %.6g' % (
            rank, identity, candidate.db_image_id, candidate.d_L, candidate.n, candidate.omega, candidate.d_C))

    if args.dump_matches is not None and config.combine.uses_geometry:
        os.makedirs(args.dump_matches, exist_ok=True)
        for candidate in result.candidates:
            if candidate.verified:
                verdict = geometric_similarity(query, database.entry(candidate.db_image_id).features, config.combine.geometry)
                write_match_dump(verdict, os.path.join(args.dump_matches, '%s--%s.txt' % (query.image_id, candidate.db_image_id)))
    return EXIT_SUCCESS


def cmd_evaluate(args):
    config     = RunConfig.from_args(args)
    manifest   = load_manifest(config.require_manifest())
    vocab      = load_vocabulary(config.require_vocabulary())
    evaluation = Evaluation(manifest, vocab, workers=config.workers, level=config.level)
    reports    = [evaluation.run(config.protocol, config.combine.with_rule(rule), config.k_max) for rule in EVALUATED_RULES]

    print(format_grid(reports))
    baseline = reports[0]
    for report in reports[1:]:
        comparison = compare_reports(baseline, report)
        print('%s vs %s: %d gained, %d lost at top-1' % (report.rule, baseline.rule, len(comparison.gained), len(comparison.lost)))
    if baseline.excluded:
        print('excluded %d queries: %s' % (len(baseline.excluded), baseline.excluded_reason))

    if args.per_query_csv is not None:
        write_reports_csv(reports, args.per_query_csv)
        _logger.info('Wrote per-query records to %s', args.per_query_csv)
    return EXIT_SUCCESS


_COMMANDS = {
    'synth'       : cmd_synth,
    'build-vocab' : cmd_build_vocab,
    'encode'      : cmd_encode,
    'query'       : cmd_query,
    'evaluate'    : cmd_evaluate}


def main(argv=None):
    '''
    :return: exit status, 0 on success, 1 on I/O or numeric failure, 2 on invalid input
    '''
    args = _parser().parse_args(args=argv)
    configure_logging(args.log_level)
    _logger.debug('Running %s with %s', args.command, args)
    try:
        return _COMMANDS[args.command](args)
    except _FAILURES as e:
        _logger.error('%s: %s', type(e).__name__, e)
        _logger.debug('Exception info: %s', e, exc_info=True)
        return EXIT_FAILURE
    except _VALIDATION_ERRORS as e:
        _logger.error('%s', e)
        _logger.debug('Exception info: %s', e, exc_info=True)
        return EXIT_VALIDATION


def cli_main():
    sys.exit(main())
