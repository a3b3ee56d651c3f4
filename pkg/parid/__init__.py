from __future__ import absolute_import

from . import parid_logging
from .features import AffineFrame, FeatureFileError, ImageFeatures, parse_feature_file, write_feature_file
from .manifest import Manifest, ManifestEntry, ManifestError, load_manifest, write_manifest
from .feature_cache import FeatureCache
from .synth import Constellation, Observation, SynthConfig, generate_benchmark, generate_individual, read_homography, render_observation
from .pca import DimensionMismatch, InsufficientData, PcaModel, apply_pca, fit_pca
from .gmm import Gmm, fit_gmm, gmm_posteriors
from .embedding import Embedding
from .kpca import KpcaModel, RankDeficiencyWarning, apply_kpca, fit_kpca
from .encode import cosine_distance, embed_image, fisher_encode, fisher_vector, power_l2_normalize, read_embeddings, write_embeddings
from .vocabulary import Vocabulary, VocabularyFormatError, build_vocabulary, load_vocabulary, save_vocabulary
from .geometry import (
    Correspondence,
    DegenerateConfiguration,
    GeometryParams,
    GeomVerdict,
    Homography,
    dlt_homography,
    geometric_similarity,
    match_descriptors,
    normalize_points,
    ransac_homography,
    write_match_dump)
from .combine import CombineParams, combine_exponential, combine_polynomial
from .database import EmptyDatabase, MatchCandidate, RankedResult, ReidDatabase, ReidEntry, VerdictCache, query_database, score_pair
from .evaluation import (
    EvalReport,
    Evaluation,
    MissingTruthLabel,
    NoQueries,
    compare_reports,
    evaluate_leave_one_out,
    evaluate_split,
    topk_accuracy,
    write_reports_csv)
from .workflow import QueryWorkflow
from .config import RunConfig
from .cli import main, cli_main
from .version_info import _version as version
