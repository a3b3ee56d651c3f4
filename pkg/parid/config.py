import os

from .combine import CombineParams, EXPONENTIAL
from .evaluation import SPLIT, LEAVE_ONE_OUT, resolve_protocol
from .geometry import GeometryParams
from .vocabulary import DEFAULT_ALPHA, DEFAULT_GMM_COMPONENTS, DEFAULT_PCA_DIM

# protocol settings of the two reference data sets
PRESETS = {
    'seal'       : dict(protocol=SPLIT, inlier_threshold=0.1),
    'whaleshark' : dict(protocol=LEAVE_ONE_OUT, inlier_threshold=0.05)}

DEFAULT_INLIER_THRESHOLD = 0.1
DEFAULT_PROTOCOL         = SPLIT
DEFAULT_K_MAX            = 5


class MissingArtifact(Exception):

    def __init__(self, what, path):
        super(MissingArtifact, self).__init__('%s `%s\' does not exist' % (what, path))
        self.what = what
        self.path = path


def _first_set(*values):
    for value in values:
        if value is not None:
            return value
    return None


class RunConfig(object):
    '''
    Everything one command needs: seed, input and output locations, vocabulary
    hyperparameters and the search settings.
    '''

    def __init__(
            self,
            seed=0,
            manifest_path=None,
            vocabulary_path=None,
            out_dir='.',
            combine=None,
            gmm_components=DEFAULT_GMM_COMPONENTS,
            pca_dim=DEFAULT_PCA_DIM,
            kpca_dim=None,
            whiten=True,
            alpha=DEFAULT_ALPHA,
            protocol=DEFAULT_PROTOCOL,
            k_max=DEFAULT_K_MAX,
            level='individual',
            workers=1):
        super(RunConfig, self).__init__()
        self.seed            = seed
        self.manifest_path   = manifest_path
        self.vocabulary_path = vocabulary_path
        self.out_dir         = out_dir
        self.combine         = CombineParams(geometry=GeometryParams(seed=seed)) if combine is None else combine
        self.gmm_components  = gmm_components
        self.pca_dim         = pca_dim
        self.kpca_dim        = kpca_dim
        self.whiten          = whiten
        self.alpha           = alpha
        self.protocol        = resolve_protocol(protocol)
        self.k_max           = k_max
        self.level           = level
        self.workers         = workers

    def require_manifest(self):
        if self.manifest_path is None or not os.path.isfile(self.manifest_path):
            raise MissingArtifact('manifest', self.manifest_path)
        return self.manifest_path

    def require_vocabulary(self):
        if self.vocabulary_path is None or not os.path.isfile(self.vocabulary_path):
            raise MissingArtifact('vocabulary', self.vocabulary_path)
        return self.vocabulary_path

    def output_path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    @staticmethod
    def from_args(args):
        '''
        Build from parsed command line arguments. Explicit flags win over ``--preset``, which
        wins over the defaults.
        '''
        preset = PRESETS[args.preset] if getattr(args, 'preset', None) else {}
        seed   = args.seed
        geometry = GeometryParams(
            inlier_threshold  = _first_set(getattr(args, 'inlier_thresh', None), preset.get('inlier_threshold'), DEFAULT_INLIER_THRESHOLD),
            max_distance      = getattr(args, 'max_desc_dist', 0.9),
            mutual            = getattr(args, 'mutual', True),
            ratio             = getattr(args, 'ratio', None),
            max_iters         = getattr(args, 'ransac_iters', 2000),
            residual          = getattr(args, 'residual', 'forward'),
            omega_denominator = getattr(args, 'omega_denominator', 'matches'),
            seed              = seed)
        combine = CombineParams(
            rule           = getattr(args, 'rule', EXPONENTIAL),
            a              = getattr(args, 'a', 2.0),
            shortlist_size = getattr(args, 'shortlist', 50),
            geometry       = geometry)
        return RunConfig(
            seed            = seed,
            manifest_path   = getattr(args, 'manifest', None),
            vocabulary_path = getattr(args, 'vocab', None),
            out_dir         = getattr(args, 'out', None) or '.',
            combine         = combine,
            gmm_components  = getattr(args, 'gmm_k', DEFAULT_GMM_COMPONENTS),
            pca_dim         = getattr(args, 'pca_dim', DEFAULT_PCA_DIM),
            kpca_dim        = getattr(args, 'kpca_dim', None),
            whiten          = getattr(args, 'whiten', True),
            alpha           = getattr(args, 'alpha', DEFAULT_ALPHA),
            protocol        = _first_set(getattr(args, 'protocol', None), preset.get('protocol'), DEFAULT_PROTOCOL),
            k_max           = getattr(args, 'topk', DEFAULT_K_MAX),
            level           = getattr(args, 'level', 'individual'),
            workers         = getattr(args, 'workers', 1))

    def __repr__(self):
        return 'RunConfig(seed=%d, manifest=%s, vocabulary=%s, out=%s, protocol=%s, k_max=%d, %r)' % (
            self.seed, self.manifest_path, self.vocabulary_path, self.out_dir, self.protocol, self.k_max, self.combine)
