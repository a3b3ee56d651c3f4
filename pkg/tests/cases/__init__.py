from __future__ import absolute_import

from .test_features import TestAffineFrame, TestParseFeatureFile, TestWriteFeatureFile
from .test_manifest import TestLoadManifest, TestFeatureCache
from .test_synth import TestSynthConfig, TestGenerateIndividual, TestRenderObservation, TestGenerateBenchmark
from .test_pca import TestFitPca
from .test_gmm import TestGmm, TestFitGmm
from .test_kpca import TestFitKpca
from .test_encode import TestFisherVector, TestPowerL2Normalize, TestCosineDistance, TestEmbedImage, TestIndividualSeparation, TestEmbeddingStore
from .test_vocabulary import TestBuildVocabulary, TestVocabularyFile
from .test_geometry import TestNormalizePoints, TestHomography, TestDltHomography, TestMinimalHypotheses, TestRansacHomography, TestMatchDescriptors, TestGeometricSimilarity, TestCrossIndividualRates
from .test_combine import TestCombinePolynomial, TestCombineExponential, TestCombineParams
from .test_database import TestRankedResult, TestQueryDatabase
from .test_evaluation import TestTopkAccuracy, TestReports, TestProtocols, TestSyntheticBenchmark
from .test_workflow import TestQueryWorkflow, TestThreadingUtilities
from .test_cli import TestSynthCommand, TestPipeline
