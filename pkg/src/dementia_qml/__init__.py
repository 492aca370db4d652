"""Variational quantum classifier vs linear SVM for dementia prediction.

A statevector simulator, ZZ-style feature map, COBYLA/SPSA optimizers, an
SMO-trained SVM, preprocessing and an experiment runner, all in numpy.
"""

from .circuits import AnsatzSpec, Circuit, FeatureMapSpec, build_ansatz, build_feature_map
from .data import Dataset, SynthSpec, generate_synthetic, load_csv, make_separable, split
from .errors import ConfigurationError, DataLoadError, TrainingError
from .metrics import ConfusionCounts, MetricsRecord, compute_metrics, confusion, evaluate
from .optimizer import OptimizationResult, OptimizerConfig, minimize
from .preprocess import FeatureRanking, ScalerParams, fit_scaler, rank_features, select_top_k, transform
from .statevector import GateOp, Statevector
from .svm import SvmModel, classify_svm, decision_function, train_svm
from .vqc import TrainConfig, VqcModel, classify, loss, predict_proba, train

__version__ = "0.1.0"
