"""Delay-aware bootstrap ensembles for multivariate time series with misaligned features."""

from .bootstrap import BlockBootstrapSpec, BootstrapSample, block_bootstrap_sample
from .dataset import (AlignedDataset, DelayVector, SplitSpec, TimeSeriesDataset, align, load_csv,
                      moving_average, split)
from .ensemble import (PointModel, PredictionDistribution, TsmbConfig, TsmbModel, perturbed_train,
                       tdb_train, tde_point_train, tsmb_predict, tsmb_train)
from .errors import (AlignmentError, ConfigError, DataError, DegenerateScoreWarning, NumericalError,
                     OptimizationError, TsmbError)
from .evaluation import auc, coverage, coverage_for_classification, delay_distribution, r_squared
from .injection import FixedDelaySpec, StochasticDelaySpec, inject_fixed, inject_stochastic, synth_dataset
from .learners import LearnerSpec, fit, predict
from .optimizer import SearchBox, direct_maximize
from .scores import ScoreFunction, gcc_score, knn_mutual_information, tdmi_score

__version__ = "0.1.0"
