"""Transition-based parsers, their inherent displacement distributions, and bias analysis."""
from .metrics import CorrelationResult, UasScore, delta_uas, emd, pairwise_deltas, pearson, uas
from .parser import Model, load_model, parse, save_model, static_oracle, train
from .sampler import (EmdEstimate, SamplerConfig, enumerate_inherent, estimate_emd, random_walk,
                      sample_inherent_bin)
from .transitions import SYSTEM_NAMES, Transition, get_system
from .treebank import (DEFAULT_BINS, BinSpec, DisplacementDistribution, Sentence, Token, Treebank,
                       observed_distribution, parse_conllu, read_conllu)

__version__ = "0.1.0"
