"""Tsetlin machine with a falsification index for fast clause evaluation."""

from .clause_index import (InclusionIndex, WorkCounters, apply_flips, build_index, estimate_memory,
                           index_insert, index_remove, indexed_class_scores, indexed_predict,
                           load_bank, save_bank)
from .errors import ChecksumError, ConfigError, DatasetFormatError, IntegrityError, ShapeError
from .machine import TsetlinMachine
from .tm_core import (ClauseBank, Flip, Signal, TMConfig, class_score, class_scores, evaluate_clause,
                      predict_binary, predict_multiclass, ta_apply, train_step)

__version__ = "0.1.0"
