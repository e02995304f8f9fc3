"""Indicator-aware relation extraction for SemEval-2010 Task 8."""

from .corpus import (
    LABELS,
    N_LABELS,
    OTHER_ID,
    RELATIONS,
    AnnotatedInstance,
    AnnotatedToken,
    RawInstance,
    RelationLabel,
    parse_label,
    parse_semeval_file,
)
from .indicator import IndicatorSequence, extract_indicator
from .sequencing import AggregateSequence, Vocabulary, assemble, wordpiece_tokenize
from .model import LossConfig, build_model, compute_loss, select_negative_class
from .training import TrainConfig, load_checkpoint, save_checkpoint, set_seed, train
from .evaluation import ClassReport, run_ablation, score_official

__version__ = "0.1.0"
