"""relinduce: induce lexical relations from a masked-language-model oracle."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    InvalidQueryError,
    LeakageError,
    OracleError,
    OracleProtocolError,
    OracleTransportError,
    RelinduceError,
    StageError,
    TrainingDivergedError,
)
from .mining import (
    RelationSeed,
    Template,
    WordPair,
    instantiate,
    instantiate_tokens,
    mine_sentences,
    sentence_to_template,
)
from .filtering import ScoredTemplate, score_fast, score_slow, select_templates
from .negatives import LabeledPair, gen_test_negatives, gen_train_negatives
from .model import (
    ClassifierHead,
    PairScore,
    RelationModel,
    TrainConfig,
    aggregate_max,
    aggregate_sum,
    predict_links,
    predict_pair,
    train,
    tune_lambda,
)
from .oracle import (
    CachedOracle,
    FixtureOracle,
    FixtureWorld,
    LmOracle,
    MaskedQuery,
    RemoteOracle,
    SentenceVector,
    TopKPrediction,
)
from .config import RunConfig, derive_seed, parse_config_file
from .evaluation import (
    RelationDataset,
    RelationResult,
    aggregate_results,
    compute_metrics,
    evaluate_relation,
    load_dataset,
    split_relation,
)
from .pipeline import run_pipeline
from .report import render_json, render_table, write_report

__all__ = [
    "__version__",
    "WordPair",
    "Template",
    "RelationSeed",
    "mine_sentences",
    "sentence_to_template",
    "instantiate",
    "instantiate_tokens",
    "ScoredTemplate",
    "score_fast",
    "score_slow",
    "select_templates",
    "LabeledPair",
    "gen_train_negatives",
    "gen_test_negatives",
    "TrainConfig",
    "ClassifierHead",
    "RelationModel",
    "PairScore",
    "train",
    "predict_pair",
    "predict_links",
    "aggregate_max",
    "aggregate_sum",
    "tune_lambda",
    "LmOracle",
    "MaskedQuery",
    "TopKPrediction",
    "SentenceVector",
    "FixtureWorld",
    "FixtureOracle",
    "RemoteOracle",
    "CachedOracle",
    "RelinduceError",
    "ConfigError",
    "DataError",
    "LeakageError",
    "InvalidQueryError",
    "OracleError",
    "OracleTransportError",
    "OracleProtocolError",
    "TrainingDivergedError",
    "StageError",
    "RunConfig",
    "derive_seed",
    "parse_config_file",
    "RelationDataset",
    "RelationResult",
    "load_dataset",
    "split_relation",
    "evaluate_relation",
    "compute_metrics",
    "aggregate_results",
    "run_pipeline",
    "render_table",
    "render_json",
    "write_report",
]
