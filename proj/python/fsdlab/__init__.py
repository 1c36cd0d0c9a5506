"""Membership detection laboratory for tiny language models.

Train a small byte-level LM, fine-tune it on a few held-out non-members,
and detect pretraining data through fine-tuned score deviation. The heavy
lifting lives in the C++ extension module; this package re-exports its
surface.
"""

import json as _json

from ._fsdlab import (
    AdapterSpec,
    CorpusConfig,
    FsdlabError,
    LanguageModel,
    ModelConfig,
    TrainConfig,
    auc,
    build_finetune_set,
    decode,
    encode,
    finetune_model,
    fsd_score,
    generate_corpus,
    grad_check,
    init_model,
    load_jsonl,
    load_model,
    load_model_bytes,
    lowercase_score,
    min_k_raw,
    next_token_distributions,
    perplexity,
    run_experiment_json,
    save_jsonl,
    save_model,
    save_model_bytes,
    score,
    select_threshold,
    token_logprobs,
    tpr_at_fpr,
    train_model,
    transform_deletion,
    transform_replacement,
    zlib_entropy,
    zlib_score,
)

__all__ = [
    "AdapterSpec",
    "CorpusConfig",
    "FsdlabError",
    "LanguageModel",
    "ModelConfig",
    "TrainConfig",
    "auc",
    "build_finetune_set",
    "decode",
    "encode",
    "finetune_model",
    "fsd_score",
    "generate_corpus",
    "grad_check",
    "init_model",
    "load_jsonl",
    "load_model",
    "load_model_bytes",
    "lowercase_score",
    "min_k_raw",
    "next_token_distributions",
    "perplexity",
    "run_experiment",
    "run_experiment_json",
    "save_jsonl",
    "save_model",
    "save_model_bytes",
    "score",
    "select_threshold",
    "token_logprobs",
    "tpr_at_fpr",
    "train_model",
    "transform_deletion",
    "transform_replacement",
    "zlib_entropy",
    "zlib_score",
]


def run_experiment(*args, **kwargs):
    """run_experiment_json with the report parsed into a dict."""
    return _json.loads(run_experiment_json(*args, **kwargs))
