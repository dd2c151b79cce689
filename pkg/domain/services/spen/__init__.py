"""
🧮 SPEN SERVICES
===============
Micro SPEN language model: ops, predictors, forward/backward, streaming
inference, training and gradient checking.
"""

from .gradient_check import GradientCheckReport, check_gradients
from .inference import SpenInferenceSession, StreamResult, check_train_inference_equivalence, perplexity_stream
from .model import (
    LossBreakdown,
    block_forward,
    evaluate_loss,
    forward_pass,
    init_model,
    loss_and_grads,
    model_forward,
)
from .ops import load_balance_loss, topk_mask
from .predictors import PredictorHead, normalize_trace
from .synthetic_corpus import arithmetic_text, grammar_text, unigram_entropy
from .tokenizer import CharTokenizer
from .trainer import MicroTrainer, TrainingResult, held_out_ce, train_micro

__all__ = [
    "CharTokenizer",
    "GradientCheckReport",
    "LossBreakdown",
    "MicroTrainer",
    "PredictorHead",
    "SpenInferenceSession",
    "StreamResult",
    "TrainingResult",
    "arithmetic_text",
    "block_forward",
    "check_gradients",
    "check_train_inference_equivalence",
    "evaluate_loss",
    "forward_pass",
    "grammar_text",
    "held_out_ce",
    "init_model",
    "load_balance_loss",
    "loss_and_grads",
    "model_forward",
    "normalize_trace",
    "perplexity_stream",
    "topk_mask",
    "train_micro",
]
