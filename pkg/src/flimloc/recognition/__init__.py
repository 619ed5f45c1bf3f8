"""Interference-mutant recognition: features, prompts, recognizers, datasets."""

from .dataset import export_training_set, label_ground_truth, training_records
from .engine import DecisionMatrix, Verdict, recognize, submittable
from .features import FailureInfo, FeatureVector, extract_features, text_diff
from .prompt import Prompt, build_prompt, default_template, load_template, parse_verdict, template_fields
from .recognizers import (
    API_KEY_ENV,
    NullRecognizer,
    OracleRecognizer,
    Recognizer,
    RemoteRecognizer,
    ReplayRecognizer,
    Request,
    make_recognizer,
)

__all__ = [
    "API_KEY_ENV",
    "DecisionMatrix",
    "FailureInfo",
    "FeatureVector",
    "NullRecognizer",
    "OracleRecognizer",
    "Prompt",
    "Recognizer",
    "RemoteRecognizer",
    "ReplayRecognizer",
    "Request",
    "Verdict",
    "build_prompt",
    "default_template",
    "export_training_set",
    "extract_features",
    "label_ground_truth",
    "load_template",
    "make_recognizer",
    "parse_verdict",
    "recognize",
    "submittable",
    "template_fields",
    "text_diff",
    "training_records",
]
