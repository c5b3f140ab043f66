"""Dataset, annotation and model persistence, plus the synthetic generator."""

from .dataset import DEFAULT_MAX_CANDIDATES, dump_record, load_dataset, parse_record, save_dataset
from .models import FORMAT_NAME, FORMAT_VERSION, load_model, model_from_dict, model_to_dict, save_model
from .synth import SynthConfig, SynthOracle, graded_benchmark, synth_generate
from .voc import parse_voc_annotation

__all__ = [
    "DEFAULT_MAX_CANDIDATES",
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "SynthConfig",
    "SynthOracle",
    "dump_record",
    "graded_benchmark",
    "load_dataset",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "parse_record",
    "parse_voc_annotation",
    "save_dataset",
    "save_model",
    "synth_generate",
]
