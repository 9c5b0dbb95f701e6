"""Visual-object attribute comparison under truncated latent windows."""
from .data import (ComparisonDataset, comparison_labels, generate_comparison_dataset, load_dataset,
                   sample_pairs, save_dataset, split_samplers)
from .latents import COMPARABLE, LATENT_NAMES, LatentSampler, LatentSpec, canonical_attr, window_indices
from .models import (BaselineMlpModel, ConvEncoder, MlpEncoder, PairComparisonModel, build_encoder,
                     build_pair_model, pair_forward, pretrain_encoder)
from .render import ObservationModel, render_observation
from .train import ObjCompConfig, accuracy, make_splits, train_and_eval_objcomp, train_objcomp_once

__all__ = [
    "BaselineMlpModel", "COMPARABLE", "ComparisonDataset", "ConvEncoder", "LATENT_NAMES", "LatentSampler",
    "LatentSpec", "MlpEncoder", "ObjCompConfig", "ObservationModel", "PairComparisonModel", "accuracy",
    "build_encoder", "build_pair_model", "canonical_attr", "comparison_labels", "generate_comparison_dataset",
    "load_dataset", "make_splits", "pair_forward", "pretrain_encoder", "render_observation", "sample_pairs",
    "save_dataset", "split_samplers", "train_and_eval_objcomp", "train_objcomp_once", "window_indices",
]
