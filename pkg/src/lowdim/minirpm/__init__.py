"""Desk-scale Raven-style matrices and the two-level comparator relation stack."""
from .generate import (GridSpec, RpmBatch, RpmInstance, dump_instances, generate_dataset, generate_rpm_instance,
                       load_instances, sample_rules, stack_instances, verify_instance)
from .models import (RelationBaselineModel, TwoLevelComparatorModel, build_rpm_model, panel_features,
                     two_level_forward)
from .rules import RELATIONS, Rule, check_rules, holds, holds_on_line, meta_target
from .train import MiniRpmConfig, make_rpm_splits, rpm_accuracy, train_and_eval_minirpm, train_minirpm_once

__all__ = [
    "GridSpec", "MiniRpmConfig", "RELATIONS", "RelationBaselineModel", "RpmBatch", "RpmInstance", "Rule",
    "TwoLevelComparatorModel", "build_rpm_model", "check_rules", "dump_instances", "generate_dataset",
    "generate_rpm_instance", "holds", "holds_on_line", "load_instances", "make_rpm_splits", "meta_target",
    "panel_features", "rpm_accuracy", "sample_rules", "stack_instances", "train_and_eval_minirpm",
    "train_minirpm_once", "two_level_forward", "verify_instance",
]
