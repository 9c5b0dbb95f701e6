"""Measurement tools: truncation, sample complexity, Hausdorff distances, exports, pruning, ablations."""
from .ablation import PARAMETERS, ablation_sweep, spearman, sweep_means, write_sweep_csv
from .exports import (EQUAL, difference_grid, export_attribute_landscape, export_function_landscape,
                      export_projection_scatter, scatter_columns, write_records_csv)
from .hausdorff import (DEFAULT_CAP, PointSet, hausdorff_distance, normalise, projected_difference_sets,
                        projected_differences)
from .learnability import (LearnabilityQuery, SampleComplexity, estimate_sample_complexity, m_sweep, minimal_m,
                           objcomp_query, success_indicator)
from .pruning import magnitude_prune, prunable, sparsity
from .truncation import TruncationSpec, truncate_distribution, within_window

__all__ = [
    "DEFAULT_CAP", "EQUAL", "PARAMETERS", "LearnabilityQuery", "PointSet", "SampleComplexity", "TruncationSpec",
    "ablation_sweep", "difference_grid", "estimate_sample_complexity", "export_attribute_landscape",
    "export_function_landscape", "export_projection_scatter", "hausdorff_distance", "m_sweep",
    "magnitude_prune", "minimal_m", "normalise", "objcomp_query", "projected_difference_sets",
    "projected_differences", "prunable", "scatter_columns", "sparsity", "spearman", "success_indicator",
    "sweep_means", "truncate_distribution", "within_window", "write_records_csv", "write_sweep_csv",
]
