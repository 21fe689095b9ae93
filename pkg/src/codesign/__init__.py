"""Semi-decoupled architecture/accelerator co-design search engine."""

__version__ = "0.1.0"

from .accel import (
    Accelerator,
    HwSpaceSample,
    MixedDataflowPlan,
    PerfEstimate,
    SupportRule,
    estimate_layer,
    estimate_mixed,
    estimate_model,
    filter_supported,
    hardware_resource,
    sample_hardware,
    sample_mixed_plans,
    spatial_utilization,
    support_rule_for_space,
)
from .archspace import (
    ArchSpaceSample,
    Architecture,
    CellArchitecture,
    LayerDescriptor,
    MobileArchitecture,
    accuracy_oracle,
    flops,
    generate_cell_space,
    generate_mobile_space,
    layers,
)
from .costmodel import AnalyticalCostModel, CostModel, CountingCostModel, TableCostModel
from .errors import (
    CodesignError,
    ConfigValidationError,
    DegenerateInputError,
    EmptyOptimalSetError,
    InvalidInputError,
    MissingCellsError,
    PartitionInfeasibleError,
    SpaceExhaustedError,
)
from .pareto import (
    ConstraintPoint,
    OptimalSet,
    OptimalSetEntry,
    build_constraint_grid,
    build_optimal_set,
    constrained_argmax,
    select_from_set,
)
from .rankcorr import SrccMatrix, avg_srcc_cdf, ranks, srcc, srcc_matrix
from .search import (
    CoDesignOutcome,
    ComparisonReport,
    DesignConstraints,
    fully_coupled_exhaustive,
    fully_decoupled,
    run_comparison,
    semi_decoupled,
)

__all__ = [name for name in dir() if not name.startswith("_")]
