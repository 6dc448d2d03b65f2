"""Microstate entropy and dimension for finite metric structures."""
from .dsl import (
    DSLError,
    ExperimentConfig,
    StructureDoc,
    load_experiment,
    load_structure,
    parse_experiment,
    parse_structure,
    serialize,
)
from .entropy import (
    EntropyEstimate,
    EntropyTable,
    RSpec,
    Schedule,
    TailStatistic,
    dimension,
    entropy,
    h_finite,
    h_over_lattice,
    relative_dimension,
    relative_entropy,
)
from .experiments import ScenarioResult, emit_plot_data, run_bowen, run_shannon, run_sofic_dim
from .microstates import (
    BudgetExceeded,
    Microstate,
    MicrostateSpec,
    check_microstate,
    count_bowen_microstates,
    count_partition_microstates,
    enumerate_microstates,
    enumerate_partition_microstates,
    sample_microstates,
)
from .packing import PackingResult, max_separated, min_dense, packing_number_of_microstates
from .structures import (
    FiniteStructure,
    SoficMap,
    StructureError,
    build_dyn_measure_algebra,
    build_group,
    build_measure_algebra,
    build_sym,
    check_structure,
    cyclic_group,
    parse_sofic_map,
)
from .terms import Signature, Term, TermError, closure, eval_term, materialize_terms, parse_term

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "DSLError",
    "EntropyEstimate",
    "EntropyTable",
    "ExperimentConfig",
    "FiniteStructure",
    "Microstate",
    "MicrostateSpec",
    "PackingResult",
    "RSpec",
    "ScenarioResult",
    "Schedule",
    "Signature",
    "SoficMap",
    "StructureDoc",
    "StructureError",
    "TailStatistic",
    "Term",
    "TermError",
    "build_dyn_measure_algebra",
    "build_group",
    "build_measure_algebra",
    "build_sym",
    "check_microstate",
    "check_structure",
    "closure",
    "count_bowen_microstates",
    "count_partition_microstates",
    "cyclic_group",
    "dimension",
    "emit_plot_data",
    "entropy",
    "enumerate_microstates",
    "enumerate_partition_microstates",
    "eval_term",
    "h_finite",
    "h_over_lattice",
    "load_experiment",
    "load_structure",
    "materialize_terms",
    "max_separated",
    "min_dense",
    "packing_number_of_microstates",
    "parse_experiment",
    "parse_sofic_map",
    "parse_structure",
    "parse_term",
    "relative_dimension",
    "relative_entropy",
    "run_bowen",
    "run_shannon",
    "run_sofic_dim",
    "sample_microstates",
    "serialize",
]
