"""Deterministic labelled transition systems, simulations between them,
and the transformation of concrete schedulers into abstract ones.

The pieces compose in one direction: build or load models (lts,
modelio), combine a client program with an object (composition), drive
the product with a scheduler (scheduler), relate two objects by a
forward or progressive forward simulation (simulation), and carry a
scheduler across that relation while checking the structural facts
that justify the trip (transform).  casestudies holds a worked
lock-free counter where the plain/progressive distinction is visible.
"""

from .composition import ProductLts, ProductState, product
from .errors import (
    AlphabetMismatch,
    BudgetExceeded,
    ContractViolation,
    DepthExhausted,
    LtsimError,
    ModelError,
    ParseError,
    StepNotEnabled,
)
from .lts import (
    IDLE,
    Action,
    ActionKind,
    Alphabet,
    Lasso,
    Lts,
    LtsBuilder,
    Trace,
    check_deterministic,
    idle_complete,
    is_idle_complete,
    parse_action,
    project,
    project_lasso,
    sort_actions,
    validate_lasso,
)
from .modelio import (
    dumps,
    format_lts_text,
    load_model,
    loads,
    lts_from_dict,
    lts_to_dict,
    parse_lts_text,
    to_dot,
)
from .scheduler import (
    STRATEGIES,
    FifoStrategy,
    MaximalStrategy,
    ObjectFirstStrategy,
    Scheduler,
    SchedulerCheck,
    Strategy,
    TableScheduler,
    TraceNode,
    TracePrefixTree,
    check_admitted,
    check_deterministic_scheduler,
    enumerate_traces,
    find_divergence,
    is_consistent,
    make_scheduler,
    register_strategy,
)
from .simulation import (
    ChoiceEntry,
    ForwardResult,
    ProgressiveResult,
    ProgressWitness,
    SimulationCertificate,
    StutterCycle,
    StutterEdge,
    certificate_from_dict,
    certificate_to_dict,
    check_forward,
    check_progressive,
    dumps_certificate,
    stutter_cycle_to_dict,
    sufficient_alpha_bound,
    validate_certificate,
    validate_stutter_cycle,
)
from .transform import (
    EqualityResult,
    LemmaResult,
    MappedTraces,
    S2Scheduler,
    build_f,
    check_all_lemmas,
    check_image_equality,
    check_lemma,
    check_projection_equality,
    construct_s2,
    mapping_m,
)
from .casestudies import (
    CaseStudyReport,
    FaaConfig,
    LlAlternatorStrategy,
    StepReport,
    build_faa_impl,
    build_faa_spec,
    build_program,
    run_counterexample_suite,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "Alphabet",
    "AlphabetMismatch",
    "BudgetExceeded",
    "CaseStudyReport",
    "ChoiceEntry",
    "ContractViolation",
    "DepthExhausted",
    "EqualityResult",
    "FaaConfig",
    "FifoStrategy",
    "ForwardResult",
    "IDLE",
    "Lasso",
    "LemmaResult",
    "LlAlternatorStrategy",
    "Lts",
    "LtsBuilder",
    "LtsimError",
    "MappedTraces",
    "MaximalStrategy",
    "ModelError",
    "ObjectFirstStrategy",
    "ParseError",
    "ProductLts",
    "ProductState",
    "ProgressWitness",
    "ProgressiveResult",
    "S2Scheduler",
    "STRATEGIES",
    "Scheduler",
    "SchedulerCheck",
    "SimulationCertificate",
    "StepNotEnabled",
    "StepReport",
    "Strategy",
    "StutterCycle",
    "StutterEdge",
    "TableScheduler",
    "Trace",
    "TraceNode",
    "TracePrefixTree",
    "build_f",
    "build_faa_impl",
    "build_faa_spec",
    "build_program",
    "certificate_from_dict",
    "certificate_to_dict",
    "check_admitted",
    "check_all_lemmas",
    "check_deterministic",
    "check_deterministic_scheduler",
    "check_forward",
    "check_image_equality",
    "check_lemma",
    "check_progressive",
    "check_projection_equality",
    "construct_s2",
    "dumps",
    "dumps_certificate",
    "enumerate_traces",
    "find_divergence",
    "format_lts_text",
    "idle_complete",
    "is_consistent",
    "is_idle_complete",
    "load_model",
    "loads",
    "lts_from_dict",
    "lts_to_dict",
    "make_scheduler",
    "mapping_m",
    "parse_action",
    "parse_lts_text",
    "product",
    "project",
    "project_lasso",
    "register_strategy",
    "run_counterexample_suite",
    "sort_actions",
    "stutter_cycle_to_dict",
    "sufficient_alpha_bound",
    "to_dot",
    "validate_certificate",
    "validate_lasso",
    "validate_stutter_cycle",
]
