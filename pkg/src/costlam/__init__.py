"""A compilation chain for a labelled call-by-value lambda-calculus.

The package compiles labelled functional programs down to a routine
form while preserving their label traces, so that per-label costs
measured on the compiled code price the source-level program exactly:

* ``terms`` / ``parser`` / ``printer`` — the term language, its
  concrete syntax, and renderers;
* ``semantics`` — small-step interpreters for every stage, collecting
  label traces;
* ``transform`` — labelling, the CPS translation, value naming,
  closure conversion, and hoisting;
* ``typesys`` — type checking for every stage, including the
  existential closure types, and the preservation/subject-reduction
  checkers;
* ``cost`` — the cost-monoid instrumentation, routine emission, the
  per-label cost table, and the soundness/precision checks;
* ``regions`` — region-annotated routines, the region-aware machine
  with fault detection, and the region/effect checker;
* ``testgen`` / ``harness`` — the deterministic term generator and the
  property suites built on it;
* ``cli`` — the ``costlam`` batch command.
"""

from .terms import (
    App,
    FragmentError,
    HoistProgram,
    Lam,
    Let,
    PostLabel,
    PreLabel,
    Proj,
    Term,
    Tuple,
    Var,
    alpha_eq,
    erase,
    free_vars,
    labels_of,
    size,
    subst,
)
from .parser import (
    ParseError,
    parse_context,
    parse_program,
    parse_region_program,
    parse_region_term,
    parse_term,
    parse_type,
)
from .printer import (
    pretty_region_term,
    pretty_term,
    show_program,
    show_region_program,
    show_region_term,
    show_term,
    show_type,
)
from .semantics import (
    DEFAULT_FUEL,
    EvalResult,
    Status,
    eval_trace,
    is_halt_state,
    step_cps,
    step_source,
    step_vn,
    trace_lines,
)
from .transform import (
    CompileResult,
    HoistBlocked,
    Labelling,
    WellLabelled,
    closure_convert,
    compile_term,
    cps,
    hoist,
    hoist_steps,
    label_init,
    matches_labelled_program,
    readback,
    size_measure,
    to_value_named,
    well_labelled,
)
from .typesys import (
    Arrow,
    Exists,
    ExistsAt,
    ForallArrow,
    Product,
    ProductAt,
    R,
    TVar,
    Type,
    TypingError,
    cc_ctx,
    cc_type,
    check_subject_reduction,
    check_type_preservation,
    cmp_type,
    cps_ctx,
    cps_type,
    neg,
    type_alpha_eq,
    typecheck_hoist,
    typecheck_source,
    typecheck_vn,
)
from .cost import (
    NAT,
    WORDS,
    CertifyReport,
    CostMonoid,
    CostTable,
    RtlProgram,
    Verdict,
    certify_cost,
    check_precise,
    check_sound,
    costof,
    costof_table,
    emit_rtl,
    eval_instrumented,
    instrument,
)
from .regions import (
    DEFAULT_REGION,
    FaultKind,
    REvalResult,
    RegionProgram,
    RegionStatus,
    effect_check,
    effect_check_program,
    region_enrich,
    region_erase_program,
    reval_trace,
    step_region,
)
from .testgen import DEFAULT_CTX, Gen, GenConfig, gen_terms, minimize
from .harness import SUITES, SuiteReport, run_suite
from .cli import PipelineReport, main, run_cli

__version__ = "0.1.0"

__all__ = [
    # terms
    "Term", "Var", "Lam", "App", "Let", "Tuple", "Proj", "PreLabel", "PostLabel",
    "HoistProgram", "FragmentError", "alpha_eq", "erase", "free_vars", "labels_of",
    "size", "subst",
    # parser / printer
    "ParseError", "parse_term", "parse_type", "parse_program", "parse_region_term",
    "parse_region_program", "parse_context", "show_term", "pretty_term", "show_type",
    "show_program", "show_region_term", "pretty_region_term", "show_region_program",
    # semantics
    "DEFAULT_FUEL", "EvalResult", "Status", "eval_trace", "is_halt_state",
    "step_source", "step_cps", "step_vn", "trace_lines",
    # transform
    "Labelling", "WellLabelled", "label_init", "well_labelled", "cps",
    "to_value_named", "readback", "closure_convert", "hoist", "hoist_steps",
    "HoistBlocked", "size_measure", "compile_term", "CompileResult",
    "matches_labelled_program",
    # typesys
    "Type", "TVar", "R", "Arrow", "Product", "Exists", "ForallArrow", "ProductAt",
    "ExistsAt", "TypingError", "typecheck_source", "typecheck_vn", "typecheck_hoist",
    "type_alpha_eq", "neg", "cps_type", "cps_ctx", "cc_type", "cc_ctx", "cmp_type",
    "check_type_preservation", "check_subject_reduction",
    # cost
    "CostMonoid", "NAT", "WORDS", "CostTable", "costof", "instrument",
    "eval_instrumented", "emit_rtl", "RtlProgram", "costof_table", "check_sound",
    "check_precise", "certify_cost", "CertifyReport", "Verdict",
    # regions
    "DEFAULT_REGION", "RegionProgram", "RegionStatus", "REvalResult", "FaultKind",
    "region_enrich", "region_erase_program", "effect_check", "effect_check_program",
    "reval_trace", "step_region",
    # testgen / harness
    "DEFAULT_CTX", "GenConfig", "Gen", "gen_terms", "minimize",
    "SUITES", "SuiteReport", "run_suite",
    # cli
    "PipelineReport", "run_cli", "main",
]
