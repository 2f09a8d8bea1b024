"""Computable interval dynamics from decidable binary trees.

Builds increasing self-maps of [0, 1] whose fixed points realize a coded
path set, synthesizes explicit conjugacies between two such maps from an
order isomorphism of the path sets, and demonstrates that the conjugacy
data answers membership queries for an enumerated set's complement.
"""

from .cantor import (
    ALL_ONES,
    ALL_ZEROS,
    ECPath,
    FullTree,
    LazyPath,
    OnesZerosTree,
    Path,
    PathOrder,
    SampledTree,
    Tree,
    cantor_decode,
    cantor_encode,
    cantor_endpoint,
    cantor_value,
    complement_components,
    ec_compare,
    level_intervals,
    make_p_tree,
    make_q_tree,
    ones_path,
    parse_tree_spec,
    path_compare,
)
from .conjugacy import (
    GapInterval,
    Homeo,
    OrderIso,
    default_verification_grid,
    extract_order_iso,
    invert_monotone,
    label_path_iso,
    ones_zeros_order_iso,
    order_iso_for,
    synth_conjugacy,
    validate_order_iso,
    verify_conjugacy,
)
from .dynamics import (
    BumpSpec,
    DynamicsCode,
    Fixedness,
    build_dynamics,
    bump_eval,
    derivative_bound_certificate,
    is_fixed,
    level_bump_sum,
    scaled_bump_eval,
)
from .errors import (
    BudgetExhaustedError,
    ForgeError,
    LabelNotFoundError,
    MalformedOrderError,
    NotInCantorSetError,
    OracleInconsistencyError,
    OrderIsoValidationError,
    OutOfDomainError,
    PrecisionExhaustedError,
    SpecParseError,
    UnsupportedTreeOperationError,
)
from .exact import (
    FunctionCode,
    Rational,
    RealCode,
    Separation,
    approx,
    eval_fn,
    format_rational,
    identity_code,
    parse_rational,
    pow2,
    reflection_code,
    separate,
)
from .orders import (
    FiniteOrder,
    LinearOrderSpec,
    OrderTree,
    build_order_tree,
    chain_order,
    parse_order_lines,
    recover_order,
    successor_labeled_paths,
)
from .reduction import (
    CeSample,
    DemoReport,
    ZeroOracle,
    ec_zero_oracle,
    extract_complement_element,
    jump_extract_order_iso,
    oracle_from_expected,
    recover_ce_complement,
    run_demo,
)

__version__ = "0.1.0"
