"""grovekit: topology-expression algebra, information functionals,
geodesic policy optimisation, and a regulated commons game."""

from .expr import (
    TRIVIAL,
    CompositionError,
    DecoratedSymbol,
    Grove,
    GroveError,
    GroveParseError,
    TopologyExpr,
    base_chain,
    canonicalize,
    factor,
    is_prime,
    multiply,
    parse,
    render,
)
from .model import CostModel, rank
from .enumeration import (
    EnumerationReport,
    PartitionSpec,
    SituationExpr,
    count_by_rank,
    enumerate_groves,
    enumerate_situations,
    enumerate_topologies,
    total_multiplicity,
    verify_against_table,
)
from .infotheory import (
    Axis,
    CramerRaoReport,
    GridDistribution,
    GridSpec,
    InfoError,
    InfoTensorBinding,
    MetricBinding,
    build_nested_distribution,
    cramer_rao_report,
    fisher_information,
    information_density,
    smoothed_delta,
)
from .variational import (
    CriticalityError,
    FiniteGroup,
    Functional,
    GeodesicPath,
    MetricField,
    PolicyCostFunction,
    VariationalError,
    christoffel,
    cyclic_group,
    dihedral_group,
    direct_product,
    euclidean_metric,
    first_variation,
    integrate_geodesic,
    lever_metric,
    optimal_policy_path,
    policy_information,
    solve_critical,
    sphere_metric,
    word_distance_cost,
)
from .regsim import (
    AgentModel,
    Excession,
    GameConfig,
    GameState,
    Law,
    PolicySpec,
    RegsimError,
    Trace,
    agent_decide,
    apply_law,
    inject_excession,
    load_scenario,
    mean_welfare,
    optimize_slack,
    run_episode,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "AgentModel",
    "Axis",
    "CompositionError",
    "CostModel",
    "CramerRaoReport",
    "CriticalityError",
    "DecoratedSymbol",
    "EnumerationReport",
    "Excession",
    "FiniteGroup",
    "Functional",
    "GameConfig",
    "GameState",
    "GeodesicPath",
    "GridDistribution",
    "GridSpec",
    "Grove",
    "GroveError",
    "GroveParseError",
    "InfoError",
    "InfoTensorBinding",
    "Law",
    "MetricBinding",
    "MetricField",
    "PartitionSpec",
    "PolicyCostFunction",
    "PolicySpec",
    "RegsimError",
    "SituationExpr",
    "TRIVIAL",
    "Trace",
    "TopologyExpr",
    "VariationalError",
    "agent_decide",
    "apply_law",
    "base_chain",
    "build_nested_distribution",
    "canonicalize",
    "christoffel",
    "count_by_rank",
    "cramer_rao_report",
    "cyclic_group",
    "dihedral_group",
    "direct_product",
    "enumerate_groves",
    "enumerate_situations",
    "enumerate_topologies",
    "euclidean_metric",
    "factor",
    "first_variation",
    "fisher_information",
    "information_density",
    "inject_excession",
    "integrate_geodesic",
    "is_prime",
    "lever_metric",
    "load_scenario",
    "mean_welfare",
    "multiply",
    "optimal_policy_path",
    "optimize_slack",
    "parse",
    "policy_information",
    "rank",
    "render",
    "run_episode",
    "smoothed_delta",
    "solve_critical",
    "sphere_metric",
    "step",
    "total_multiplicity",
    "verify_against_table",
    "word_distance_cost",
]
