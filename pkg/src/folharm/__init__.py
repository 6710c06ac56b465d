"""folharm: transversal tension fields, energy and heat flow for foliated maps
between model foliated Riemannian manifolds, with identity-verification
oracles."""

from .errors import (
    CompositionError,
    ConfigurationError,
    DomainError,
    FlowDivergedError,
    FolharmError,
    InvalidMapError,
    PreconditionError,
    StepTooLargeError,
    UnsupportedDomainError,
)
from .foliation import FoliatedStructure, build_foliated_structure, named_profile
from .geometry import (
    FlatTorus,
    HyperbolicPatch,
    LocalGeometry,
    RoundSphere,
    TransverseGeometry,
    build_geometry,
    exp_map,
    geometry_at,
)
from .grid import (
    GridChart,
    build_grid,
    check_divergence_theorem,
    delta_B_scalar,
    div_nabla,
    grad_B,
    integrate,
    kappa_on_grid,
)
from .maps import (
    AnalyticMap,
    FoliatedMapField,
    compose,
    dT_norm_squared,
    d_T,
    delta_nabla_dT,
    energy_density,
    second_form_norm_squared,
    second_fund_form,
    tension,
    tension_sup_norm,
)
from .flow import (
    FlowConfig,
    FlowTrace,
    RigidityDiagnostics,
    RigidityTolerances,
    Verdict,
    cfl_step,
    flow_step,
    rigidity_diagnostics,
    run_flow,
    transversal_energy,
)
from .verify import (
    IdentityResidualReport,
    VariationSpec,
    bochner_parts,
    bochner_term,
    check_first_variation,
    check_lemma_volume,
    composition_residuals,
    refinement_report,
    weitzenbock_residual,
    weitzenbock_terms,
)
from .families import make_family, variation_field

__version__ = "0.1.0"
