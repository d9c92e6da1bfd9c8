"""Thermodynamic formalism for uniformly contractive iterated function systems.

Transfer operators and their eigenpairs, normalized costs, dual fixed
measures, holonomic plans, entropy and pressure, and the marginal and
Kantorovich dual problems built on them.
"""

from .duality import (
    CoboundaryPair,
    DualPotentials,
    MarginalPressure,
    SeparableBound,
    SlacknessReport,
    TransportPlan,
    coboundary_feasibility,
    kantorovich_solve,
    marginal_pressure,
    product_plan,
    single_marginal_dual,
    slackness_check,
    two_marginal_dual,
)
from .errors import HolothermError
from .spaces import (
    BaseSpace,
    ContractiveIFS,
    FiberSpace,
    GridFunction,
    ProbMeasure,
    build_grid,
    finite_fiber,
    verify_contraction,
)
from .systems import (
    affine_system,
    cantor_system,
    doubling_system,
    fair,
    half_map_system,
    singleton_system,
    word_shift_system,
)
from .thermo import (
    entropy_equilibrium,
    entropy_variational,
    equilibrium,
    pressure,
    pressure_gradient,
)
from .transfer import (
    apply_transfer,
    attractor_cover,
    bousch_limit,
    holonomic_plan,
    invariant_measure,
    normalize_cost,
    power_eigenpair,
)

__version__ = "0.1.0"
