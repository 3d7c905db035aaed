"""gibbslab: thermodynamic formalism on symbolic lattice systems.

A workbench for desk-scale experiments with subshifts over the integer
lattice (dimension up to 3), translation-invariant interactions, finite
window Gibbs kernels, entropies and pressures, heat bath sampling, and
bounded-budget decision procedures for combinatorial mixing properties.
"""

from gibbslab.lattice import (
    Shape,
    Site,
    DeloneSet,
    FolnerBox,
    delone_greedy,
    folner_box,
    inner_boundary,
    lower_density,
    translate,
)
from gibbslab.symbolic import (
    Alphabet,
    FullShift,
    GroupShift,
    LanguageTable,
    OracleShift,
    Pattern,
    SFT,
    SubshiftSpec,
    catalog,
    language,
    locally_admissible,
    merge,
)
from gibbslab.interaction import (
    Interaction,
    LocalTerm,
    catalog_interaction,
    conditional_energy,
    conditional_energy_inf,
    energy,
    energy_observable,
    norm,
    push_to_slice,
    zero_interaction,
)
from gibbslab.measure import (
    EmpiricalMeasure,
    EnvMarginal,
    MarkovMeasure1D,
    WindowMeasure,
    conditional_entropy,
    conditional_pressure,
    empirical_from_samples,
    entropy,
    expected_energy,
    marginal,
    point_mass,
    pressure_window,
    product_measure,
    transfer_pressure_1d,
    uniform_measure,
)
from gibbslab.mixing import (
    Verdict,
    almost_haar_check,
    check_si,
    check_strong_tmp,
    check_tssm,
    find_memory_set,
    find_mixing_set,
    group_shift_memory,
    homoclinic_points,
    interchangeable,
    memory_set_check,
    offset_squares_candidate,
    tssm_implies_sft_reconstruction,
    ufp_filling_check,
)
from gibbslab.gibbs import (
    BoltzmannDist,
    FiberRule,
    GibbsKernel,
    InadmissibleContext,
    SamplerConfig,
    boltzmann,
    empirical_from_frames,
    feller_locality_check,
    free_energy_series,
    gibbs_property_test,
    kernel_apply,
    local_optimality_check,
    partition_conditional,
    partition_free,
    sample_frames,
    stolz_differences,
    tv_distance,
    variational_pressure_estimate,
)
from gibbslab.relative import (
    EquilibriumResult,
    FactorSystem,
    FiberSpec,
    RatioReport,
    RelativeSystem,
    SliceSystem,
    bond_weights,
    catalog_relative,
    cyclic_window_spec,
    environment_pattern,
    factor_relative_system,
    fiber_gibbs_check,
    fiber_language,
    meyerovitch_ratio_test,
    nonoverlap_check,
    percolation_weights,
    random_environment,
    relative_equilibrium_search,
    relative_gibbs_check,
    slice_kernel_equality_check,
    slice_system,
    slice_tmp_check,
    trivial_relative,
)

__version__ = "0.1.0"
