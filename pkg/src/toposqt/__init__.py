"""toposqt: contextual (topos-style) quantum theory at finite dimension.

Builds finite posets of commuting-operator contexts, computes inner and outer
daseinisation of projections and self-adjoint operators, evaluates
sieve-valued truth values against truth objects and pseudo-states, works in
the quantity-value presheaves and their group completion, and machine-checks
the no-global-section (Kochen-Specker) obstruction on concrete witness sets.
"""

__version__ = "0.1.0"

from .opalg import (  # noqa: F401
    DEFAULT_TOL,
    DensityMatrix,
    HermitianOperator,
    Projection,
    SpectralDecomposition,
    SpectralFamily,
    StateVector,
    TolerancePolicy,
    proposition_projector,
    spectral_decompose,
    spectral_family,
    spectral_order_leq,
)
from .context import (  # noqa: F401
    Context,
    ContextPoset,
    GenerationPolicy,
    build_poset,
    context_from_commuting,
    coarsenings,
    downset,
    is_subcontext,
)
from .presheaf import (  # noqa: F401
    FinitePresheaf,
    Sieve,
    Subobject,
    global_elements,
    sieve_heyting,
    sieve_pullback,
    sieves_on,
)
from .dasein import (  # noqa: F401
    SpectralElement,
    build_spectral_presheaf,
    clopen_heyting,
    clopen_subobject,
    inner_das_proj,
    inner_das_sa,
    outer_das_proj,
    outer_das_sa,
)
from .truth import (  # noqa: F401
    Filter,
    PseudoState,
    QuasiPoint,
    antonymous_fn,
    cone,
    expectation_bracket,
    observable_fn,
    pseudo_state,
    truth_object,
    truth_value,
)
from .ks import (  # noqa: F401
    WitnessSet,
    ks_poset_from_witness,
    load_witness,
    parity_oracle,
    section_search,
)
