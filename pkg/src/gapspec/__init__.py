"""Indicator-type functions with gapped spectra and bounded partial Fourier sums.

Everything lives on a finite abelian group Z_{N_1} x ... x Z_{N_r}.  The
main entry points are :func:`run` (correct a set ``a`` into ``b`` whose
weighted indicator has spectrum in K u R u S) and :func:`correct_bounded`
(the two-rail correction of a bounded function).
"""

from .construction import (
    BoundedCorrection,
    ConstructionState,
    CorrectionResult,
    Schedules,
    auxiliary,
    build_h,
    correct_bounded,
    init,
    run,
    select_character,
    step,
    threshold_truncate,
)
from .errors import *  # noqa: F401,F403
from .group import (
    Group,
    GroupFunction,
    SpectralFunction,
    character_function,
    convolve,
    fourier,
    indicator,
    inverse_fourier,
    make_group,
    modulate_real,
    point_mass,
    support,
)
from .kernels import (
    Partition,
    SpectrumWindow,
    WindowConstraints,
    covering_partition,
    fejer_system,
    interval_window,
    select_window,
    smooth,
    subgroup_window,
)
from .spectral import (
    SufficientPair,
    SummationBasis,
    box_family,
    gapped_pair,
    is_coordinated,
    is_sufficient,
    make_basis,
    paley_family,
    partial_sum,
    solid_basis,
    splitting_union,
    symmetric_interval_basis,
    u_norm,
    walsh_prefix_basis,
)
from .verify import log_law_sweep, partial_sum_report, spectrum_within, sym_diff_weighted

__version__ = "0.1.0"
