"""Phase reconstruction for non-minimum-phase systems from magnitude data,
with a time-domain search for the right-half-plane zeros that break the
plain dispersion relations. A rectangular PEC cavity model provides the
physically meaningful test bed."""

__version__ = "0.1.0"

from .cavity import (
    CavityGeometry,
    CavityMode,
    DipoleSource,
    ModeIndex,
    StateSpaceModel,
    build_state_space,
    cavity_transfer_function,
    enumerate_modes,
    mode_energy,
    mode_field,
    select_modes,
)
from .errors import (
    ConfigError,
    DegenerateOutput,
    EmptyModeSet,
    GridTooCoarse,
    IllConditioned,
    KkphaseError,
    NonHermitianInput,
    OutOfDomain,
    PoleEvaluation,
    Undersampled,
    WindowMismatch,
)
from .kk import (
    InfinityCorrection,
    MagnitudeSpectrum,
    PhaseCurve,
    blaschke_arg,
    blaschke_product,
    direct_phase_of,
    infinity_arg,
    magnitude_from_phase,
    magnitude_spectrum_of,
    pv_phase_from_magnitude,
    reconstruct_phase,
    refined_omega_grid,
)
from .signals import TimeSignal
from .signalsim import (
    ExcitationPulse,
    compare_responses,
    direct_time_response,
    spectrum_route_response,
)
from .tfcore import (
    ComplexFrequency,
    ModalTransferFunction,
    RationalTransferFunction,
    RhpZeroSet,
    SampledResponse,
    eval_modal,
    eval_rational,
    find_rhp_zeros,
    modal_to_rational,
    sample_on_axis,
)
from .zerosearch import (
    BlindTestSpec,
    DetectedZero,
    EintGrid,
    ImpulseResponse,
    ProbeSignal,
    detect_minima,
    e_int,
    generate_blind_test,
    make_probe,
    probe_laplace,
    scan,
    system_response,
)
