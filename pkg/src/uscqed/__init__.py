"""Exact diagonalization of superconducting circuits in the ultrastrong coupling regime."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ContractError,
    ConvergenceError,
    DomainError,
    InvalidDimensionError,
    ResonanceError,
    ResourceError,
    UsCqedError,
)
from .models import (  # noqa: E402
    CPBParams,
    CoupledLCParams,
    CoupledSystem,
    FluxoniumParams,
    RabiParams,
    ResonatorParams,
    build_capshunted_fluxonium,
    build_coupled_lc,
    build_cpb_bare,
    build_cpb_photon,
    build_fluxonium_bare,
    build_fluxonium_photon,
    build_quantum_rabi,
    resonator_from_x,
    truncate_to_rabi,
)
from .observables import (  # noqa: E402
    CatReference,
    DispersiveShift,
    EntanglementSpectrum,
    cat_fidelity,
    dispersive_shift_chi01,
    entanglement_spectrum,
    photon_number,
)
from .spectrum import SpectralResult, converge_truncation, eigensolve, transitions  # noqa: E402
