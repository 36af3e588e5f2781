"""Spontaneous photon emission at a moving refractive-index front in a dispersive dielectric."""

__version__ = "0.1.0"

from .medium import (  # noqa: E402
    FrontFrame,
    IndexStep,
    SellmeierMedium,
    fused_silica,
    refractive_index,
    scale_medium,
    vacuum_medium,
)
from .modes import HorizonConfiguration, configuration, find_sli, label_roots, solve_modes  # noqa: E402
from .scattering import s_matrix  # noqa: E402
from .spectra import fit_power_law, lab_spectrum, moving_frame_spectrum, photon_number, sli_width  # noqa: E402

__all__ = [
    "FrontFrame",
    "HorizonConfiguration",
    "IndexStep",
    "SellmeierMedium",
    "configuration",
    "find_sli",
    "fit_power_law",
    "fused_silica",
    "lab_spectrum",
    "label_roots",
    "moving_frame_spectrum",
    "photon_number",
    "refractive_index",
    "s_matrix",
    "scale_medium",
    "sli_width",
    "solve_modes",
    "vacuum_medium",
]
