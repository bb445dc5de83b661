"""Steklov eigenvalue signatures of impedance screens from far-field data."""

__version__ = "0.1.0"

from .errors import (AdmissibilityError, ConfigurationError, DataError, DomainError,
                     NumericalError, ParameterError, ParseError, ResolutionError,
                     ScreenSigError)
from .mesh import DomainSpec, Mesh2D, generate_mesh, read_mesh, refine_mesh, write_mesh
from .oracle import SignConvention, annular_spectrum, impedance_disk_farfield, sector_spectrum
from .steklov import SigmaProfile, solve_steklov
from .farfield import FarFieldMatrix, read_farfield, reciprocity_defect, write_farfield

__all__ = [
    "AdmissibilityError", "ConfigurationError", "DataError", "DomainError", "NumericalError",
    "ParameterError", "ParseError", "ResolutionError", "ScreenSigError",
    "DomainSpec", "Mesh2D", "generate_mesh", "read_mesh", "refine_mesh", "write_mesh",
    "SignConvention", "annular_spectrum", "impedance_disk_farfield", "sector_spectrum",
    "SigmaProfile", "solve_steklov",
    "FarFieldMatrix", "read_farfield", "reciprocity_defect", "write_farfield",
]
