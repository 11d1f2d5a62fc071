"""Periodic steady states, Floquet decompositions and symmetry measures of oscillators."""
from __future__ import annotations

from ._backend import compiled_available, default_backend
from .models import MODELS, get_model, make_field
from .ode import (
    DomainError,
    IntegrationError,
    Trajectory,
    VectorField,
    find_crossings,
    integrate,
    integrate_variational,
)

__version__ = "0.1.0"
