"""Discrete complex-time quantum mechanics of a free relativistic particle.

Modules:

``dispersion``           deformed spectra, velocities, canonical factors
``difference_calculus``  the complex-time discrete derivative and its series
``wavepacket``           1-D momentum-grid packet evolution and observables
``algebra``              commutator and self-adjointness checks
``cli``                  batch runner emitting CSV/JSON
"""
from .dispersion import (ComplexTime, KinematicPoint, StationaryMode, StepSpec, canonical_factor,
                         ed_case_a, ed_case_b, ed_general, group_velocity, mass_shift,
                         max_energy_case_b, reality_residual, rel_energy, stationary_factor,
                         superluminal_threshold)
from .errors import (CapabilityError, ChrononError, ConfigurationError, DomainError, UsageError,
                     WrapAroundError)

__all__ = [
    "ComplexTime", "KinematicPoint", "StationaryMode", "StepSpec", "canonical_factor", "ed_case_a",
    "ed_case_b", "ed_general", "group_velocity", "mass_shift", "max_energy_case_b",
    "reality_residual", "rel_energy", "stationary_factor", "superluminal_threshold",
    "CapabilityError", "ChrononError", "ConfigurationError", "DomainError", "UsageError",
    "WrapAroundError",
]

__version__ = "0.1.0"
