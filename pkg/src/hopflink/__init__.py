"""
Asymptotic linking, helicity and quadratic helicity of divergence-free fields.

Modules
-------
fieldcore   analytic, Fourier-ensemble and gridded fields on a box or ball
biot        Gauss kernel, Biot-Savart potential and correlation tensor
tracer      field-line integration in magnetic time
linkage     segment, asymptotic and closed-curve linking
helicity    helicity, quadratic helicity, delta2 bound, local-formula terms
spectral    power-law ensembles, shell spectra, slope fits
moments     moment graphs, boundedness criterion, dimensions
"""

from .biot import biot_savart, delta2_sim, delta2_tensor, gauss_kernel, psi
from .errors import (ConfigError, DomainError, DomainExitError, HopflinkError,
                     NumericalFailure, ProximityError, SingularityError, StagnationError,
                     UnsupportedRepresentation)
from .fieldcore import (Ball, BeltramiField, FourierEnsemble, FourierMode, GridField,
                        PeriodicBox, RotationField, UniformField, divergence_check, eval_field,
                        eval_vector_potential, zero_ensemble)
from .helicity import (HelicityReport, arnold_ratio, delta2_bound, dispersion_pairs, energy,
                       helicity_pairs, helicity_report, helicity_spectral,
                       local_formula_partial_sum, local_formula_term, nabla_term,
                       quadratic_helicity_pairs, synthetic_kernel_check)
from .linkage import (LinkingDistribution, LinkingEstimate, Loop, QuadRule, asymptotic_linking,
                      closed_curve_linking, hopf_link, linking_distribution, segment_linking)
from .moments import (Dimension, MomentGraph, builtin_table, dimension_of,
                      is_correlation_bounded)
from .spectral import (ShellSpectrum, SpectrumConfig, fit_slope, generate_ensemble,
                       helical_decompose, shell_spectrum, sphere_average)
from .tracer import FieldLine, reverse_check, trace

__version__ = "0.1.0"
