"""Exact and Monte Carlo statistics of conductance and noise in chaotic cavities.

The package is organised bottom-up:

``params``       lead configurations, thermodynamic factor, normalisations
``symbolic``     exact moment generating functions and conductance densities
``cumulants``    exact conductance and joint conductance/noise cumulants
``painleve``     numerical sigma-function of Painleve V and log-MGF reconstruction
``asymptotics``  large-n expansions of the cumulants
``nonideal``     one tunnel-coupled lead: reflection density and MGF
``montecarlo``   random-matrix sampling oracle and joint-MGF quadrature
``quadrature``   Gauss-Legendre rules shared by the numerical checks
``verification`` invariant suites behind ``toda-transport verify``
``cli``          command-line front end (``python -m toda_transport``)
"""
from .params import (SHOT, ConfigurationError, LeadConfig, ThermoFactor, conductance_variance,
                     effective_config, lead_config, normalization_c, thermo_factor)
from .symbolic import (ExpLaurentFn, PiecewisePolyDensity, density_from_mgf, eval_mgf, mgf_hankel,
                       mgf_taylor, moment_fn, toda_check)
from .cumulants import (CumulantSeq, FEtaPoly, JointCumulantTable, SingularRecurrenceError,
                        conductance_cumulants, joint_cumulants, kappa3_closed, noise_power_closed_forms,
                        shot_cumulants_symmetric, shot_limit)

__version__ = "0.1.0"
