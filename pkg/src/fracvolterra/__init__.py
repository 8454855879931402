r"""Time-space fractional Volterra population model on Neumann domains.

.. math::

    \mathcal{D}^\alpha_{0|t} u + (-\Delta_N)^\sigma u
        = u (1 + a u - b u^2) - a u\, (K * u)

Modules:

* :mod:`~fracvolterra.specfun`: Gamma, Mittag-Leffler and Wright functions
* :mod:`~fracvolterra.fracops`: discrete fractional integrals and derivatives
* :mod:`~fracvolterra.spectral`: Neumann cosine basis and fractional propagators
* :mod:`~fracvolterra.model`: parameters, kernels, reaction, constant states
* :mod:`~fracvolterra.solver`: time integrators and run diagnostics
* :mod:`~fracvolterra.harness`: configuration files, CLI, verification suites
"""

from fracvolterra.fracops import TimeMesh
from fracvolterra.model import (
    ExponentialKernel,
    GammaKernel,
    ModelParams,
    TabulatedKernel,
    carrying_root,
)
from fracvolterra.solver import SolverConfig, Trajectory, reference_ode, solve
from fracvolterra.spectral import GridSpec, ModalField, NodalField
from fracvolterra.specfun import mittag_leffler, wright_phi

__version__ = "0.1.0"

__all__ = [
    "TimeMesh",
    "GridSpec",
    "NodalField",
    "ModalField",
    "ModelParams",
    "ExponentialKernel",
    "GammaKernel",
    "TabulatedKernel",
    "carrying_root",
    "SolverConfig",
    "Trajectory",
    "solve",
    "reference_ode",
    "mittag_leffler",
    "wright_phi",
]
