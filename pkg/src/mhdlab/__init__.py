"""Linearized ideal MHD around a sheared equilibrium on the periodic strip.

Single-mode evolution, resolvent solves of the associated Sturmian equation,
Dunford/jump reconstructions of the dynamics, and the diagnostics (damping,
depletion, energy, growth fits) that turn trajectories into verdicts.
"""

__version__ = "0.1.0"
