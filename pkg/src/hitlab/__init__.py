"""Brownian motion sampled at a uniform time before its first hitting time.

Modules: :mod:`hitlab.closedform` (explicit formulas), :mod:`hitlab.quadrature`
(adaptive quadrature and the two-barrier integrals), :mod:`hitlab.paths`
(Monte Carlo path engine), :mod:`hitlab.verify` (scenario registry and
statistics) and :mod:`hitlab.cli`.
"""

__version__ = "0.1.0"
