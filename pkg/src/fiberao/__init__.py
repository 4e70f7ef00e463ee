"""Simulation toolkit for wavefront-sensorless fiber-coupling adaptive optics.

Desk-scale reproduction of a modal stochastic parallel gradient descent
(M-SPGD) control loop maximizing single-mode-fiber coupling through
simulated atmospheric turbulence.
"""

__version__ = "0.1.0"
