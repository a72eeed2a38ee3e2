"""
Bernoulli Lab - A numerical laboratory for the one-phase free boundary problem.
Minimize, compare, sweep, and measure regularity at desk scale.
"""

__version__ = "0.1.0"
