"""
nlx - nonlinear expectations on an exact binomial filtration tree.

g-expectations, filtration-consistent operators and their checkers, BSDEs
under nonlinear expectations, penalized Doob-Meyer decompositions and
generator recovery.
"""

__version__ = "1.0"
