"""kamforge: constructive machinery for reversible KAM computations.

Structured unfoldings of infinitesimally reversible matrices, BHT
non-degeneracy and Diophantine condition checking, covering/co-rotating
transformations, and a truncated-Fourier homological-equation solver with a
single verifiable KAM iteration step.
"""

__version__ = "0.1.0"
