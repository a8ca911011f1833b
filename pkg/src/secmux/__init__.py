"""Secure multiplex coding with a common message, at desk scale.

Submodules
----------
gf          prime-field arithmetic and GL(k, q)
families    two-universal hash families on layered message spaces
channels    discrete memoryless channels and Markov chains U -> V -> X
info        entropy, mutual information, psi and phi
pa          the strengthened privacy amplification bound
regions     BCC, BCD and multiplex rate regions, leakage exponent
simulator   exact leakage and ML error for tiny block lengths
cli         the ``secmux`` command
"""

from secmux.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
