"""histoforge: heterogeneous tissue synthesis toolkit.

Self-supervised tissue clustering, entropy-guided patch sampling, dual
conditioning tensors, DDPM numerics with pluggable denoisers, generative
quality metrics, and a blinded rating service.
"""

__version__ = "0.1.0"
