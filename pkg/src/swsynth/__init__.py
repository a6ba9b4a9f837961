"""Differentially private tabular data synthesis.

Pipeline: discretize the table, privatize all 2-way marginals with one
Gaussian release, project each noisy signed marginal back to a probability
measure under the sliced 1-Wasserstein distance, quantize to particles, run
particle gradient descent on a squared sliced-Wasserstein loss (plus an
optional domain-constraint penalty) and snap the particles back to the grid.
"""

from .kernels import backend

__version__ = "0.1.0"

__all__ = ["backend", "__version__"]
