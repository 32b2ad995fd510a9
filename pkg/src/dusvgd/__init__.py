"""Stein variational gradient descent with trainable (deep-unfolded) step sizes."""

from .engine import Chebyshev, Fixed, Learned, RmsProp, chebyshev_steps, run, stein_direction, svgd_iterate
from .kernels import RbfKernel, median_bandwidth
from .particles import ParticleSet, init_particles
from .targets import BayesLogRegModel, BayesNNModel, GaussianMixture1D, GaussianTarget

__version__ = "0.1.0"
