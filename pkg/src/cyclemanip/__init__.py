"""Cyclic-manipulation lab: environments, experts, history-aware diffusion
policies, and automatic cycle counting."""

__version__ = "0.1.0"
