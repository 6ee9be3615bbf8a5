"""Task-space residual reinforcement learning for a simulated biped."""

__version__ = "0.1.0"
