"""Path metrics, heavy-tailed samplers, stable limit simulation and the
Monte Carlo verification lab for self-normalized partial-sum processes."""

__version__ = "0.1.0"
