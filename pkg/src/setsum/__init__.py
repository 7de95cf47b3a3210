"""Monte Carlo toolkit for set-indexed partial-sum processes on lattice random fields."""

__version__ = "0.1.0"
