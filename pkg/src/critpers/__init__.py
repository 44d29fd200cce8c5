"""Critical-point sampling for persistent-homology classification of scalar fields."""

__version__ = "0.1.0"
