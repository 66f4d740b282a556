"""Language identification for closely related low-resource languages."""

__version__ = "0.1.0"
