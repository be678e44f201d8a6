"""Local limits of determinantal measures on sparse signed incidence structures."""

__version__ = "0.1.0"
