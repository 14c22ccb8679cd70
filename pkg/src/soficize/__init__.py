"""Turn hyperlinear approximations of Z^r into nearby sofic-induced ones."""

__version__ = "0.1.0"
