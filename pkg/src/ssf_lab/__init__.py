"""Perturbation determinants and spectral shift functions of accumulative pairs."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("ssf_lab")
except PackageNotFoundError:
    __version__ = "0.0.0"
