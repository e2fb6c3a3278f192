"""Superradiant gain from an array of Bose-Einstein condensates in an optical lattice."""

from .physcore import BeamParams, LatticeParams, ParameterError, TrapParams, validate

__all__ = ["BeamParams", "LatticeParams", "ParameterError", "TrapParams", "validate"]
