"""Exception types raised by the numerical routines."""

from __future__ import annotations


class MarylandError(Exception):
    """Base class for all library errors."""


class NumericFailure(MarylandError):
    """A numerical routine could not deliver the requested accuracy."""


class BadInput(MarylandError, ValueError):
    """Arguments violate a documented precondition."""


class BranchPoint(NumericFailure):
    """On-axis evaluation exactly at a square-root branch point."""


class ConvergenceFailure(NumericFailure):
    """Series, integral or extrapolation did not reach its tolerance."""


class NearSingularEnergy(NumericFailure):
    """Boundary value requested too close to a band-edge singularity."""


class SingularPotential(BadInput):
    """The tangent potential is evaluated at (or next to) one of its poles."""


class NearPole(NumericFailure):
    """The resummation denominator 1 - P_q is numerically zero."""


class NearBandEdge(NumericFailure):
    """Energy lies too close to a critical energy of the band structure."""


class NoSolution(NumericFailure):
    """The band equation has no root for the requested index and momentum."""


class NonConvergence(NumericFailure):
    """An iterative root finder ran out of iterations."""


class OutsideDomain(BadInput):
    """Argument lies outside the domain of a phase function."""


class DegenerateEnergy(NumericFailure):
    """Energy coincides with a surface band or a resummation pole."""


class ChannelAtThreshold(NumericFailure):
    """A channel energy sits at a threshold of the transverse Laplacian."""


class SolveFailure(NumericFailure):
    """Sparse factorization or solve of a finite-box resolvent failed."""


class NoRoot(NumericFailure):
    """Monotone root search found the target outside the function range."""
