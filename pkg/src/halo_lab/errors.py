"""Exception taxonomy for halo-lab.

Every error raised by the library is a subclass of HaloError, so callers can
catch library failures without also swallowing programming mistakes.  The CLI
maps the classes below onto distinct process exit codes (see cli.py).
"""

from __future__ import annotations


class HaloError(Exception):
    """Base class for all halo-lab errors."""


class ConfigInvalid(HaloError):
    """An experiment configuration is malformed or out of the supported range."""


class RingMismatch(HaloError):
    """Operands live over different ring tags or different prime configurations."""


class WindowOverflow(HaloError):
    """An operation produced X-exponents outside the representable window."""


class NonUnit(HaloError):
    """Inversion was requested for an element that is not a unit."""


class ZeroResidue(HaloError):
    """A Teichmueller lift was requested for residue 0."""


class NotOneUnit(HaloError):
    """plog was applied to an element not congruent to 1 mod p."""


class PointOutsideDomain(HaloError):
    """A specialization point does not lie in the domain of the coefficient ring."""


class PrecisionLoss(HaloError):
    """An operation would return a value with no certified digits left."""


class UncertifiedValuation(HaloError):
    """A valuation that must be certified for this operation is not."""


class RadiusOrder(HaloError):
    """A pair of radii was passed in the wrong order (need r <= s)."""


class TruncationMismatch(HaloError):
    """Two truncated objects of incompatible sizes were combined."""


class DomainEscape(HaloError):
    """A monoid action moved a sample point outside p·Z_p."""


class NormViolation(HaloError):
    """A computed operator entry violates its proven valuation lower bound.

    This indicates an implementation bug, never bad user input, and is
    therefore raised loudly at construction time.
    """


class PrecisionExhausted(HaloError):
    """Working precision is too small to finish an operator construction."""


class BlockIndexOutOfRange(HaloError):
    """An operator specification refers to a nonexistent block."""


class UncertifiedInput(HaloError):
    """A Fredholm computation received entries without usable certificates."""


class PrecisionTargetUnreachable(PrecisionExhausted):
    """The requested coefficient precision exceeds what window and p-precision allow."""


class UncertifiedVertexCandidate(HaloError):
    """An uncertified coefficient could influence a Newton polygon vertex."""


class NoSeparatingVertex(HaloError):
    """The Newton polygon has no vertex separating slopes <= h from slopes > h."""


class KernelDimensionMismatch(HaloError):
    """A Riesz kernel does not have the dimension predicted by its factor."""


class FactorizationResidual(HaloError):
    """A slope factorization left a residual above the certified modulus."""
