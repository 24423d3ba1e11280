"""Exception hierarchy shared by all modules."""


class AclabError(Exception):
    """Base class for all package errors."""


# nonlinearity / profile
class NonBistable(AclabError):
    pass


class UnbalancedPotential(AclabError):
    pass


class QuadratureSingularity(AclabError):
    pass


# corrector
class SolvabilityViolation(AclabError):
    pass


class TailDivergence(AclabError):
    pass


# bistable flow
class OutOfBox(AclabError):
    pass


class BranchCross(AclabError):
    pass


class AtEquilibrium(AclabError):
    pass


# PDE solver
class CFLViolation(AclabError):
    pass


class GridTooCoarse(AclabError):
    pass


class NonFinite(AclabError):
    pass


class InterfaceLost(AclabError):
    pass


# sharp interface
class NonPositiveRadius(AclabError):
    pass


class ReinitDiverged(AclabError):
    pass


class DegenerateCurve(AclabError):
    pass


# comparison / harness
class DegenerateTuning(AclabError):
    pass


class NeverGenerated(AclabError):
    pass


class DegenerateFit(AclabError):
    pass
