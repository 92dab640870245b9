"""Exception hierarchy shared by all toruskit modules."""


class ToruskitError(Exception):
    """Base class for all toruskit errors."""


class DegenerateLattice(ToruskitError):
    """Period matrix does not span R^{2n} over the reals."""


class IllConditioned(ToruskitError):
    """A projection or change of basis is numerically near-singular."""


class NotCompatible(ToruskitError):
    """Complex structure does not preserve the given metric."""


class BackendRequired(ToruskitError):
    """Operation needs the exact rational backend (or the float one)."""


class DimensionTooSmall(ToruskitError):
    """Genericity is only defined for complex dimension >= 3."""


class NotTransversal(ToruskitError):
    """The two (0,1)-subspaces intersect; two-point interpolation is singular."""


class NotSkew(ToruskitError):
    """Tangent matrix violates the skew-symmetry constraint."""


class NotPaired(ToruskitError):
    """Metric ratio eigenvalues do not occur in pairs at the given tolerance."""


class FactorizationFailed(ToruskitError):
    """Pair factorization did not reach the defect target within budget."""

    def __init__(self, message, best=None, defect=None):
        super().__init__(message)
        self.best = best
        self.defect = defect


class ChainNotFound(ToruskitError):
    """No hop chain found within the allowed number of attempts."""


class IndexOrder(ToruskitError):
    """Block indices must satisfy i > j (strictly lower-triangular data)."""


class Obstructed(ToruskitError):
    """Massey recursion hit a nonzero harmonic obstruction."""

    def __init__(self, message, obstruction_norm=None):
        super().__init__(message)
        self.obstruction_norm = obstruction_norm


class Diverged(ToruskitError):
    """Massey partial sums grew beyond the divergence guard."""
