"""Exception hierarchy shared by all stokeshed modules."""


class StokeshedError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(StokeshedError):
    """Invalid run configuration (bad field, missing file, V(x0)=0, ...)."""


class MultipleRootError(StokeshedError):
    """Two zeros of the potential closer than the turning-point tolerance."""


class TurningPointCollision(StokeshedError):
    """A path or trace came within the guard radius of a turning point."""


class QuadratureNonConvergence(StokeshedError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SaddleConnection(StokeshedError):
    """A Stokes curve ran into another turning point (bounded curve)."""


class ConsistencyFailure(StokeshedError):
    """Two crossing chains reached the same subregion with different sigma sets."""


class NewtonNonConvergence(StokeshedError):
    """Newton iteration for an action-plane target failed to converge."""


class OnBoundary(StokeshedError):
    """A query point lies within tolerance of a Stokes or virtual curve."""


class CaseUnrealized(StokeshedError):
    """A crossing-step configuration that the singularity calculus excludes.

    Seeing this error on real data indicates a bug in the sigma bookkeeping,
    not a user error.
    """


class StagingFailure(StokeshedError):
    """No staging point satisfying a crossing-step inequality was found."""


class NoPath(StokeshedError):
    """The forbidden set separates the base point from the target."""


class SingularArgument(StokeshedError):
    """Log germ evaluated too close to its branch point."""


class StencilError(StokeshedError):
    """A finite-difference stencil left the admissible set."""


class MissingLayer(StokeshedError):
    """SVG rendering requested a layer absent from the report."""
