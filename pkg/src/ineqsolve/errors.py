"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent user input: shapes, signs, lengths, file contents."""


class SolveError(RuntimeError):
    """A dense linear solve failed (singular or non-finite system)."""


class OracleError(RuntimeError):
    """An inner reference computation (regularized root solve) did not converge."""


class ConsistencyError(RuntimeError):
    """A declared bound is contradicted by a sampled estimate."""


class UnsupportedMapError(InputError):
    """A solver trace cannot be mapped onto the certified-inequality form."""
