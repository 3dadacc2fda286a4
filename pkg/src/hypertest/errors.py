"""Exception types shared across the package.

The CLI maps GuardError and InputError to exit code 2 and
PostconditionError to exit code 3.
"""


class HypertestError(Exception):
    pass


class InputError(HypertestError, ValueError):
    """Malformed input: wrong shapes, out-of-range vertices, bad files."""


class GuardError(HypertestError):
    """An exact computation would exceed its enumeration budget."""

    def __init__(self, what, size, limit):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: size {size} exceeds limit {limit}")


class PreconditionError(HypertestError, ValueError):
    pass


class PostconditionError(HypertestError):
    """A randomized procedure could not certify its output within its retry budget."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class FamilyError(HypertestError, ValueError):
    """A family-of-partitions construction rule failed.

    ``code`` is one of "FP1" (empty cell), "FP2" (classes do not split the
    polyad's clique set into exactly a_j parts) or "FP3" (a supplied polyad
    disagrees with the union of its classes).
    """

    def __init__(self, code, level, address, label, detail=""):
        self.code = code
        self.level = level
        self.address = address
        self.label = label
        msg = f"{code} violated at level {level}, address {address}, class {label}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
