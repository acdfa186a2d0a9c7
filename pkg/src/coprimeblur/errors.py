"""Exception hierarchy. Every error carries enough context to locate it."""


class CBPError(Exception):
    """Base class for all codec errors."""

    #: pipeline stage that raised, filled in by the decoder
    stage = None


# poly-core
class NonUnitSamplePoint(CBPError, ValueError):
    pass


class DegenerateInput(CBPError, ValueError):
    pass


class IllConditioned(CBPError, ArithmeticError):
    pass


# encoder
class CoprimalityFailure(CBPError, RuntimeError):
    pass


class FrameTooSmall(CBPError, ValueError):
    pass


class RangeExceeded(CBPError, ValueError):
    pass


class NotQuantized(CBPError, ValueError):
    pass


# decoder
class InconsistentAxes(CBPError, ArithmeticError):
    def __init__(self, t_z1, t_z2):
        super().__init__(f"kernel width estimates disagree: z1 axis gives {t_z1}, z2 axis gives {t_z2}")
        self.t_z1 = t_z1
        self.t_z2 = t_z2


class IllConditionedSlice(IllConditioned):
    def __init__(self, indices, axis, gaps):
        indices = list(indices)
        super().__init__(f"ill-conditioned cofactor solve on axis {axis} at slice(s) {indices}")
        self.indices = indices
        self.axis = axis
        self.gaps = gaps


class DegenerateScales(CBPError, ArithmeticError):
    pass


class NonRealKernel(CBPError, ArithmeticError):
    pass


# stream-io
class DimMismatch(CBPError, ValueError):
    pass


class IoFailure(CBPError, OSError):
    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = path


class CorruptManifest(CBPError, ValueError):
    pass


class MissingFrame(CBPError, FileNotFoundError):
    def __init__(self, index, path):
        super().__init__(f"frame {index} missing: {path}")
        self.index = index
        self.path = path


class FormatViolation(CBPError, ValueError):
    def __init__(self, path, offset, reason):
        super().__init__(f"{path}: byte {offset}: {reason}")
        self.path = path
        self.offset = offset


class PairMismatch(CBPError, ValueError):
    pass
