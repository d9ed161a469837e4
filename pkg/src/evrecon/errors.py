"""Exception types shared across the package.

Parse and I/O errors derive from InputError (CLI exit code 2), numerical
failures from NumericalError (CLI exit code 3).
"""


class EvreconError(Exception):
    pass


class InputError(EvreconError):
    pass


class NumericalError(EvreconError):
    pass


class MalformedLine(InputError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed line {line_no}" + (f": {detail}" if detail else ""))


class OutOfBounds(InputError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"coordinates out of bounds at line {line_no}" + (f": {detail}" if detail else ""))


class NonMonotonicTime(InputError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"timestamp decreases at line {line_no}")


class BadMagic(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class UnsupportedFormat(InputError):
    pass


class TruncatedData(InputError):
    pass


class CountMismatch(InputError):
    pass


class BadTimestamps(InputError):
    pass


class EmptyPacket(InputError):
    pass


class MissingFlow(InputError):
    def __init__(self, cluster_id: int):
        self.cluster_id = cluster_id
        super().__init__(f"no flow supplied for cluster {cluster_id}")


class OddDimensions(InputError):
    pass


class LengthMismatch(NumericalError):
    pass


class NonPositiveDt(NumericalError):
    pass


class NonPositiveMu(NumericalError):
    pass


class BreakdownNonSPD(NumericalError):
    pass


class DenoiserFailure(NumericalError):
    pass


class ChildSpawnError(EvreconError):
    pass


class ProtocolError(EvreconError):
    pass


class BridgeTimeout(EvreconError):
    pass
