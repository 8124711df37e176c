"""Exception types raised across the package."""


class HopcroftError(Exception):
    pass


# geometry
class EqualSlopes(HopcroftError):
    pass


class ExhaustedRetries(HopcroftError):
    pass


class DualDegenerate(HopcroftError):
    pass


# skip lists
class DuplicateKey(HopcroftError, KeyError):
    pass


class MissingKey(HopcroftError, KeyError):
    pass


class KeyNotFound(HopcroftError, KeyError):
    pass


# arrangement
class DuplicateLine(HopcroftError):
    pass


class MissingLine(HopcroftError):
    pass


class SlopeCollision(HopcroftError):
    pass


class TripleConcurrence(HopcroftError):
    pass


class UnknownLine(HopcroftError, KeyError):
    pass


# cost model
class RTooLarge(HopcroftError, ValueError):
    pass
