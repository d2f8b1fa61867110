"""Exception types shared across the package."""


class HyperlabError(Exception):
    """Base class for all package errors."""


class UnknownSymbol(HyperlabError):
    pass


class SingularImage(HyperlabError):
    pass


class NotUnimodular(HyperlabError):
    pass


class InvalidOrders(HyperlabError):
    pass


class NotSmallCancellation(HyperlabError):
    pass


class ParseError(HyperlabError):
    pass


class EdgeIntoStart(HyperlabError):
    pass


class DuplicateEdge(HyperlabError):
    pass


class AlreadyAugmented(HyperlabError):
    pass


class NoGrowth(HyperlabError):
    pass


class NonConvergence(HyperlabError):
    pass


class SupportTooLarge(HyperlabError):
    pass


class LengthMismatch(HyperlabError):
    pass


class DepthTooLarge(HyperlabError):
    pass


class NotIrreducible(HyperlabError):
    pass


class LabelMismatch(HyperlabError):
    pass


class SigmaZero(HyperlabError):
    pass


class VertexNotMaximal(HyperlabError):
    pass


class InadmissiblePrefix(HyperlabError):
    pass


class NotTreeLike(HyperlabError):
    pass


class InsufficientData(HyperlabError):
    pass
