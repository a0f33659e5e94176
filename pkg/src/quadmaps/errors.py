"""Exception hierarchy shared by all modules."""


class QuadmapsError(Exception):
    """Base class for every error raised by the package."""


class MapError(QuadmapsError, ValueError):
    """Invalid permutation data for a plane map."""


class NotInvolution(MapError):
    pass


class Disconnected(MapError):
    pass


class NonPlanar(MapError):
    pass


class FaceDegreeNot4(MapError):
    def __init__(self, face, degree):
        super().__init__("face %d has degree %d" % (face, degree))
        self.face = face
        self.degree = degree


class TooLarge(QuadmapsError, ValueError):
    """Input exceeds the bound configured for an exhaustive oracle."""


class MalformedContour(QuadmapsError, ValueError):
    pass


class MalformedSnake(QuadmapsError, ValueError):
    pass


class NotLabeledMap(QuadmapsError, ValueError):
    pass


class ArcPlanarityFailure(QuadmapsError, AssertionError):
    """The arcs built by a reverse construction do not form a quadrangulation."""


class NotGeodesicStar(QuadmapsError, ValueError):
    pass


class IncompatibleComponents(QuadmapsError, ValueError):
    def __init__(self, constraint, detail=""):
        msg = constraint if not detail else "%s: %s" % (constraint, detail)
        super().__init__(msg)
        self.constraint = constraint


class DegenerateData(QuadmapsError, ValueError):
    pass
