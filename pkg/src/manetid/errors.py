"""Exception hierarchy shared by all manetid modules."""


class ManetidError(Exception):
    """Base class for all manetid errors."""


# -- graph ------------------------------------------------------------------

class GraphError(ManetidError):
    pass


class UnknownNode(GraphError):
    pass


class UnknownEndpoint(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateNode(GraphError):
    pass


# -- cost / energy ----------------------------------------------------------

class DeadNode(ManetidError):
    """A node with no remaining energy tried to participate."""


# -- election protocol ------------------------------------------------------

class ProtocolError(ManetidError):
    pass


class SenderMismatch(ProtocolError):
    pass


class EmptyCandidates(ProtocolError):
    pass


class ForeignVote(ProtocolError):
    pass


class ProtocolViolation(ProtocolError):
    """Out-of-phase message; logged and dropped by the FSM."""


# -- payments / reputation --------------------------------------------------

class MixedCandidates(ManetidError):
    pass


class NoVoters(ManetidError):
    pass


# -- clustering -------------------------------------------------------------

class MissingCost(ManetidError):
    pass


# -- intrusion detection ----------------------------------------------------

class EmptyTraining(ManetidError):
    pass


class UnknownCategory(ManetidError):
    pass


# -- simulation / config ----------------------------------------------------

class InvalidConfig(ManetidError):
    """Bad config file; message carries field-level diagnostics."""


# -- oracles ----------------------------------------------------------------

class TooLarge(ManetidError):
    pass


class InvalidAffiliation(ManetidError):
    pass
