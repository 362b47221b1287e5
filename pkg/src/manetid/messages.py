"""Election wire messages and the cost commitment scheme.

Hello carries hash(cost || nonce); Begin-Election reveals cost and nonce.
Real signatures are out of scope: every message carries an opaque
signature token checked by a pluggable authenticity predicate (always
true by default, forgeable in adversarial tests).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .cost_model import CostOfAnalysis
from .errors import DeadNode, SenderMismatch
from .topology import NodeId

DEFAULT_SIGNATURE = "sig-ok"


def commitment(cost: CostOfAnalysis, nonce: str) -> str:
    """Binding commitment to a cost value: sha256 over cost and nonce."""
    payload = f"{cost.value!r}|{nonce}".encode()
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Hello:
    sender: NodeId
    commit: str
    signature: str = DEFAULT_SIGNATURE


@dataclass(frozen=True)
class BeginElection:
    sender: NodeId
    cost: CostOfAnalysis
    nonce: str
    signature: str = DEFAULT_SIGNATURE


@dataclass(frozen=True)
class Vote:
    sender: NodeId
    candidate: NodeId
    second_cost: CostOfAnalysis
    signature: str = DEFAULT_SIGNATURE


@dataclass(frozen=True)
class Acknowledge:
    leader: NodeId
    payment_total: float
    votes: tuple[Vote, ...] = ()
    signature: str = DEFAULT_SIGNATURE


ElectionMessage = Hello | BeginElection | Vote | Acknowledge


def make_hello(k: NodeId, cost: CostOfAnalysis, nonce: str,
               alive: bool = True) -> Hello:
    """Commit to a cost.  The nonce stays private until the reveal."""
    if not alive:
        raise DeadNode(f"dead node {k} cannot enter an election")
    return Hello(sender=k, commit=commitment(cost, nonce))


def verify_commit(hello: Hello, reveal: BeginElection) -> bool:
    """True iff the revealed (cost, nonce) hashes to the committed value."""
    if hello.sender != reveal.sender:
        raise SenderMismatch(
            f"hello from {hello.sender} but reveal from {reveal.sender}")
    return commitment(reveal.cost, reveal.nonce) == hello.commit
