"""Parties, router and full runs of the single-server, double-server and
distilled double-server blind protocols.

Every classical message goes through :class:`Router`, which refuses any
Bob1 <-> Bob2 delivery and appends each delivered message to the
:class:`Transcript`. Quantum hand-offs (pair distribution, qubit sending) are
in-memory and only leave a classical marker record; no amplitudes ever enter a
message payload.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import bellsim, distill
from . import statevec as sv
from .algebra import Angle8, BellLabel, Gf2Vec, compose_delta, reflect
from .bellsim import PairRegister, WernerParams
from .distill import DistillStats, HashingConfig, LinearModel
from .errors import DecodeAmbiguous, InsufficientPairs, TopologyViolation
from .mbqc import ByproductFrame, GraphSpec, LiveQubits, Pattern, adapted_angle, build_graph_state, correct_output


class PartyRole(str, Enum):
    ALICE = "Alice"
    BOB1 = "Bob1"
    BOB2 = "Bob2"
    CENTER = "Center"


class Kind(str, Enum):
    GRAPH = "Graph"
    THETA_BATCH = "ThetaBatch"
    THETA_PRIME_BATCH = "ThetaPrimeBatch"
    DELTA = "Delta"
    RESULT = "Result"
    HASH_QUERY = "HashQuery"
    HASH_RESULT = "HashResult"
    TWIRL_NOTE = "TwirlNote"
    BELL_ISSUE = "BellIssue"
    QUBIT_TRANSFER = "QubitTransfer"


A, B1, B2, C = PartyRole.ALICE, PartyRole.BOB1, PartyRole.BOB2, PartyRole.CENTER

ALLOWED_ROUTES = frozenset({(A, B1), (B1, A), (A, B2), (B2, A), (C, B1), (C, B2), (A, C), (C, A)})


@dataclass(frozen=True)
class Message:
    kind: Kind
    round: int
    payload: dict


@dataclass(frozen=True)
class Record:
    seq: int
    sender: PartyRole
    receiver: PartyRole
    message: Message

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "from": self.sender.value,
            "to": self.receiver.value,
            "kind": self.message.kind.value,
            "round": self.message.round,
            "payload": self.message.payload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Record:
        msg = Message(Kind(d["kind"]), int(d["round"]), d["payload"])
        return cls(int(d["seq"]), PartyRole(d["from"]), PartyRole(d["to"]), msg)


class Transcript:
    """Append-only log of delivered messages."""

    def __init__(self, records: Iterable[Record] = ()):
        self._records: list[Record] = list(records)

    def append(self, sender: PartyRole, receiver: PartyRole, msg: Message) -> Record:
        rec = Record(len(self._records), sender, receiver, msg)
        self._records.append(rec)
        return rec

    @property
    def records(self) -> tuple[Record, ...]:
        return tuple(self._records)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def of_kind(self, kind: Kind) -> list[Record]:
        return [r for r in self._records if r.message.kind == kind]

    def bob_to_bob(self) -> list[Record]:
        return [r for r in self._records if {r.sender, r.receiver} == {B1, B2}]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in self._records)

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        return cls(Record.from_dict(json.loads(line)) for line in text.splitlines() if line.strip())


def route(msg: Message, sender: PartyRole, receiver: PartyRole, transcript: Transcript) -> Record:
    if (sender, receiver) not in ALLOWED_ROUTES:
        raise TopologyViolation(f"{sender.value} -> {receiver.value} is not a permitted channel")
    return transcript.append(sender, receiver, msg)


class Router:
    def __init__(self, transcript: Transcript | None = None):
        self.transcript = transcript if transcript is not None else Transcript()
        self._inbox: dict[PartyRole, deque] = {role: deque() for role in PartyRole}

    def send(self, sender: PartyRole, receiver: PartyRole, kind: Kind, round: int, payload: dict) -> Record:
        rec = route(Message(kind, round, payload), sender, receiver, self.transcript)
        self._inbox[receiver].append(rec)
        return rec

    def receive(self, role: PartyRole, kind: Kind) -> Message:
        if not self._inbox[role]:
            raise RuntimeError(f"{role.value} expected {kind.value} but inbox is empty")
        rec = self._inbox[role].popleft()
        if rec.message.kind != kind:
            raise RuntimeError(f"{role.value} expected {kind.value}, got {rec.message.kind.value}")
        return rec.message


# --- randomness ------------------------------------------------------------------

@dataclass
class Streams:
    """Independent seeded streams; Alice's streams never see incoming data."""

    theta: np.random.Generator
    r: np.random.Generator
    hash: np.random.Generator
    twirl: np.random.Generator
    nature: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> Streams:
        children = np.random.SeedSequence(seed).spawn(5)
        return cls(*(np.random.default_rng(c) for c in children))


def hash_stream(seed: int) -> np.random.Generator:
    return Streams.from_seed(seed).hash


@dataclass(frozen=True)
class AliceSecrets:
    thetas: Mapping[int, Angle8]
    rs: Mapping[int, int]

    @classmethod
    def sample(cls, pattern: Pattern, streams: Streams) -> AliceSecrets:
        vs = list(pattern.graph.vertices)
        ks = streams.theta.integers(0, 8, size=len(vs))
        bits = streams.r.integers(0, 2, size=len(vs))
        return cls({v: Angle8(int(k)) for v, k in zip(vs, ks)}, {v: int(b) for v, b in zip(vs, bits)})


# --- physical layer ----------------------------------------------------------------

class SharedPairs:
    """The entangled pairs held jointly by Bob1 and Bob2.

    During hashing the pairs are tracked at label level; once the computation
    starts each used pair becomes an explicit 2-qubit state (Bob1's half is qubit 0).
    Each Bob only ever learns the outcomes of his own measurements.
    """

    def __init__(self, register: PairRegister, rng):
        self.register = register
        self._rng = rng
        self._pending: dict[PartyRole, object] = {}
        self._bits: dict[PartyRole, int] = {}
        self.bob2_qubits: dict[int, sv.StateVector] = {}

    def submit_program(self, role: PartyRole, prog: distill.ParityProgram):
        self._pending[role] = prog
        if len(self._pending) == 2:
            if self._pending[B1] != self._pending[B2]:
                raise RuntimeError("Bobs applied different hashing programs")
            b1, b2, self.register = distill.execute_on_register(prog, self.register, self._rng)
            self._bits = {B1: b1, B2: b2}
            self._pending = {}

    def take_bit(self, role: PartyRole) -> int:
        return self._bits.pop(role)

    def submit_twirl(self, role: PartyRole, perm_ids):
        self._pending[role] = tuple(perm_ids)
        if len(self._pending) == 2:
            self.register = bellsim.twirl(self.register, self._pending[B1])
            self._pending = {}

    def remote_prepare(self, j: int, bob1_angle: Angle8, outcome=None) -> int:
        """Bob1 measures his half of pair ``j`` at ``bob1_angle``; Bob2 keeps the partner."""
        pair = sv.prepare_bell(self.register.labels[j])
        res = sv.measure_xy(pair, 0, bob1_angle, self._rng, outcome=outcome)
        self.bob2_qubits[j] = res.post_state
        return res.bit


# --- parties -------------------------------------------------------------------------

class Bob1:
    def __init__(self, router: Router, pairs: SharedPairs, forced: Sequence[int] | None = None):
        self.router = router
        self.pairs = pairs
        self._forced = deque(forced or ())

    def on_bell_issue(self):
        self.router.receive(B1, Kind.BELL_ISSUE)

    def on_twirl(self):
        msg = self.router.receive(B1, Kind.TWIRL_NOTE)
        self.pairs.submit_twirl(B1, msg.payload["perms"])

    def on_hash_query(self):
        msg = self.router.receive(B1, Kind.HASH_QUERY)
        s = Gf2Vec.from_hex(msg.payload["s"], msg.payload["bits"])
        self.pairs.submit_program(B1, distill.compile_parity_program(s, len(s) // 2))
        return msg.round

    def report_hash(self, round: int):
        self.router.send(B1, A, Kind.HASH_RESULT, round, {"bit": self.pairs.take_bit(B1)})

    def on_angles(self, kind: Kind, key: str):
        msg = self.router.receive(B1, kind)
        bits = []
        for j, k in enumerate(msg.payload[key]):
            forced = self._forced.popleft() if self._forced else None
            bits.append(self.pairs.remote_prepare(j, Angle8(-k), outcome=forced))
        self.router.send(B1, A, Kind.RESULT, msg.round, {"b": bits})


class Bob2:
    """The computing server. In the single-server protocol this role is the lone Bob."""

    def __init__(self, router: Router, rng, pairs: SharedPairs | None = None,
                 forced: Sequence[int] | None = None):
        self.router = router
        self.rng = rng
        self.pairs = pairs
        self.qubits: list[sv.StateVector] = []
        self.state: sv.StateVector | None = None
        self.live: LiveQubits | None = None
        self._forced = deque(forced or ())

    def on_bell_issue(self):
        self.router.receive(B2, Kind.BELL_ISSUE)

    def on_qubits(self, qubits: Sequence[sv.StateVector]):
        self.router.receive(B2, Kind.QUBIT_TRANSFER)
        self.qubits = list(qubits)

    def on_twirl(self):
        msg = self.router.receive(B2, Kind.TWIRL_NOTE)
        self.pairs.submit_twirl(B2, msg.payload["perms"])

    def on_hash_query(self):
        msg = self.router.receive(B2, Kind.HASH_QUERY)
        s = Gf2Vec.from_hex(msg.payload["s"], msg.payload["bits"])
        self.pairs.submit_program(B2, distill.compile_parity_program(s, len(s) // 2))

    def report_hash(self, round: int):
        self.router.send(B2, A, Kind.HASH_RESULT, round, {"bit": self.pairs.take_bit(B2)})

    def on_graph(self):
        msg = self.router.receive(B2, Kind.GRAPH)
        graph = _graph_from_payload(msg.payload)
        self.state = build_graph_state(self.qubits, graph)
        self.live = LiveQubits(graph.vertices)

    def on_delta(self):
        msg = self.router.receive(B2, Kind.DELTA)
        v = msg.payload["vertex"]
        forced = self._forced.popleft() if self._forced else None
        res = sv.measure_xy(self.state, self.live.index(v), Angle8(msg.payload["delta"]),
                            self.rng, outcome=forced)
        self.state = res.post_state
        self.live.remove(v)
        self.router.send(B2, A, Kind.RESULT, msg.round, {"vertex": v, "bit": res.bit})


def _graph_from_payload(payload: dict) -> GraphSpec:
    return GraphSpec(payload["vertices"], frozenset(tuple(e) for e in payload["edges"]),
                     tuple(payload["order"]), tuple(payload["outputs"]))


class Alice:
    def __init__(self, router: Router, pattern: Pattern, secrets: AliceSecrets):
        self.router = router
        self.pattern = pattern
        self.secrets = secrets
        self.frame = ByproductFrame()
        self.effective_thetas: dict[int, Angle8] = dict(secrets.thetas)

    def send_graph(self, round: int):
        g = self.pattern.graph
        payload = {"vertices": g.vertex_count, "edges": [list(e) for e in sorted(g.edges)],
                   "order": list(g.order), "outputs": list(g.outputs)}
        self.router.send(A, B2, Kind.GRAPH, round, payload)

    def send_angles(self, labels: Sequence[BellLabel] | None, round: int) -> tuple[Kind, str]:
        vs = list(self.pattern.graph.vertices)
        if labels is None:
            kind, key = Kind.THETA_BATCH, "theta"
            angles = [self.secrets.thetas[v].k for v in vs]
        else:
            kind, key = Kind.THETA_PRIME_BATCH, "theta_prime"
            angles = [reflect(self.secrets.thetas[v], labels[i]).k for i, v in enumerate(vs)]
        self.router.send(A, B1, kind, round, {key: angles})
        return kind, key

    def absorb_bob1_results(self):
        msg = self.router.receive(A, Kind.RESULT)
        for v, b in zip(self.pattern.graph.vertices, msg.payload["b"]):
            self.effective_thetas[v] = self.secrets.thetas[v].plus_pi(b)

    def send_delta(self, v: int, round: int):
        phi = adapted_angle(self.pattern, self.frame, v)
        delta = compose_delta(self.effective_thetas[v], 0, phi, self.secrets.rs[v])
        self.router.send(A, B2, Kind.DELTA, round, {"vertex": v, "delta": delta.k})

    def absorb_bob2_result(self):
        msg = self.router.receive(A, Kind.RESULT)
        v = msg.payload["vertex"]
        self.frame.record(v, msg.payload["bit"] ^ self.secrets.rs[v])


# --- runs ---------------------------------------------------------------------------

@dataclass
class ProtocolResult:
    """Alice's correction record plus Bob2's final qubits (the latter test-visible only)."""

    output: sv.StateVector
    raw_output: sv.StateVector
    outcomes: dict[int, int]
    effective_thetas: dict[int, Angle8]
    transcript: Transcript
    bob2_inputs: dict[int, sv.StateVector] = field(default_factory=dict)
    stats: DistillStats | None = None
    hashing: object = None


def _computation_phase(alice: Alice, bob2: Bob2, round: int) -> tuple[sv.StateVector, sv.StateVector]:
    alice.send_graph(round)
    bob2.on_graph()
    for v in alice.pattern.graph.order:
        round += 1
        alice.send_delta(v, round)
        bob2.on_delta()
        alice.absorb_bob2_result()
    raw = bob2.state
    corrected = correct_output(raw, alice.pattern, alice.frame, alice.effective_thetas)
    return raw, corrected


def _branches(branches, role):
    return None if branches is None else branches.get(role.value)


def run_single_server(pattern: Pattern, seed: int, secrets: AliceSecrets | None = None,
                      branches: Mapping[str, Sequence[int]] | None = None) -> ProtocolResult:
    """Alice sends rotated qubits, Bob builds the graph state and measures at the padded angles."""
    pattern.check()
    streams = Streams.from_seed(seed)
    secrets = secrets or AliceSecrets.sample(pattern, streams)
    router = Router()
    alice = Alice(router, pattern, secrets)
    bob = Bob2(router, streams.nature, forced=_branches(branches, B2))
    router.send(A, B2, Kind.QUBIT_TRANSFER, 0, {"qubits": pattern.graph.vertex_count})
    bob.on_qubits([sv.prepare_plus_theta(secrets.thetas[v]) for v in pattern.graph.vertices])
    inputs = dict(enumerate(bob.qubits))
    raw, out = _computation_phase(alice, bob, 1)
    return ProtocolResult(out, raw, dict(alice.frame.outcomes), alice.effective_thetas,
                          router.transcript, inputs)


def _double_server_core(pattern, router, alice, bob1, bob2, pairs, labels, round):
    kind, key = alice.send_angles(labels, round)
    bob1.on_angles(kind, key)
    alice.absorb_bob1_results()
    bob2.qubits = [pairs.bob2_qubits[j] for j in range(pattern.graph.vertex_count)]
    inputs = dict(enumerate(bob2.qubits))
    raw, out = _computation_phase(alice, bob2, round + 1)
    return ProtocolResult(out, raw, dict(alice.frame.outcomes), alice.effective_thetas,
                          router.transcript, inputs)


def run_double_server(pattern: Pattern, seed: int, secrets: AliceSecrets | None = None,
                      branches: Mapping[str, Sequence[int]] | None = None) -> ProtocolResult:
    """Clean |psi_00> pairs from the center; Bob1 remotely prepares Bob2's inputs."""
    pattern.check()
    streams = Streams.from_seed(seed)
    secrets = secrets or AliceSecrets.sample(pattern, streams)
    m = pattern.graph.vertex_count
    router = Router()
    pairs = SharedPairs(PairRegister((BellLabel(0, 0),) * m), streams.nature)
    for bob in (B1, B2):
        router.send(C, bob, Kind.BELL_ISSUE, 0, {"pairs": m, "state": "psi00"})
    alice = Alice(router, pattern, secrets)
    bob1 = Bob1(router, pairs, _branches(branches, B1))
    bob2 = Bob2(router, streams.nature, pairs, _branches(branches, B2))
    bob1.on_bell_issue()
    bob2.on_bell_issue()
    return _double_server_core(pattern, router, alice, bob1, bob2, pairs, None, 1)


def run_double_server_distilled(pattern: Pattern, cfg: HashingConfig, w: WernerParams | float,
                                seed: int, secrets: AliceSecrets | None = None,
                                branches: Mapping[str, Sequence[int]] | None = None,
                                twirl: bool = True, register: PairRegister | None = None
                                ) -> ProtocolResult:
    """Noisy pairs, optional twirl, Alice-mediated hashing, then the compensated protocol.

    Raises :class:`DecodeAmbiguous` when the ML decode is tied; the exception
    carries the partial transcript as ``.transcript``.
    """
    pattern.check()
    w = w if isinstance(w, WernerParams) else WernerParams(float(w))
    rounds = cfg.rounds(w)
    needed = pattern.graph.vertex_count
    if cfg.n - rounds < needed:
        raise InsufficientPairs(f"{cfg.n} pairs leave {cfg.n - rounds} after {rounds} hashing rounds; "
                                f"pattern needs {needed}")
    streams = Streams.from_seed(seed)
    secrets = secrets or AliceSecrets.sample(pattern, streams)
    prior = bellsim.werner_dist(w)
    router = Router()
    for bob in (B1, B2):
        router.send(C, bob, Kind.BELL_ISSUE, 0, {"pairs": cfg.n, "state": "psi00"})
    reg = register if register is not None else bellsim.sample_register(prior, cfg.n, streams.nature)
    pairs = SharedPairs(reg, streams.nature)
    alice = Alice(router, pattern, secrets)
    bob1 = Bob1(router, pairs, _branches(branches, B1))
    bob2 = Bob2(router, streams.nature, pairs, _branches(branches, B2))
    bob1.on_bell_issue()
    bob2.on_bell_issue()

    if twirl:
        ids = [int(i) for i in streams.twirl.integers(0, len(bellsim.TWIRL_WORDS), size=cfg.n)]
        for bob in (B1, B2):
            router.send(A, bob, Kind.TWIRL_NOTE, 0, {"perms": ids})
        bob1.on_twirl()
        bob2.on_twirl()

    model = LinearModel.initial(cfg.n)
    parities = []
    for r in range(1, rounds + 1):
        s = distill.draw_query(streams.hash, 2 * model.live_count)
        payload = {"s": s.to_hex(), "bits": len(s), "draw": r - 1}
        for bob in (B1, B2):
            router.send(A, bob, Kind.HASH_QUERY, r, dict(payload))
        bob1.on_hash_query()
        bob2.on_hash_query()
        model = model.after(distill.compile_parity_program(s, model.live_count))
        bob1.report_hash(r)
        bob2.report_hash(r)
        b1 = router.receive(A, Kind.HASH_RESULT).payload["bit"]
        b2 = router.receive(A, Kind.HASH_RESULT).payload["bit"]
        parities.append(b1 ^ b2)

    decoded = distill.decode_ml(parities, model, prior, cfg.n, cfg.decode_cap)
    stats = DistillStats(w.fidelity, distill.entropy(w), cfg.n, rounds, cfg.n - rounds, not decoded.ambiguous)
    if decoded.ambiguous:
        err = DecodeAmbiguous(f"{decoded.ties} strings tie for maximum likelihood")
        err.transcript = router.transcript
        err.stats = stats
        raise err
    labels = model.live_labels(decoded.mask)
    result = _double_server_core(pattern, router, alice, bob1, bob2, pairs, labels, rounds + 1)
    result.stats = stats
    result.hashing = {"initial": reg, "decoded": decoded, "labels": labels,
                      "true_labels": pairs.register.labels}
    return result
