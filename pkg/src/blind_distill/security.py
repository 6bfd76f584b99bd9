"""Exact, enumeration-based checks of the protocol's classical views.

Everything here runs the classical layer of the distilled double-server
protocol symbolically and enumerates Alice's randomness completely, so a
zero mutual information is certified exactly (integer counts), not sampled.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import statevec as sv
from .algebra import ALL_ANGLES, ALL_LABELS, Angle8, BellLabel, Gf2Vec, compose_delta, reflect
from .distill import draw_query
from .errors import InvalidDistribution, OrderingViolation
from .mbqc import ByproductFrame, GraphSpec, Pattern, adapted_angle
from .protocol import Kind, PartyRole, Transcript, hash_stream


# --- distributions ----------------------------------------------------------------

@dataclass(frozen=True)
class ViewDistribution:
    """Exact distribution over a party's received values under one fixed hypothesis."""

    table: Mapping[tuple, Fraction]

    def marginal(self, i: int) -> dict:
        out: dict = {}
        for view, p in self.table.items():
            out[view[i]] = out.get(view[i], Fraction(0)) + p
        return out

    def is_uniform(self, support_size: int) -> bool:
        return len(self.table) == support_size and set(self.table.values()) == {Fraction(1, support_size)}

    def __eq__(self, other):
        return isinstance(other, ViewDistribution) and dict(self.table) == dict(other.table)


def _normalize(counts: Mapping) -> dict:
    total = sum(counts.values())
    return {k: Fraction(c) / total for k, c in counts.items()}


def bob1_view_distribution(phis: Sequence[Angle8], labels: Sequence[BellLabel]) -> ViewDistribution:
    """Joint law of the compensated angles Bob1 receives, over Alice's uniform thetas.

    ``phis`` is part of the hypothesis only to show it is never read.
    """
    del phis
    counts: Counter = Counter()
    for thetas in itertools.product(ALL_ANGLES, repeat=len(labels)):
        counts[tuple(reflect(t, lab).k for t, lab in zip(thetas, labels))] += 1
    return ViewDistribution(_normalize(counts))


def bob2_view_distribution(phi_adapted: Sequence[Angle8], bs: Sequence[int]) -> ViewDistribution:
    """Joint law of the deltas Bob2 receives over uniform (theta, r) per vertex."""
    if isinstance(phi_adapted, Angle8):
        phi_adapted, bs = [phi_adapted], [bs]
    counts: Counter = Counter()
    per_vertex = list(itertools.product(ALL_ANGLES, (0, 1)))
    for choice in itertools.product(per_vertex, repeat=len(bs)):
        counts[tuple(compose_delta(t, b, phi, r).k
                     for (t, r), phi, b in zip(choice, phi_adapted, bs))] += 1
    return ViewDistribution(_normalize(counts))


def mutual_information(joint: Mapping[tuple, object]) -> float:
    """I(secret; view) in bits for a joint table keyed by ``(secret, view)``.

    Weights may be ints (counts) or Fractions; they are normalized exactly.
    Returns exactly ``0.0`` when the table factorizes exactly.
    """
    weights = {k: Fraction(v) for k, v in joint.items()}
    if not weights or any(w < 0 for w in weights.values()):
        raise InvalidDistribution("joint table must be nonempty with nonnegative weights")
    total = sum(weights.values())
    if total == 0:
        raise InvalidDistribution("joint table has zero total weight")
    if any(not (isinstance(k, tuple) and len(k) == 2) for k in weights):
        raise InvalidDistribution("joint keys must be (secret, view) pairs")
    ps: dict = {}
    pv: dict = {}
    for (s, v), w in weights.items():
        ps[s] = ps.get(s, 0) + w
        pv[v] = pv.get(v, 0) + w
    if all(weights.get((s, v), 0) * total == ps[s] * pv[v] for s in ps for v in pv):
        return 0.0
    mi = 0.0
    for (s, v), w in weights.items():
        if w:
            mi += float(w / total) * math.log2(float(w * total / (ps[s] * pv[v])))
    return max(mi, 0.0)


# --- symbolic classical layer ------------------------------------------------------

# A Bob's pure strategy: (view so far, vertex, private message bit) -> reported bit.
AdversaryStrategy = Callable[[tuple, int, int], int]


def honest_zero(view: tuple, vertex: int, message: int) -> int:
    return 0


def encode_in_first(view: tuple, vertex: int, message: int) -> int:
    """Report the message on the first vertex, then zeros."""
    return message if vertex == 0 else 0


def encode_in_all(view: tuple, vertex: int, message: int) -> int:
    return message


def view_parity(view: tuple, vertex: int, message: int) -> int:
    """A view-dependent strategy: parity of everything seen so far, xored with the message."""
    return (sum(_flatten(view)) + message) & 1


def _flatten(view):
    for item in view:
        if isinstance(item, tuple):
            yield from _flatten(item)
        elif isinstance(item, int):
            yield item


STRATEGIES: dict[str, AdversaryStrategy] = {
    "zero": honest_zero,
    "encode_first": encode_in_first,
    "encode_all": encode_in_all,
    "view_parity": view_parity,
}


def two_step_pattern(phi0: int = 1, phi1: int = 1) -> Pattern:
    """Two vertices, both measured, the second adapted on the first's outcome."""
    graph = GraphSpec(2, frozenset({(0, 1)}), (0, 1), ())
    return Pattern(graph, {0: Angle8(phi0), 1: Angle8(phi1)}, {1: frozenset({0})}, {})


def single_pattern(phi0: int = 1) -> Pattern:
    return Pattern(GraphSpec(1, frozenset(), (0,), ()), {0: Angle8(phi0)})


@dataclass(frozen=True)
class RunParams:
    """What a symbolic run fixes: the program, pair labels and hashing shape.

    ``broken`` switches to a deliberately insecure Alice that forces r = 0 and
    relays every message she sends to one Bob to the other Bob as well.
    """

    pattern: Pattern
    labels: tuple[BellLabel, ...]
    hash_rounds: int = 1
    broken: bool = False

    @property
    def query_lengths(self) -> list[int]:
        n = self.pattern.graph.vertex_count + self.hash_rounds
        return [2 * (n - r) for r in range(self.hash_rounds)]


def query_space(params: RunParams) -> list[tuple[int, ...]]:
    """Every sequence of nonzero queries (as masks) Alice could broadcast."""
    spaces = [range(1, 2**length) for length in params.query_lengths]
    return list(itertools.product(*spaces))


def symbolic_views(params: RunParams, thetas: Sequence[Angle8], rs: Sequence[int], queries: Sequence[int],
                   bob1: AdversaryStrategy, bob2: AdversaryStrategy,
                   m1: int = 0, m2: int = 0) -> tuple[tuple, tuple]:
    """Classical views of Bob1 and Bob2 for one assignment of all randomness.

    ``m1`` / ``m2`` are the private bits handed to each Bob's strategy.
    """
    pattern = params.pattern
    verts = list(pattern.graph.vertices)
    rs = [0] * len(verts) if params.broken else list(rs)
    view1: list = [("s", q) for q in queries]
    view2: list = [("s", q) for q in queries]
    thp = tuple(reflect(thetas[v], params.labels[v]).k for v in verts)
    view1.append(("theta_prime", thp))
    if params.broken:
        view2.append(("theta_prime", thp))
    bs = []
    for v in verts:
        b = bob1(tuple(view1), v, m1) & 1
        bs.append(b)
        view1.append(("b", v, b))
    frame = ByproductFrame()
    for v in pattern.graph.order:
        phi = adapted_angle(pattern, frame, v)
        delta = compose_delta(thetas[v], bs[v], phi, rs[v]).k
        view2.append(("delta", v, delta))
        if params.broken:
            view1.append(("delta", v, delta))
        o = bob2(tuple(view2), v, m2) & 1
        view2.append(("o", v, o))
        frame.record(v, o ^ rs[v])
    return tuple(view1), tuple(view2)


def _alice_randomness(params: RunParams):
    v = params.pattern.graph.vertex_count
    r_space = [(0,) * v] if params.broken else list(itertools.product((0, 1), repeat=v))
    return itertools.product(itertools.product(ALL_ANGLES, repeat=v), r_space, query_space(params))


@dataclass(frozen=True)
class LeakageResult:
    mutual_information_bits: float
    cases: int


def signaling_capacity_test(strategy: AdversaryStrategy, sender: PartyRole, receiver: PartyRole,
                            params: RunParams, receiver_strategy: AdversaryStrategy = honest_zero
                            ) -> LeakageResult:
    """I(message; receiver's complete view) for a uniform 1-bit message, enumerated exactly."""
    if {sender, receiver} != {PartyRole.BOB1, PartyRole.BOB2}:
        raise ValueError("signaling is tested between Bob1 and Bob2 only")
    joint: Counter = Counter()
    cases = 0
    for message in (0, 1):
        for thetas, rs, queries in _alice_randomness(params):
            if sender == PartyRole.BOB1:
                v1, v2 = symbolic_views(params, thetas, rs, queries, strategy, receiver_strategy, m1=message)
                view = v2
            else:
                v1, v2 = symbolic_views(params, thetas, rs, queries, receiver_strategy, strategy, m2=message)
                view = v1
            joint[(message, view)] += 1
            cases += 1
    return LeakageResult(mutual_information(joint), cases)


def blindness_leakage(observer: PartyRole, graph_pattern: Pattern, labels: Sequence[BellLabel],
                      observer_strategy: AdversaryStrategy = honest_zero, hash_rounds: int = 0
                      ) -> LeakageResult:
    """I((program angles, other Bob's reports); observer's view) with honest Alice.

    The program angles range over all 8^k choices for the measured vertices and
    the other Bob's reports over all bit vectors.
    """
    measured = list(graph_pattern.graph.order)
    nverts = graph_pattern.graph.vertex_count
    joint: Counter = Counter()
    cases = 0
    for phis in itertools.product(range(8), repeat=len(measured)):
        pattern = Pattern(graph_pattern.graph, dict(zip(measured, phis)),
                          graph_pattern.x_deps, graph_pattern.z_deps)
        params = RunParams(pattern, tuple(labels), hash_rounds)
        for reports in itertools.product((0, 1), repeat=nverts):
            other = _fixed_reports(reports)
            for thetas, rs, queries in _alice_randomness(params):
                if observer == PartyRole.BOB1:
                    view, _ = symbolic_views(params, thetas, rs, queries, observer_strategy, other)
                else:
                    _, view = symbolic_views(params, thetas, rs, queries, other, observer_strategy)
                joint[((phis, reports), view)] += 1
                cases += 1
    return LeakageResult(mutual_information(joint), cases)


def _fixed_reports(reports: Sequence[int]) -> AdversaryStrategy:
    def strategy(view, vertex, message):
        return reports[vertex]

    return strategy


# --- quantum side: shared pairs alone carry no signal ---------------------------

def shared_pair_holevo(label: BellLabel, angles: Sequence[Angle8]) -> float:
    """Holevo quantity of Bob2's qubit when Bob1 encodes a choice in his measurement angle.

    Bob2 cannot see Bob1's outcome, so his state is the outcome-average.
    """
    pair = sv.prepare_bell(label)
    states = []
    for angle in angles:
        rho = np.zeros((2, 2), dtype=complex)
        for bit in (0, 1):
            res = sv.measure_xy(pair, 0, angle, outcome=bit)
            amp = res.post_state.amplitudes
            rho += res.probability * np.outer(amp, amp.conj())
        states.append(rho)

    def vn(rho):
        ev = np.linalg.eigvalsh(rho)
        return float(-sum(e * math.log2(e) for e in ev if e > 1e-15))

    avg = sum(states) / len(states)
    return max(0.0, vn(avg) - sum(vn(r) for r in states) / len(states))


# --- transcript audit ------------------------------------------------------------

def hash_seed_independence_check(transcript: Transcript, seed: int | None = None) -> bool:
    """Audit that every query was fixed before any same-round reply and came from the stream in order.

    Returns True or raises :class:`OrderingViolation`.
    """
    queries: dict[int, list] = {}
    first_reply: dict[int, int] = {}
    for rec in transcript:
        kind, rnd = rec.message.kind, rec.message.round
        if kind == Kind.HASH_QUERY:
            if rnd in first_reply:
                raise OrderingViolation(f"query for round {rnd} (seq {rec.seq}) sent after a reply was consumed")
            queries.setdefault(rnd, []).append(rec)
        elif rec.receiver == PartyRole.ALICE and rnd in queries or kind == Kind.HASH_RESULT:
            if kind == Kind.HASH_RESULT and rnd not in queries:
                raise OrderingViolation(f"hash result for round {rnd} (seq {rec.seq}) precedes its query")
            first_reply.setdefault(rnd, rec.seq)
    expected_draw = 0
    stream = hash_stream(seed) if seed is not None else None
    for rnd in sorted(queries):
        recs = queries[rnd]
        payloads = {(r.message.payload["s"], r.message.payload["bits"], r.message.payload["draw"]) for r in recs}
        if len(payloads) != 1:
            raise OrderingViolation(f"round {rnd}: the Bobs received different queries")
        s_hex, bits, draw = payloads.pop()
        if {r.receiver for r in recs} != {PartyRole.BOB1, PartyRole.BOB2}:
            raise OrderingViolation(f"round {rnd}: query not broadcast to both Bobs")
        if draw != expected_draw:
            raise OrderingViolation(f"round {rnd}: draw index {draw}, expected {expected_draw}")
        expected_draw += 1
        if stream is not None:
            replay = draw_query(stream, bits)
            if replay != Gf2Vec.from_hex(s_hex, bits):
                raise OrderingViolation(f"round {rnd}: query does not match the seeded stream position")
    return True


# --- report ----------------------------------------------------------------------

@dataclass
class Claim:
    claim: str
    method: str
    cases_enumerated: int
    mutual_information_bits: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "method": self.method,
            "cases_enumerated": self.cases_enumerated,
            "mutual_information_bits": round(self.mutual_information_bits, 6),
            "verdict": self.verdict,
        }


@dataclass
class BlindnessReport:
    claims: list[Claim] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.verdict != "fail" for c in self.claims)

    def to_dict(self) -> dict:
        return {"schema_version": 1, "all_passed": self.passed, "claims": [c.to_dict() for c in self.claims]}


def _zero_verdict(mi: float) -> str:
    return "pass" if mi == 0.0 else "fail"


def run_security_suite(broken_variant: bool = False, audit_transcript: Transcript | None = None,
                       audit_seed: int | None = None) -> BlindnessReport:
    report = BlindnessReport()
    enum = "exact enumeration"

    # per-message uniformity, every label and program angle
    cases, ok = 0, True
    for lab in ALL_LABELS:
        for phi in ALL_ANGLES:
            ok &= bob1_view_distribution([phi], [lab]).is_uniform(8)
            cases += 8
    report.claims.append(Claim("bob1_theta_prime_uniform", enum, cases, 0.0, "pass" if ok else "fail"))
    cases, ok = 0, True
    for phi in ALL_ANGLES:
        for b in (0, 1):
            ok &= bob2_view_distribution([phi], [b]).is_uniform(8)
            cases += 16
    report.claims.append(Claim("bob2_delta_uniform", enum, cases, 0.0, "pass" if ok else "fail"))

    # blindness with respect to the program and the other Bob's reports
    for observer, name in ((PartyRole.BOB1, "bob1"), (PartyRole.BOB2, "bob2")):
        worst, total = 0.0, 0
        for labels in itertools.product(ALL_LABELS, repeat=1):
            for strat in STRATEGIES.values():
                res = blindness_leakage(observer, single_pattern(), labels, strat, hash_rounds=1)
                worst, total = max(worst, res.mutual_information_bits), total + res.cases
        for labels in ((BellLabel(0, 0), BellLabel(1, 1)), (BellLabel(1, 0), BellLabel(0, 1))):
            for strat in (honest_zero, view_parity):
                res = blindness_leakage(observer, two_step_pattern(), labels, strat, hash_rounds=0)
                worst, total = max(worst, res.mutual_information_bits), total + res.cases
        report.claims.append(Claim(f"{name}_learns_nothing_about_program", enum, total, worst, _zero_verdict(worst)))

    # no signaling between the Bobs through Alice
    labels = (BellLabel(1, 1), BellLabel(0, 1))
    for sender, receiver, name in ((PartyRole.BOB1, PartyRole.BOB2, "no_signaling_bob1_to_bob2"),
                                   (PartyRole.BOB2, PartyRole.BOB1, "no_signaling_bob2_to_bob1")):
        worst, total = 0.0, 0
        for pattern in (single_pattern(), two_step_pattern()):
            params = RunParams(pattern, labels[:pattern.graph.vertex_count], hash_rounds=1)
            for strat in (encode_in_first, encode_in_all, view_parity):
                res = signaling_capacity_test(strat, sender, receiver, params)
                worst, total = max(worst, res.mutual_information_bits), total + res.cases
        report.claims.append(Claim(name, enum, total, worst, _zero_verdict(worst)))

    holevo = max(shared_pair_holevo(lab, (Angle8(0), Angle8(2))) for lab in ALL_LABELS)
    report.claims.append(Claim("shared_pairs_carry_no_signal", "statevector partial trace", 8,
                               holevo, "pass" if holevo < 1e-9 else "fail"))

    # the detector must see a leak when Alice misbehaves
    broken = RunParams(two_step_pattern(), labels, hash_rounds=0, broken=True)
    power_runs = [signaling_capacity_test(encode_in_all, s, r, broken)
                  for s, r in ((PartyRole.BOB1, PartyRole.BOB2), (PartyRole.BOB2, PartyRole.BOB1))]
    power = min(res.mutual_information_bits for res in power_runs)
    report.claims.append(Claim("detector_power_on_broken_variant", enum, sum(r.cases for r in power_runs),
                               power, "pass" if power > 0.5 else "fail"))

    if broken_variant:
        for sender, receiver, name in ((PartyRole.BOB1, PartyRole.BOB2, "broken_signaling_bob1_to_bob2"),
                                       (PartyRole.BOB2, PartyRole.BOB1, "broken_signaling_bob2_to_bob1")):
            res = signaling_capacity_test(encode_in_all, sender, receiver, broken)
            verdict = "expected-fail" if res.mutual_information_bits > 0 else "fail"
            report.claims.append(Claim(name, enum, res.cases, res.mutual_information_bits, verdict))

    if audit_transcript is not None:
        try:
            hash_seed_independence_check(audit_transcript, audit_seed)
            verdict = "pass"
        except OrderingViolation:
            verdict = "fail"
        n_queries = len(audit_transcript.of_kind(Kind.HASH_QUERY))
        report.claims.append(Claim("hash_queries_drawn_before_replies", "transcript audit", n_queries, 0.0, verdict))
    return report
