"""Graph states, measurement patterns with feed-forward, and the reference runner.

Feed-forward convention: a vertex's X-dependencies flip the sign of its angle,
its Z-dependencies add pi. The same dependency maps on an output vertex give
the X and Z byproduct powers left on that output qubit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import statevec as sv
from .algebra import Angle8, ZERO
from .errors import MissingDependency, PatternError, TooManyQubits


@dataclass(frozen=True)
class GraphSpec:
    vertex_count: int
    edges: frozenset
    order: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        edges = frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        object.__setattr__(self, "outputs", tuple(sorted(int(v) for v in self.outputs)))

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass(frozen=True)
class Pattern:
    graph: GraphSpec
    angles: Mapping[int, Angle8]
    x_deps: Mapping[int, frozenset] = field(default_factory=dict)
    z_deps: Mapping[int, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "angles", {int(v): a if isinstance(a, Angle8) else Angle8(int(a))
                                            for v, a in self.angles.items()})
        for name in ("x_deps", "z_deps"):
            deps = {int(v): frozenset(int(d) for d in ds) for v, ds in getattr(self, name).items()}
            object.__setattr__(self, name, deps)

    def angle(self, v: int) -> Angle8:
        return self.angles.get(v, ZERO)

    def deps(self, v: int) -> tuple[frozenset, frozenset]:
        return self.x_deps.get(v, frozenset()), self.z_deps.get(v, frozenset())

    def check(self) -> Pattern:
        violations = validate_pattern(self)
        if violations:
            raise PatternError(violations)
        return self

    # -- config file round trip --------------------------------------------

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "vertices": g.vertex_count,
            "edges": [list(e) for e in sorted(g.edges)],
            "order": list(g.order),
            "outputs": list(g.outputs),
            "angles": {str(v): self.angles[v].k for v in sorted(self.angles)},
            "x_deps": {str(v): sorted(d) for v, d in sorted(self.x_deps.items()) if d},
            "z_deps": {str(v): sorted(d) for v, d in sorted(self.z_deps.items()) if d},
        }

    @classmethod
    def from_dict(cls, data: dict) -> Pattern:
        graph = GraphSpec(
            vertex_count=int(data["vertices"]),
            edges=frozenset(tuple(e) for e in data.get("edges", [])),
            order=tuple(data.get("order", [])),
            outputs=tuple(data.get("outputs", [])),
        )
        return cls(
            graph=graph,
            angles={int(v): Angle8(int(k)) for v, k in data.get("angles", {}).items()},
            x_deps={int(v): frozenset(d) for v, d in data.get("x_deps", {}).items()},
            z_deps={int(v): frozenset(d) for v, d in data.get("z_deps", {}).items()},
        )

    @classmethod
    def load(cls, path) -> Pattern:
        return cls.from_dict(json.loads(Path(path).read_text())).check()


def chain_pattern(angles) -> Pattern:
    """Linear cluster: vertex i is measured at ``angles[i]``, the last vertex is output."""
    angles = [a if isinstance(a, Angle8) else Angle8(int(a)) for a in angles]
    m = len(angles) + 1
    x_deps = {v: frozenset({v - 1}) for v in range(1, m)}
    z_deps = {v: frozenset({v - 2}) for v in range(2, m)}
    graph = GraphSpec(m, frozenset((i, i + 1) for i in range(m - 1)), tuple(range(m - 1)), (m - 1,))
    return Pattern(graph, dict(enumerate(angles)), x_deps, z_deps)


def validate_pattern(pattern: Pattern) -> list[Violation]:
    """Return every structural problem found; an empty list means the pattern is usable."""
    g = pattern.graph
    out: list[Violation] = []
    verts = set(g.vertices)
    for a, b in g.edges:
        if a == b:
            out.append(Violation("EdgeError", f"self-loop on vertex {a}"))
        if a not in verts or b not in verts:
            out.append(Violation("EdgeError", f"edge ({a}, {b}) references a missing vertex"))
    outputs = set(g.outputs)
    if not outputs <= verts:
        out.append(Violation("CoverageError", f"outputs {sorted(outputs - verts)} are not vertices"))
    if len(set(g.order)) != len(g.order):
        out.append(Violation("CoverageError", "measurement order repeats a vertex"))
    measured = set(g.order)
    if measured & outputs:
        out.append(Violation("CoverageError", f"output vertices {sorted(measured & outputs)} are measured"))
    missing = verts - outputs - measured
    if missing:
        out.append(Violation("CoverageError", f"vertices {sorted(missing)} are neither measured nor output"))
    extra = measured - verts
    if extra:
        out.append(Violation("CoverageError", f"measurement order names unknown vertices {sorted(extra)}"))
    position = {v: i for i, v in enumerate(g.order)}
    for deps_name, deps in (("x_deps", pattern.x_deps), ("z_deps", pattern.z_deps)):
        for v, ds in deps.items():
            for d in ds:
                if d not in position:
                    out.append(Violation("CausalityViolation", f"{deps_name}[{v}] uses unmeasured vertex {d}"))
                elif v in position and position[d] >= position[v]:
                    out.append(Violation("CausalityViolation",
                                         f"{deps_name}[{v}] depends on {d}, which is not measured earlier"))
    for v in pattern.angles:
        if v not in verts:
            out.append(Violation("CoverageError", f"angle given for unknown vertex {v}"))
    return out


@dataclass
class ByproductFrame:
    """Outcome record driving feed-forward; one per protocol run."""

    outcomes: dict[int, int] = field(default_factory=dict)

    def record(self, vertex: int, bit: int):
        self.outcomes[vertex] = bit & 1

    def parity(self, deps) -> int:
        total = 0
        for d in deps:
            if d not in self.outcomes:
                raise MissingDependency(f"outcome of vertex {d} not yet recorded")
            total ^= self.outcomes[d]
        return total

    def powers(self, pattern: Pattern, vertex: int) -> tuple[int, int]:
        xd, zd = pattern.deps(vertex)
        return self.parity(xd), self.parity(zd)


def adapt_angle(phi: Angle8, frame: ByproductFrame, x_deps=(), z_deps=()) -> Angle8:
    sx, sz = frame.parity(x_deps), frame.parity(z_deps)
    k = -phi.k if sx else phi.k
    return Angle8(k + 4 * sz)


def adapted_angle(pattern: Pattern, frame: ByproductFrame, vertex: int) -> Angle8:
    xd, zd = pattern.deps(vertex)
    return adapt_angle(pattern.angle(vertex), frame, xd, zd)


def build_graph_state(inputs, graph: GraphSpec) -> sv.StateVector:
    inputs = list(inputs)
    if len(inputs) != graph.vertex_count:
        raise ValueError(f"{len(inputs)} inputs for {graph.vertex_count} vertices")
    if graph.vertex_count > sv.MAX_QUBITS:
        raise TooManyQubits(f"{graph.vertex_count} vertices exceeds cap of {sv.MAX_QUBITS}")
    state = sv.tensor_all(inputs)
    for a, b in sorted(graph.edges):
        state = sv.apply_cz(state, a, b)
    return state


class LiveQubits:
    """Maps vertex ids to current qubit positions as measured qubits are removed."""

    def __init__(self, vertices):
        self._live = list(vertices)

    def index(self, vertex: int) -> int:
        return self._live.index(vertex)

    def remove(self, vertex: int):
        self._live.remove(vertex)

    @property
    def vertices(self) -> list[int]:
        return list(self._live)


def correct_output(raw: sv.StateVector, pattern: Pattern, frame: ByproductFrame,
                   thetas: Mapping[int, Angle8] | None = None) -> sv.StateVector:
    """Undo byproducts (and any input rotation) on the output qubits.

    ``raw`` holds the outputs in ascending vertex order.
    """
    thetas = thetas or {}
    state = raw
    for q, v in enumerate(pattern.graph.outputs):
        # raw = R(theta) X^sx Z^sz |ideal> up to phase, R(theta) = diag(1, e^{i theta})
        theta = thetas.get(v, ZERO)
        if theta.k:
            state = sv.apply_local(state, q, sv.phase(-theta))
        sx, sz = frame.powers(pattern, v)
        if sx:
            state = sv.apply_local(state, q, sv.X)
        if sz:
            state = sv.apply_local(state, q, sv.Z)
    return state


@dataclass(frozen=True)
class ReferenceRun:
    outcomes: dict[int, int]
    raw_output: sv.StateVector
    frame: ByproductFrame
    output: sv.StateVector


def run_reference(pattern: Pattern, rng=None, input_thetas: Mapping[int, Angle8] | None = None,
                  outcomes: Mapping[int, int] | None = None) -> ReferenceRun:
    """Plain (non-blind) one-way computation.

    Inputs are ``|theta_v>`` (default ``|+>``); vertices are measured in order at
    their adapted angles. ``outcomes`` forces measurement branches by vertex.
    """
    pattern.check()
    thetas = {v: Angle8(0) for v in pattern.graph.vertices}
    thetas.update(input_thetas or {})
    state = build_graph_state([sv.prepare_plus_theta(thetas[v]) for v in pattern.graph.vertices],
                              pattern.graph)
    frame = ByproductFrame()
    live = LiveQubits(pattern.graph.vertices)
    for v in pattern.graph.order:
        angle = adapted_angle(pattern, frame, v)
        forced = None if outcomes is None else outcomes.get(v)
        res = sv.measure_xy(state, live.index(v), angle, rng, outcome=forced)
        state = res.post_state
        live.remove(v)
        frame.record(v, res.bit)
    output = correct_output(state, pattern, frame, thetas)
    return ReferenceRun(dict(frame.outcomes), state, frame, output)

