"""Ladder graph: typed causal edges across the (T-1, T, T) axes.

Lagged edges (SNL, INL) run from the past axis to the present axis;
structural edges (INS) run between channels within the present instant. The
detectors here look for the graph's geometric signatures: bidirectional
structural pairs ("X" patterns), instantaneous cycles, and feedback loops
that close through time. Propositions are produced by walking paths.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import SelfStructuralCausality
from .model import CausalFactors, FactorId, FactorKind, validate_factors

POSITIVE_FEEDBACK = "positive-feedback"
NEGATIVE_FEEDBACK = "negative-feedback"


@dataclass(frozen=True)
class LadderEdge:
    kind: FactorKind
    from_channel: int
    to_channel: int
    lag: int
    sign: int
    magnitude: float

    def __post_init__(self):
        if FactorId(self.to_channel, self.from_channel, self.lag).kind is not self.kind:
            raise ValueError(f"edge kind {self.kind} inconsistent with lag/endpoints: {self}")
        if self.kind is FactorKind.INS and self.from_channel == self.to_channel:
            raise SelfStructuralCausality(f"structural self-edge on channel {self.from_channel}")
        if self.sign not in (1, -1) or not self.magnitude > 0:
            raise ValueError(f"edge needs sign +/-1 and positive magnitude: {self}")

    @property
    def value(self) -> float:
        return self.sign * self.magnitude

    @property
    def lagged(self) -> bool:
        return self.lag > 0

    def sort_key(self) -> tuple:
        return (self.lag == 0, self.lag, self.to_channel, self.from_channel)


@dataclass(frozen=True)
class LadderGraph:
    channels: tuple[str, ...]
    edges: tuple[LadderEdge, ...]
    lag_order: int = 1

    def of_kind(self, kind: FactorKind) -> tuple[LadderEdge, ...]:
        return tuple(e for e in self.edges if e.kind is kind)

    def counts(self) -> dict[str, int]:
        return {k.value: len(self.of_kind(k)) for k in FactorKind}

    def name(self, channel: int) -> str:
        return self.channels[channel]


@dataclass(frozen=True)
class FeedbackLoop:
    path: tuple[LadderEdge, ...]

    @property
    def total_lag(self) -> int:
        return sum(e.lag for e in self.path)

    @property
    def sign_product(self) -> int:
        return math.prod(e.sign for e in self.path)

    @property
    def gain(self) -> float:
        return math.prod(e.value for e in self.path)

    @property
    def classification(self) -> str:
        return POSITIVE_FEEDBACK if self.sign_product > 0 else NEGATIVE_FEEDBACK

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(e.from_channel for e in self.path)

    def describe(self, names: Sequence[str]) -> str:
        hops = " -> ".join(f"{names[e.from_channel]} -[{e.kind.value} {e.value:+.4g}]" for e in self.path)
        return (f"{hops} -> {names[self.path[0].from_channel]}  "
                f"(lag {self.total_lag}, gain {self.gain:+.4g}, {self.classification})")


def _time(offset: int) -> str:
    return "t" if offset == 0 else f"t{offset:+d}"


@dataclass(frozen=True)
class Proposition:
    """``cause`` at ``t + cause_time_offset`` raises or lowers ``effect`` at ``t``."""

    cause_channel: int
    effect_channel: int
    cause_time_offset: int
    path: tuple[LadderEdge, ...]
    strength: float
    conflict: bool = False

    @property
    def direction(self) -> str:
        return "raises" if self.strength > 0 else "lowers"

    def text(self, names: Sequence[str]) -> str:
        return (f"{names[self.cause_channel]}({_time(self.cause_time_offset)}) {self.direction} "
                f"{names[self.effect_channel]}(t)")

    def steps(self, names: Sequence[str]) -> list[str]:
        """One statement per edge along the path, with edge-local times."""
        out = []
        t = self.cause_time_offset
        for e in self.path:
            verb = "raises" if e.sign > 0 else "lowers"
            out.append(f"{names[e.from_channel]}({_time(t)}) {verb} {names[e.to_channel]}({_time(t + e.lag)})")
            t += e.lag
        return out

    def key(self) -> tuple:
        return (self.cause_channel, self.effect_channel, self.cause_time_offset, self.path)


def build_ladder(factors: CausalFactors) -> LadderGraph:
    """One edge per nonzero factor."""
    validate_factors(factors)
    edges = []
    for lag, mat in enumerate((factors.structural,) + factors.lagged):
        for effect, cause in zip(*np.nonzero(mat)):
            v = float(mat[effect, cause])
            fid = FactorId(int(effect), int(cause), lag)
            edges.append(LadderEdge(fid.kind, fid.cause, fid.effect, lag, 1 if v > 0 else -1, abs(v)))
    edges.sort(key=LadderEdge.sort_key)
    return LadderGraph(tuple(factors.channel_names), tuple(edges), max(factors.lag_order, 1))


def _circuits(
    n_nodes: int, edges: Sequence[LadderEdge], max_edges: int | None = None
) -> Iterator[tuple[LadderEdge, ...]]:
    """Elementary circuits of a directed multigraph, as edge sequences.

    Each circuit is reported once, rooted at its smallest node; parallel edges
    yield distinct circuits. Plain backtracking: from each root, only nodes
    larger than the root are entered, each at most once per path.
    """
    out_edges: dict[int, list[LadderEdge]] = defaultdict(list)
    for e in edges:
        out_edges[e.from_channel].append(e)
    limit = max_edges if max_edges is not None else n_nodes

    for root in range(n_nodes):
        path: list[LadderEdge] = []
        on_path = {root}

        def walk(node: int) -> Iterator[tuple[LadderEdge, ...]]:
            for e in out_edges.get(node, ()):
                nxt = e.to_channel
                if nxt == root:
                    yield tuple(path) + (e,)
                elif nxt > root and nxt not in on_path and len(path) + 1 < limit:
                    path.append(e)
                    on_path.add(nxt)
                    yield from walk(nxt)
                    on_path.discard(nxt)
                    path.pop()

        yield from walk(root)


def _edge_order(e: LadderEdge) -> tuple:
    return (e.from_channel, e.to_channel, e.lag)


def detect_structural_cycles(g: LadderGraph) -> list[list[int]]:
    """Every elementary cycle among INS edges, each as a channel list starting
    at its smallest channel. Empty means the instantaneous part is a DAG."""
    cycles = [[e.from_channel for e in c] for c in _circuits(len(g.channels), g.of_kind(FactorKind.INS))]
    return sorted(cycles, key=lambda c: (len(c), c))


def detect_x_patterns(g: LadderGraph) -> list[tuple[int, int]]:
    """Channel pairs joined by structural edges in both directions."""
    ins = {(e.from_channel, e.to_channel) for e in g.of_kind(FactorKind.INS)}
    return sorted((i, j) for i, j in ins if i < j and (j, i) in ins)


def detect_feedback_loops(g: LadderGraph, max_edges: int = 6) -> list[FeedbackLoop]:
    """Cycles that close through time (total lag >= 1), up to ``max_edges`` edges.

    SNL edges are loops of length one. Loops are ordered by total lag, then by
    their channel sequence.
    """
    if max_edges < 2:
        raise ValueError("max_edges must be >= 2")
    loops = [FeedbackLoop(c) for c in _circuits(len(g.channels), g.edges, max_edges)]
    loops = [lp for lp in loops if lp.total_lag >= 1]
    return sorted(loops, key=lambda lp: (lp.total_lag, lp.channels, [_edge_order(e) for e in lp.path]))


def _structural_walks(
    start: int, out_edges: dict[int, list[LadderEdge]], max_hops: int, visited: frozenset
) -> Iterator[tuple[LadderEdge, ...]]:
    if max_hops == 0:
        return
    for e in out_edges.get(start, ()):
        if e.to_channel in visited:
            continue
        yield (e,)
        for rest in _structural_walks(e.to_channel, out_edges, max_hops - 1, visited | {e.to_channel}):
            yield (e,) + rest


def generate_propositions(g: LadderGraph, max_structural_hops: int = 2) -> list[Proposition]:
    """Causal statements read off the ladder by path traversal.

    Every path made of one lagged edge followed by up to
    ``max_structural_hops`` structural edges (no channel visited twice within
    the present instant) gives one proposition, as does every single
    structural edge. Propositions sharing cause, effect and time offset but
    disagreeing in sign are all flagged ``conflict=True``.
    """
    if max_structural_hops < 0:
        raise ValueError("max_structural_hops must be >= 0")
    ins_out: dict[int, list[LadderEdge]] = defaultdict(list)
    for e in g.of_kind(FactorKind.INS):
        ins_out[e.from_channel].append(e)

    found: dict[tuple, Proposition] = {}

    def add(path: tuple[LadderEdge, ...]):
        strength = math.prod(e.value for e in path)
        p = Proposition(path[0].from_channel, path[-1].to_channel, -sum(e.lag for e in path), path, strength)
        found.setdefault(p.key(), p)

    for e in g.edges:
        if e.lagged:
            add((e,))
            for walk in _structural_walks(e.to_channel, ins_out, max_structural_hops, frozenset({e.to_channel})):
                add((e,) + walk)
        else:
            add((e,))

    signs: dict[tuple, set] = defaultdict(set)
    for p in found.values():
        signs[(p.cause_channel, p.effect_channel, p.cause_time_offset)].add(p.strength > 0)
    props = [
        Proposition(p.cause_channel, p.effect_channel, p.cause_time_offset, p.path, p.strength,
                    conflict=len(signs[(p.cause_channel, p.effect_channel, p.cause_time_offset)]) > 1)
        for p in found.values()
    ]
    return sorted(props, key=lambda p: (p.cause_time_offset, len(p.path), p.effect_channel,
                                        p.cause_channel, [_edge_order(e) for e in p.path]))


def relabel(g: LadderGraph, perm: Sequence[int]) -> LadderGraph:
    """Graph with channel ``i`` moved to position ``perm[i]``."""
    names = [""] * len(g.channels)
    for i, p in enumerate(perm):
        names[p] = g.channels[i]
    edges = [LadderEdge(e.kind, perm[e.from_channel], perm[e.to_channel], e.lag, e.sign, e.magnitude)
             for e in g.edges]
    return LadderGraph(tuple(names), tuple(sorted(edges, key=LadderEdge.sort_key)), g.lag_order)


def edges_from(items: Iterable[tuple[str, int, int, float]], channels: Sequence[str]) -> LadderGraph:
    """Small helper for hand-built graphs: ``(kind, from, to, value)`` tuples.

    Lag is 0 for INS and 1 otherwise.
    """
    edges = []
    for kind, src, dst, value in items:
        k = FactorKind(kind)
        edges.append(LadderEdge(k, src, dst, 0 if k is FactorKind.INS else 1,
                                1 if value > 0 else -1, abs(value)))
    return LadderGraph(tuple(channels), tuple(sorted(edges, key=LadderEdge.sort_key)))
