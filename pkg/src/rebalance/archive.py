"""Non-inferior solution archive over (fitness, integrity).

``a`` dominates ``b`` when it is at least as good in both objectives and
better by more than the slack (1e-4) in at least one.  A candidate that
gains on one objective while losing no more than the slack on the other is
therefore never dominated and is kept alongside its neighbour.  The relation
is transitive, so incremental updates leave the same set as filtering the
whole candidate log at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import MetricReport

SLACK = 1.0e-4


class EmptyArchive(ValueError):
    pass


@dataclass(frozen=True)
class ObjectivePair:
    fitness: float
    integrity: float

    def __post_init__(self):
        if math.isnan(self.fitness) or not 0.0 <= self.fitness <= 1.0:
            raise ValueError(f"fitness {self.fitness} outside [0, 1]")
        if math.isnan(self.integrity) or not 0.0 < self.integrity <= 1.0:
            raise ValueError(f"integrity {self.integrity} outside (0, 1]")


@dataclass(frozen=True, eq=False)
class Solution:
    mask: np.ndarray
    objectives: ObjectivePair
    report: MetricReport | None = None

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def decision_score(self) -> float:
        return self.report.kappa * self.report.accuracy if self.report is not None else float("-inf")


def dominates(a: ObjectivePair, b: ObjectivePair, slack: float = SLACK) -> bool:
    return (
        a.fitness >= b.fitness
        and a.integrity >= b.integrity
        and (a.fitness - b.fitness > slack or a.integrity - b.integrity > slack)
    )


class ParetoArchive:
    """Insertion-ordered archive; ``cap=None`` disables crowding eviction."""

    def __init__(self, slack: float = SLACK, cap: int | None = 200):
        if cap is not None and cap < 2:
            raise ValueError("archive cap must be >= 2")
        self.slack = slack
        self.cap = cap
        self.entries: list[Solution] = []
        self._f = np.empty(0)
        self._g = np.empty(0)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objectives(self) -> list[tuple[float, float]]:
        return [(s.objectives.fitness, s.objectives.integrity) for s in self.entries]

    def offer(self, sol: Solution) -> bool:
        """Insert ``sol`` unless an entry equals or dominates it.  Returns True if admitted."""
        f, g = sol.objectives.fitness, sol.objectives.integrity
        F, G = self._f, self._g
        if F.size:
            if np.any((F == f) & (G == g)):
                return False
            if np.any((F >= f) & (G >= g) & ((F - f > self.slack) | (G - g > self.slack))):
                return False
            beaten = (f >= F) & (g >= G) & ((f - F > self.slack) | (g - G > self.slack))
            if beaten.any():
                keep = np.flatnonzero(~beaten)
                self.entries = [self.entries[i] for i in keep]
                F, G = F[keep], G[keep]
        self.entries.append(sol)
        self._f = np.append(F, f)
        self._g = np.append(G, g)
        if self.cap is not None and len(self.entries) > self.cap:
            self._evict_most_crowded()
        return True

    def _evict_most_crowded(self) -> None:
        n = len(self.entries)
        crowd = np.zeros(n)
        for vals in (self._f, self._g):
            order = np.argsort(vals, kind="stable")
            span = vals[order[-1]] - vals[order[0]]
            crowd[order[0]] = crowd[order[-1]] = np.inf
            if span > 0:
                crowd[order[1:-1]] += (vals[order[2:]] - vals[order[:-2]]) / span
        victim = int(np.argmin(crowd))
        del self.entries[victim]
        self._f = np.delete(self._f, victim)
        self._g = np.delete(self._g, victim)


def archive_update(archive: ParetoArchive, candidate: Solution) -> ParetoArchive:
    archive.offer(candidate)
    return archive


def select_final(archive) -> Solution:
    """Highest kappa x accuracy; ties to higher integrity, then fewer kept rows, then earliest."""
    entries = list(archive)
    if not entries:
        raise EmptyArchive("no solutions to choose from")
    best = entries[0]
    for s in entries[1:]:
        a = (s.decision_score, s.objectives.integrity, -s.popcount)
        b = (best.decision_score, best.objectives.integrity, -best.popcount)
        if a > b:
            best = s
    return best
