"""Damage-scenario generation and reduction.

Scenarios are produced by Monte Carlo sampling of line failures from a
logistic fragility curve in a scalar hazard intensity, then thinned to a
small representative set by fast-forward selection with nearest-neighbor
probability redistribution.  Only existing overhead lines can be damaged;
candidate underground additions are treated as hardened.

Reproducibility contract: every sampled scenario draws from its own
counter-derived random stream, so a set is a pure function of
(network, curve, intensity, n, seed) regardless of sampling order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .network import CANDIDATE, Line, Network

PROBABILITY_TOL = 1e-9


@dataclass(frozen=True)
class FragilityCurve:
    """Logistic fragility: damage probability vs. hazard intensity.

    ``intensity_50`` is the intensity at which an overhead line fails with
    probability one half; ``steepness`` controls the transition width.
    ``underground_multiplier`` rescales the probability for underground
    lines (0 = never damaged, the default).
    """

    intensity_50: float
    steepness: float
    underground_multiplier: float = 0.0
    curve_kind: str = "logistic"

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("fragility steepness must be > 0")
        if not 0.0 <= self.underground_multiplier <= 1.0:
            raise ValueError("underground_multiplier must be within [0, 1]")
        if self.curve_kind != "logistic":
            raise ValueError(f"unsupported curve kind {self.curve_kind!r}")


@dataclass(frozen=True)
class DamageScenario:
    """One damage outcome: availability of each existing line (1 = intact)."""

    id: str
    availability: dict[str, int]
    probability: float

    def damaged_lines(self) -> list[str]:
        return sorted(k for k, v in self.availability.items() if v == 0)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[DamageScenario, ...]
    seed: int = 0

    def __post_init__(self):
        total = sum(s.probability for s in self.scenarios)
        if self.scenarios and abs(total - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"scenario probabilities sum to {total}, expected 1")
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")

    def __len__(self):
        return len(self.scenarios)

    def by_id(self, sid: str) -> DamageScenario:
        for s in self.scenarios:
            if s.id == sid:
                return s
        raise KeyError(f"unknown scenario id {sid!r}")


def damage_probability(curve: FragilityCurve, line: Line, intensity: float) -> float:
    """Failure probability of ``line`` at the given hazard intensity.

    Monotone nondecreasing in intensity; underground (candidate) lines are
    scaled by the curve's underground multiplier.
    """
    if intensity < 0:
        raise ValueError("hazard intensity must be >= 0")
    z = curve.steepness * (intensity - curve.intensity_50)
    # guard exp overflow far in the tails
    if z >= 0:
        base = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        base = e / (1.0 + e)
    mult = curve.underground_multiplier if line.kind == CANDIDATE else 1.0
    return mult * base


def _scenario_stream(seed: int, index: int) -> np.random.Generator:
    # counter-derived sub-stream: independent of sampling order
    return np.random.default_rng((int(seed), int(index)))


def sample_scenario(net: Network, curve: FragilityCurve, intensity: float,
                    stream: np.random.Generator, scenario_id: str = "s0",
                    probability: float = 1.0) -> DamageScenario:
    """Draw one damage outcome: each existing line fails independently."""
    availability = {}
    for ln in net.existing_lines():
        p = damage_probability(curve, ln, intensity)
        availability[ln.id] = 0 if stream.random() < p else 1
    return DamageScenario(id=scenario_id, availability=availability,
                          probability=probability)


def monte_carlo(net: Network, curve: FragilityCurve, intensity: float,
                n: int, seed: int) -> ScenarioSet:
    """Sample ``n`` equally likely scenarios; deterministic in ``seed``."""
    if n < 1:
        raise ValueError("scenario count must be >= 1")
    width = max(4, len(str(n - 1)))
    scenarios = []
    for i in range(n):
        stream = _scenario_stream(seed, i)
        scenarios.append(
            sample_scenario(net, curve, intensity, stream,
                            scenario_id=f"mc{i:0{width}d}", probability=1.0 / n)
        )
    return ScenarioSet(tuple(scenarios), seed=seed)


def scenario_distance(a: DamageScenario, b: DamageScenario, net: Network,
                      length_weighted: bool = True) -> float:
    """Length-weighted Hamming distance between two damage outcomes (feet).

    With ``length_weighted=False`` every line counts 1 instead of its length.
    """
    if set(a.availability) != set(b.availability):
        raise ValueError("scenarios are defined over different line sets")
    total = 0.0
    for lid, av_a in a.availability.items():
        if av_a != b.availability[lid]:
            total += net.lines[lid].length_ft if length_weighted else 1.0
    return total


def reduce_scenarios(scenario_set: ScenarioSet, k: int, net: Network,
                     length_weighted: bool = True) -> ScenarioSet:
    """Fast-forward selection of ``k`` representatives.

    Greedily picks the scenario minimizing the probability-weighted distance
    from every unselected scenario to its nearest selected one; afterwards
    each unselected scenario donates its probability to its nearest
    representative.  Output order follows the input set, so reduction is
    idempotent and byte-stable.
    """
    n = len(scenario_set)
    if not 1 <= k <= n:
        raise ValueError(f"k must be within [1, {n}], got {k}")
    if k == n:
        return scenario_set

    scen = scenario_set.scenarios
    prob = np.array([s.probability for s in scen])
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = scenario_distance(scen[i], scen[j], net, length_weighted)
            dist[i, j] = dist[j, i] = d

    selected: list[int] = []
    # nearest[u] = distance from u to its closest selected scenario
    nearest = np.full(n, np.inf)
    remaining = list(range(n))
    for _ in range(k):
        best_idx, best_cost = None, np.inf
        for u in remaining:
            cost = float(sum(prob[v] * min(nearest[v], dist[v, u])
                             for v in remaining if v != u))
            if cost < best_cost - 1e-15:
                best_idx, best_cost = u, cost
        selected.append(best_idx)
        nearest = np.minimum(nearest, dist[:, best_idx])
        remaining.remove(best_idx)

    # redistribute unselected probability to the nearest representative
    new_prob = {i: prob[i] for i in selected}
    for u in remaining:
        nearest_sel = min(selected, key=lambda s: (dist[u, s], selected.index(s)))
        new_prob[nearest_sel] += prob[u]

    kept = [
        DamageScenario(id=scen[i].id, availability=scen[i].availability,
                       probability=float(new_prob[i]))
        for i in sorted(selected)
    ]
    return ScenarioSet(tuple(kept), seed=scenario_set.seed)


# ---------------------------------------------------------------------------
# Scenario file format
# ---------------------------------------------------------------------------

def emit_scenarios(scenario_set: ScenarioSet) -> str:
    """Serialize as JSON: damaged lines are stored, intact ones implied."""
    doc = {
        "seed": scenario_set.seed,
        "scenarios": [
            {
                "id": s.id,
                "probability": s.probability,
                "damaged_lines": s.damaged_lines(),
            }
            for s in scenario_set.scenarios
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_scenarios(text, net: Network) -> ScenarioSet:
    """Inverse of :func:`emit_scenarios`; needs the network for the line universe."""
    doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    line_ids = [ln.id for ln in net.existing_lines()]
    scenarios = []
    for entry in doc["scenarios"]:
        damaged = set(entry["damaged_lines"])
        unknown = damaged - set(line_ids)
        if unknown:
            raise ValueError(f"scenario {entry['id']!r} damages unknown lines {sorted(unknown)}")
        availability = {lid: (0 if lid in damaged else 1) for lid in line_ids}
        scenarios.append(
            DamageScenario(id=str(entry["id"]), availability=availability,
                           probability=float(entry["probability"]))
        )
    return ScenarioSet(tuple(scenarios), seed=int(doc.get("seed", 0)))


def load_scenarios(path, net: Network) -> ScenarioSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenarios(fh.read(), net)


def undamaged_scenario(net: Network, scenario_id: str = "intact",
                       probability: float = 1.0) -> DamageScenario:
    """All-lines-intact scenario, handy as a baseline."""
    return DamageScenario(
        id=scenario_id,
        availability={ln.id: 1 for ln in net.existing_lines()},
        probability=probability,
    )
