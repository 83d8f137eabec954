"""Seeded commons game with a permit-issuing regulator.

The canonical instance is a logistic resource shared by N extracting
agents.  A law is a permit cap with slack and probabilistic enforcement;
a policy maps round statistics to a law.  Everything is deterministic
given the seed: each agent owns two numpy substreams (decisions and
enforcement draws), so changing the law never shifts anyone's decision
noise and a q = 0 law reproduces the lawless trace bit for bit.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import variational
from .variational import CriticalityError, Functional


class RegsimError(Exception):
    pass


#: The 11 depth-1 topology forms double as selectable regulatory mode
#: labels in scenario files; they carry no behavioral wiring.
REGULATORY_MODES = (
    "sig^(1) (tau, phi)(m1)",
    "sig (tau, phi^(1))(m1)",
    "sig (tau, phi)(m1^(1))",
    "sig (tau, phi)(m1, m2)",
    "sig^(1) tau(m1, m2)",
    "sig tau(m1^(2))",
    "sig tau^(1)(m1^(1))",
    "sig^(1) tau(m1^(1))",
    "sig tau(m1, m2^(1))",
    "sig tau^(1)(m1, m2)",
    "sig tau(m1, m2, m3)",
)


@dataclass(frozen=True)
class GameConfig:
    n_agents: int = 8
    capacity: float = 100.0
    regrowth: float = 0.15
    rounds: int = 500
    outside_option: float = 0.5
    retention_weight: float = 0.1
    inspection_cost: float = 0.0
    exit_window: int = 25
    seed: int = 1
    mode: str = REGULATORY_MODES[0]

    def __post_init__(self):
        if self.n_agents < 2:
            raise RegsimError("need at least 2 agents")
        if self.capacity <= 0:
            raise RegsimError("capacity must be positive")
        if not 0 < self.regrowth < 1:
            raise RegsimError("regrowth rate must lie in (0, 1)")
        if self.rounds < 0:
            raise RegsimError("round count must be nonnegative")
        if self.mode not in REGULATORY_MODES:
            raise RegsimError(f"unknown regulatory mode {self.mode!r}")


@dataclass(frozen=True)
class Law:
    cap: float
    slack: float = 0.0
    enforcement: float = 1.0
    penalty: float = 1.0

    def __post_init__(self):
        if self.cap < 0:
            raise RegsimError("permit cap must be nonnegative")
        if not 0.0 <= self.slack <= 1.0:
            raise RegsimError("slack must lie in [0, 1]")
        if not 0.0 <= self.enforcement <= 1.0:
            raise RegsimError("enforcement probability must lie in [0, 1]")
        if self.penalty < 0:
            raise RegsimError("penalty multiplier must be nonnegative")

    @property
    def tolerance(self) -> float:
        return self.cap * (1.0 + self.slack)


@dataclass
class AgentModel:
    """Extractor with order-many auxiliary belief distributions.

    Order 0 samples a desired extraction from one fixed normal.  Order 1
    adds a posterior over the resource decline rate and scales greed down
    as decline evidence accumulates.  Order 2 further keeps a Beta
    posterior over the regulator's enforcement probability and plays a
    one-step best response to the current law.
    """

    order: int = 0
    greed: float = 1.0
    desire_mean: float = 3.0
    desire_sd: float = 0.5
    decline_sensitivity: float = 8.0
    # decline posterior (normal, known unit observation precision)
    prior_precision: float = field(default=4.0)
    _decline_sum: float = field(default=0.0, repr=False)
    _decline_count: int = field(default=0, repr=False)
    # enforcement posterior (Beta)
    _enforced: float = field(default=1.0, repr=False)
    _unenforced: float = field(default=1.0, repr=False)

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise RegsimError("agent order must be 0, 1, or 2")
        if self.greed < 0:
            raise RegsimError("greed must be nonnegative")

    def decline_estimate(self) -> float:
        # posterior mean of the fractional per-round decline, prior at 0
        return self._decline_sum / (self.prior_precision + self._decline_count)

    def enforcement_estimate(self) -> float:
        return self._enforced / (self._enforced + self._unenforced)

    def observe(self, fractional_decline: float) -> None:
        if self.order >= 1:
            self._decline_sum += fractional_decline
            self._decline_count += 1

    def observe_enforcement(self, enforced: bool) -> None:
        if self.order >= 2:
            if enforced:
                self._enforced += 1.0
            else:
                self._unenforced += 1.0


def agent_decide(agent: AgentModel, law: Law | None,
                 rng: np.random.Generator) -> float:
    """Desired extraction for this round; always >= 0."""
    desire = agent.greed * max(
        0.0, float(rng.normal(agent.desire_mean, agent.desire_sd)))
    if agent.order >= 1:
        damp = 1.0 - agent.decline_sensitivity * max(0.0, agent.decline_estimate())
        desire *= max(0.0, damp)
    if agent.order >= 2 and law is not None and desire > law.tolerance:
        qhat = agent.enforcement_estimate()
        # expected utility of pressing the violation vs staying compliant
        violate = desire * (1.0 - qhat) + qhat * (
            law.cap - law.penalty * (desire - law.cap))
        comply = law.tolerance
        if comply >= violate:
            desire = comply
    return desire


def apply_law(law: Law | None, extraction: float,
              rng: np.random.Generator) -> tuple[float, float]:
    """Returns (allowed extraction, penalty).

    Within cap x (1 + slack) the request passes untouched.  Beyond it the
    draw decides: with probability q the excess is confiscated and fined,
    otherwise the violation slips through.
    """
    if law is None or extraction <= law.tolerance:
        return extraction, 0.0
    if float(rng.random()) < law.enforcement:
        return law.cap, law.penalty * (extraction - law.cap)
    return extraction, 0.0


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

POLICY_FAMILIES = ("none", "fixed", "slack1d")


@dataclass(frozen=True)
class PolicySpec:
    """Maps round statistics to a Law.

    Families:
      none     -- no law ever; theta ignored.
      fixed    -- theta = (cap, slack, enforcement, penalty), constant law.
      slack1d  -- theta = (slack,); the cap is a feedback rule that
                  harvests regrowth plus a correction steering the stock
                  toward target_fraction x K, split over active agents.
                  The single lever is slack.
    """

    family: str
    theta: tuple[float, ...] = ()
    enforcement: float = 0.9
    penalty: float = 1.0
    target_fraction: float = 0.6
    feedback_gain: float = 0.05

    def __post_init__(self):
        if self.family not in POLICY_FAMILIES:
            raise RegsimError(f"unknown policy family {self.family!r}")
        if self.family == "fixed" and len(self.theta) != 4:
            raise RegsimError("fixed family takes (cap, slack, q, beta)")
        if self.family == "slack1d" and len(self.theta) != 1:
            raise RegsimError("slack1d family takes a single slack lever")

    def law_for(self, config: GameConfig, resource: float,
                active: int) -> Law | None:
        if self.family == "none":
            return None
        if self.family == "fixed":
            return Law(*self.theta)
        slack = min(1.0, max(0.0, self.theta[0]))
        regrow = config.regrowth * resource * (1.0 - resource / config.capacity)
        correction = self.feedback_gain * (
            resource - self.target_fraction * config.capacity)
        cap = max(0.0, regrow + correction) / max(1, active)
        return Law(cap, slack, self.enforcement, self.penalty)


NO_LAW = PolicySpec("none")


# ---------------------------------------------------------------------------
# state, events, episode loop
# ---------------------------------------------------------------------------

EVENT_KINDS = ("null", "capacity_drop", "regrowth_change", "agent_influx")


@dataclass(frozen=True)
class Excession:
    """External rule change landing at a given round."""

    round: int
    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise RegsimError(f"unknown excession kind {self.kind!r}")


@dataclass
class GameState:
    config: GameConfig
    resource: float
    round: int = 0
    utilities: list[float] = field(default_factory=list)
    active: list[bool] = field(default_factory=list)
    recent: list[list[float]] = field(default_factory=list)
    events: list[str] = field(default_factory=list)

    @classmethod
    def initial(cls, config: GameConfig) -> "GameState":
        n = config.n_agents
        return cls(config, config.capacity,
                   utilities=[0.0] * n, active=[True] * n,
                   recent=[[] for _ in range(n)])

    @property
    def n_active(self) -> int:
        return sum(self.active)


def inject_excession(state: GameState, event: Excession) -> GameState:
    cfg = state.config
    if event.kind == "null":
        state.events.append(f"{state.round}:null")
        return state
    if event.kind == "capacity_drop":
        new_k = cfg.capacity * event.value
        if new_k <= 0:
            raise RegsimError("capacity drop must leave positive capacity")
        state.config = replace(cfg, capacity=new_k)
        state.resource = min(state.resource, new_k)
        state.events.append(f"{state.round}:capacity_drop:{event.value!r}")
    elif event.kind == "regrowth_change":
        state.config = replace(cfg, regrowth=event.value)
        state.events.append(f"{state.round}:regrowth_change:{event.value!r}")
    elif event.kind == "agent_influx":
        extra = int(event.value)
        if extra < 0:
            raise RegsimError("agent influx must be nonnegative")
        state.utilities.extend([0.0] * extra)
        state.active.extend([True] * extra)
        state.recent.extend([[] for _ in range(extra)])
        state.events.append(f"{state.round}:agent_influx:{extra}")
    return state


def step(state: GameState, decisions: Sequence[float], law: Law | None,
         enforcement_rngs: Sequence[np.random.Generator],
         agents: Sequence[AgentModel] | None = None) -> dict:
    """Advance one round; returns the per-round record for the trace."""
    cfg = state.config
    n = len(state.active)
    allowed = [0.0] * n
    penalties = [0.0] * n
    for i in range(n):
        if not state.active[i]:
            continue
        a, p = apply_law(law, float(decisions[i]), enforcement_rngs[i])
        if agents is not None and law is not None \
                and decisions[i] > law.tolerance:
            agents[i].observe_enforcement(a < decisions[i])
        allowed[i] = a
        penalties[i] = p
    demand = sum(allowed)
    if demand > state.resource and demand > 0:
        scale = state.resource / demand
        allowed = [a * scale for a in allowed]
        demand = state.resource
    r_before = state.resource
    resource = state.resource - demand
    resource += cfg.regrowth * resource * (1.0 - resource / cfg.capacity)
    state.resource = min(cfg.capacity, max(0.0, resource))
    if agents is not None:
        drop = (r_before - state.resource) / cfg.capacity
        for i in range(n):
            if state.active[i]:
                agents[i].observe(drop)

    window = cfg.exit_window
    for i in range(n):
        if not state.active[i]:
            continue
        gain = allowed[i] - penalties[i]
        state.utilities[i] += gain
        state.recent[i].append(gain)
        if len(state.recent[i]) > window:
            state.recent[i].pop(0)
        # exit checks are staggered round-robin so one departure can lift
        # the survivors' shares before the next agent reconsiders
        if (len(state.recent[i]) >= window
                and state.round % n == i
                and sum(state.recent[i]) / window < cfg.outside_option):
            state.active[i] = False
            state.events.append(f"{state.round}:exit:{i}")
    state.round += 1
    return {
        "round": state.round,
        "resource": state.resource,
        "extraction": tuple(allowed),
        "penalty": tuple(penalties),
        "active": tuple(state.active),
        "law": law,
    }


@dataclass(frozen=True)
class Trace:
    rows: tuple[dict, ...]
    events: tuple[str, ...]
    welfare: float
    total_utility: float
    retained_rounds: int
    inspection_charge: float
    seed: int

    def min_resource(self, upto: int | None = None) -> float:
        rows = self.rows if upto is None else self.rows[:upto]
        if not rows:
            return math.inf
        return min(r["resource"] for r in rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = len(self.rows[0]["extraction"]) if self.rows else 0
        cols = ["round", "resource"]
        cols += [f"extraction{i}" for i in range(n)]
        cols += [f"penalty{i}" for i in range(n)]
        cols += [f"active{i}" for i in range(n)]
        cols += ["law_cap", "law_slack", "law_q", "law_beta", "events"]
        buf.write(",".join(cols) + "\n")
        per_round_events = {}
        for ev in self.events:
            rnd = int(ev.split(":", 1)[0])
            per_round_events.setdefault(rnd, []).append(ev.split(":", 1)[1])
        for row in self.rows:
            law = row["law"]
            law_cols = ("", "", "", "") if law is None else (
                repr(law.cap), repr(law.slack),
                repr(law.enforcement), repr(law.penalty))
            evs = ";".join(per_round_events.get(row["round"] - 1, []))
            cells = [str(row["round"]), repr(row["resource"])]
            cells += [repr(x) for x in row["extraction"]]
            cells += [repr(x) for x in row["penalty"]]
            cells += ["1" if a else "0" for a in row["active"]]
            cells += list(law_cols) + [evs]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def default_agents(config: GameConfig, order: int = 0) -> list[AgentModel]:
    return [AgentModel(order=order) for _ in range(config.n_agents)]


def run_episode(config: GameConfig, policy: PolicySpec,
                agents: Sequence[AgentModel] | None = None,
                events: Sequence[Excession] = ()) -> Trace:
    """Play one seeded episode and return its trace with welfare.

    Welfare is total realized utility plus the retention bonus per
    agent-round spent inside the game, minus inspection costs when the
    config charges them.
    """
    if agents is None:
        agents = default_agents(config)
    if len(agents) != config.n_agents:
        raise RegsimError("one agent model per configured agent")
    agents = [replace(a) for a in agents]
    state = GameState.initial(config)
    decision_rngs = [np.random.default_rng([config.seed, i])
                     for i in range(config.n_agents)]
    enforcement_rngs = [np.random.default_rng([config.seed, i, 1])
                        for i in range(config.n_agents)]
    by_round = {}
    for ev in events:
        if ev.round > config.rounds:
            raise RegsimError(f"event at round {ev.round} beyond horizon")
        by_round.setdefault(ev.round, []).append(ev)

    rows = []
    retained = 0
    inspection = 0.0
    for t in range(config.rounds):
        for ev in by_round.get(t, ()):
            inject_excession(state, ev)
        n = len(state.active)
        if n > len(decision_rngs):  # influx agents get fresh substreams
            for i in range(len(decision_rngs), n):
                decision_rngs.append(np.random.default_rng([state.config.seed, i]))
                enforcement_rngs.append(
                    np.random.default_rng([state.config.seed, i, 1]))
                agents = list(agents) + [AgentModel()]
        law = policy.law_for(state.config, state.resource, state.n_active)
        decisions = [
            agent_decide(agents[i], law, decision_rngs[i])
            if state.active[i] else 0.0
            for i in range(n)]
        retained += state.n_active
        if law is not None and state.config.inspection_cost > 0:
            inspection += (state.config.inspection_cost
                           * law.enforcement * state.n_active)
        rows.append(step(state, decisions, law, enforcement_rngs, agents))
    total_utility = float(sum(state.utilities))
    welfare = (total_utility
               + config.retention_weight * retained
               - inspection)
    return Trace(tuple(rows), tuple(state.events), welfare,
                 total_utility, retained, inspection, config.seed)


def mean_welfare(config: GameConfig, policy: PolicySpec,
                 seeds: Sequence[int], order: int = 0,
                 events: Sequence[Excession] = ()) -> float:
    total = 0.0
    for s in seeds:
        cfg = replace(config, seed=int(s))
        total += run_episode(cfg, policy, default_agents(cfg, order),
                             events).welfare
    return total / len(seeds)


# ---------------------------------------------------------------------------
# slack optimization
# ---------------------------------------------------------------------------

DEFAULT_SEEDS = tuple(range(1, 11))


@dataclass(frozen=True)
class OptimizationResult:
    policy: PolicySpec
    welfare: float
    residual: float
    scan_points: tuple[tuple[float, float], ...]


def optimize_slack(config: GameConfig, family: str = "slack1d",
                   seeds: Sequence[int] = DEFAULT_SEEDS,
                   coarse: int = 9, bounds: tuple[float, float] = (0.0, 1.0),
                   order: int = 0) -> OptimizationResult:
    """Pick the slack lever maximizing mean welfare over the seed set.

    A coarse bracket scan seeds a damped-descent refinement of the
    negative welfare; the better of the two candidates wins.  A
    degenerate family with no levers is returned as-is.
    """
    if family == "none":
        return OptimizationResult(NO_LAW,
                                  mean_welfare(config, NO_LAW, seeds, order),
                                  0.0, ())

    def welfare_of(s: float) -> float:
        s = min(bounds[1], max(bounds[0], float(s)))
        return mean_welfare(config, PolicySpec(family, (s,)), seeds, order)

    lo, hi = bounds
    grid = [lo + (hi - lo) * k / (coarse - 1) for k in range(coarse)]
    scan = [(s, welfare_of(s)) for s in grid]
    best_s, best_w = max(scan, key=lambda p: p[1])

    F = Functional(lambda t: -welfare_of(t[0]), 1, "negative mean welfare")
    residual = 0.0
    try:
        refined = variational.solve_critical(
            F, np.array([best_s]), tol=1e-3, h=0.02,
            max_iter=200, step0=0.05)
        s_ref = float(refined[0])
    except CriticalityError as exc:
        s_ref = float(exc.best_theta[0])
        residual = exc.residual
    s_ref = min(bounds[1], max(bounds[0], s_ref))
    w_ref = welfare_of(s_ref)
    if w_ref > best_w:
        best_s, best_w = s_ref, w_ref
    return OptimizationResult(PolicySpec(family, (best_s,)), best_w,
                              residual, tuple(scan))


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = {
    "n_agents": int, "capacity": float, "regrowth": float, "rounds": int,
    "outside_option": float, "retention_weight": float,
    "inspection_cost": float, "exit_window": int, "seed": int, "mode": str,
}


def load_scenario(text: str) -> tuple[GameConfig, PolicySpec, int,
                                      list[Excession]]:
    """Parse a flat key-value scenario: config fields, policy, events.

    Policy keys: ``policy.family`` and ``policy.theta`` (comma separated).
    Agent order: ``agents.order``.  Events: ``event.<n> = round,kind,value``.
    """
    fields = {}
    policy_family = "none"
    policy_theta: tuple[float, ...] = ()
    order = 0
    events = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise RegsimError(f"scenario line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _CONFIG_FIELDS:
            fields[key] = _CONFIG_FIELDS[key](value)
        elif key == "policy.family":
            policy_family = value
        elif key == "policy.theta":
            policy_theta = tuple(float(v) for v in value.split(",") if v.strip())
        elif key == "agents.order":
            order = int(value)
        elif key.startswith("event."):
            rnd, kind, val = (v.strip() for v in value.split(","))
            events.append(Excession(int(rnd), kind, float(val)))
        else:
            raise RegsimError(f"scenario line {lineno}: unknown key {key!r}")
    config = GameConfig(**fields)
    policy = PolicySpec(policy_family, policy_theta)
    return config, policy, order, events


def dump_scenario(config: GameConfig, policy: PolicySpec, order: int = 0,
                  events: Sequence[Excession] = ()) -> str:
    lines = [f"{name} = {getattr(config, name)}" for name in _CONFIG_FIELDS]
    lines.append(f"policy.family = {policy.family}")
    if policy.theta:
        lines.append("policy.theta = " + ",".join(repr(t) for t in policy.theta))
    lines.append(f"agents.order = {order}")
    for k, ev in enumerate(events):
        lines.append(f"event.{k} = {ev.round},{ev.kind},{ev.value!r}")
    return "\n".join(lines) + "\n"
