"""Adaptive fitness function selection: action spaces, agents, and rewards.

An action is a combination of one to four fitness functions. The agent picks
a new action at fixed generation intervals, guided by a goal-specific reward.
Both agents first try every action once, in a seeded shuffled order, before
their regular selection rule takes over.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import random
from dataclasses import dataclass, field

from affsgen.fitness import FN_BY_NAME, FN_NAMES, FitnessFunctionId

F = FitnessFunctionId


class Goal(enum.Enum):
    EXCEPTIONS = "exceptions"
    DIVERSITY = "diversity"
    STRONG_MUTATION = "strong-mutation"


@dataclass(frozen=True, slots=True)
class Action:
    functions: tuple[FitnessFunctionId, ...]
    action_id: int

    def label(self) -> str:
        return "+".join(FN_NAMES[f] for f in self.functions)


_POOLS = {
    Goal.EXCEPTIONS: (F.EX, F.BRANCH, F.DIRECT_BRANCH, F.LINE, F.METHOD, F.MNEC,
                      F.OUTPUT, F.WEAK_MUT),
    Goal.DIVERSITY: (F.DIVERSITY, F.EX, F.BRANCH, F.DIRECT_BRANCH, F.METHOD, F.MNEC,
                     F.OUTPUT, F.WEAK_MUT),
    Goal.STRONG_MUTATION: (F.STRONG_MUT, F.EX, F.BRANCH, F.MNEC, F.OUTPUT, F.WEAK_MUT),
}

_REQUIRED = {Goal.EXCEPTIONS: F.EX, Goal.DIVERSITY: F.DIVERSITY}

# pairs that measure nearly the same thing; excluded from diversity combos
_OVERLAP_PAIRS = ((F.BRANCH, F.DIRECT_BRANCH), (F.METHOD, F.MNEC))

_MAX_SIZE = {Goal.EXCEPTIONS: 4, Goal.DIVERSITY: 4, Goal.STRONG_MUTATION: 3}


def action_space(goal: Goal, pinned: "list[tuple[FitnessFunctionId, ...]] | None" = None
                 ) -> list[Action]:
    """All selectable fitness-function combinations for a goal.

    Defaults: 64 for exceptions, 52 for diversity (overlap pairs excluded),
    41 for strong mutation. A pinned list replaces the enumeration wholesale,
    after validation against the goal's membership constraints.
    """
    if pinned is not None:
        for combo in pinned:
            _validate_combo(goal, combo)
        if not pinned:
            raise ValueError("pinned action space must be nonempty")
        combos = list(pinned)
    else:
        pool = _POOLS[goal]
        required = _REQUIRED.get(goal)
        combos = []
        for size in range(1, _MAX_SIZE[goal] + 1):
            for subset in itertools.combinations(pool, size):
                if required is not None and required not in subset:
                    continue
                if goal is Goal.DIVERSITY and any(
                    a in subset and b in subset for a, b in _OVERLAP_PAIRS
                ):
                    continue
                combos.append(subset)
    combos.sort(key=lambda c: (len(c), tuple(int(f) for f in c)))
    return [Action(functions=tuple(sorted(c)), action_id=i) for i, c in enumerate(combos)]


def _validate_combo(goal: Goal, combo: tuple[FitnessFunctionId, ...]) -> None:
    pool = set(_POOLS[goal])
    if not combo:
        raise ValueError("an action must contain at least one fitness function")
    if len(combo) > _MAX_SIZE[goal]:
        raise ValueError(f"an action for {goal.value} may contain at most "
                         f"{_MAX_SIZE[goal]} functions: {combo}")
    if len(set(combo)) != len(combo):
        raise ValueError(f"duplicate fitness function in action: {combo}")
    outside = [f for f in combo if f not in pool]
    if outside:
        raise ValueError(f"functions {outside} are not selectable for goal {goal.value}")
    required = _REQUIRED.get(goal)
    if required is not None and required not in combo:
        raise ValueError(f"every {goal.value} action must include {FN_NAMES[required]}")


def load_pinned_space(goal: Goal, path) -> list[Action]:
    """Read a pin file (JSON list of fitness-function-name arrays)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError("pin file must contain a JSON list of name arrays")
    combos = []
    for entry in raw:
        combos.append(tuple(FN_BY_NAME[name] for name in entry))
    return action_space(goal, pinned=combos)


def default_combination(goal: Goal) -> Action:
    """The union-of-all-functions baseline action (outside the RL space)."""
    return Action(functions=tuple(sorted(_POOLS[goal])), action_id=-1)


def single_function_action(goal: Goal, fn: FitnessFunctionId) -> Action:
    space = action_space(goal)
    for action in space:
        if action.functions == (fn,):
            return action
    raise ValueError(f"{FN_NAMES[fn]} alone is not a valid action for {goal.value}")


# --- UCB -----------------------------------------------------------------------


@dataclass(slots=True)
class UcbConfig:
    c: float = 1.414

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("confidence level c must be larger than 0")


class BanditStats:
    """Per-action selection counts and accumulated reward."""

    __slots__ = ("actions", "times_selected", "sum_reward", "seeding_order")

    def __init__(self, actions: list[Action], seeding_order: list[int] | None = None):
        self.actions = list(actions)
        self.times_selected = {a.action_id: 0 for a in actions}
        self.sum_reward = {a.action_id: 0.0 for a in actions}
        self.seeding_order = list(seeding_order) if seeding_order is not None \
            else [a.action_id for a in actions]

    def by_id(self, action_id: int) -> Action:
        for action in self.actions:
            if action.action_id == action_id:
                return action
        raise KeyError(action_id)

    def total_reward(self) -> float:
        return sum(self.sum_reward.values())


def ucb_select(stats: BanditStats, t: int, cfg: UcbConfig) -> Action:
    """Pick the next action: untried ones first, then the largest upper bound.

    The bound is mean reward plus c * sqrt(ln t / times-selected); ties break
    toward the lowest action id.
    """
    if not stats.actions:
        raise ValueError("empty action space")
    for action_id in stats.seeding_order:
        if stats.times_selected[action_id] == 0:
            return stats.by_id(action_id)
    log_t = math.log(t) if t > 1 else 0.0
    best_action = None
    best_bound = -math.inf
    for action in sorted(stats.actions, key=lambda a: a.action_id):
        n = stats.times_selected[action.action_id]
        bound = stats.sum_reward[action.action_id] / n + cfg.c * math.sqrt(log_t / n)
        if bound > best_bound:
            best_bound = bound
            best_action = action
    return best_action


def ucb_update(stats: BanditStats, action: Action, reward: float) -> BanditStats:
    """Record one observation: bump the selection count and accumulate reward."""
    if action.action_id not in stats.times_selected:
        raise KeyError(f"action {action.action_id} is not in the space")
    stats.times_selected[action.action_id] += 1
    stats.sum_reward[action.action_id] += reward
    return stats


# --- DSG-Sarsa -------------------------------------------------------------------

FEATURE_DIM = len(FitnessFunctionId) + 3


def feature_vector(action: Action, composite_mean: float, suite_size: int,
                   max_suite_size: int, subgoal_coverage: float) -> tuple[float, ...]:
    """One-hot action block + [mean fitness, normalized size, subgoal coverage]."""
    one_hot = [0.0] * len(FitnessFunctionId)
    for fn in action.functions:
        one_hot[int(fn)] = 1.0
    size = min(1.0, suite_size / max_suite_size) if max_suite_size > 0 else 0.0
    return tuple(one_hot + [composite_mean, size, subgoal_coverage])


@dataclass(slots=True)
class SarsaTraceEntry:
    delta: float
    reward: float
    action_id: int
    q_old: float
    q_new: float


@dataclass(slots=True)
class SarsaAgent:
    actions: list[Action]
    alpha: float = 0.1
    beta: float = 0.1
    epsilon: float = 0.1
    weights: list[float] = field(default_factory=lambda: [0.0] * FEATURE_DIM)
    average_reward: float = 0.0
    seeding_order: list[int] = field(default_factory=list)
    seeded: int = 0
    last_action: Action | None = None
    last_features: tuple[float, ...] | None = None
    trace: list[SarsaTraceEntry] = field(default_factory=list)

    def q_value(self, features: tuple[float, ...]) -> float:
        if len(features) != len(self.weights):
            raise ValueError("feature dimension does not match the weight vector")
        return sum(w * x for w, x in zip(self.weights, features))


def sarsa_step(agent: SarsaAgent, reward: float,
               features_by_action: dict[int, tuple[float, ...]],
               rng: random.Random) -> Action:
    """One differential semi-gradient update plus epsilon-greedy selection.

    Computes delta = reward - averageReward + q(S',A') - q(S,A), moves the
    average reward by beta * delta, moves the weights by
    alpha * delta * X(S,A), and returns the newly selected action.
    """
    if agent.last_action is None or agent.last_features is None:
        raise ValueError("agent must be initialized with an initial action first")
    q_old = agent.q_value(agent.last_features)

    if agent.seeded < len(agent.seeding_order):
        new_action = next(
            a for a in agent.actions
            if a.action_id == agent.seeding_order[agent.seeded]
        )
        agent.seeded += 1
    else:
        new_action = _epsilon_greedy(agent, features_by_action, rng)

    new_features = features_by_action[new_action.action_id]
    q_new = agent.q_value(new_features)
    delta = reward - agent.average_reward + q_new - q_old
    agent.average_reward += agent.beta * delta
    agent.weights = [w + agent.alpha * delta * x
                     for w, x in zip(agent.weights, agent.last_features)]
    agent.trace.append(SarsaTraceEntry(delta=delta, reward=reward,
                                       action_id=new_action.action_id,
                                       q_old=q_old, q_new=q_new))
    agent.last_action = new_action
    agent.last_features = new_features
    return new_action


def _epsilon_greedy(agent: SarsaAgent, features_by_action: dict, rng: random.Random) -> Action:
    ordered = sorted(agent.actions, key=lambda a: a.action_id)
    if rng.random() < agent.epsilon:
        return ordered[rng.randrange(len(ordered))]
    qs = [(agent.q_value(features_by_action[a.action_id]), a) for a in ordered]
    best = max(q for q, _ in qs)
    top = [a for q, a in qs if q == best]
    return top[rng.randrange(len(top))]


# --- rewards -----------------------------------------------------------------------


class RewardTracker:
    """Goal-specific reward bookkeeping across strategy update ticks.

    Exceptions: total discovered plus those thrown by the current best suite.
    Diversity: drop in the diversity fitness since the previous tick.
    Strong mutation: improvement in the weak/strong mutation score, weak-only
    while the agent is still seeding, then alternating weak (even tick) and
    strong (odd tick).
    """

    def __init__(self, goal: Goal, seeding_length: int):
        self.goal = goal
        self.seeding_length = seeding_length
        self.prev_diversity_fitness: float | None = None
        self.last_weak: float | None = None
        self.last_strong: float | None = None

    def prime(self, best_suite, ctx) -> None:
        from affsgen.fitness import eval_fitness

        if self.goal is Goal.DIVERSITY:
            self.prev_diversity_fitness = eval_fitness(F.DIVERSITY, best_suite, ctx)
        elif self.goal is Goal.STRONG_MUTATION:
            self.last_weak = ctx.mutation_score(best_suite, "weak")
            self.last_strong = ctx.mutation_score(best_suite, "strong")

    def measure(self, best_suite, ctx, tick: int) -> float:
        from affsgen.fitness import eval_fitness

        if self.goal is Goal.EXCEPTIONS:
            best_unique = set()
            for test in best_suite.tests:
                best_unique |= ctx.trace(test).exceptions
            return float(len(ctx.discovered_exceptions) + len(best_unique))
        if self.goal is Goal.DIVERSITY:
            current = eval_fitness(F.DIVERSITY, best_suite, ctx)
            previous = self.prev_diversity_fitness
            self.prev_diversity_fitness = current
            return (previous if previous is not None else 1.0) - current
        # strong mutation: alternate modes after the seeding phase
        if tick < self.seeding_length or tick % 2 == 0:
            mode = "weak"
        else:
            mode = "strong"
        score = ctx.mutation_score(best_suite, mode)
        if mode == "weak":
            previous, self.last_weak = self.last_weak, score
        else:
            previous, self.last_strong = self.last_strong, score
        return score - (previous if previous is not None else 0.0)


# --- strategies -----------------------------------------------------------------------


class Strategy:
    """One action-selection policy driving a single search run."""

    name = "strategy"
    is_reinforcement = False

    def initial_action(self, features_by_action: dict, rng: random.Random) -> Action:
        raise NotImplementedError

    def update_and_select(self, reward: float, features_by_action: dict,
                          t: int, rng: random.Random) -> Action:
        raise NotImplementedError

    def rewards_observed(self) -> float:
        return 0.0


class StaticStrategy(Strategy):
    def __init__(self, action: Action, name: str):
        self.action = action
        self.name = name

    def initial_action(self, features_by_action, rng) -> Action:
        return self.action

    def update_and_select(self, reward, features_by_action, t, rng) -> Action:
        return self.action


class RandomPerRunStrategy(Strategy):
    """Draws one action uniformly at run start and holds it."""

    def __init__(self, goal: Goal, space: list[Action] | None = None):
        self.name = "random"
        self.space = space if space is not None else action_space(goal)
        self.action: Action | None = None

    def initial_action(self, features_by_action, rng) -> Action:
        self.action = self.space[rng.randrange(len(self.space))]
        return self.action

    def update_and_select(self, reward, features_by_action, t, rng) -> Action:
        return self.action


class UcbStrategy(Strategy):
    is_reinforcement = True

    def __init__(self, goal: Goal, cfg: UcbConfig = UcbConfig(),
                 space: list[Action] | None = None):
        self.name = "ucb"
        self.cfg = cfg
        self.space = space if space is not None else action_space(goal)
        self.stats: BanditStats | None = None
        self.current: Action | None = None

    def initial_action(self, features_by_action, rng) -> Action:
        order = [a.action_id for a in self.space]
        rng.shuffle(order)
        self.stats = BanditStats(self.space, seeding_order=order)
        self.current = ucb_select(self.stats, 0, self.cfg)
        return self.current

    def update_and_select(self, reward, features_by_action, t, rng) -> Action:
        ucb_update(self.stats, self.current, reward)
        self.current = ucb_select(self.stats, t, self.cfg)
        return self.current

    def rewards_observed(self) -> float:
        return self.stats.total_reward() if self.stats else 0.0


class SarsaStrategy(Strategy):
    is_reinforcement = True

    def __init__(self, goal: Goal, alpha: float = 0.1, beta: float = 0.1,
                 epsilon: float = 0.1, space: list[Action] | None = None):
        self.name = "sarsa"
        self.space = space if space is not None else action_space(goal)
        self.alpha, self.beta, self.epsilon = alpha, beta, epsilon
        self.agent: SarsaAgent | None = None

    def initial_action(self, features_by_action, rng) -> Action:
        order = [a.action_id for a in self.space]
        rng.shuffle(order)
        self.agent = SarsaAgent(actions=self.space, alpha=self.alpha, beta=self.beta,
                                epsilon=self.epsilon, seeding_order=order)
        first = next(a for a in self.space if a.action_id == order[0])
        self.agent.seeded = 1
        self.agent.last_action = first
        self.agent.last_features = features_by_action[first.action_id]
        return first

    def update_and_select(self, reward, features_by_action, t, rng) -> Action:
        return sarsa_step(self.agent, reward, features_by_action, rng)

    def rewards_observed(self) -> float:
        return sum(e.reward for e in self.agent.trace) if self.agent else 0.0


def baseline_strategies(goal: Goal) -> dict[str, Strategy]:
    """The three non-learning strategies: single-function, default, random."""
    single = _REQUIRED.get(goal, F.STRONG_MUT)
    return {
        "static": StaticStrategy(single_function_action(goal, single),
                                 name=f"static:{FN_NAMES[single]}"),
        "default": StaticStrategy(default_combination(goal), name="default"),
        "random": RandomPerRunStrategy(goal),
    }


def make_strategy(spec: str, goal: Goal, space: list[Action] | None = None) -> Strategy:
    """Build a strategy from its CLI name: ucb, sarsa, static:<fn>, default, random."""
    if spec == "ucb":
        return UcbStrategy(goal, space=space)
    if spec == "sarsa":
        return SarsaStrategy(goal, space=space)
    if spec == "default":
        return StaticStrategy(default_combination(goal), name="default")
    if spec == "random":
        return RandomPerRunStrategy(goal, space=space)
    if spec.startswith("static:"):
        name = spec.split(":", 1)[1]
        if name not in FN_BY_NAME:
            raise ValueError(f"unknown fitness function {name!r}")
        return StaticStrategy(single_function_action(goal, FN_BY_NAME[name]), name=spec)
    raise ValueError(f"unknown strategy {spec!r}")
