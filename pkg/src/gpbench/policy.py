"""Policy search: environments, rollouts, and return-based fitness.

An evolved program maps an observed state vector to an action through a
small decoder, and its fitness is the mean discounted return over a
fixed battery of episodes (seeds ``base_seed .. base_seed+episodes-1``).
The battery is identical for every individual in a run, so comparisons
are fair and results reproduce exactly.

Rewards are indexed from t = 1: the reward collected by the t-th step
is discounted by gamma^t.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .core import ConfigurationError, Problem, Program
from .primitives import Domain
from .rng import STREAM_EPISODE, derive_rng


@dataclass(frozen=True)
class Discrete:
    n: int


@dataclass(frozen=True)
class Continuous1D:
    low: float
    high: float


ActionSpace = Union[Discrete, Continuous1D]


@dataclass(frozen=True)
class EpisodeConfig:
    episodes: int = 1
    gamma: float = 1.0
    max_steps: int = 200
    base_seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigurationError("episodes must be at least 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be non-negative")


class Environment(abc.ABC):
    """Episodic environment contract.

    Subclasses set ``state_dim``, ``action_space``, ``max_steps`` (the
    conventional horizon, informational) and ``return_upper_bound`` (an
    episode-count-independent bound on the achievable return, used to
    keep costs non-negative when no target return is configured).
    ``reset(seed)`` must be deterministic in the seed, and all transition
    randomness must live in reset: ``step`` is deterministic.
    """

    state_dim: int
    action_space: ActionSpace
    max_steps: int
    return_upper_bound: float

    @abc.abstractmethod
    def reset(self, seed: int) -> tuple:
        """Start a new episode, returning the initial state vector."""

    @abc.abstractmethod
    def step(self, action) -> tuple:
        """Apply one action; returns (state, reward, terminated, truncated)."""


class CartPole(Environment):
    """Classic pole balancing: explicit-Euler dynamics, bang-bang force.

    State is (cart position, cart velocity, pole angle, pole angular
    velocity); action 1 pushes right, 0 pushes left.  Reward is +1 for
    every step taken, including the one that crosses a bound.
    """

    GRAVITY = 9.8
    CART_MASS = 1.0
    POLE_MASS = 0.1
    HALF_LENGTH = 0.5
    FORCE = 10.0
    DT = 0.02
    THETA_LIMIT = 12.0 * math.pi / 180.0
    X_LIMIT = 2.4

    state_dim = 4
    action_space = Discrete(2)

    def __init__(self, max_steps: int = 200):
        self.max_steps = max_steps
        self.return_upper_bound = float(max_steps)
        self._state = (0.0, 0.0, 0.0, 0.0)

    def reset(self, seed: int) -> tuple:
        rng = derive_rng(seed, STREAM_EPISODE)
        self._state = tuple(float(v) for v in rng.uniform(-0.05, 0.05, size=4))
        return self._state

    def step(self, action) -> tuple:
        x, x_dot, theta, theta_dot = self._state
        force = self.FORCE if action == 1 else -self.FORCE
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        total_mass = self.CART_MASS + self.POLE_MASS
        pole_mass_length = self.POLE_MASS * self.HALF_LENGTH
        temp = (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.POLE_MASS * cos_t * cos_t / total_mass)
        )
        x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass
        x += self.DT * x_dot
        x_dot += self.DT * x_acc
        theta += self.DT * theta_dot
        theta_dot += self.DT * theta_acc
        self._state = (x, x_dot, theta, theta_dot)
        terminated = abs(x) > self.X_LIMIT or abs(theta) > self.THETA_LIMIT
        return self._state, 1.0, terminated, False


class GridWorld(Environment):
    """Deterministic grid: start at (0, 0), move until the goal or forever.

    The observed state is the (column, row) position normalized to
    [0, 1] per axis.  Moves that would leave the grid clip against the
    wall.  Every step costs ``step_reward``; arriving at the goal adds
    ``goal_reward`` and terminates.
    """

    UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3

    state_dim = 2
    action_space = Discrete(4)

    def __init__(
        self,
        width: int,
        height: int,
        goal: tuple,
        step_reward: float = -1.0,
        goal_reward: float = 0.0,
        max_steps: Optional[int] = None,
    ):
        if width < 1 or height < 1:
            raise ConfigurationError("grid dimensions must be at least 1")
        gx, gy = goal
        if not (0 <= gx < width and 0 <= gy < height):
            raise ConfigurationError(
                f"goal {goal} lies outside the {width}x{height} grid"
            )
        self.width = width
        self.height = height
        self.goal = (int(gx), int(gy))
        self.step_reward = step_reward
        self.goal_reward = goal_reward
        self.max_steps = width * height if max_steps is None else max_steps
        self.return_upper_bound = max(0.0, step_reward + goal_reward)
        self._position = (0, 0)

    def _observed(self) -> tuple:
        col, row = self._position
        return (
            col / (self.width - 1) if self.width > 1 else 0.0,
            row / (self.height - 1) if self.height > 1 else 0.0,
        )

    def reset(self, seed: int) -> tuple:
        self._position = (0, 0)
        return self._observed()

    def step(self, action) -> tuple:
        col, row = self._position
        if action == self.UP:
            row += 1
        elif action == self.DOWN:
            row -= 1
        elif action == self.LEFT:
            col -= 1
        else:
            col += 1
        col = min(max(col, 0), self.width - 1)
        row = min(max(row, 0), self.height - 1)
        self._position = (col, row)
        terminated = self._position == self.goal
        reward = self.step_reward + (self.goal_reward if terminated else 0.0)
        return self._observed(), reward, terminated, False


@dataclass(frozen=True)
class Agent:
    """A program plus the decoding rule that turns its outputs into actions."""

    program: Program
    action_space: ActionSpace


def decode_action(outputs, space: ActionSpace):
    """Map a program output vector to a legal action.

    Discrete(n): argmax over the first n outputs, ties to the lowest
    index; as a special case a single-output program drives Discrete(2)
    by thresholding at 0.  Continuous1D clamps output 0 to [low, high].
    """
    if isinstance(space, Discrete):
        if space.n == 2 and len(outputs) == 1:
            return 1 if outputs[0] > 0 else 0
        best = 0
        best_value = outputs[0]
        for i in range(1, space.n):
            if outputs[i] > best_value:
                best = i
                best_value = outputs[i]
        return best
    value = outputs[0]
    if value != value:
        return space.low
    return min(max(float(value), space.low), space.high)


def rollout(agent: Agent, env: Environment, cfg: EpisodeConfig) -> float:
    """Mean discounted return over the episode battery.

    A NaN program output aborts the episode, keeping whatever return has
    accumulated; infinities are left to the decoder's clamping.
    """
    program = agent.program
    space = agent.action_space
    total = 0.0
    for episode in range(cfg.episodes):
        state = env.reset(cfg.base_seed + episode)
        discount = 1.0
        acc = 0.0
        for _ in range(cfg.max_steps):
            outputs = program.evaluate(state)
            if any(v != v for v in outputs):
                break
            state, reward, terminated, truncated = env.step(
                decode_action(outputs, space)
            )
            discount *= cfg.gamma
            acc += discount * reward
            if terminated or truncated:
                break
        total += acc
    return total / cfg.episodes


class PolicyProblem(Problem):
    """Return-based cost for programs acting in an environment.

    cost = max(0, target_return - mean_return) when a target is set
    (ideal threshold 0, so success means reaching the target); otherwise
    cost = return_upper_bound - mean_return, which is non-negative by
    the environment's bound and has no success notion.
    """

    domain = Domain.REAL

    def __init__(
        self,
        env_factory: Callable[[], Environment],
        episode_config: EpisodeConfig = EpisodeConfig(),
        target_return: Optional[float] = None,
        name: str = "policy",
        program_outputs: Optional[int] = None,
    ):
        probe = env_factory()
        space = probe.action_space
        if program_outputs is None:
            if isinstance(space, Discrete):
                program_outputs = 1 if space.n == 2 else space.n
            else:
                program_outputs = 1
        if isinstance(space, Discrete):
            if program_outputs != space.n and not (
                space.n == 2 and program_outputs == 1
            ):
                raise ConfigurationError(
                    f"Discrete({space.n}) needs {space.n} program outputs "
                    f"(or 1 for Discrete(2)), got {program_outputs}"
                )
        elif program_outputs != 1:
            raise ConfigurationError("Continuous1D actions need exactly 1 output")
        self.env_factory = env_factory
        self.episode_config = episode_config
        self.target_return = target_return
        self.action_space = space
        self.n_inputs = probe.state_dim
        self.n_outputs = program_outputs
        self.ideal_threshold = 0.0 if target_return is not None else None
        self.name = name

    def evaluate(self, program: Program) -> float:
        return fitness_policy(program, self)


def fitness_policy(program: Program, problem: PolicyProblem) -> float:
    """Negate the mean return into a non-negative minimization cost."""
    env = problem.env_factory()
    mean_return = rollout(
        Agent(program, problem.action_space), env, problem.episode_config
    )
    if problem.target_return is not None:
        return max(0.0, problem.target_return - mean_return)
    return max(0.0, env.return_upper_bound - mean_return)


def environment_from_name(name: str) -> Callable[[], Environment]:
    """Resolve a registry name to an environment factory.

    Known names: "cartpole" and "gridworld:WxH:gx,gy" (bare "gridworld"
    means the 5x5 grid with the goal in the far corner).
    """
    if name == "cartpole":
        return CartPole
    if name == "gridworld" or name.startswith("gridworld:"):
        width, height, goal = 5, 5, (4, 4)
        if name != "gridworld":
            parts = name.split(":")
            try:
                if len(parts) != 3:
                    raise ValueError
                w_str, h_str = parts[1].split("x")
                gx_str, gy_str = parts[2].split(",")
                width, height = int(w_str), int(h_str)
                goal = (int(gx_str), int(gy_str))
            except ValueError:
                raise ConfigurationError(
                    f"cannot parse {name!r}; gridworld names look like "
                    '"gridworld:5x5:4,4"'
                ) from None
        return lambda: GridWorld(width, height, goal)
    raise ConfigurationError(
        f"unknown environment {name!r}; available: cartpole, gridworld:WxH:gx,gy"
    )
