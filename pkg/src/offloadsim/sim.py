"""Monte-Carlo experiment engine.

One run samples an environment (Wi-Fi coverage, per-location rates,
start location, movement trajectory), plans once per scheme, and walks
the transfer slot by slot.  Schemes are compared on common random
numbers: every scheme in a run sees the identical environment and
trajectory, and runs are seeded by (seed, run index) substreams so
results do not depend on worker count or execution order.

The exact planner is given the sampled per-location rates; the threshold
planner is given only the configured mean rates, planning from summary
information the way a device without per-location measurements would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from . import dp
from .baselines import (
    WifflerState,
    no_offload_decide,
    otso_decide,
    wiffler_decide,
    wiffler_observe,
)
from .config import DEFAULT_SWEEP_VALUES, ScenarioConfig
from .errors import ConfigError, SchemeError
from .model import (
    Action,
    NetworkModel,
    ProblemSpec,
    State,
    admissible_actions,
    next_file_size,
    payment,
)
from .threshold import MonotoneModel, decide as threshold_decide, solve_monotone

SCHEMES = ("general", "monotone", "no-offload", "otso", "wiffler")


def build_grid_mobility(rows: int, cols: int, p_stay: float) -> np.ndarray:
    """Sticky random walk on a rows x cols grid, 4-neighbourhood, no wrap.

    The walker stays put with probability ``p_stay`` and otherwise moves
    to one of its von Neumann neighbours uniformly; cells with fewer
    neighbours split the leaving mass among those they have.
    """
    if rows < 1 or cols < 1:
        raise ConfigError("grid must be at least 1x1")
    if not 0.0 <= p_stay <= 1.0:
        raise ConfigError(f"p_stay must be in [0, 1], got {p_stay!r}")
    L = rows * cols
    P = np.zeros((L, L))
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            neighbours = []
            if r > 0:
                neighbours.append(i - cols)
            if r < rows - 1:
                neighbours.append(i + cols)
            if c > 0:
                neighbours.append(i - 1)
            if c < cols - 1:
                neighbours.append(i + 1)
            if not neighbours:
                P[i, i] = 1.0
                continue
            P[i, i] = p_stay
            share = (1.0 - p_stay) / len(neighbours)
            for j in neighbours:
                P[i, j] = share
    return P


def truncated_normal(rng, mean: float, std: float) -> float:
    """Normal draw rejected until non-negative (exact at these scales)."""
    if std <= 0:
        return max(mean, 0.0)
    while True:
        x = rng.normal(mean, std)
        if x >= 0:
            return float(x)


def sample_instance(cfg: ScenarioConfig, rng):
    """Draw one environment: Wi-Fi set, per-location rates, start location.

    Consumes fixed substreams (coverage, cellular rates, Wi-Fi rates,
    start location) so changing one distribution parameter leaves the
    other draws untouched.
    """
    g_wifi, g_cell, g_wrate, g_init = rng.spawn(4)
    L = cfg.num_locations
    wifi = frozenset(
        l + 1 for l in range(L) if g_wifi.random() < cfg.wifi_prob
    )
    mu_c = cfg.rate_mbit_per_slot(cfg.mu_cellular_mbps)
    mu_w = cfg.rate_mbit_per_slot(cfg.mu_wifi_mbps)
    std = cfg.rate_mbit_per_slot(cfg.rate_std_mbps)

    rate = np.zeros((L, 3))
    price = np.zeros((L, 3))
    rate[:, Action.CELLULAR] = [truncated_normal(g_cell, mu_c, std) for _ in range(L)]
    wifi_draws = [truncated_normal(g_wrate, mu_w, std) for _ in range(L)]
    for l in wifi:
        rate[l - 1, Action.WIFI] = wifi_draws[l - 1]
    price[:, Action.CELLULAR] = cfg.price_per_mbit

    model = NetworkModel(
        num_locations=L,
        wifi_locations=wifi,
        mobility=build_grid_mobility(cfg.grid_rows, cfg.grid_cols, cfg.p_stay),
        price=price,
        rate=rate,
    )
    spec = ProblemSpec(
        file_size=cfg.file_mbit,
        horizon=cfg.horizon,
        grid_step=cfg.grid_step_mbit,
        penalty=cfg.make_penalty(),
        initial_location=int(g_init.integers(1, L + 1)),
    )
    return model, spec


def sample_trajectory(model: NetworkModel, spec: ProblemSpec, rng) -> list:
    """Location per slot, starting from the problem's initial location."""
    T = spec.horizon
    locs = [spec.initial_location]
    if T > 1:
        cum = np.cumsum(model.mobility, axis=1)
        draws = rng.random(T - 1)
        l = spec.initial_location
        for u in draws:
            l = int(np.searchsorted(cum[l - 1], u, side="right")) + 1
            l = min(l, model.num_locations)
            locs.append(l)
    return locs


class _PolicyAgent:
    def __init__(self, policy: dp.Policy):
        self._policy = policy

    def decide(self, k: float, l: int, t: int) -> Action:
        return self._policy.action(t, k, l)


class _ThresholdAgent:
    def __init__(self, tp):
        self._tp = tp

    def decide(self, k: float, l: int, t: int) -> Action:
        return threshold_decide(self._tp, State(k, l), t)


class _NoOffloadAgent:
    def decide(self, k: float, l: int, t: int) -> Action:
        return no_offload_decide(State(k, l))


class _OtsoAgent:
    def __init__(self, model: NetworkModel):
        self._model = model

    def decide(self, k: float, l: int, t: int) -> Action:
        return otso_decide(self._model, State(k, l))


class _WifflerAgent:
    def __init__(self, model: NetworkModel, horizon: int, theta: float, window: int):
        self._model = model
        self._horizon = horizon
        self._ws = WifflerState(theta=theta, window=window)

    def decide(self, k: float, l: int, t: int) -> Action:
        wiffler_observe(self._ws, self._model, l, t)
        return wiffler_decide(self._ws, self._model, State(k, l), t, self._horizon)


def make_agent(scheme: str, model: NetworkModel, spec: ProblemSpec, cfg: ScenarioConfig):
    """Plan (where the scheme plans) and return a per-episode decision agent."""
    if scheme == "general":
        policy, _ = dp.solve(model, spec)
        return _PolicyAgent(policy)
    if scheme == "monotone":
        mu_c = cfg.rate_mbit_per_slot(cfg.mu_cellular_mbps)
        mu_w = cfg.rate_mbit_per_slot(cfg.mu_wifi_mbps)
        mm = MonotoneModel(
            num_locations=model.num_locations,
            wifi_locations=model.wifi_locations,
            mobility=model.mobility,
            mu_cellular=mu_c,
            mu_wifi=mu_w,
            cellular_cost=mu_c * cfg.price_per_mbit,
            penalty=spec.penalty,
        )
        tp, _ = solve_monotone(mm, spec)
        return _ThresholdAgent(tp)
    if scheme == "no-offload":
        return _NoOffloadAgent()
    if scheme == "otso":
        return _OtsoAgent(model)
    if scheme == "wiffler":
        return _WifflerAgent(model, spec.horizon, cfg.wiffler_theta, cfg.wiffler_window)
    raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


@dataclass(frozen=True)
class EpisodeResult:
    completed: bool
    total_payment: float
    penalty_paid: float
    total_cost: float
    slots_cellular: int
    slots_wifi: int
    slots_waiting: int
    trajectory: tuple  # (t, location, size before acting, action) per slot used


def run_episode(agent, model: NetworkModel, spec: ProblemSpec, *, rng=None, trajectory=None) -> EpisodeResult:
    """Walk one transfer: location from the trajectory, action from the
    agent, size and payment from the model primitives, penalty on whatever
    is left at the horizon."""
    if trajectory is None:
        if rng is None:
            raise ValueError("run_episode needs either a trajectory or an rng")
        trajectory = sample_trajectory(model, spec, rng)
    if len(trajectory) < spec.horizon:
        raise ValueError("trajectory shorter than the horizon")

    k = spec.file_size
    pay = 0.0
    counts = {Action.IDLE: 0, Action.CELLULAR: 0, Action.WIFI: 0}
    trace = []
    for t in range(1, spec.horizon + 1):
        if k <= 0:
            break
        l = trajectory[t - 1]
        a = Action(agent.decide(k, l, t))
        if a not in admissible_actions(model, l):
            raise SchemeError(
                f"scheme chose {a.name} at location {l}, which only admits "
                f"{[x.name for x in admissible_actions(model, l)]}"
            )
        trace.append((t, l, k, int(a)))
        counts[a] += 1
        if a is not Action.IDLE:
            pay += payment(model, spec, State(k, l), a)
            k = next_file_size(spec, k, model.rate_of(l, a))
    pen = float(spec.penalty(k)) if k > 0 else 0.0
    return EpisodeResult(
        completed=k <= 0,
        total_payment=pay,
        penalty_paid=pen,
        total_cost=pay + pen,
        slots_cellular=counts[Action.CELLULAR],
        slots_wifi=counts[Action.WIFI],
        slots_waiting=counts[Action.IDLE],
        trajectory=tuple(trace),
    )


@dataclass(frozen=True)
class AggregateMetrics:
    runs: int
    completion_probability: float
    completion_ci: float
    mean_total_cost: float
    cost_ci: float
    mean_payment: float
    payment_ci: float
    mean_slots_cellular: float
    mean_slots_wifi: float
    mean_slots_waiting: float


def _half_width(x: np.ndarray) -> float:
    n = x.size
    if n < 2:
        return 0.0
    return 1.96 * float(np.std(x, ddof=1)) / math.sqrt(n)


def aggregate_metrics(samples: "SchemeSamples") -> AggregateMetrics:
    n = samples.total_cost.size
    p = float(samples.completed.mean())
    return AggregateMetrics(
        runs=n,
        completion_probability=p,
        completion_ci=1.96 * math.sqrt(p * (1.0 - p) / n) if n else 0.0,
        mean_total_cost=float(samples.total_cost.mean()),
        cost_ci=_half_width(samples.total_cost),
        mean_payment=float(samples.payment.mean()),
        payment_ci=_half_width(samples.payment),
        mean_slots_cellular=float(samples.slots_cellular.mean()),
        mean_slots_wifi=float(samples.slots_wifi.mean()),
        mean_slots_waiting=float(samples.slots_waiting.mean()),
    )


@dataclass(frozen=True)
class SchemeSamples:
    total_cost: np.ndarray
    payment: np.ndarray
    completed: np.ndarray
    slots_cellular: np.ndarray
    slots_wifi: np.ndarray
    slots_waiting: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    sweep_axis: str
    sweep_values: tuple
    schemes: tuple
    config: ScenarioConfig
    metrics: dict  # (sweep value, scheme) -> AggregateMetrics
    samples: dict  # (sweep value, scheme) -> SchemeSamples

    CSV_COLUMNS = (
        "sweep_value",
        "scheme",
        "runs",
        "completion_prob",
        "completion_ci",
        "mean_cost",
        "cost_ci",
        "mean_payment",
        "payment_ci",
        "slots_cellular",
        "slots_wifi",
        "slots_waiting",
    )

    def rows(self):
        for value in self.sweep_values:
            for scheme in self.schemes:
                m = self.metrics[(value, scheme)]
                yield (
                    repr(value),
                    scheme,
                    str(m.runs),
                    repr(m.completion_probability),
                    repr(m.completion_ci),
                    repr(m.mean_total_cost),
                    repr(m.cost_ci),
                    repr(m.mean_payment),
                    repr(m.payment_ci),
                    repr(m.mean_slots_cellular),
                    repr(m.mean_slots_wifi),
                    repr(m.mean_slots_waiting),
                )

    def to_csv_text(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        lines.extend(",".join(row) for row in self.rows())
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())

    def to_json_dict(self) -> dict:
        return {
            "sweep_axis": self.sweep_axis,
            "sweep_values": list(self.sweep_values),
            "schemes": list(self.schemes),
            "config": self.config.to_dict(),
            "metadata": {
                "initial_location": "uniform over locations, drawn per run",
                "rates": "drawn once per run, static within the episode",
                "rng": "per-run substreams keyed by (seed, run index); "
                "schemes share each run's environment and trajectory",
            },
            "rows": [dict(zip(self.CSV_COLUMNS, row)) for row in self.rows()],
        }

    def write_json(self, path) -> None:
        import json

        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _run_block(cfg: ScenarioConfig, schemes: tuple, run_indices) -> list:
    out = []
    for j in run_indices:
        inst_rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(j, 0))
        )
        traj_rng = np.random.default_rng(
            np.random.SeedSequence(cfg.seed, spawn_key=(j, 1))
        )
        model, spec = sample_instance(cfg, inst_rng)
        traj = sample_trajectory(model, spec, traj_rng)
        rec = {}
        for scheme in schemes:
            agent = make_agent(scheme, model, spec, cfg)
            ep = run_episode(agent, model, spec, trajectory=traj)
            rec[scheme] = (
                ep.total_cost,
                ep.total_payment,
                1.0 if ep.completed else 0.0,
                ep.slots_cellular,
                ep.slots_wifi,
                ep.slots_waiting,
            )
        out.append(rec)
    return out


def _run_block_star(args):
    return _run_block(*args)


def run_experiment(
    cfg: ScenarioConfig,
    schemes,
    sweep_axis: str = None,
    sweep_values=None,
    *,
    jobs: int = 1,
) -> ExperimentResult:
    """Sweep one parameter, run ``cfg.runs`` paired episodes per point and
    scheme, and aggregate.  ``jobs > 1`` splits runs across processes;
    output is identical regardless of the split."""
    schemes = tuple(schemes)
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
    axis = sweep_axis or cfg.sweep_axis
    values = tuple(sweep_values if sweep_values is not None else ())
    if not values:
        values = tuple(cfg.sweep_values) or DEFAULT_SWEEP_VALUES[axis]

    metrics = {}
    samples = {}
    for value in values:
        cfg_v = cfg.with_sweep_value(axis, value)
        indices = list(range(cfg.runs))
        if jobs > 1 and cfg.runs > 1:
            blocks = [
                (cfg_v, schemes, indices[i::jobs]) for i in range(jobs) if indices[i::jobs]
            ]
            with Pool(processes=len(blocks)) as pool:
                results = pool.map(_run_block_star, blocks)
            records = [None] * cfg.runs
            for (_, _, idx), block in zip(blocks, results):
                for j, rec in zip(idx, block):
                    records[j] = rec
        else:
            records = _run_block(cfg_v, schemes, indices)

        for scheme in schemes:
            arr = np.array([rec[scheme] for rec in records], dtype=float)
            ss = SchemeSamples(
                total_cost=arr[:, 0],
                payment=arr[:, 1],
                completed=arr[:, 2],
                slots_cellular=arr[:, 3],
                slots_wifi=arr[:, 4],
                slots_waiting=arr[:, 5],
            )
            samples[(value, scheme)] = ss
            metrics[(value, scheme)] = aggregate_metrics(ss)

    return ExperimentResult(
        sweep_axis=axis,
        sweep_values=values,
        schemes=schemes,
        config=cfg,
        metrics=metrics,
        samples=samples,
    )
