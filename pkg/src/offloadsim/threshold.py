"""Low-complexity threshold planner.

Under a simplified cost model (free Wi-Fi, location-independent cellular
price and rates, convex penalty, full-slot cellular billing) the optimal
decision switches at most once along the remaining-size axis and at most
once along the time axis.  This planner computes only those switch points
per (location, epoch): while scanning sizes it keeps a single candidate
action below the previous epoch's frontier and locks to cellular above
the current one, instead of minimizing over the whole action set at every
lattice point.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .dp import TIE_REL_TOL, ValueTable, _rate_steps
from .errors import DomainError, PreconditionError
from .model import (
    Action,
    NetworkModel,
    PenaltyFn,
    ProblemSpec,
    State,
    is_convex_on_grid,
    penalty_on_grid,
)

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

# Max relative spread tolerated when checking location-independence.
_SPREAD_TOL = 1e-9


class LocationMode(enum.Enum):
    NO_WIFI = "no_wifi"
    WIFI_SLOWER = "wifi_slower"
    WIFI_FASTER = "wifi_faster"


@dataclass(frozen=True)
class MonotoneModel:
    """Network description restricted to the regime the threshold planner
    solves exactly.

    ``cellular_cost`` is the flat price of one cellular slot
    (per-slot rate times unit price); Wi-Fi is free.  Rates are the same
    at every location.  The penalty must be convex on the size grid.
    """

    num_locations: int
    wifi_locations: frozenset
    mobility: np.ndarray
    mu_cellular: float
    mu_wifi: float
    cellular_cost: float
    penalty: PenaltyFn

    def __post_init__(self):
        if self.mu_cellular < 0 or self.mu_wifi < 0:
            raise PreconditionError("rates must be >= 0")
        if self.cellular_cost < 0:
            raise PreconditionError("cellular slot cost must be >= 0")
        if self.mu_cellular == 0 and self.cellular_cost > 0:
            raise PreconditionError(
                "cellular slot cost must be 0 when the cellular rate is 0"
            )
        # Reuse the network validation for mobility and the wifi set.
        net = self._build_network()
        object.__setattr__(self, "mobility", net.mobility)
        object.__setattr__(self, "wifi_locations", net.wifi_locations)

    def _build_network(self) -> NetworkModel:
        L = self.num_locations
        price_cell = self.cellular_cost / self.mu_cellular if self.mu_cellular > 0 else 0.0
        price = np.zeros((L, 3))
        price[:, Action.CELLULAR] = price_cell
        rate = np.zeros((L, 3))
        rate[:, Action.CELLULAR] = self.mu_cellular
        for l in self.wifi_locations:
            rate[l - 1, Action.WIFI] = self.mu_wifi
        return NetworkModel(
            num_locations=L,
            wifi_locations=frozenset(self.wifi_locations),
            mobility=np.asarray(self.mobility, dtype=float),
            price=price,
            rate=rate,
        )

    def to_network_model(self) -> NetworkModel:
        """Equivalent generic network (free Wi-Fi, uniform cellular price)."""
        return self._build_network()

    @classmethod
    def from_network_model(
        cls,
        model: NetworkModel,
        spec: ProblemSpec,
        *,
        approximate: bool = False,
    ) -> "MonotoneModel":
        """Derive the restricted description from a generic network.

        Strict mode checks every requirement and raises
        :class:`PreconditionError` naming the first violated one.  With
        ``approximate=True`` the per-location rates and cellular prices are
        averaged instead (the planner then works from summary information
        and its output is a heuristic for the original network).
        """
        L = model.num_locations
        wifi = sorted(model.wifi_locations)
        cell_rates = model.rate[:, Action.CELLULAR]
        cell_prices = model.price[:, Action.CELLULAR]
        wifi_rates = np.array([model.rate[l - 1, Action.WIFI] for l in wifi])
        wifi_prices = np.array([model.price[l - 1, Action.WIFI] for l in wifi])

        if approximate:
            mu1 = float(cell_rates.mean())
            mu2 = float(wifi_rates.mean()) if wifi else 0.0
            p1 = float(cell_prices.mean())
        else:
            if wifi and wifi_prices.max(initial=0.0) > 0:
                raise PreconditionError(
                    "Wi-Fi must be free at every covered location"
                )
            if _spread(cell_prices) > _SPREAD_TOL:
                raise PreconditionError(
                    "cellular price must be location-independent"
                )
            if _spread(cell_rates) > _SPREAD_TOL:
                raise PreconditionError(
                    "cellular rate must be location-independent"
                )
            if wifi and _spread(wifi_rates) > _SPREAD_TOL:
                raise PreconditionError(
                    "Wi-Fi rate must be the same at every covered location"
                )
            mu1 = float(cell_rates[0])
            mu2 = float(wifi_rates[0]) if wifi else 0.0
            p1 = float(cell_prices[0])

        if not is_convex_on_grid(spec.penalty, spec.grid_step, spec.file_size):
            raise PreconditionError("penalty must be convex on the size grid")

        return cls(
            num_locations=L,
            wifi_locations=model.wifi_locations,
            mobility=model.mobility,
            mu_cellular=mu1,
            mu_wifi=mu2,
            cellular_cost=mu1 * p1,
            penalty=spec.penalty,
        )

    def mode_of(self, l: int) -> LocationMode:
        if l not in self.wifi_locations:
            return LocationMode.NO_WIFI
        if self.mu_wifi <= self.mu_cellular:
            return LocationMode.WIFI_SLOWER
        return LocationMode.WIFI_FASTER


def _spread(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    lo, hi = float(values.min()), float(values.max())
    return (hi - lo) / max(1.0, abs(hi))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per (location, epoch) size frontier ``k_star`` plus the per-location
    decision mode.

    ``k_star_idx[l-1, t-1]`` is the first grid index at which cellular is
    chosen; the sentinel value ``grid_points + 1`` (one step past the file
    size) means cellular is never chosen at that (location, epoch).
    """

    k_star_idx: np.ndarray
    modes: tuple
    grid_step: float
    file_size: float
    horizon: int

    def __post_init__(self):
        self.k_star_idx.setflags(write=False)

    @property
    def num_locations(self) -> int:
        return self.k_star_idx.shape[0]

    @property
    def sentinel(self) -> float:
        return self.file_size + self.grid_step

    def threshold(self, l: int, t: int) -> float:
        if not 1 <= l <= self.num_locations:
            raise DomainError(f"location {l} out of range")
        if not 1 <= t <= self.horizon:
            raise DomainError(f"epoch {t} outside 1..{self.horizon}")
        return float(self.k_star_idx[l - 1, t - 1] * self.grid_step)

    def mode_of(self, l: int) -> LocationMode:
        if not 1 <= l <= self.num_locations:
            raise DomainError(f"location {l} out of range")
        return self.modes[l - 1]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "t", "k_star"])
            for l in range(self.num_locations):
                for t in range(self.horizon):
                    w.writerow(
                        [l + 1, t + 1, repr(float(self.k_star_idx[l, t] * self.grid_step))]
                    )


def decide(tp: ThresholdPolicy, s: State, t: int) -> Action:
    """Decision rule induced by the frontiers.

    Zero remaining size always maps to IDLE, mirroring the exact planner's
    idle-at-zero rule (the transfer loop never reaches this state anyway).
    """
    if not 1 <= t <= tp.horizon:
        raise DomainError(f"epoch {t} outside 1..{tp.horizon}")
    n = int(round(s.k / tp.grid_step))
    if n <= 0:
        return Action.IDLE
    mode = tp.mode_of(s.l)
    if mode is LocationMode.WIFI_FASTER:
        return Action.WIFI
    if n >= tp.k_star_idx[s.l - 1, t - 1]:
        return Action.CELLULAR
    return Action.IDLE if mode is LocationMode.NO_WIFI else Action.WIFI


def t_star_view(tp: ThresholdPolicy, k: float, l: int) -> int:
    """First epoch at which ``k`` is at or above the frontier.

    Returns ``horizon + 1`` when no epoch qualifies (including ``k = 0``).
    """
    n = int(round(k / tp.grid_step))
    row = tp.k_star_idx[l - 1]
    hits = np.where(row <= n)[0]
    return int(hits[0]) + 1 if hits.size else tp.horizon + 1


def threshold_pass(
    mm: MonotoneModel,
    spec: ProblemSpec,
    l: int,
    t: int,
    v_next: np.ndarray,
    k_star_next: float,
):
    """One backward step at one location, scanning sizes upward.

    ``v_next`` is the next epoch's cost slice ``[location-1, k/step]`` and
    ``k_star_next`` the frontier found one epoch later (0 on the first
    pass, so the whole range is searched).  Below ``k_star_next`` only the
    free action is evaluated; between the frontiers both candidates are
    compared; after the switch only cellular is evaluated.  Returns the
    frontier (sentinel: file size + one step) and the cost row.
    """
    N = spec.grid_points
    sigma = spec.grid_step
    wifi = l in mm.wifi_locations
    dj = _rate_steps(spec, mm.mu_wifi) if wifi else 0
    d1 = _rate_steps(spec, mm.mu_cellular)
    q = mm.cellular_cost
    w = mm.mobility[l - 1] @ v_next

    ks_next_idx = min(int(round(k_star_next / sigma)), N + 1)
    vrow = np.empty(N + 1)
    ks_idx = N + 1
    compare = False  # both candidates in play
    locked = False  # cellular region reached
    for n in range(N + 1):
        if not compare and not locked and n >= ks_next_idx:
            compare = True
        psi_1 = q + w[max(0, n - d1)]
        psi_j = w[max(0, n - dj)]
        if locked:
            vrow[n] = min(psi_1, psi_j)
            continue
        if compare:
            vrow[n] = min(psi_1, psi_j)
            if wifi:
                take_cell = psi_1 < psi_j * (1.0 - TIE_REL_TOL)
            else:
                take_cell = psi_j >= psi_1 * (1.0 - TIE_REL_TOL)
            if take_cell:
                ks_idx = n
                locked = True
                compare = False
        else:
            vrow[n] = psi_j
    return ks_idx * sigma, vrow


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _scan_and_fill(vt, idx1, idx2, wifi_flags, gather, q, omt, ks_next, ks_out):
        # vt rows hold the idle continuation on entry and the epoch's
        # cost-to-go on exit.  Scans run over original values (the fill
        # writes descending, and every gather index points at or below the
        # write position), so arithmetic matches the vectorized path
        # operation for operation.
        L, width = vt.shape
        N = width - 1
        for l in range(L):
            row = vt[l]
            wifi = wifi_flags[l]
            ks = N + 1
            start = ks_next[l]
            if start <= N:
                for n in range(start, N + 1):
                    psi1 = q + row[idx1[n]]
                    if wifi:
                        if psi1 < row[idx2[n]] * omt:
                            ks = n
                            break
                    else:
                        if row[n] >= psi1 * omt:
                            ks = n
                            break
            ks_out[l] = ks
            if wifi and gather:
                for n in range(N, -1, -1):
                    psij = row[idx2[n]]
                    if n >= ks:
                        psi1 = q + row[idx1[n]]
                        row[n] = psi1 if psi1 < psij else psij
                    else:
                        row[n] = psij
            else:
                for n in range(N, ks - 1, -1):
                    psi1 = q + row[idx1[n]]
                    psij = row[n]
                    row[n] = psi1 if psi1 < psij else psij


def solve_monotone(
    mm: MonotoneModel,
    spec: ProblemSpec,
    *,
    max_cells: int = 50_000_000,
    use_numba: bool = None,
):
    """Backward induction that only searches around the moving frontier.

    Returns ``(ThresholdPolicy, ValueTable)``.  The induced decision rule
    matches the exact planner's table cell for cell when that planner is
    run with ``flat_payment=True`` on the equivalent network.  The compiled
    kernel is used when available unless ``use_numba`` forces a path; both
    paths produce the same frontiers.
    """
    if not is_convex_on_grid(spec.penalty, spec.grid_step, spec.file_size):
        raise PreconditionError("penalty must be convex on the size grid")

    L = mm.num_locations
    N = spec.grid_points
    T = spec.horizon
    cells = (T + 1) * (N + 1) * L
    if cells > max_cells:
        raise PreconditionError(
            f"value lattice needs {cells} cells, budget is {max_cells}"
        )

    d1 = _rate_steps(spec, mm.mu_cellular)
    d2 = _rate_steps(spec, mm.mu_wifi)
    arange = np.arange(N + 1)
    idx1 = np.maximum(arange - d1, 0)
    idx2 = np.maximum(arange - d2, 0)
    wifi_rows = np.array(sorted(l - 1 for l in mm.wifi_locations), dtype=np.intp)
    gather_wifi = wifi_rows.size > 0 and d2 > 0
    wifi_mesh = np.ix_(wifi_rows, idx2) if gather_wifi else None
    wifi_here = np.zeros((L, 1), dtype=bool)
    wifi_here[wifi_rows] = True
    q = mm.cellular_cost
    P = mm.mobility

    v = np.empty((T + 1, L, N + 1))
    v[T] = penalty_on_grid(mm.penalty, spec.grid_values)[None, :]
    ks_idx = np.empty((L, T), dtype=np.int64)
    ks_next = np.full(L, 0, dtype=np.int64)
    omt = 1.0 - TIE_REL_TOL

    if use_numba is None:
        use_numba = _HAVE_NUMBA
    elif use_numba and not _HAVE_NUMBA:
        raise PreconditionError("numba is not installed")

    if use_numba:
        wifi_flags = wifi_here[:, 0].copy()
        ks_t = np.empty(L, dtype=np.int64)
        for t in range(T - 1, -1, -1):
            v_t = v[t]
            np.matmul(P, v[t + 1], out=v_t)
            _scan_and_fill(v_t, idx1, idx2, wifi_flags, gather_wifi, q, omt, ks_next, ks_t)
            ks_idx[:, t] = ks_t
            ks_next = ks_idx[:, t]
    else:
        for t in range(T - 1, -1, -1):
            v_t = v[t]
            np.matmul(P, v[t + 1], out=v_t)  # v_t holds the idle continuation
            lo = int(ks_next.min())
            v1 = v_t[:, idx1[lo:]] + q if lo <= N else None
            if gather_wifi:
                # Free-action value at covered locations is the Wi-Fi one.
                v_t[wifi_rows] = v_t[wifi_mesh]
            if lo > N:
                # Frontier already above the file size one epoch later,
                # hence above it now too: cellular is never chosen.
                ks_idx[:, t] = N + 1
                continue
            sl = slice(lo, N + 1)
            vj = v_t[:, sl]
            # Mirror the exact planner's displacement rule per location
            # class: away from Wi-Fi, cellular takes a cell unless idling is
            # strictly cheaper (ties transmit); on Wi-Fi, cellular must beat
            # the free transfer strictly (ties stay free).
            live = np.where(wifi_here, v1 < vj * omt, vj >= v1 * omt)
            live &= arange[None, sl] >= ks_next[:, None]
            has = live.any(axis=1)
            ks_t = np.where(has, live.argmax(axis=1) + lo, N + 1)
            v_t[:, sl] = np.minimum(v1, vj)
            ks_idx[:, t] = ks_t
            ks_next = ks_t

    modes = tuple(mm.mode_of(l + 1) for l in range(L))
    tp = ThresholdPolicy(
        k_star_idx=ks_idx,
        modes=modes,
        grid_step=spec.grid_step,
        file_size=spec.file_size,
        horizon=T,
    )
    return tp, ValueTable(v, spec.grid_step, T)
