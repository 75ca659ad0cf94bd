"""Comparison heuristics: always-cellular, Wi-Fi-whenever-available (OTSO),
and the prediction-based Wiffler rule.

Wiffler waits for Wi-Fi only when the capacity it expects to encounter
before the deadline covers the remaining size scaled by a conservatism
factor.  Its predictor averages the inter-encounter period and the
per-encounter transferable amount over a sliding window of completed
Wi-Fi encounters; the exact estimator is pluggable because published
descriptions of the rule leave it open.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .model import Action, NetworkModel, State


def no_offload_decide(s: State) -> Action:
    """Cellular at all times (idle once nothing is left)."""
    return Action.CELLULAR if s.k > 0 else Action.IDLE


def otso_decide(model: NetworkModel, s: State) -> Action:
    """Wi-Fi whenever available, cellular otherwise, idle when done."""
    if s.k <= 0:
        return Action.IDLE
    return Action.WIFI if model.has_wifi(s.l) else Action.CELLULAR


@dataclass(frozen=True)
class Encounter:
    """One completed Wi-Fi visit."""

    inter_meeting_time: int  # slots from the previous encounter's start
    dwell_slots: int
    rate: float  # transferable amount per slot while connected

    @property
    def transferred(self) -> float:
        return self.dwell_slots * self.rate


@dataclass
class WifflerState:
    """Per-episode predictor state: conservatism factor, window length, and
    the ring of the last ``window`` completed encounters."""

    theta: float = 1.0
    window: int = 4
    history: deque = field(default_factory=deque)
    _in_wifi: bool = False
    _enc_start: int = 0
    _enc_slots: int = 0
    _enc_rate_sum: float = 0.0
    _prev_start: int = 0

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be > 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")


def wiffler_observe(ws: WifflerState, model: NetworkModel, l: int, t: int) -> None:
    """Update the encounter history with the location seen at slot ``t``.

    Call once per slot, before deciding.  An encounter runs from entering
    Wi-Fi coverage to leaving it; it is recorded when it ends.
    """
    in_wifi = model.has_wifi(l)
    if in_wifi and not ws._in_wifi:
        ws._enc_start = t
        ws._enc_slots = 0
        ws._enc_rate_sum = 0.0
    if in_wifi:
        ws._enc_slots += 1
        ws._enc_rate_sum += model.rate_of(l, Action.WIFI)
    if not in_wifi and ws._in_wifi:
        ws.history.append(
            Encounter(
                inter_meeting_time=ws._enc_start - ws._prev_start,
                dwell_slots=ws._enc_slots,
                rate=ws._enc_rate_sum / ws._enc_slots,
            )
        )
        ws._prev_start = ws._enc_start
        while len(ws.history) > ws.window:
            ws.history.popleft()
    ws._in_wifi = in_wifi


def wiffler_predict(ws: WifflerState, remaining_time: int) -> float:
    """Expected Wi-Fi capacity before the deadline.

    Encounters arrive once per mean inter-meeting period and each moves
    the mean per-encounter amount; with no history the estimate is zero
    (nothing known, assume nothing).
    """
    if remaining_time <= 0 or not ws.history:
        return 0.0
    mean_gap = sum(e.inter_meeting_time for e in ws.history) / len(ws.history)
    if mean_gap <= 0:
        return 0.0
    mean_transfer = sum(e.transferred for e in ws.history) / len(ws.history)
    return (remaining_time / mean_gap) * mean_transfer


def wiffler_decide(
    ws: WifflerState, model: NetworkModel, s: State, t: int, horizon: int
) -> Action:
    """Wi-Fi on the spot; off coverage, wait only if the predicted Wi-Fi
    capacity covers ``theta`` times the remaining size."""
    if s.k <= 0:
        return Action.IDLE
    if model.has_wifi(s.l):
        return Action.WIFI
    zeta = wiffler_predict(ws, horizon - t)
    if zeta >= ws.theta * s.k:
        return Action.IDLE
    return Action.CELLULAR
