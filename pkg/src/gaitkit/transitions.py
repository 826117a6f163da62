"""Gait-parameter schedules for switching and the switching-order FSM.

Switching between neighbouring gaits is a linear morph of the duty factor
and/or the right-side offsets over a fixed switching time T_s, while the left
legs hold (phi_LF, phi_LH) = (0.0, 0.5) throughout:

* walk <-> trot      duty factor ramps at 1/(4 T_s); phi_RF tracks beta and
                     phi_RH tracks beta +/- 0.5 (modulo 1)
* trot <-> bound     duty factor stays 0.5; phi_RF and phi_RH cross linearly
                     at 1/(2 T_s) in opposite senses
* trot <-> trot-run  duty factor ramps at 1/(5 T_s); offsets held
* bound <-> run      duty factor ramps at 1/(5 T_s); offsets held

Direct switching between run and trot-run is denied (both are flight gaits);
a five-state FSM sequences multi-hop requests as chains of at most three of
the eight directed actions, with an optional settle dwell between chain links.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .gaits import DEFAULT_PERIOD, GaitName, GaitPattern, standard_gait

DEFAULT_SWITCH_TIME = 0.5  # transition duration T_s [s]
DEFAULT_DWELL_STRIDES = 1

_TIME_EPS = 1e-9

# Directed edges of the gait graph. Self loops are zero-duration no-ops.
_DIRECT_EDGES: frozenset[tuple[GaitName, GaitName]] = frozenset(
    [
        (GaitName.WALK, GaitName.TROT),
        (GaitName.TROT, GaitName.WALK),
        (GaitName.TROT, GaitName.BOUND),
        (GaitName.BOUND, GaitName.TROT),
        (GaitName.BOUND, GaitName.RUN),
        (GaitName.RUN, GaitName.BOUND),
        (GaitName.TROT, GaitName.TROT_RUN),
        (GaitName.TROT_RUN, GaitName.TROT),
    ]
    + [(g, g) for g in GaitName]
)


@dataclass(frozen=True)
class TransitionAction:
    """One directed edge a_ij of the gait graph with its switching time."""

    id: str
    source: GaitName
    target: GaitName
    duration: float

    @property
    def is_self_loop(self) -> bool:
        return self.source == self.target


def transition_action(
    source: GaitName, target: GaitName, duration: float = DEFAULT_SWITCH_TIME
) -> TransitionAction:
    """Build the action for a directed edge; self loops have zero duration."""
    if (source, target) not in _DIRECT_EDGES:
        raise ValueError(
            f"no direct switching action between {source.label} and {target.label}"
        )
    if source == target:
        duration = 0.0
    elif duration <= 0.0:
        raise ValueError(f"switching time must be positive, got {duration}")
    return TransitionAction(
        id=f"a{source.value}{target.value}",
        source=source,
        target=target,
        duration=float(duration),
    )


def action_from_id(edge_id: str, duration: float = DEFAULT_SWITCH_TIME) -> TransitionAction:
    if len(edge_id) != 3 or edge_id[0] != "a":
        raise ValueError(f"malformed action id: {edge_id!r}")
    return transition_action(GaitName(int(edge_id[1])), GaitName(int(edge_id[2])), duration)


def transition_params(
    action: TransitionAction, t: float, period: float = DEFAULT_PERIOD
) -> GaitPattern:
    """Instantaneous gait parameters ``t`` seconds into a switching action.

    Endpoints are exact: t=0 reproduces the source gait and t=duration the
    target gait, bit for bit.
    """
    if t < 0.0 or t > action.duration:
        raise ValueError(
            f"time {t} outside the switching window [0, {action.duration}]"
        )
    if action.is_self_loop:
        return standard_gait(action.source, period)
    tau = t / action.duration
    key = (action.source, action.target)
    if key == (GaitName.TROT, GaitName.WALK):
        beta = 0.5 + 0.25 * tau
        rf, rh = beta, (beta + 0.5) % 1.0
    elif key == (GaitName.WALK, GaitName.TROT):
        beta = 0.75 - 0.25 * tau
        rf, rh = beta, beta - 0.5
    elif key == (GaitName.TROT, GaitName.BOUND):
        beta = 0.5
        rf, rh = 0.5 - 0.5 * tau, 0.5 * tau
    elif key == (GaitName.BOUND, GaitName.TROT):
        beta = 0.5
        rf, rh = 0.5 * tau, 0.5 - 0.5 * tau
    elif key == (GaitName.TROT, GaitName.TROT_RUN):
        beta = 0.5 - 0.2 * tau
        rf, rh = 0.5, 0.0
    elif key == (GaitName.TROT_RUN, GaitName.TROT):
        beta = 0.3 + 0.2 * tau
        rf, rh = 0.5, 0.0
    elif key == (GaitName.BOUND, GaitName.RUN):
        beta = 0.5 - 0.2 * tau
        rf, rh = 0.0, 0.5
    elif key == (GaitName.RUN, GaitName.BOUND):
        beta = 0.3 + 0.2 * tau
        rf, rh = 0.0, 0.5
    else:  # pragma: no cover - constructor rejects other edges
        raise ValueError(f"no parameter schedule for edge {action.id}")
    return GaitPattern(beta=beta, offsets=(rf, rh, 0.0, 0.5), period=period)


# Switching order table: (current state, requested state) -> action chain.
TRANSITION_TABLE: dict[tuple[GaitName, GaitName], tuple[str, ...]] = {
    (GaitName.WALK, GaitName.WALK): ("a00",),
    (GaitName.WALK, GaitName.TROT): ("a01",),
    (GaitName.WALK, GaitName.BOUND): ("a01", "a12"),
    (GaitName.WALK, GaitName.RUN): ("a01", "a12", "a23"),
    (GaitName.WALK, GaitName.TROT_RUN): ("a01", "a14"),
    (GaitName.TROT, GaitName.WALK): ("a10",),
    (GaitName.TROT, GaitName.TROT): ("a11",),
    (GaitName.TROT, GaitName.BOUND): ("a12",),
    (GaitName.TROT, GaitName.RUN): ("a12", "a23"),
    (GaitName.TROT, GaitName.TROT_RUN): ("a14",),
    (GaitName.BOUND, GaitName.WALK): ("a21", "a10"),
    (GaitName.BOUND, GaitName.TROT): ("a21",),
    (GaitName.BOUND, GaitName.BOUND): ("a22",),
    (GaitName.BOUND, GaitName.RUN): ("a23",),
    (GaitName.BOUND, GaitName.TROT_RUN): ("a21", "a14"),
    (GaitName.RUN, GaitName.WALK): ("a32", "a21", "a10"),
    (GaitName.RUN, GaitName.TROT): ("a32", "a21"),
    (GaitName.RUN, GaitName.BOUND): ("a32",),
    (GaitName.RUN, GaitName.RUN): ("a33",),
    (GaitName.RUN, GaitName.TROT_RUN): ("a32", "a21", "a14"),
    (GaitName.TROT_RUN, GaitName.WALK): ("a41", "a10"),
    (GaitName.TROT_RUN, GaitName.TROT): ("a41",),
    (GaitName.TROT_RUN, GaitName.BOUND): ("a41", "a12"),
    (GaitName.TROT_RUN, GaitName.RUN): ("a41", "a12", "a23"),
    (GaitName.TROT_RUN, GaitName.TROT_RUN): ("a44",),
}


@dataclass(frozen=True)
class GaitEvent:
    """Request to reach gait state ``target``."""

    target: GaitName


@dataclass(frozen=True)
class FsmState:
    current: GaitName
    queue: tuple[TransitionAction, ...] = ()
    in_progress: tuple[TransitionAction, float] | None = None
    dwell_remaining: float = 0.0

    @property
    def busy(self) -> bool:
        return (
            self.in_progress is not None
            or bool(self.queue)
            or self.dwell_remaining > _TIME_EPS
        )


def initial_state(gait: GaitName) -> FsmState:
    return FsmState(current=gait)


def fsm_dispatch(
    state: FsmState, event: GaitEvent, switch_time: float = DEFAULT_SWITCH_TIME
) -> FsmState:
    """Queue the table-driven action chain for ``event`` from an idle state.

    Events arriving while a chain is active must be deferred by the caller
    (see :class:`GaitFsm`), so dispatching from a busy state is an error.
    """
    if state.busy:
        raise ValueError("cannot dispatch while a transition chain is active")
    ids = TRANSITION_TABLE[(state.current, event.target)]
    actions = tuple(action_from_id(i, switch_time) for i in ids)
    return FsmState(current=state.current, queue=actions)


def advance(
    state: FsmState,
    dt: float,
    *,
    period: float = DEFAULT_PERIOD,
    dwell_strides: int = DEFAULT_DWELL_STRIDES,
) -> tuple[FsmState, GaitPattern]:
    """Progress the machine by ``dt``; returns the new state and the pattern
    in effect at the end of the step.

    Completing an action sets ``current`` to its target; if more actions are
    queued, the machine dwells for ``dwell_strides`` full strides at the
    intermediate gait before starting the next link.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    remaining = dt
    pattern = standard_gait(state.current, period)
    while True:
        if state.in_progress is not None:
            action, elapsed = state.in_progress
            left = action.duration - elapsed
            if remaining < left - _TIME_EPS:
                elapsed += remaining
                pattern = transition_params(action, elapsed, period)
                state = replace(state, in_progress=(action, elapsed))
                return state, pattern
            remaining = max(0.0, remaining - left)
            dwell = dwell_strides * period if state.queue else 0.0
            state = FsmState(
                current=action.target,
                queue=state.queue,
                in_progress=None,
                dwell_remaining=dwell,
            )
            pattern = standard_gait(action.target, period)
            if remaining <= _TIME_EPS:
                return state, pattern
        elif state.dwell_remaining > _TIME_EPS:
            if remaining < state.dwell_remaining - _TIME_EPS:
                state = replace(state, dwell_remaining=state.dwell_remaining - remaining)
                return state, standard_gait(state.current, period)
            remaining = max(0.0, remaining - state.dwell_remaining)
            state = replace(state, dwell_remaining=0.0)
            pattern = standard_gait(state.current, period)
            if remaining <= _TIME_EPS:
                return state, pattern
        elif state.queue:
            head, rest = state.queue[0], state.queue[1:]
            state = replace(state, queue=rest, in_progress=(head, 0.0))
        else:
            return state, standard_gait(state.current, period)


@dataclass
class EventRecord:
    """One dispatched switching request and the chain it produced."""

    time: float
    source: GaitName
    target: GaitName
    chain: tuple[str, ...]


@dataclass
class ActionWindow:
    """Execution interval of one chain link, for plot annotation."""

    action: str
    start: float
    end: float


class GaitFsm:
    """Stateful gait machine: owns an FsmState, timing config, and a log.

    A request made while a chain is running is remembered and dispatched
    automatically once the machine returns to idle, from whatever state it
    landed in.
    """

    def __init__(
        self,
        initial: GaitName = GaitName.TROT,
        *,
        period: float = DEFAULT_PERIOD,
        switch_time: float = DEFAULT_SWITCH_TIME,
        dwell_strides: int = DEFAULT_DWELL_STRIDES,
    ) -> None:
        self.state = initial_state(initial)
        self.period = period
        self.switch_time = switch_time
        self.dwell_strides = dwell_strides
        self.time = 0.0
        self.pending: GaitName | None = None
        self.events: list[EventRecord] = []
        self.action_windows: list[ActionWindow] = []

    @property
    def current(self) -> GaitName:
        return self.state.current

    @property
    def busy(self) -> bool:
        return self.state.busy

    @property
    def active_action(self) -> str | None:
        if self.state.in_progress is not None:
            return self.state.in_progress[0].id
        return None

    def request(self, target: GaitName) -> bool:
        """Dispatch a switching request, or defer it if a chain is running.

        Returns True when the event was dispatched immediately.
        """
        if self.state.busy:
            self.pending = target
            return False
        self._dispatch(target)
        return True

    def _dispatch(self, target: GaitName) -> None:
        source = self.state.current
        self.state = fsm_dispatch(self.state, GaitEvent(target), self.switch_time)
        self.events.append(
            EventRecord(
                time=self.time,
                source=source,
                target=target,
                chain=TRANSITION_TABLE[(source, target)],
            )
        )

    def advance(self, dt: float) -> GaitPattern:
        before = self.active_action
        t0 = self.time
        self.state, pattern = advance(
            self.state, dt, period=self.period, dwell_strides=self.dwell_strides
        )
        self.time = t0 + dt
        after = self.active_action
        if before != after:
            if before is not None:
                self._close_window(before)
            if after is not None:
                self.action_windows.append(ActionWindow(after, self.time, self.time))
        if after is not None and self.action_windows:
            self.action_windows[-1].end = self.time
        if not self.state.busy and self.pending is not None:
            target, self.pending = self.pending, None
            self._dispatch(target)
        return pattern

    def _close_window(self, action_id: str) -> None:
        for win in reversed(self.action_windows):
            if win.action == action_id:
                win.end = self.time
                return


def schedule_trace(
    initial: GaitName,
    requests: list[tuple[float, GaitName]],
    duration: float,
    dt: float,
    *,
    period: float = DEFAULT_PERIOD,
    switch_time: float = DEFAULT_SWITCH_TIME,
    dwell_strides: int = DEFAULT_DWELL_STRIDES,
) -> list[tuple[float, GaitPattern, GaitName, str]]:
    """Replay a request script and sample the parameter schedule at ``dt``.

    Returns rows of (time, pattern, current state, active action id or "").
    """
    fsm = GaitFsm(
        initial, period=period, switch_time=switch_time, dwell_strides=dwell_strides
    )
    pending = sorted(requests)
    rows = []
    steps = int(round(duration / dt))
    for k in range(steps):
        t = k * dt
        while pending and pending[0][0] <= t + 1e-12:
            fsm.request(pending.pop(0)[1])
        pattern = fsm.advance(dt)
        rows.append((t + dt, pattern, fsm.current, fsm.active_action or ""))
    return rows


def write_transition_trace(path, rows) -> None:
    """CSV export of a schedule trace: one row per sample."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["time_s", "beta", "phi_rf", "phi_rh", "phi_lf", "phi_lh", "state", "action"]
        )
        for t, pattern, state, action in rows:
            writer.writerow(
                [
                    repr(t),
                    repr(pattern.beta),
                    repr(pattern.offsets[0]),
                    repr(pattern.offsets[1]),
                    repr(pattern.offsets[2]),
                    repr(pattern.offsets[3]),
                    state.label,
                    action,
                ]
            )
