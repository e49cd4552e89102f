"""Linearization of raw browser events into chronological action paths.

A *visit* is a maximal episode of the user's active focus resting on one
page in one tab. Visits open at the moment a page first gains focus and
close when focus moves on: a navigation in the focused tab, a switch to
another tab, closing the tab, or a blur that is never followed by a
focus on the same page. A blur/focus pause on the same page does not
split the visit; its dwell is the accumulated focused time only. Tab
branching therefore interleaves child-tab visits at their focus times,
and backtracking shows up as repeated URLs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import EmptySession
from .events import Behavior, EventKind, SessionEvent, normalize_url, session_label
from .vocab import NUM_MARKS, Vocabulary


@dataclass(frozen=True)
class ActionPath:
    """One session as the model sees it: (url_id, dwell seconds) pairs."""

    user_id: str
    session_id: str
    actions: tuple[tuple[int, float], ...]
    label: Behavior | None = None

    def __post_init__(self):
        for url_id, dwell in self.actions:
            if url_id < NUM_MARKS:
                raise ValueError(f"action url_id {url_id} is a reserved mark id")
            if not math.isfinite(dwell) or dwell < 0:
                raise ValueError(f"dwell {dwell!r} must be finite and >= 0")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def url_ids(self) -> tuple[int, ...]:
        return tuple(a[0] for a in self.actions)

    @property
    def dwells(self) -> tuple[float, ...]:
        return tuple(a[1] for a in self.actions)

    def to_json_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "session_id": self.session_id,
            "actions": [[i, d] for i, d in self.actions],
            "label": self.label.value if self.label else None,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ActionPath":
        return cls(
            user_id=obj["user_id"],
            session_id=obj["session_id"],
            actions=tuple((int(i), float(d)) for i, d in obj["actions"]),
            label=Behavior(obj["label"]) if obj.get("label") else None,
        )


@dataclass
class VisitSequence:
    """Linearized visits before vocabulary lookup: (url, dwell) pairs."""

    user_id: str
    session_id: str
    visits: list[tuple[str, float]]
    label: Behavior | None = None

    @property
    def urls(self) -> list[str]:
        return [u for u, _ in self.visits]


@dataclass
class _OpenVisit:
    tab: int
    url: str
    accumulated_ms: int = 0
    focus_start: int | None = None  # None while suspended by blur

    def suspend(self, ts: int) -> None:
        if self.focus_start is not None:
            self.accumulated_ms += ts - self.focus_start
            self.focus_start = None

    def dwell_at(self, ts: int) -> float:
        extra = ts - self.focus_start if self.focus_start is not None else 0
        return (self.accumulated_ms + extra) / 1000.0


@dataclass
class _FocusState:
    tabs: dict[int, str] = field(default_factory=dict)
    active_tab: int | None = None
    focused: bool = True
    visit: _OpenVisit | None = None
    visits: list[tuple[str, float]] = field(default_factory=list)

    def finalize(self, ts: int) -> None:
        if self.visit is not None:
            self.visits.append((self.visit.url, self.visit.dwell_at(ts)))
            self.visit = None

    def open(self, tab: int, ts: int) -> None:
        url = self.tabs.get(tab)
        if url is not None:
            self.visit = _OpenVisit(tab=tab, url=url, focus_start=ts)


def linearize_visits(events: list[SessionEvent]) -> VisitSequence:
    """Replay one session's events and extract the visit sequence.

    Events must be validated and in session order (the ingest contract).

    Raises:
        EmptySession: If the session yields no page visits.
    """
    if not events:
        raise EmptySession("no events")
    if not any(e.kind in (EventKind.NAV, EventKind.TAB_OPEN) for e in events):
        raise EmptySession(f"session {events[0].session_id!r} has no nav events")

    st = _FocusState()
    for ev in events:
        kind = ev.kind
        if kind is EventKind.NAV:
            url = normalize_url(ev.url)
            if st.active_tab is None:
                st.active_tab = ev.tab
            if ev.tab == st.active_tab:
                st.finalize(ev.ts)
                st.tabs[ev.tab] = url
                if st.focused:
                    st.open(ev.tab, ev.ts)
            else:
                st.tabs[ev.tab] = url
        elif kind is EventKind.TAB_OPEN:
            st.tabs[ev.tab] = normalize_url(ev.url)
        elif kind in (EventKind.TAB_SWITCH, EventKind.FOCUS):
            v = st.visit
            same_page = (
                v is not None
                and v.tab == ev.tab
                and st.tabs.get(ev.tab) == v.url
            )
            if same_page:
                if v.focus_start is None:
                    v.focus_start = ev.ts
            else:
                st.finalize(ev.ts)
                st.open(ev.tab, ev.ts)
            st.active_tab = ev.tab
            st.focused = True
        elif kind is EventKind.BLUR:
            if st.visit is not None:
                st.visit.suspend(ev.ts)
            st.focused = False
        elif kind is EventKind.TAB_CLOSE:
            if st.visit is not None and st.visit.tab == ev.tab:
                st.finalize(ev.ts)
            st.tabs.pop(ev.tab, None)
            if st.active_tab == ev.tab:
                st.active_tab = None

    st.finalize(events[-1].ts)

    if not st.visits:
        raise EmptySession(f"session {events[0].session_id!r} yields no visits")
    return VisitSequence(
        user_id=events[0].user_id,
        session_id=events[0].session_id,
        visits=st.visits,
        label=session_label(events),
    )


def linearize(events: list[SessionEvent], vocab: Vocabulary) -> ActionPath:
    """Linearize one session into an ActionPath over ``vocab`` ids."""
    seq = linearize_visits(events)
    actions = tuple((vocab.id_of(url), dwell) for url, dwell in seq.visits)
    return ActionPath(
        user_id=seq.user_id,
        session_id=seq.session_id,
        actions=actions,
        label=seq.label,
    )
