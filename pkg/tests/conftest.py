"""Shared fixtures and event-construction helpers."""

from __future__ import annotations

import json

import pytest

from clickpath.events import Behavior, EventKind, SessionEvent, Transition


def ev(
    ts: int,
    kind: str,
    tab: int = 0,
    url: str | None = None,
    session_id: str = "s1",
    user_id: str = "u1",
    opener_tab: int | None = None,
    transition: str | None = None,
    label: str | None = None,
) -> SessionEvent:
    if kind == "nav" and transition is None:
        transition = "link"
    return SessionEvent(
        ts=ts,
        session_id=session_id,
        user_id=user_id,
        tab=tab,
        kind=EventKind(kind),
        url=url,
        opener_tab=opener_tab,
        transition=Transition(transition) if transition else None,
        label=Behavior(label) if label else None,
    )


def jsonl(*objs: dict) -> bytes:
    return b"".join(json.dumps(o).encode() + b"\n" for o in objs)


def nav_obj(ts: int, url: str, tab: int = 0, **kw) -> dict:
    d = {
        "ts": ts,
        "session_id": kw.pop("session_id", "s1"),
        "user_id": kw.pop("user_id", "u1"),
        "tab": tab,
        "kind": "nav",
        "url": url,
        "transition": kw.pop("transition", "link"),
    }
    d.update(kw)
    return d


@pytest.fixture
def single_tab_session():
    """nav A at 1s, nav B at 11s, blur at 16s -> [(A, 10), (B, 5)]."""
    return [
        ev(1_000, "nav", url="https://a.example/"),
        ev(11_000, "nav", url="https://b.example/"),
        ev(16_000, "blur"),
    ]
