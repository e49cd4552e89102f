"""Session-event data model, URL normalization, and JSONL ingestion.

The session log is UTF-8 JSONL: one event object per line, fields named
exactly as in :class:`SessionEvent`. Unknown fields are ignored with a
warning; structural problems raise :class:`~clickpath.errors.SchemaViolation`
instead of being dropped silently.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .errors import MalformedUrl, OrderViolation, SchemaViolation


class EventKind(str, Enum):
    NAV = "nav"
    TAB_OPEN = "tab_open"
    TAB_SWITCH = "tab_switch"
    TAB_CLOSE = "tab_close"
    FOCUS = "focus"
    BLUR = "blur"


class Transition(str, Enum):
    LINK = "link"
    TYPED = "typed"
    BACK_FORWARD = "back_forward"
    RELOAD = "reload"
    OTHER = "other"


class Behavior(str, Enum):
    """The three browsing-behavior classes."""

    TRG = "TRG"
    PUR = "PUR"
    EXP = "EXP"


@dataclass(frozen=True)
class SessionEvent:
    """One observable browser event.

    ``url`` is present exactly for nav/tab_open events; ``opener_tab``
    only for tab_open; ``transition`` only for nav. ``label``, when
    present, must be constant across a session.
    """

    ts: int
    session_id: str
    user_id: str
    tab: int
    kind: EventKind
    url: str | None = None
    opener_tab: int | None = None
    transition: Transition | None = None
    label: Behavior | None = None

    def to_json_dict(self) -> dict:
        d: dict = {
            "ts": self.ts,
            "session_id": self.session_id,
            "user_id": self.user_id,
            "tab": self.tab,
            "kind": self.kind.value,
        }
        if self.url is not None:
            d["url"] = self.url
        if self.opener_tab is not None:
            d["opener_tab"] = self.opener_tab
        if self.transition is not None:
            d["transition"] = self.transition.value
        if self.label is not None:
            d["label"] = self.label.value
        return d


def normalize_url(raw: str) -> str:
    """Canonicalize an absolute URL.

    Lowercases scheme and host, strips the fragment, drops ``utm_*``
    query parameters, sorts the remaining query keys, and canonicalizes
    an empty path to "/".

    Raises:
        MalformedUrl: If ``raw`` is not a parseable absolute URL.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedUrl(f"empty or non-string URL: {raw!r}")
    try:
        parts = urlsplit(raw.strip())
    except ValueError as exc:
        raise MalformedUrl(f"{raw!r}: {exc}") from exc
    if not parts.scheme or not parts.netloc:
        raise MalformedUrl(f"{raw!r}: missing scheme or host")

    netloc = parts.netloc.lower()
    path = parts.path or "/"
    pairs = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not k.lower().startswith("utm_")
    ]
    pairs.sort(key=lambda kv: kv[0])
    query = urlencode(pairs)
    return urlunsplit((parts.scheme.lower(), netloc, path, query, ""))


_REQUIRED_FIELDS = ("ts", "session_id", "user_id", "tab", "kind")
_KNOWN_FIELDS = _REQUIRED_FIELDS + ("url", "opener_tab", "transition", "label")
_URL_KINDS = {EventKind.NAV, EventKind.TAB_OPEN}


def _parse_event(obj: dict, line_no: int) -> SessionEvent:
    for field in _REQUIRED_FIELDS:
        if field not in obj:
            raise SchemaViolation(line_no, field, "missing")

    unknown = sorted(set(obj) - set(_KNOWN_FIELDS))
    if unknown:
        warnings.warn(
            f"line {line_no}: ignoring unknown fields {unknown}", stacklevel=3
        )

    ts = obj["ts"]
    if not isinstance(ts, int) or isinstance(ts, bool) or ts <= 0:
        raise SchemaViolation(line_no, "ts", "must be a positive integer")
    for field in ("session_id", "user_id"):
        if not isinstance(obj[field], str) or not obj[field]:
            raise SchemaViolation(line_no, field, "must be a non-empty string")
    tab = obj["tab"]
    if not isinstance(tab, int) or isinstance(tab, bool) or tab < 0:
        raise SchemaViolation(line_no, "tab", "must be a non-negative integer")
    try:
        kind = EventKind(obj["kind"])
    except ValueError:
        raise SchemaViolation(line_no, "kind", f"unknown kind {obj['kind']!r}")

    url = obj.get("url")
    if kind in _URL_KINDS:
        if not isinstance(url, str) or not url:
            raise SchemaViolation(line_no, "url", f"required for {kind.value}")
    elif url is not None:
        raise SchemaViolation(line_no, "url", f"not allowed for {kind.value}")

    opener = obj.get("opener_tab")
    if opener is not None:
        if kind is not EventKind.TAB_OPEN:
            raise SchemaViolation(line_no, "opener_tab", "only valid for tab_open")
        if not isinstance(opener, int) or isinstance(opener, bool) or opener < 0:
            raise SchemaViolation(line_no, "opener_tab", "must be a non-negative integer")

    transition = None
    if obj.get("transition") is not None:
        try:
            transition = Transition(obj["transition"])
        except ValueError:
            raise SchemaViolation(line_no, "transition", f"unknown {obj['transition']!r}")
    elif kind is EventKind.NAV:
        raise SchemaViolation(line_no, "transition", "required for nav")

    label = None
    if obj.get("label") is not None:
        try:
            label = Behavior(obj["label"])
        except ValueError:
            raise SchemaViolation(line_no, "label", f"unknown label {obj['label']!r}")

    return SessionEvent(
        ts=ts,
        session_id=obj["session_id"],
        user_id=obj["user_id"],
        tab=tab,
        kind=kind,
        url=url,
        opener_tab=opener,
        transition=transition,
        label=label,
    )


def ingest_events(
    stream: IO[bytes] | IO[str] | Iterable[bytes | str],
    tolerance_ms: int = 0,
) -> dict[str, list[SessionEvent]]:
    """Parse, validate, and group a JSONL event stream by session id.

    Events keep file order; within a session the timestamp sequence must
    be non-decreasing up to ``tolerance_ms`` (a configurable slack for
    sloppy collector clocks; default 0).

    Returns:
        Mapping session_id -> events in file order, sessions keyed in
        first-appearance order.

    Raises:
        SchemaViolation: On any malformed line or field.
        OrderViolation: When a session's timestamps go backwards by more
            than ``tolerance_ms``.
    """
    sessions: dict[str, list[SessionEvent]] = {}
    labels: dict[str, Behavior] = {}
    seen_tabs: dict[str, set[int]] = {}

    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(line_no, "<line>", f"invalid JSON: {exc.msg}")
        if not isinstance(obj, dict):
            raise SchemaViolation(line_no, "<line>", "event must be a JSON object")

        ev = _parse_event(obj, line_no)
        bucket = sessions.setdefault(ev.session_id, [])
        tabs = seen_tabs.setdefault(ev.session_id, set())

        if bucket and ev.ts < bucket[-1].ts - tolerance_ms:
            raise OrderViolation(
                line_no,
                ev.session_id,
                f"ts {ev.ts} < previous {bucket[-1].ts} (tolerance {tolerance_ms} ms)",
            )
        if ev.opener_tab is not None and ev.opener_tab not in tabs:
            raise SchemaViolation(
                line_no, "opener_tab", f"tab {ev.opener_tab} not previously seen"
            )
        if ev.label is not None:
            prior = labels.get(ev.session_id)
            if prior is not None and prior is not ev.label:
                raise SchemaViolation(
                    line_no, "label", f"changed from {prior.value} to {ev.label.value}"
                )
            labels[ev.session_id] = ev.label

        bucket.append(ev)
        tabs.add(ev.tab)

    return sessions


def session_label(events: list[SessionEvent]) -> Behavior | None:
    """The session's behavior label, or None if no event carries one."""
    for ev in events:
        if ev.label is not None:
            return ev.label
    return None
