"""Labeled synthetic browsing sessions for training and evaluation.

Each behavior class has a generative recipe built from the structural
patterns it tends to exhibit:

* targeted  - a handful of concentrated clusters (hub-and-cycle page
  neighborhoods entered through the hub) with occasional one-page
  detours that backtrack to the hub; short dwells, few actions.
* purposive - breadth stars (a results page branching into children via
  new tabs, returning to the results page between children) plus one
  cluster revisit; the most actions per session.
* explorative - one long forward chain of pages with no returns; the
  fewest actions but the longest dwells.

Page inventories are fixed per synthetic host, so sessions of the same
class share URLs and structure across the dataset; the composition of a
session (which clusters, how many children, chain length, dwells) is
drawn from the per-session seed. Everything is deterministic given
(params, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .events import Behavior, EventKind, SessionEvent, Transition

BASE_TS_MS = 1_767_225_600_000  # 2026-01-01T00:00:00Z
_N_USERS = 8
_CLUSTER_POOL = 4
_SEARCH_POOL = 3
_CHAIN_POOL = 3
_PAUSE_RATE = 0.15


@dataclass(frozen=True)
class BehaviorKnobs:
    n_clusters: int = 3
    cluster_depth: int = 3
    leaf_rate: float = 0.5
    ring_length: int = 14
    star_branching: int = 5
    action_count_range: tuple[int, int] = (10, 24)
    dwell_shape: float = 1.6
    dwell_scale: float = 2.5

    def __post_init__(self):
        if min(self.n_clusters, self.cluster_depth, self.ring_length, self.star_branching) < 0:
            raise InvalidParams("counts must be >= 0")
        if not 0.0 <= self.leaf_rate <= 1.0:
            raise InvalidParams("leaf_rate must be in [0, 1]")
        if self.dwell_shape <= 0 or self.dwell_scale <= 0:
            raise InvalidParams("Weibull shape and scale must be > 0")
        lo, hi = self.action_count_range
        if lo < 1 or hi < lo:
            raise InvalidParams("action_count_range must be a non-empty range")


@dataclass(frozen=True)
class GenParams:
    trg: BehaviorKnobs = field(
        default_factory=lambda: BehaviorKnobs(
            n_clusters=3, leaf_rate=0.6, action_count_range=(10, 24),
            dwell_shape=1.6, dwell_scale=2.5,
        )
    )
    pur: BehaviorKnobs = field(
        default_factory=lambda: BehaviorKnobs(
            n_clusters=1, star_branching=5, action_count_range=(18, 34),
            dwell_shape=1.6, dwell_scale=4.0, leaf_rate=0.3,
        )
    )
    exp: BehaviorKnobs = field(
        default_factory=lambda: BehaviorKnobs(
            ring_length=14, action_count_range=(8, 14),
            dwell_shape=1.8, dwell_scale=8.0, leaf_rate=0.0,
        )
    )
    site_count: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.site_count < 1:
            raise InvalidParams("site_count must be >= 1")

    def knobs_for(self, behavior: Behavior) -> BehaviorKnobs:
        return {Behavior.TRG: self.trg, Behavior.PUR: self.pur, Behavior.EXP: self.exp}[behavior]


def sample_dwells(rng: np.random.Generator, shape: float, scale: float, n: int) -> np.ndarray:
    """Raw Weibull dwell samples in seconds (mean scale * gamma(1 + 1/shape))."""
    if shape <= 0 or scale <= 0:
        raise InvalidParams("Weibull shape and scale must be > 0")
    return scale * rng.weibull(shape, size=n)


def weibull_mean(shape: float, scale: float) -> float:
    return scale * math.gamma(1.0 + 1.0 / shape)


def _host(h: int) -> str:
    return f"https://s{h}.example"


def _hub(h: int, j: int) -> str:
    return f"{_host(h)}/c{j}"


def _member(h: int, j: int, i: int) -> str:
    return f"{_host(h)}/c{j}/m{i}"


def _detour(h: int, j: int, i: int) -> str:
    return f"{_host(h)}/c{j}/x{i}"


def _search(h: int, j: int) -> str:
    return f"{_host(h)}/q{j}"


def _child(h: int, j: int, i: int) -> str:
    return f"{_host(h)}/q{j}/r{i}"


def _chain_page(h: int, j: int, i: int) -> str:
    return f"{_host(h)}/f{j}/p{i}"


class _EventWriter:
    """Emits a schema-valid event timeline for one session."""

    def __init__(
        self,
        session_id: str,
        user_id: str,
        label: Behavior,
        start_ts: int,
        rng: np.random.Generator,
        knobs: BehaviorKnobs,
    ):
        self.events: list[SessionEvent] = []
        self.t = start_ts
        self.rng = rng
        self.knobs = knobs
        self.meta = dict(session_id=session_id, user_id=user_id, label=label)
        self.active_tab = 0
        self.next_tab = 1
        self.visit_no = 0
        self.pause_at = (
            int(rng.integers(2, 8)) if rng.random() < _PAUSE_RATE else -1
        )

    def _emit(self, kind: EventKind, tab: int, **kw) -> None:
        self.events.append(SessionEvent(ts=self.t, tab=tab, kind=kind, **self.meta, **kw))

    def _dwell_s(self) -> float:
        d = float(self.knobs.dwell_scale * self.rng.weibull(self.knobs.dwell_shape))
        return min(max(d, 0.2), 120.0)

    def _stay(self) -> None:
        self.visit_no += 1
        d_ms = max(1, round(self._dwell_s() * 1000))
        if self.visit_no == self.pause_at:
            # blur/focus pause in the middle of the visit; dwell excludes it
            split = int(d_ms * float(self.rng.uniform(0.3, 0.7)))
            gap = int(self.rng.integers(2000, 8000))
            self.t += split
            self._emit(EventKind.BLUR, self.active_tab)
            self.t += gap
            self._emit(EventKind.FOCUS, self.active_tab)
            self.t += d_ms - split
        else:
            self.t += d_ms

    def nav(self, url: str, transition: Transition = Transition.LINK) -> None:
        self._emit(EventKind.NAV, self.active_tab, url=url, transition=transition)
        self._stay()

    def open_child(self, url: str) -> int:
        tab = self.next_tab
        self.next_tab += 1
        self._emit(EventKind.TAB_OPEN, tab, url=url, opener_tab=self.active_tab)
        self.t += 30
        self._emit(EventKind.TAB_SWITCH, tab)
        self.active_tab = tab
        self._stay()
        return tab

    def switch_to(self, tab: int) -> None:
        self._emit(EventKind.TAB_SWITCH, tab)
        self.active_tab = tab
        self._stay()

    def close_tab(self, tab: int) -> None:
        self._emit(EventKind.TAB_CLOSE, tab)
        self.t += 10

    def finish(self) -> list[SessionEvent]:
        self._emit(EventKind.BLUR, self.active_tab)
        return self.events


def _cluster_walk(w: _EventWriter, rng, h: int, j: int, first: bool, knobs: BehaviorKnobs) -> None:
    w.nav(_hub(h, j), Transition.TYPED if first else Transition.LINK)
    for i in range(1, knobs.cluster_depth + 1):
        w.nav(_member(h, j, i))
    w.nav(_hub(h, j), Transition.BACK_FORWARD)
    if rng.random() < knobs.leaf_rate:
        w.nav(_detour(h, j, int(rng.integers(1, 4))))
        w.nav(_hub(h, j), Transition.BACK_FORWARD)


def _gen_targeted(w: _EventWriter, rng, params: GenParams) -> None:
    knobs = params.trg
    k = int(rng.integers(2, max(knobs.n_clusters, 2) + 1))
    pool = [(h, j) for h in range(params.site_count) for j in range(_CLUSTER_POOL)]
    picks = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
    for idx, p in enumerate(picks):
        h, j = pool[int(p)]
        _cluster_walk(w, rng, h, j, first=(idx == 0), knobs=knobs)


def _gen_purposive(w: _EventWriter, rng, params: GenParams) -> None:
    # cluster revisit first, then the tab-branching stars: purposive
    # sessions start on known ground and fan out toward the end
    knobs = params.pur
    cl = [(h, j) for h in range(params.site_count) for j in range(_CLUSTER_POOL)]
    h, j = cl[int(rng.integers(0, len(cl)))]
    _cluster_walk(w, rng, h, j, first=True, knobs=knobs)
    pool = [(h, j) for h in range(params.site_count) for j in range(_SEARCH_POOL)]
    picks = rng.choice(len(pool), size=2, replace=False)
    for p in picks:
        h, j = pool[int(p)]
        w.nav(_search(h, j))
        b = int(rng.integers(3, knobs.star_branching + 1))
        for i in range(1, b + 1):
            tab = w.open_child(_child(h, j, i))
            w.switch_to(0)
            w.close_tab(tab)


def _gen_explorative(w: _EventWriter, rng, params: GenParams) -> None:
    knobs = params.exp
    h = int(rng.integers(0, params.site_count))
    j = int(rng.integers(0, _CHAIN_POOL))
    lo, hi = knobs.action_count_range
    length = int(rng.integers(lo, min(hi, knobs.ring_length) + 1))
    w.nav(_chain_page(h, j, 1), Transition.TYPED)
    for i in range(2, length + 1):
        w.nav(_chain_page(h, j, i))


_RECIPES = {
    Behavior.TRG: _gen_targeted,
    Behavior.PUR: _gen_purposive,
    Behavior.EXP: _gen_explorative,
}


def gen_session(
    behavior: Behavior,
    params: GenParams,
    seed: int | None = None,
    session_id: str | None = None,
    user_id: str | None = None,
    start_ts: int = BASE_TS_MS,
) -> list[SessionEvent]:
    """One labeled synthetic session as a schema-valid event list."""
    if seed is None:
        seed = params.seed
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    sid = session_id or f"{behavior.value.lower()}-{seed:08d}"
    uid = user_id or f"u{seed % _N_USERS:02d}"
    w = _EventWriter(sid, uid, behavior, start_ts, rng, params.knobs_for(behavior))
    _RECIPES[behavior](w, rng, params)
    return w.finish()


_CLASS_ORDER = (Behavior.TRG, Behavior.PUR, Behavior.EXP)
_SPLITS = ("train", "val", "test")


def _class_counts(total: int) -> dict[Behavior, int]:
    base, extra = divmod(total, len(_CLASS_ORDER))
    return {b: base + (1 if i < extra else 0) for i, b in enumerate(_CLASS_ORDER)}


@dataclass
class GenDataset:
    events: list[SessionEvent]
    manifest: dict

    def events_jsonl(self) -> str:
        import json

        return "".join(json.dumps(e.to_json_dict()) + "\n" for e in self.events)


def gen_dataset(
    counts: tuple[int, int, int],
    params: GenParams,
    seed: int | None = None,
    classes: tuple[Behavior, ...] = _CLASS_ORDER,
) -> GenDataset:
    """Class-balanced train/val/test dataset with disjoint session ids."""
    if seed is None:
        seed = params.seed
    if len(counts) != 3 or min(counts) < 1:
        raise InvalidParams("counts must be three positive split sizes")
    events: list[SessionEvent] = []
    splits: dict[str, list[str]] = {s: [] for s in _SPLITS}
    labels: dict[str, str] = {}
    idx = 0
    for split, total in zip(_SPLITS, counts):
        per_class = _class_counts(total)
        for behavior in classes:
            for i in range(per_class.get(behavior, 0)):
                sid = f"{split}-{behavior.value.lower()}-{i:03d}"
                uid = f"u{idx % _N_USERS:02d}"
                child_seed = int(
                    np.random.SeedSequence([seed, idx]).generate_state(1)[0]
                )
                events.extend(
                    gen_session(
                        behavior,
                        params,
                        seed=child_seed,
                        session_id=sid,
                        user_id=uid,
                        start_ts=BASE_TS_MS + idx * 3_600_000,
                    )
                )
                splits[split].append(sid)
                labels[sid] = behavior.value
                idx += 1
    manifest = {
        "seed": seed,
        "site_count": params.site_count,
        "splits": splits,
        "labels": labels,
    }
    return GenDataset(events=events, manifest=manifest)
