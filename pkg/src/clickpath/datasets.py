"""File-level glue: dataset directories, path files, and manifests.

A dataset directory holds ``events.jsonl`` (the canonical session log)
and ``manifest.json`` mapping splits to session ids and session ids to
labels. Loading rebuilds the vocabulary deterministically from the log,
so any command given the same directory sees the same id assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyDataset
from .events import Behavior, ingest_events
from .paths import ActionPath, linearize_visits
from .synthgen import GenDataset
from .vocab import Vocabulary, build_vocabulary

EVENTS_FILE = "events.jsonl"
MANIFEST_FILE = "manifest.json"


def write_dataset(dataset: GenDataset, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / EVENTS_FILE
    manifest_path = out / MANIFEST_FILE
    events_path.write_text(dataset.events_jsonl(), encoding="utf-8")
    manifest_path.write_text(
        json.dumps(dataset.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {"events": events_path, "manifest": manifest_path}


@dataclass
class LoadedDataset:
    vocab: Vocabulary
    splits: dict[str, list[ActionPath]]
    by_session: dict[str, ActionPath]

    def split(self, name: str) -> list[ActionPath]:
        if name not in self.splits:
            raise EmptyDataset(f"no split {name!r} in manifest")
        return self.splits[name]


def load_dataset(data_dir: str | Path, tolerance_ms: int = 0) -> LoadedDataset:
    """Ingest, linearize, and id-map a dataset directory."""
    data_dir = Path(data_dir)
    manifest = json.loads((data_dir / MANIFEST_FILE).read_text(encoding="utf-8"))
    with open(data_dir / EVENTS_FILE, "rb") as fp:
        sessions = ingest_events(fp, tolerance_ms=tolerance_ms)

    ordered_ids = [sid for split in manifest["splits"].values() for sid in split]
    visit_seqs = {}
    for sid in ordered_ids:
        if sid not in sessions:
            raise EmptyDataset(f"manifest session {sid!r} missing from events log")
        visit_seqs[sid] = linearize_visits(sessions[sid])

    vocab = build_vocabulary(seq.urls for seq in visit_seqs.values())
    labels = manifest.get("labels", {})
    by_session: dict[str, ActionPath] = {}
    splits: dict[str, list[ActionPath]] = {}
    for split_name, sids in manifest["splits"].items():
        bucket = []
        for sid in sids:
            seq = visit_seqs[sid]
            label = Behavior(labels[sid]) if sid in labels else seq.label
            path = ActionPath(
                user_id=seq.user_id,
                session_id=sid,
                actions=tuple((vocab.id_of(u), d) for u, d in seq.visits),
                label=label,
            )
            bucket.append(path)
            by_session[sid] = path
        splits[split_name] = bucket
    return LoadedDataset(vocab=vocab, splits=splits, by_session=by_session)


def load_path_file(path_file: str | Path) -> ActionPath:
    obj = json.loads(Path(path_file).read_text(encoding="utf-8"))
    return ActionPath.from_json_dict(obj)


def write_path_file(path: ActionPath, out_file: str | Path) -> None:
    Path(out_file).write_text(
        json.dumps(path.to_json_dict()) + "\n", encoding="utf-8"
    )
