"""URL vocabulary with reserved mark tokens at fixed low indices."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable

from .errors import IndexOutOfRange

# Reserved marks occupy indices 0-6 in every vocabulary; real URLs start
# at NUM_MARKS. The fixed layout keeps serialized models stable.
PAD = 0
SOA = 1
COI = 2
SOP = 3
EOA_TRG = 4
EOA_PUR = 5
EOA_EXP = 6

MARK_NAMES = ("PAD", "SOA", "COI", "SOP", "EOA_TRG", "EOA_PUR", "EOA_EXP")
NUM_MARKS = len(MARK_NAMES)
EOA_MARKS = (EOA_TRG, EOA_PUR, EOA_EXP)

_LABEL_TO_EOA = {"TRG": EOA_TRG, "PUR": EOA_PUR, "EXP": EOA_EXP}


def eoa_id_for(label) -> int:
    """Mark id of the typed end-of-action token for a behavior label."""
    return _LABEL_TO_EOA[getattr(label, "value", label)]


def is_mark(token_id: int) -> bool:
    return 0 <= token_id < NUM_MARKS


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between normalized URLs and integer ids.

    ``urls[i]`` has id ``NUM_MARKS + i``; ids below NUM_MARKS are marks.
    """

    urls: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.urls)) != len(self.urls):
            raise ValueError("duplicate URLs in vocabulary")
        object.__setattr__(
            self,
            "_index",
            {u: NUM_MARKS + i for i, u in enumerate(self.urls)},
        )

    def __len__(self) -> int:
        return NUM_MARKS + len(self.urls)

    def id_of(self, url: str) -> int:
        try:
            return self._index[url]
        except KeyError:
            raise IndexOutOfRange(f"URL not in vocabulary: {url!r}")

    def url_of(self, token_id: int) -> str:
        """Name of a token: URL for real ids, mark name for mark ids."""
        if 0 <= token_id < NUM_MARKS:
            return MARK_NAMES[token_id]
        idx = token_id - NUM_MARKS
        if 0 <= idx < len(self.urls):
            return self.urls[idx]
        raise IndexOutOfRange(f"id {token_id} outside vocabulary of {len(self)}")

    def __contains__(self, url: str) -> bool:
        return url in self._index

    def to_json_dict(self) -> dict:
        return {"marks": list(MARK_NAMES), "urls": list(self.urls)}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Vocabulary":
        if tuple(obj.get("marks", ())) != MARK_NAMES:
            raise ValueError("vocabulary file has unexpected mark table")
        return cls(urls=tuple(obj["urls"]))

    def save(self, fp: IO[str]) -> None:
        json.dump(self.to_json_dict(), fp, indent=2)
        fp.write("\n")

    @classmethod
    def load(cls, fp: IO[str]) -> "Vocabulary":
        return cls.from_json_dict(json.load(fp))


def build_vocabulary(url_sequences: Iterable[Iterable[str]]) -> Vocabulary:
    """Deterministic vocabulary over already-normalized URL sequences.

    URLs are sorted lexicographically and numbered from NUM_MARKS, so the
    same corpus always produces the same id assignment.
    """
    seen: set[str] = set()
    for seq in url_sequences:
        seen.update(seq)
    return Vocabulary(urls=tuple(sorted(seen)))
