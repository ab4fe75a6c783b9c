"""In-memory advertisement repository with an exact-match filter index.

Each write builds a new immutable state object and publishes it with a single
reference assignment, so a reader that grabs :meth:`Repository.snapshot_state`
sees one consistent repository for the whole of its query, never a broker
half-replaced.
"""

from __future__ import annotations

import os
import tempfile
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import StorageError, UnknownFilterName
from .model import FILTER_VOCABULARY, SearchFilter, ServiceAdvertisement
from .records import read_records, write_records

Posting = tuple[str, str]


@dataclass(frozen=True)
class RepositoryState:
    """One immutable version of the repository contents."""

    version: int = 0
    ads: Mapping[str, ServiceAdvertisement] = field(default_factory=dict)
    by_broker: Mapping[str, frozenset[str]] = field(default_factory=dict)
    postings: Mapping[Posting, frozenset[str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.ads)


@dataclass
class RetrievalStats:
    index_lookups: int = 0
    candidates: int = 0


def _with_broker(state: RepositoryState, broker_id: str, batch: Sequence[ServiceAdvertisement]) -> RepositoryState:
    old_ids = state.by_broker.get(broker_id, frozenset())
    new_by_id = {ad.id: ad for ad in batch}
    ads = dict(state.ads)
    for ad_id in old_ids:
        del ads[ad_id]
    ads.update(new_by_id)

    touched: dict[Posting, set[str]] = {}

    def bucket(key: Posting) -> set[str]:
        if key not in touched:
            touched[key] = set(state.postings.get(key, ()))
        return touched[key]

    for ad_id in old_ids:
        for item in state.ads[ad_id].filter_attributes.items():
            bucket(item).discard(ad_id)
    for ad in batch:
        for item in ad.filter_attributes.items():
            bucket(item).add(ad.id)

    postings = dict(state.postings)
    for key, ids in touched.items():
        if ids:
            postings[key] = frozenset(ids)
        else:
            postings.pop(key, None)

    by_broker = dict(state.by_broker)
    if new_by_id:
        by_broker[broker_id] = frozenset(new_by_id)
    else:
        by_broker.pop(broker_id, None)
    return RepositoryState(state.version + 1, ads, by_broker, postings)


class Repository:
    """Thread-safe store; many concurrent readers, serialized writers.

    With ``path`` set, every write is persisted by atomically replacing the
    store file; if persisting fails the in-memory state is left untouched.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        filter_vocabulary: Iterable[str] = FILTER_VOCABULARY,
    ) -> None:
        self.path = Path(path) if path is not None else None
        self.filter_vocabulary = frozenset(filter_vocabulary)
        self._state = RepositoryState()
        self._write_lock = threading.Lock()

    @classmethod
    def from_state(cls, state: RepositoryState, filter_vocabulary: Iterable[str] = FILTER_VOCABULARY) -> Repository:
        """An unpersisted repository holding a previously captured state."""
        repo = cls(None, filter_vocabulary)
        repo._state = state
        return repo

    # -- reading ------------------------------------------------------------

    def snapshot_state(self) -> RepositoryState:
        return self._state

    def __len__(self) -> int:
        return len(self._state)

    @property
    def version(self) -> int:
        return self._state.version

    def broker_ids(self) -> list[str]:
        return sorted(self._state.by_broker)

    def get(self, ad_id: str) -> ServiceAdvertisement | None:
        return self._state.ads.get(ad_id)

    def all(self) -> list[ServiceAdvertisement]:
        state = self._state
        return [state.ads[i] for i in sorted(state.ads)]

    def check_filters(self, filters: Iterable[SearchFilter]) -> None:
        for f in filters:
            if f.name not in self.filter_vocabulary:
                raise UnknownFilterName(f.name)

    def retrieve(
        self,
        filters: Sequence[SearchFilter] = (),
        targets: Sequence[str] = (),
        *,
        state: RepositoryState | None = None,
        stats: RetrievalStats | None = None,
    ) -> list[ServiceAdvertisement]:
        """Advertisements satisfying every filter, ordered by id.

        Filters are ANDed and compared by exact string equality. A non-empty
        ``targets`` restricts results to those source brokers.
        """
        self.check_filters(filters)
        state = state or self._state
        stats = stats if stats is not None else RetrievalStats()
        ids: set[str] | None = None
        for f in filters:
            stats.index_lookups += 1
            posting = state.postings.get((f.name, f.value), frozenset())
            ids = set(posting) if ids is None else ids & posting
            if not ids:
                break
        if targets:
            scoped: set[str] = set()
            for broker_id in set(targets):
                scoped |= state.by_broker.get(broker_id, frozenset())
            ids = scoped if ids is None else ids & scoped
        if ids is None:
            ids = set(state.ads)
        stats.candidates = len(ids)
        return [state.ads[i] for i in sorted(ids)]

    def stats(self) -> dict[str, dict[str, int]]:
        """Advertisement counts per source broker and per service type."""
        state = self._state
        per_broker = {b: len(ids) for b, ids in sorted(state.by_broker.items())}
        per_type: dict[str, int] = {}
        for ad in state.ads.values():
            per_type[ad.service_type.value] = per_type.get(ad.service_type.value, 0) + 1
        return {"brokers": per_broker, "serviceTypes": dict(sorted(per_type.items()))}

    # -- writing ------------------------------------------------------------

    def upsert_broker_batch(self, broker_id: str, advertisements: Sequence[ServiceAdvertisement]) -> None:
        """Replace everything sourced from ``broker_id`` with ``advertisements``.

        An advertisement whose content is unchanged keeps its stored
        harvest timestamp, so re-crawling an unchanged broker is a no-op on
        disk.
        """
        for ad in advertisements:
            if ad.source_broker_id != broker_id:
                raise ValueError(f"advertisement {ad.id} comes from {ad.source_broker_id}, not {broker_id}")
        with self._write_lock:
            state = self._state
            batch = []
            for ad in advertisements:
                old = state.ads.get(ad.id)
                if old is not None and old.same_content(ad):
                    ad = old
                batch.append(ad)
            new_state = _with_broker(state, broker_id, batch)
            if self.path is not None:
                self._persist(new_state)
            self._state = new_state

    def clear(self) -> None:
        with self._write_lock:
            new_state = RepositoryState(self._state.version + 1)
            if self.path is not None:
                self._persist(new_state)
            self._state = new_state

    # -- persistence --------------------------------------------------------

    def _persist(self, state: RepositoryState) -> None:
        assert self.path is not None
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                    write_records(fh, (state.ads[i] for i in sorted(state.ads)))
                os.replace(tmp, self.path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        except OSError as exc:
            raise StorageError(f"cannot write store {self.path}: {exc}") from exc

    def snapshot(self, path: str | Path | None = None) -> Path:
        """Write the current state to ``path`` (default: the store path)."""
        target = Path(path) if path is not None else self.path
        if target is None:
            raise StorageError("no store path configured")
        saved, self.path = self.path, target
        try:
            self._persist(self._state)
        finally:
            self.path = saved
        return target

    @classmethod
    def load(
        cls,
        path: str | Path,
        filter_vocabulary: Iterable[str] = FILTER_VOCABULARY,
        *,
        missing_ok: bool = False,
    ) -> Repository:
        """Open a store file; raises :class:`DecodeError` naming a corrupt line."""
        repo = cls(path, filter_vocabulary)
        p = Path(path)
        if not p.exists():
            if missing_ok:
                return repo
            raise StorageError(f"store not found: {p}")
        grouped: dict[str, list[ServiceAdvertisement]] = {}
        with open(p, encoding="utf-8", newline="\n") as fh:
            for ad in read_records(fh):
                grouped.setdefault(ad.source_broker_id, []).append(ad)
        state = RepositoryState()
        for broker_id in sorted(grouped):
            state = _with_broker(state, broker_id, grouped[broker_id])
        repo._state = replace(state, version=0)
        return repo
