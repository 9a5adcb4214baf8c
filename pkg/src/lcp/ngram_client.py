"""HTTP client for a remote n-gram count service, with a persistent cache.

Protocol: GET <endpoint>?<query_param>=<phrase>, JSON response carrying a
match-count field. Endpoint, parameter name, and count field are all
configurable so any phrase-count service can back it. Counts are cached on
disk; offline mode answers from the cache only and never touches the
network.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import requests

logger = logging.getLogger(__name__)


@dataclass
class NgramClientConfig:
    endpoint: str = ""
    query_param: str = "query"
    count_field: str = "count"
    cache_path: Optional[str] = None
    min_interval_s: float = 0.0
    timeout_s: float = 10.0
    max_attempts: int = 3
    offline: bool = False


class RemoteNgramClient:
    """Looks up phrase counts remotely; ``lookup`` returns None on failure."""

    def __init__(self, config: NgramClientConfig, session: Optional[requests.Session] = None):
        self.config = config
        self.session = session or requests.Session()
        self._cache: dict[str, Optional[int]] = {}
        self._lock = threading.Lock()
        self._last_request = 0.0
        self.network_calls = 0
        if config.cache_path:
            self._load_cache(Path(config.cache_path))

    def _load_cache(self, path: Path) -> None:
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                phrase, _, count = line.rpartition("\t")
                if phrase:
                    self._cache[phrase] = int(count)

    def _append_cache(self, phrase: str, count: int) -> None:
        if not self.config.cache_path:
            return
        path = Path(self.config.cache_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(f"{phrase}\t{count}\n")

    def lookup(self, phrase: str) -> Optional[int]:
        with self._lock:
            if phrase in self._cache:
                return self._cache[phrase]
        if self.config.offline:
            return None
        count = self._fetch(phrase)
        if count is not None:
            with self._lock:
                self._cache[phrase] = count
                self._append_cache(phrase, count)
        return count

    def _fetch(self, phrase: str) -> Optional[int]:
        delay = 0.5
        for attempt in range(self.config.max_attempts):
            self._throttle()
            try:
                self.network_calls += 1
                resp = self.session.get(
                    self.config.endpoint,
                    params={self.config.query_param: phrase},
                    timeout=self.config.timeout_s,
                )
                if resp.status_code == 429:
                    logger.warning("n-gram service quota exceeded for %r", phrase)
                    return None
                resp.raise_for_status()
                payload = resp.json()
                return int(payload[self.config.count_field])
            except (requests.RequestException, KeyError, ValueError, TypeError) as exc:
                if attempt + 1 == self.config.max_attempts:
                    logger.warning(
                        "n-gram lookup failed for %r after %d attempts: %s",
                        phrase, self.config.max_attempts, exc,
                    )
                    return None
                time.sleep(delay)
                delay *= 2
        return None

    def _throttle(self) -> None:
        if self.config.min_interval_s <= 0:
            return
        with self._lock:
            wait = self.config.min_interval_s - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()
