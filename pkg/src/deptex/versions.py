"""Version parsing and ordering for dependency matching.

Semantic versions compare by the standard numeric-then-prerelease rule.
Anything that does not parse as semver falls back to plain lexicographic
comparison on the raw string, with a one-time parser warning per string.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import lru_cache

logger = logging.getLogger(__name__)

_SEMVER_RE = re.compile(
    r"^v?(?P<major>0|[1-9]\d*)\.(?P<minor>0|[1-9]\d*)\.(?P<patch>0|[1-9]\d*)"
    r"(?:-(?P<pre>[0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*))?"
    r"(?:\+[0-9A-Za-z-]+(?:\.[0-9A-Za-z-]+)*)?$"
)


@dataclass(frozen=True)
class Version:
    raw: str
    release: tuple[int, int, int] | None = None
    prerelease: tuple[str, ...] = ()

    @property
    def is_semver(self) -> bool:
        return self.release is not None


@lru_cache(maxsize=4096)
def parse_version(raw: str) -> Version:
    """Parse a version string; non-semver strings degrade to raw-comparable."""
    m = _SEMVER_RE.match(raw.strip())
    if not m:
        logger.warning("version %r is not semver, falling back to lexicographic ordering", raw)
        return Version(raw=raw)
    return Version(
        raw=raw,
        release=(int(m.group("major")), int(m.group("minor")), int(m.group("patch"))),
        prerelease=tuple(m.group("pre").split(".")) if m.group("pre") else (),
    )


def _compare_prerelease(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    # A release (no prerelease) sorts after any prerelease of the same triple.
    if not a and not b:
        return 0
    if not a:
        return 1
    if not b:
        return -1
    for ia, ib in zip(a, b):
        na, nb = ia.isdigit(), ib.isdigit()
        if na and nb:
            if int(ia) != int(ib):
                return -1 if int(ia) < int(ib) else 1
        elif na != nb:
            # numeric identifiers sort before alphanumeric ones
            return -1 if na else 1
        elif ia != ib:
            return -1 if ia < ib else 1
    if len(a) != len(b):
        return -1 if len(a) < len(b) else 1
    return 0


def compare_versions(a: str, b: str) -> int:
    """Three-way compare; returns -1, 0 or 1."""
    va, vb = parse_version(a), parse_version(b)
    if va.is_semver and vb.is_semver:
        if va.release != vb.release:
            return -1 if va.release < vb.release else 1
        return _compare_prerelease(va.prerelease, vb.prerelease)
    if va.raw == vb.raw:
        return 0
    return -1 if va.raw < vb.raw else 1
