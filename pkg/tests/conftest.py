"""Shared helpers for the suite."""
from __future__ import annotations

from treedoc.nodes import Compound, Node, iter_with_paths


def find_error_paths(root: Node) -> list[tuple]:
    return [
        path
        for path, n in iter_with_paths(root)
        if isinstance(n, Compound) and n.label == "error"
    ]


def outside_matches(clean: Node, faulty: Node, region: tuple) -> bool:
    """True when every subtree of ``faulty`` outside the region equals its
    counterpart in ``clean``.  Children after the region index align from
    the tail, allowing the region to have absorbed clean-side siblings
    (environment recovery) without breaking containment."""
    if not region:
        return True
    if isinstance(clean, str) or isinstance(faulty, str):
        return False
    if clean.label != faulty.label:
        return False
    k = region[0]
    fc, cc = faulty.children, clean.children
    if k >= len(fc):
        return False
    if fc[:k] != cc[:k]:
        return False
    after = fc[k + 1 :]
    if len(cc) < k + 1 + len(after):
        return False
    if after and after != cc[len(cc) - len(after) :]:
        return False
    if len(region) == 1:
        return True
    return outside_matches(cc[k], fc[k], region[1:])
