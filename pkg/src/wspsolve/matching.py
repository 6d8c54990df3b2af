"""Authorisation test for complete patterns via bipartite matching.

A complete pattern is realisable by an authorised plan exactly when the
bipartite graph pairing its blocks with the users authorised for every
step of the block has a matching that covers all blocks.  The matcher
grows a matching one block at a time with augmenting paths; as soon as
one block admits no augmenting path the maximum matching can never
cover all blocks, so the search aborts immediately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .model import Plan, WorkflowInstance
    from .pattern import Pattern


@dataclass(frozen=True)
class PatternGraph:
    """Bipartite graph of blocks against users.

    ``labels[i]`` is the block label of left vertex i, ``block_steps[i]``
    its steps, and ``adjacency[i]`` a bitmask of the users authorised for
    every step of the block.
    """

    user_count: int
    labels: tuple[int, ...]
    block_steps: tuple[tuple[int, ...], ...]
    adjacency: tuple[int, ...]

    def users_for(self, label: int) -> frozenset[int]:
        i = self.labels.index(label)
        mask = self.adjacency[i]
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return frozenset(out)


def build_graph(instance: "WorkflowInstance", pattern: "Pattern") -> PatternGraph:
    """Build the block/user graph for a complete pattern.

    Reuses the pattern's cached block intersections when the pattern was
    constructed with authorisation masks, otherwise intersects the
    instance's per-step user sets directly.
    """
    if not pattern.is_complete:
        raise ValueError("pattern is not complete")
    labels = tuple(range(1, pattern.max_label + 1))
    blocks = tuple(pattern.block_steps(x) for x in labels)
    masks = []
    step_masks = instance.auth.step_user_masks
    for x, steps in zip(labels, blocks):
        try:
            mask = pattern.block_user_mask(x)
        except ValueError:
            mask = ~0
            for s in steps:
                mask &= step_masks[s]
        masks.append(mask)
    return PatternGraph(instance.user_count, labels, blocks, tuple(masks))


def match_blocks(adjacency: Sequence[int], order: Sequence[int]) -> list[int] | None:
    """Cover every left vertex with a matching, or report failure.

    ``adjacency[i]`` is the user bitmask of left vertex i; vertices are
    processed in ``order``.  Returns user indices per left vertex, or
    None as soon as some vertex has no augmenting path (at that point no
    matching can cover all vertices, so the remaining vertices are never
    examined).
    """
    user_of = [-1] * len(adjacency)
    owner: dict[int, int] = {}  # user -> left vertex currently matched
    matched_mask = 0

    def augment(i: int, visited: int) -> tuple[bool, int]:
        nonlocal matched_mask
        adj = adjacency[i]
        free = adj & ~matched_mask & ~visited
        if free:
            low = free & -free
            u = low.bit_length() - 1
            owner[u] = i
            user_of[i] = u
            matched_mask |= low
            return True, visited | low
        todo = adj & ~visited
        while todo:
            low = todo & -todo
            todo ^= low
            visited |= low
            u = low.bit_length() - 1
            ok, visited = augment(owner[u], visited)
            if ok:
                owner[u] = i
                user_of[i] = u
                return True, visited
        return False, visited

    for i in order:
        ok, _ = augment(i, 0)
        if not ok:
            return None
    return user_of


def find_full_matching(graph: PatternGraph) -> dict[int, int] | None:
    """Match every block to its own authorised user, if possible.

    Blocks are processed largest first (ties by label) so that the most
    constrained vertices fail early.  Returns a label -> user mapping
    covering every block, or None when no such matching exists.
    """
    order = sorted(
        range(len(graph.labels)),
        key=lambda i: (-len(graph.block_steps[i]), graph.labels[i]),
    )
    user_of = match_blocks(graph.adjacency, order)
    if user_of is None:
        return None
    return {label: user_of[i] for i, label in enumerate(graph.labels)}


def matching_to_plan(pattern: "Pattern", matching: dict[int, int]) -> "Plan":
    """Turn a block -> user matching into a plan on the pattern's steps."""
    plan: dict[int, int] = {}
    for label in range(1, pattern.max_label + 1):
        if label not in matching:
            raise ValueError(f"matching does not cover block {label}")
        u = matching[label]
        for s in pattern.block_steps(label):
            plan[s] = u
    return dict(sorted(plan.items()))
