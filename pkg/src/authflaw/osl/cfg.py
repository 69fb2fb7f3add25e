"""Per-function control-flow graphs over the labeled IR."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .ir import IRProgram

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Block:
    id: int
    function: str
    labels: tuple[int, ...]
    successors: tuple[int, ...]  # block ids


@dataclass(frozen=True)
class CFG:
    blocks: tuple[Block, ...]
    follow: tuple[tuple[int, int], ...]
    unreachable: tuple[int, ...]

    def blocks_of(self, function: str) -> list[Block]:
        return [b for b in self.blocks if b.function == function]

    def follow_facts(self) -> list[tuple[str, tuple[str, str]]]:
        return [("follow", (str(a), str(b))) for a, b in self.follow]


def build_cfg(ir: IRProgram) -> CFG:
    """Derive follow edges and basic blocks from IR successor links.

    ``follow(L1, L2)`` holds when ``L2`` can execute immediately after ``L1``:
    straight-line successors, branch targets and arm exits into the join.
    The two arms of a branch are never related by ``follow``.
    """
    follow: list[tuple[int, int]] = []
    blocks: list[Block] = []
    unreachable: list[int] = []
    for fn in ir.functions:
        instrs = [ir[label] for label in fn.labels]
        preds: dict[int, int] = {i.label: 0 for i in instrs}
        for ins in instrs:
            for s in ins.successors:
                follow.append((ins.label, s))
                preds[s] += 1

        leaders = {fn.entry}
        for ins in instrs:
            if ins.kind == "Branch" or len(ins.successors) != 1:
                leaders.update(ins.successors)
            for s in ins.successors:
                if preds[s] != 1:
                    leaders.add(s)
        # statements with no predecessor other than the entry start their own block
        leaders.update(label for label, n in preds.items() if n == 0)

        block_of: dict[int, int] = {}
        spans: list[list[int]] = []
        for ins in instrs:
            if ins.label in leaders or not spans:
                spans.append([])
            spans[-1].append(ins.label)
        base = len(blocks)
        for k, span in enumerate(spans):
            for label in span:
                block_of[label] = base + k
        for k, span in enumerate(spans):
            last = ir[span[-1]]
            succ = tuple(sorted({block_of[s] for s in last.successors}))
            blocks.append(Block(base + k, fn.name, tuple(span), succ))

        seen = {fn.entry}
        stack = [fn.entry]
        while stack:
            cur = stack.pop()
            for s in ir[cur].successors:
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        for ins in instrs:
            if ins.label not in seen:
                unreachable.append(ins.label)
                log.warning("unreachable instruction %s in %s (line %d)", ins.label, fn.name, ins.line)
    return CFG(tuple(blocks), tuple(sorted(follow)), tuple(unreachable))
