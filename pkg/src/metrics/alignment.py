"""Unit-cost Levenshtein alignment with a deterministic backtrace."""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np


class EditOp(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "sub"
    DELETE = "del"
    INSERT = "ins"


@dataclass(frozen=True)
class AlignedOp:
    op: EditOp
    ref_index: Optional[int]
    hyp_index: Optional[int]

    @property
    def consumes_ref(self) -> bool:
        return self.op != EditOp.INSERT


@dataclass(frozen=True)
class EditAlignment:
    distance: int
    ops: Tuple[AlignedOp, ...]

    def count(self, op: EditOp) -> int:
        return sum(1 for a in self.ops if a.op == op)

    def project(self, ref_len: int, hyp_len: int) -> List[int]:
        """Map each reference boundary position 0..ref_len to a hypothesis position.

        A reference position maps to the hypothesis position current when its
        token is consumed, so inserted tokens attach to the preceding reference
        token. Position 0 always maps to 0 and ref_len to hyp_len.
        """
        proj = [0] * (ref_len + 1)
        j = 0
        for a in self.ops:
            if a.consumes_ref:
                proj[a.ref_index] = j
            if a.op != EditOp.DELETE:
                j += 1
        proj[0] = 0
        proj[ref_len] = hyp_len
        return proj


def edit_distance(ref: Sequence, hyp: Sequence) -> EditAlignment:
    """Minimal edit distance plus one alignment.

    Backtrace ties prefer Match, then Substitute, then Delete, then Insert.
    """
    ref, hyp = list(ref), list(hyp)
    n, m = len(ref), len(hyp)
    d = np.zeros((n + 1, m + 1), dtype=np.int64)
    d[:, 0] = np.arange(n + 1)
    d[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            d[i, j] = min(d[i - 1, j - 1] + cost, d[i - 1, j] + 1, d[i, j - 1] + 1)

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        here = d[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == d[i - 1, j - 1]:
            ops.append(AlignedOp(EditOp.MATCH, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and here == d[i - 1, j - 1] + 1:
            ops.append(AlignedOp(EditOp.SUBSTITUTE, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and here == d[i - 1, j] + 1:
            ops.append(AlignedOp(EditOp.DELETE, i - 1, None))
            i -= 1
        else:
            ops.append(AlignedOp(EditOp.INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return EditAlignment(distance=int(d[n, m]), ops=tuple(ops))
