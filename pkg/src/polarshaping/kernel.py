"""Bit-level polar transform and a generic successive-cancellation list engine.

The engine decodes one combined word of ``n_levels * n_symbols`` bits, where
each level is an independent length-``n_symbols`` polar transform and levels
are visited in order (multistage scheduling).  Per-index behaviour is set by
an :class:`IndexPolicy`; soft information enters through per-level layer-0
LLR sources, so the same engine serves as shaping encoder, plain SCL decoder
and the modified decoder variants.

Everything is vectorized over a leading ``(batch, paths)`` axis pair: a batch
of independent instances (e.g. Monte-Carlo trials) sharing one policy runs in
lockstep, which is what makes large sweeps affordable in numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LLR_CLIP = 40.0

# IndexPolicy tags
FORCED = 0
BRANCH = 1
ARGMAX_RULE = 2


def _require_power_of_two(n: int) -> None:
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"block length must be a power of two >= 2, got {n}")


def bit_reversal_permutation(n_bits: int) -> np.ndarray:
    """Index permutation reversing the binary digits of 0..2**n_bits-1."""
    idx = np.arange(1 << n_bits)
    rev = np.zeros_like(idx)
    for b in range(n_bits):
        rev |= ((idx >> b) & 1) << (n_bits - 1 - b)
    return rev


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Polar transform x = u * G_N over GF(2), G_N = B_N * F^{(x)n}.

    Accepts any leading batch shape; the transform acts on the last axis.
    The operation is its own inverse.
    """
    u = np.asarray(u)
    N = u.shape[-1]
    _require_power_of_two(N)
    n = N.bit_length() - 1
    w = (u.astype(np.int8, copy=True) & 1)
    lead = w.shape[:-1]
    h = 1
    while h < N:
        blocks = w.reshape(lead + (N // (2 * h), 2, h))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        h *= 2
    return w[..., bit_reversal_permutation(n)]


def checknode(a, b):
    """Exact boxplus of two LLRs (upper-branch SC recursion)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    hard = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return hard + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def varnode(a, b, u):
    """Lower-branch SC recursion: b + (1-2u)*a for partial-sum bit u."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return b + (1.0 - 2.0 * np.asarray(u, dtype=np.float64)) * a


def log1pexp(t):
    """log(1 + exp(t)) without overflow."""
    t = np.asarray(t, dtype=np.float64)
    out = np.log1p(np.exp(-np.abs(t)))
    return out + np.maximum(t, 0.0)


def metric_update(pm, llr, u):
    """Exact path-metric step: pm + log(1 + exp(-(1-2u)*llr))."""
    z = (1.0 - 2.0 * np.asarray(u, dtype=np.float64)) * np.asarray(llr, dtype=np.float64)
    return np.asarray(pm, dtype=np.float64) + log1pexp(-z)


@dataclass
class IndexPolicy:
    """Per-combined-index bit policy for one engine run.

    kinds[j] is one of FORCED, BRANCH, ARGMAX_RULE; forced[j] holds the bit
    value used where kinds[j] == FORCED (ignored elsewhere).
    """

    kinds: np.ndarray
    forced: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.kinds = np.asarray(self.kinds, dtype=np.uint8)
        if self.forced is None:
            self.forced = np.zeros(self.kinds.shape[0], dtype=np.int8)
        self.forced = np.asarray(self.forced, dtype=np.int8)
        if self.forced.shape != self.kinds.shape:
            raise ValueError("forced values must match policy length")
        if not np.all(np.isin(self.kinds, (FORCED, BRANCH, ARGMAX_RULE))):
            raise ValueError("unknown policy tag")

    def __len__(self) -> int:
        return int(self.kinds.shape[0])


class _SoftTree:
    """SC recursion buffers for one soft-information source.

    Per-path state is kept minimal so that list pruning copies little:
    stage s of the LLR recursion holds only the currently active block
    (width N >> s, stage 0 = the full level input, stage n = the decision
    LLR), and partial sums keep only the pending left-sibling codeword per
    stage.  All arrays carry a leading (batch, paths) axis pair.
    """

    def __init__(self, batch: int, paths: int, n: int, size: int):
        self.n = n
        self.size = size
        self.rev = bit_reversal_permutation(n)
        # one contiguous buffer per dtype keeps path pruning to two gathers
        self.llr_buf = np.zeros((batch, paths, 2 * size - 1))
        self.bits_buf = np.zeros((batch, paths, 2 * size - 1), dtype=np.int8)
        self._make_views()

    def _make_views(self) -> None:
        self.llr = []
        off = 0
        for s in range(self.n + 1):
            width = self.size >> s
            self.llr.append(self.llr_buf[..., off:off + width])
            off += width
        self.sib = [None]
        off = 0
        for s in range(1, self.n + 1):
            width = self.size >> s
            self.sib.append(self.bits_buf[..., off:off + width])
            off += width
        self.level_cw = self.bits_buf[..., self.size - 1:]

    def reset_level(self, llr0: np.ndarray) -> None:
        # llr0 arrives in symbol (codeword) order; stage-0 position j belongs
        # to codeword position rev(j) of the bit-reversed transform.
        self.llr[0][...] = llr0[..., self.rev]

    def refresh(self, i: int) -> None:
        """Recompute the LLR stages needed before deciding leaf i."""
        n = self.n
        start_stage = 1 if i == 0 else n - ((i & -i).bit_length() - 1)
        for s in range(start_stage, n + 1):
            width = self.size >> s
            parent = self.llr[s - 1]
            a, b = parent[..., :width], parent[..., width:]
            if (i >> (n - s)) & 1 == 0:
                self.llr[s][...] = checknode(a, b)
            else:
                self.llr[s][...] = varnode(a, b, self.sib[s])

    def decision_llr(self, i: int) -> np.ndarray:
        return self.llr[self.n][..., 0]

    def set_leaf(self, i: int, u: np.ndarray) -> None:
        """Record decision for leaf i and propagate partial sums upward."""
        cw = np.asarray(u, dtype=np.int8)[..., None]
        s, blk = self.n, i
        while blk & 1 and s > 0:
            cw = np.concatenate([self.sib[s] ^ cw, cw], axis=-1)
            s -= 1
            blk >>= 1
        if s == 0:
            self.level_cw[...] = cw
        else:
            self.sib[s][...] = cw

    def level_codeword(self) -> np.ndarray:
        """Codeword bits of the completed level, in symbol order."""
        return self.level_cw[..., self.rev]

    def duplicate_paths(self) -> None:
        self.llr_buf = np.concatenate([self.llr_buf, self.llr_buf], axis=1)
        self.bits_buf = np.concatenate([self.bits_buf, self.bits_buf], axis=1)
        self._make_views()

    def take_paths(self, order: np.ndarray) -> None:
        # order has shape (batch, keep); gather along the path axis per batch row.
        b_idx = np.arange(order.shape[0])[:, None]
        self.llr_buf = self.llr_buf[b_idx, order]
        self.bits_buf = self.bits_buf[b_idx, order]
        self._make_views()


@dataclass
class SclResult:
    """Surviving paths of one engine run, sorted by ascending metric."""

    decisions: np.ndarray    # (batch, L, n_levels * n_symbols) int8
    metrics: np.ndarray      # (batch, L) float64
    level_bits: np.ndarray   # (batch, L, n_levels, n_symbols) codeword bits, symbol order
    decision_llrs: np.ndarray | None = None  # (batch, combined) when recorded


def scl_run_batch(
    metric_source,
    policy: IndexPolicy,
    list_size: int,
    *,
    n_symbols: int,
    n_levels: int,
    batch: int,
    forced: np.ndarray | None = None,
    rule_source=None,
    record_llrs: bool = False,
    clip: float = LLR_CLIP,
) -> SclResult:
    """Run the SC list engine over a batch of independent instances.

    metric_source / rule_source are callables ``(level, lower_bits) -> llrs``
    with lower_bits of shape (batch, paths, level, n_symbols) holding the
    codeword bits of already-completed levels in symbol order, returning
    layer-0 LLRs of shape (batch, paths, n_symbols).  Passing the same object
    as both sources shares one recursion tree.

    forced overrides the policy's forced bits per instance, shape
    (batch, combined_len).
    """
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    _require_power_of_two(n_symbols)
    n = n_symbols.bit_length() - 1
    combined = n_levels * n_symbols
    if len(policy) != combined:
        raise ValueError(f"policy covers {len(policy)} indices, expected {combined}")
    uses_rule = bool(np.any(policy.kinds == ARGMAX_RULE))
    if uses_rule and rule_source is None:
        raise ValueError("policy uses ARGMAX_RULE but no rule source is attached")
    if forced is None:
        forced = np.broadcast_to(policy.forced, (batch, combined))
    forced = np.asarray(forced, dtype=np.int8)
    if forced.shape != (batch, combined):
        raise ValueError(f"forced values must have shape {(batch, combined)}")

    share_rule = rule_source is metric_source
    metric_tree = _SoftTree(batch, 1, n, n_symbols)
    rule_tree = None
    if rule_source is not None and not share_rule:
        rule_tree = _SoftTree(batch, 1, n, n_symbols)

    decisions = np.zeros((batch, 1, combined), dtype=np.int8)
    metrics = np.zeros((batch, 1), dtype=np.float64)
    lower = np.zeros((batch, 1, n_levels, n_symbols), dtype=np.int8)
    recorded = np.zeros((batch, combined), dtype=np.float64) if record_llrs else None

    for j in range(combined):
        level, i = divmod(j, n_symbols)
        if i == 0:
            if level > 0:
                lower[..., level - 1, :] = metric_tree.level_codeword()
            llr0 = np.clip(metric_source(level, lower[..., :level, :]), -clip, clip)
            metric_tree.reset_level(llr0)
            if rule_tree is not None:
                rl0 = np.clip(rule_source(level, lower[..., :level, :]), -clip, clip)
                rule_tree.reset_level(rl0)

        metric_tree.refresh(i)
        if rule_tree is not None:
            rule_tree.refresh(i)
        dllr = metric_tree.decision_llr(i)
        if recorded is not None:
            recorded[:, j] = dllr[:, 0]

        kind = int(policy.kinds[j])
        if kind == FORCED:
            u = np.repeat(forced[:, None, j], dllr.shape[1], axis=1)
            metrics = metric_update(metrics, dllr, u)
        elif kind == ARGMAX_RULE:
            rllr = (metric_tree if rule_tree is None else rule_tree).decision_llr(i)
            u = (rllr < 0.0).astype(np.int8)  # tie at exactly 0 resolves to bit 0
            metrics = metric_update(metrics, dllr, u)
        else:  # BRANCH
            paths = dllr.shape[1]
            inc0 = log1pexp(-dllr)
            inc1 = log1pexp(dllr)
            both = np.concatenate([metrics + inc0, metrics + inc1], axis=1)
            if 2 * paths > list_size:
                # Stable sort over [all 0-children, all 1-children]: ties keep
                # the earlier-created path.  Children share the parent's tree
                # state at this instant, so one parent-indexed gather suffices.
                order = np.argsort(both, axis=1, kind="stable")[:, :list_size]
                b_idx = np.arange(batch)[:, None]
                parent = order % paths
                u = (order >= paths).astype(np.int8)
                metrics = both[b_idx, order]
                decisions = decisions[b_idx, parent]
                lower = lower[b_idx, parent]
                metric_tree.take_paths(parent)
                if rule_tree is not None:
                    rule_tree.take_paths(parent)
            else:
                metrics = both
                decisions = np.concatenate([decisions, decisions], axis=1)
                lower = np.concatenate([lower, lower], axis=1)
                metric_tree.duplicate_paths()
                if rule_tree is not None:
                    rule_tree.duplicate_paths()
                u = np.concatenate(
                    [np.zeros((batch, paths), np.int8), np.ones((batch, paths), np.int8)],
                    axis=1,
                )

        decisions[..., j] = u
        metric_tree.set_leaf(i, u)
        if rule_tree is not None:
            rule_tree.set_leaf(i, u)

    lower[..., n_levels - 1, :] = metric_tree.level_codeword()
    order = np.argsort(metrics, axis=1, kind="stable")
    b_idx = np.arange(batch)[:, None]
    return SclResult(
        decisions=decisions[b_idx, order],
        metrics=metrics[b_idx, order],
        level_bits=lower[b_idx, order],
        decision_llrs=recorded,
    )


def scl_run(
    metric_source,
    policy: IndexPolicy,
    list_size: int,
    *,
    n_symbols: int,
    n_levels: int = 1,
    rule_source=None,
    clip: float = LLR_CLIP,
) -> list[tuple[np.ndarray, float]]:
    """Single-instance engine run.

    Sources take ``(level, lower_bits)`` with lower_bits of shape
    (paths, level, n_symbols) and return (paths, n_symbols) LLRs.  Returns the
    surviving paths as (decisions, metric) pairs sorted by ascending metric.
    """

    def lift(src):
        if src is None:
            return None
        return lambda level, low: np.asarray(src(level, low[0]))[None, ...]

    lifted_metric = lift(metric_source)
    # Preserve identity so the engine keeps sharing one tree.
    lifted_rule = lifted_metric if rule_source is metric_source else lift(rule_source)
    res = scl_run_batch(
        lifted_metric,
        policy,
        list_size,
        n_symbols=n_symbols,
        n_levels=n_levels,
        batch=1,
        rule_source=lifted_rule,
        clip=clip,
    )
    return [(res.decisions[0, p], float(res.metrics[0, p])) for p in range(res.metrics.shape[1])]
