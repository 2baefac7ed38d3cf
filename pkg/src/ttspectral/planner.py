"""Tensor diagrams and FLOP-optimal pairwise contraction plans.

A diagram is a set of tensor nodes whose axes are either joined pairwise by
edges (summed over) or left open (output dims).  A plan is an ordered binary
tree of pairwise contractions executing the diagram; its cost model charges
``2 * prod(distinct axis sizes across both operands)`` per step (one multiply
and one add per inner-product term), except that contracting a diagonal
matrix node is a pure scaling and costs only the size of its result.

The planner searches all binary contraction trees (including outer products)
by dynamic programming over node subsets, so the returned plan has minimal
total cost under the model; ties break toward the lexicographically smallest
step sequence.  Plans depend only on the diagram, not on bound data, and are
cached per diagram shape.

The two shipped diagram builders realize applying a parameterized map
``y = W x`` without decompressing ``W``: the plain four-node chain, and the
chain-of-cores form whose input is tensorized along the factored input
dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import householder as hh
from .errors import BindingError, CapacityError, DomainError, ShapeError
from .spectral import materialize_sigma
from .sttp import SttpParams, assemble_sttp, core_specs, decode_cores
from .svdp import SvdpParams, assemble

__all__ = [
    "DiagramNode",
    "TensorDiagram",
    "PlanStep",
    "ContractionPlan",
    "step_cost",
    "plan",
    "execute",
    "svdp_diagram",
    "sttp_diagram",
    "naive_flops",
    "apply_map",
    "decompress",
]

MAX_NODES = 16


@dataclass(frozen=True)
class DiagramNode:
    """One tensor in a diagram; diagonal nodes are square diagonal matrices."""

    dims: tuple[int, ...]
    diagonal: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.dims or any(d < 1 for d in self.dims):
            raise ShapeError(f"node dims must be positive, got {self.dims}")
        if self.diagonal and (len(self.dims) != 2 or self.dims[0] != self.dims[1]):
            raise ShapeError("diagonal nodes must be square matrices")


class TensorDiagram:
    """Nodes, pairwise edges, and the declared output-leg order.

    ``edges`` are ``(node_a, axis_a, node_b, axis_b)`` with matching sizes;
    each axis joins at most one edge.  Every axis not on an edge must appear
    exactly once in ``output_legs``, whose order fixes the output dims.  The
    diagram must be connected.
    """

    def __init__(self, nodes, edges, output_legs):
        self.nodes: tuple[DiagramNode, ...] = tuple(nodes)
        self.edges: tuple[tuple[int, int, int, int], ...] = tuple(
            tuple(int(v) for v in e) for e in edges
        )
        self.output_legs: tuple[tuple[int, int], ...] = tuple(
            (int(n), int(a)) for n, a in output_legs
        )
        self._validate()
        self._assign_axes()

    def _validate(self):
        n = len(self.nodes)
        if n == 0:
            raise ShapeError("diagram has no nodes")
        seen: set[tuple[int, int]] = set()
        for na, aa, nb, ab in self.edges:
            for node, axis in ((na, aa), (nb, ab)):
                if not (0 <= node < n and 0 <= axis < len(self.nodes[node].dims)):
                    raise ShapeError(f"edge endpoint ({node}, {axis}) out of range")
                if (node, axis) in seen:
                    raise ShapeError(
                        f"axis ({node}, {axis}) participates in more than one edge"
                    )
                seen.add((node, axis))
            if self.nodes[na].dims[aa] != self.nodes[nb].dims[ab]:
                raise ShapeError(
                    f"edge ({na},{aa})-({nb},{ab}) joins unequal sizes "
                    f"{self.nodes[na].dims[aa]} != {self.nodes[nb].dims[ab]}"
                )
        open_expected = {
            (i, a)
            for i, node in enumerate(self.nodes)
            for a in range(len(node.dims))
            if (i, a) not in seen
        }
        if set(self.output_legs) != open_expected or \
                len(self.output_legs) != len(open_expected):
            raise ShapeError(
                "output_legs must list each non-edge axis exactly once"
            )
        # connectivity
        adj = {i: set() for i in range(n)}
        for na, _, nb, _ in self.edges:
            adj[na].add(nb)
            adj[nb].add(na)
        frontier = {0}
        reached = set()
        while frontier:
            i = frontier.pop()
            reached.add(i)
            frontier |= adj[i] - reached
        if len(reached) != n:
            raise ShapeError("diagram is not connected")

    def _assign_axes(self):
        axis_of: dict[tuple[int, int], int] = {}
        sizes: list[int] = []
        for na, aa, nb, ab in self.edges:
            axis_of[(na, aa)] = axis_of[(nb, ab)] = len(sizes)
            sizes.append(self.nodes[na].dims[aa])
        for node, axis in self.output_legs:
            axis_of[(node, axis)] = len(sizes)
            sizes.append(self.nodes[node].dims[axis])
        self.axis_sizes: tuple[int, ...] = tuple(sizes)
        self.node_axis_ids: tuple[tuple[int, ...], ...] = tuple(
            tuple(axis_of[(i, a)] for a in range(len(node.dims)))
            for i, node in enumerate(self.nodes)
        )
        self.output_axis_ids: tuple[int, ...] = tuple(
            axis_of[leg] for leg in self.output_legs
        )

    @property
    def output_dims(self) -> tuple[int, ...]:
        return tuple(self.nodes[n].dims[a] for n, a in self.output_legs)

    def signature(self):
        return (
            tuple((node.dims, node.diagonal) for node in self.nodes),
            self.edges,
            self.output_legs,
        )


def step_cost(left_dims, right_dims, shared, left_diagonal: bool = False,
              right_diagonal: bool = False) -> int:
    """Multiply-add cost of one pairwise contraction.

    ``shared`` lists ``(left_axis, right_axis)`` pairs.  Generic steps cost
    ``2 * prod(distinct axis sizes)``; a step consuming a diagonal matrix
    node along at least one shared axis is a scaling and costs one multiply
    per element of its result.
    """
    left_dims = tuple(int(d) for d in left_dims)
    right_dims = tuple(int(d) for d in right_dims)
    shared = [(int(a), int(b)) for a, b in shared]
    for a, b in shared:
        if left_dims[a] != right_dims[b]:
            raise ShapeError(f"shared axes {a},{b} have unequal sizes")
    shared_right = {b for _, b in shared}
    distinct = math.prod(left_dims) * math.prod(
        d for i, d in enumerate(right_dims) if i not in shared_right
    )
    if (left_diagonal or right_diagonal) and shared:
        shared_prod = math.prod(left_dims[a] for a, _ in shared)
        return distinct // shared_prod
    return 2 * distinct


@dataclass(frozen=True)
class PlanStep:
    """One pairwise contraction: operands named by their leaf node sets."""

    left: tuple[int, ...]
    right: tuple[int, ...]
    result_dims: tuple[int, ...]
    flops: int
    result_axes: tuple[int, ...]
    scaling: bool


@dataclass(frozen=True)
class ContractionPlan:
    """Ordered contraction steps for a diagram, with cost accounting."""

    diagram: TensorDiagram
    steps: tuple[PlanStep, ...]
    total_flops: int
    peak_intermediate: int


_PLAN_CACHE: dict[tuple, ContractionPlan] = {}


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def plan(diagram: TensorDiagram) -> ContractionPlan:
    """FLOP-minimal contraction plan, exact over all binary trees.

    Dynamic programming over node subsets; cost ties resolve to the
    lexicographically smallest step sequence (operands keyed by their sorted
    leaf ids, left operand holding the smaller minimum).  Diagrams are
    capped at 16 nodes.
    """
    key = diagram.signature()
    cached = _PLAN_CACHE.get(key)
    if cached is not None:
        return cached

    n = len(diagram.nodes)
    if n > MAX_NODES:
        raise CapacityError(f"diagram has {n} nodes; planner caps at {MAX_NODES}")
    sizes = diagram.axis_sizes

    node_mask = []
    for ids in diagram.node_axis_ids:
        m = 0
        for aid in ids:
            m |= 1 << aid
        node_mask.append(m)

    prod_memo: dict[int, int] = {0: 1}

    def mask_prod(mask: int) -> int:
        got = prod_memo.get(mask)
        if got is None:
            low = mask & -mask
            got = sizes[low.bit_length() - 1] * mask_prod(mask ^ low)
            prod_memo[mask] = got
        return got

    full = (1 << n) - 1
    open_mask = [0] * (full + 1)
    cost = [0] * (full + 1)
    steps: list[tuple] = [()] * (full + 1)
    for i in range(n):
        open_mask[1 << i] = node_mask[i]
    diag_singletons = {
        1 << i for i, node in enumerate(diagram.nodes) if node.diagonal
    }

    for s in range(1, full + 1):
        low = s & (s - 1)
        if low:  # not a singleton: fill open mask incrementally
            open_mask[s] = open_mask[low] ^ open_mask[s & -s]
        if s.bit_count() < 2:
            continue
        best_cost = -1
        best_steps = None
        a = (s - 1) & s
        while a:
            b = s ^ a
            if a < b:
                oa, ob = open_mask[a], open_mask[b]
                shared = oa & ob
                if shared and (a in diag_singletons or b in diag_singletons):
                    c = mask_prod(oa ^ ob)
                else:
                    c = 2 * mask_prod(oa | ob)
                total = cost[a] + cost[b] + c
                if best_steps is None or total <= best_cost:
                    left, right = (a, b) if (a & -a) < (b & -b) else (b, a)
                    cand = steps[left] + steps[right] + (
                        (_bits(left), _bits(right)),
                    )
                    if (best_steps is None or total < best_cost
                            or cand < best_steps):
                        best_cost, best_steps = total, cand
            a = (a - 1) & s
        cost[s], steps[s] = best_cost, best_steps

    plan_steps = []
    peak = 0
    for left, right in steps[full]:
        amask = sum(1 << i for i in left)
        bmask = sum(1 << i for i in right)
        oa, ob = open_mask[amask], open_mask[bmask]
        shared = oa & ob
        scaling = bool(shared) and (amask in diag_singletons
                                    or bmask in diag_singletons)
        flops = mask_prod(oa ^ ob) if scaling else 2 * mask_prod(oa | ob)
        result_axes = _bits(oa ^ ob)
        result_dims = tuple(sizes[aid] for aid in result_axes)
        peak = max(peak, math.prod(result_dims))
        plan_steps.append(PlanStep(left, right, result_dims, flops,
                                   result_axes, scaling))
    result = ContractionPlan(diagram, tuple(plan_steps), cost[full], peak)
    _PLAN_CACHE[key] = result
    return result


def _canonical_binding(diagram: TensorDiagram, data) -> dict[int, np.ndarray]:
    arrays = {}
    for i, node in enumerate(diagram.nodes):
        if i not in data:
            raise BindingError(f"no data bound for node {i} ({node.name!r})")
        arr = np.asarray(data[i], dtype=np.float64)
        if node.diagonal:
            if arr.shape != (node.dims[0],):
                raise BindingError(
                    f"node {i} is diagonal; bind its diagonal vector of "
                    f"length {node.dims[0]}, got shape {arr.shape}"
                )
            arr = np.diag(arr)
        elif arr.shape != node.dims:
            raise BindingError(
                f"node {i} ({node.name!r}) expects shape {node.dims}, "
                f"got {arr.shape}"
            )
        arrays[i] = arr
    return arrays


def execute(cplan: ContractionPlan, data) -> np.ndarray:
    """Run a plan on bound node data; diagonal nodes bind their diagonals.

    ``data`` maps node index to an array of the node's declared dims.  The
    result carries the diagram's output legs in declared order.
    """
    diagram = cplan.diagram
    arrays = _canonical_binding(diagram, data)
    inter: dict[frozenset, tuple[np.ndarray, tuple[int, ...]]] = {
        frozenset({i}): (arr, diagram.node_axis_ids[i])
        for i, arr in arrays.items()
    }
    for step in cplan.steps:
        a, ia = inter.pop(frozenset(step.left))
        b, ib = inter.pop(frozenset(step.right))
        # compact axis labels for einsum
        labels = {aid: k for k, aid in enumerate(dict.fromkeys(ia + ib))}
        res = np.einsum(
            a, [labels[aid] for aid in ia],
            b, [labels[aid] for aid in ib],
            [labels[aid] for aid in step.result_axes],
        )
        inter[frozenset(step.left) | frozenset(step.right)] = (
            res, step.result_axes
        )
    (final, ids), = inter.values()
    perm = [ids.index(aid) for aid in diagram.output_axis_ids]
    if final.ndim == 0:
        return final
    return np.transpose(final, perm)


def svdp_diagram(d_out: int, d_in: int, r: int, d_x: int) -> TensorDiagram:
    """Four-node map diagram: frame, diagonal spectrum, frame, input."""
    nodes = [
        DiagramNode((d_out, r), name="u"),
        DiagramNode((r, r), diagonal=True, name="sigma"),
        DiagramNode((d_in, r), name="v"),
        DiagramNode((d_in, d_x), name="x"),
    ]
    edges = [(0, 1, 1, 0), (1, 1, 2, 1), (2, 0, 3, 0)]
    output = [(0, 0), (3, 1)]
    return TensorDiagram(nodes, edges, output)


def sttp_diagram(out_factors, in_factors, ranks, d_x: int) -> TensorDiagram:
    """Chain-of-cores map diagram with the input tensorized along d_in.

    ``ranks`` is the global schedule over (out factors, reversed in
    factors).  Node order: U cores outer-to-spectrum, the spectrum, V cores
    spectrum-to-outer, then the tensorized input.  Rank-1 end legs are
    dropped.
    """
    out_factors = tuple(int(v) for v in out_factors)
    in_factors = tuple(int(v) for v in in_factors)
    ranks = tuple(int(v) for v in ranks)
    d_out_len, d_in_len = len(out_factors), len(in_factors)
    if len(ranks) != d_out_len + d_in_len + 1:
        raise ShapeError("rank schedule length mismatch")
    r = ranks[d_out_len]
    # V-side local ranks, outer end first: rho_0=1, ..., rho_{D_in}=r
    rho = tuple(reversed(ranks[d_out_len:]))

    nodes = []
    edges = []
    output = []
    # U cores: ids 0..d_out_len-1; first core drops its rank-1 left leg
    for k in range(d_out_len):
        if k == 0:
            nodes.append(DiagramNode((out_factors[0], ranks[1]),
                                     name="u_core_1"))
            output.append((0, 0))
        else:
            nodes.append(DiagramNode((ranks[k], out_factors[k], ranks[k + 1]),
                                     name=f"u_core_{k + 1}"))
            edges.append((k - 1, 1 if k == 1 else 2, k, 0))
            output.append((k, 1))
    sigma_id = d_out_len
    nodes.append(DiagramNode((r, r), diagonal=True, name="sigma"))
    edges.append((sigma_id - 1, 1 if d_out_len == 1 else 2, sigma_id, 0))
    # V cores in global order: local j = D_in .. 1; ids sigma_id+1 ..
    x_id = sigma_id + d_in_len + 1
    for pos in range(d_in_len):
        j = d_in_len - pos  # local index, 1-based
        node_id = sigma_id + 1 + pos
        if j == 1:
            nodes.append(DiagramNode((in_factors[0], rho[1]),
                                     name="v_core_1"))
            rank_axis, n_axis = 1, 0
        else:
            nodes.append(DiagramNode((rho[j - 1], in_factors[j - 1], rho[j]),
                                     name=f"v_core_{j}"))
            rank_axis, n_axis = 2, 1
        if pos == 0:
            edges.append((sigma_id, 1, node_id, rank_axis))
        else:
            prev = node_id - 1
            prev_left_axis = 0
            edges.append((prev, prev_left_axis, node_id, rank_axis))
        edges.append((node_id, n_axis, x_id, j - 1))
    nodes.append(DiagramNode((*in_factors, d_x), name="x"))
    output.append((x_id, d_in_len))
    return TensorDiagram(nodes, edges, output)


def naive_flops(params, d_x: int) -> int:
    """Cost of decompressing the matrix first, then multiplying densely.

    For the chain scheme this includes composing both chains left to right;
    the final two factors are always scaling the cheaper frame by the
    spectrum (``r * min(d_out, d_in)``), the rank-r frame product
    (``2 r d_out d_in``), and the dense apply (``2 d_out d_in d_x``).
    """
    if isinstance(params, SvdpParams):
        d_out, d_in, r = params.d_out, params.d_in, params.r
        chain = 0
    elif isinstance(params, SttpParams):
        d_out, d_in, r = params.d_out, params.d_in, params.r
        chain = 0
        u_specs, v_specs = core_specs(params.out_fac, params.in_fac, params.r,
                                      params.spectrum.mode)
        for specs in (u_specs, v_specs):
            rows = specs[0].shape[1]
            for spec in specs[1:]:
                r_left, n, r_right = spec.shape
                chain += 2 * rows * r_left * n * r_right
                rows *= n
    else:
        raise DomainError(f"unsupported parameter type {type(params)!r}")
    return (chain + r * min(d_out, d_in) + 2 * r * d_out * d_in
            + 2 * d_out * d_in * d_x)


def decompress(params) -> np.ndarray:
    """Materialize the full matrix (reference path for apply_map)."""
    if isinstance(params, SvdpParams):
        return assemble(params)
    if isinstance(params, SttpParams):
        return assemble_sttp(params)
    raise DomainError(f"unsupported parameter type {type(params)!r}")


def apply_map(params, x: np.ndarray) -> np.ndarray:
    """Apply ``y = W x`` through the planned diagram, never forming W.

    ``x`` must be a d_in x d_x matrix.  The plan is FLOP-minimal for the
    bound shapes and cached per shape; the value equals the
    decompress-then-multiply path to floating-point accuracy.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("apply_map expects a d_in x d_x matrix")
    if x.shape[0] != params.d_in:
        raise ShapeError(
            f"input rows {x.shape[0]} != d_in = {params.d_in}"
        )
    d_x = x.shape[1]
    sigma = materialize_sigma(params.spectrum)
    if isinstance(params, SvdpParams):
        diagram = svdp_diagram(params.d_out, params.d_in, params.r, d_x)
        data = {
            0: hh.decode(params.u_layout),
            1: sigma,
            2: hh.decode(params.v_layout),
            3: x,
        }
        return execute(plan(diagram), data)
    if not isinstance(params, SttpParams):
        raise DomainError(f"unsupported parameter type {type(params)!r}")
    u_specs, v_specs = core_specs(params.out_fac, params.in_fac, params.r,
                                  params.spectrum.mode)
    u_cores = decode_cores(params.u_layouts, u_specs)
    v_cores = decode_cores(params.v_layouts, v_specs)
    diagram = sttp_diagram(params.out_fac.factors, params.in_fac.factors,
                           params.schedule.ranks, d_x)
    d_out_len, d_in_len = len(params.out_fac), len(params.in_fac)
    data = {0: u_cores[0].reshape(u_cores[0].shape[1:])}
    for k in range(1, d_out_len):
        data[k] = u_cores[k]
    data[d_out_len] = sigma
    for pos in range(d_in_len):
        j = d_in_len - pos  # local index of the core at this diagram slot
        core = v_cores[j - 1]
        data[d_out_len + 1 + pos] = core.reshape(core.shape[1:]) if j == 1 \
            else core
    data[d_out_len + d_in_len + 1] = x.reshape(*params.in_fac.factors, d_x)
    y = execute(plan(diagram), data)
    return y.reshape(params.d_out, d_x)
