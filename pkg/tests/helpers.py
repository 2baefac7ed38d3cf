"""Shared test oracles: exhaustive contraction-tree search, random diagrams."""

import itertools
import math

import numpy as np

from ttspectral import planner as pl


def brute_force_min_cost(diagram):
    """Enumerate every binary contraction tree and return the minimal cost."""
    n = len(diagram.nodes)
    sizes = diagram.axis_sizes
    node_mask = []
    for ids in diagram.node_axis_ids:
        m = 0
        for a in ids:
            m |= 1 << a
        node_mask.append(m)

    def mask_prod(mask):
        p, i = 1, 0
        while mask:
            if mask & 1:
                p *= sizes[i]
            mask >>= 1
            i += 1
        return p

    diag = {i for i, nd in enumerate(diagram.nodes) if nd.diagonal}
    best = [math.inf]

    def rec(items, acc):
        if len(items) == 1:
            best[0] = min(best[0], acc)
            return
        if acc >= best[0]:
            return
        for i, j in itertools.combinations(range(len(items)), 2):
            (la, oa), (lb, ob) = items[i], items[j]
            shared = oa & ob
            if shared and (
                (len(la) == 1 and next(iter(la)) in diag)
                or (len(lb) == 1 and next(iter(lb)) in diag)
            ):
                c = mask_prod(oa ^ ob)
            else:
                c = 2 * mask_prod(oa | ob)
            rest = [items[k] for k in range(len(items)) if k not in (i, j)]
            rest.append((la | lb, oa ^ ob))
            rec(rest, acc + c)

    rec([(frozenset({i}), node_mask[i]) for i in range(n)], 0)
    return best[0]


def random_chain_diagram(rng, n_nodes, with_diagonal=False):
    """A random connected diagram: a chain plus random extra open legs."""
    nodes = []
    edges = []
    sizes = [int(rng.integers(1, 5)) for _ in range(n_nodes - 1)]
    for i in range(n_nodes):
        dims = []
        if i > 0:
            dims.append(sizes[i - 1])
        if i < n_nodes - 1:
            dims.append(sizes[i])
        for _ in range(int(rng.integers(0, 2)) + (not dims)):
            dims.append(int(rng.integers(1, 5)))
        nodes.append(pl.DiagramNode(tuple(dims)))
    if with_diagonal and n_nodes >= 3:
        k = int(rng.integers(1, n_nodes - 1))
        size = sizes[k - 1]
        sizes[k] = size
        nodes[k] = pl.DiagramNode((size, size), diagonal=True)
        dims = list(nodes[k + 1].dims)
        dims[0] = size
        nodes[k + 1] = pl.DiagramNode(tuple(dims), nodes[k + 1].diagonal)
    for i in range(n_nodes - 1):
        left_axis = 1 if i > 0 else 0
        edges.append((i, left_axis, i + 1, 0))
    taken = {(a, b) for e in edges for a, b in ((e[0], e[1]), (e[2], e[3]))}
    output = [
        (i, a)
        for i, node in enumerate(nodes)
        for a in range(len(node.dims))
        if (i, a) not in taken
    ]
    return pl.TensorDiagram(nodes, edges, output)


def one_shot_einsum(diagram, data):
    """Single-expression contraction of a whole diagram (dense oracle)."""
    operands = []
    for i, node in enumerate(diagram.nodes):
        arr = np.asarray(data[i], dtype=np.float64)
        if node.diagonal:
            arr = np.diag(arr)
        operands.append(arr)
        operands.append(list(diagram.node_axis_ids[i]))
    operands.append(list(diagram.output_axis_ids))
    return np.einsum(*operands, optimize=True)


def unit_top_target(shape, seed):
    """Standard-normal matrix rescaled so its top singular value is 1."""
    from ttspectral.dense import svd_full

    rng = np.random.default_rng(seed)
    t = rng.standard_normal(shape)
    return t / svd_full(t)[1][0]
