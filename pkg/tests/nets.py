"""Shared test networks, random generators, and independent oracles."""

import math

import numpy as np

from lineheat.network import (
    LinearNetwork,
    NetworkLocation,
    PointPattern,
    build_network,
)


def segment_network(length=1.0):
    return build_network([(0.0, 0.0), (length, 0.0)], [(0, 1)])


def triangle_network():
    # unit-side triangle
    return build_network(
        [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)], [(0, 1), (1, 2), (2, 0)]
    )


def y_network(branch=1.0):
    """Degree-3 center at the origin; edges run center -> leaf."""
    return build_network(
        [
            (0.0, 0.0),
            (branch, 0.0),
            (-branch / 2, branch * math.sqrt(3) / 2),
            (-branch / 2, -branch * math.sqrt(3) / 2),
        ],
        [(0, 1), (0, 2), (0, 3)],
    )


def two_disjoint_segments():
    return build_network(
        [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (1.0, 2.0)], [(0, 1), (2, 3)]
    )


def grid_network(nx, ny, spacing=1.0, keep=1.0, jitter=0.0, rng=None):
    """nx x ny grid of vertices; optionally keep a random subset of edges.

    Jitter below 0.3 * spacing cannot create crossings.  Isolated vertices are
    dropped and ids relabeled.
    """
    rng = rng or np.random.default_rng(0)
    xs = np.arange(nx) * spacing
    ys = np.arange(ny) * spacing
    xy = np.array([(x, y) for y in ys for x in xs], dtype=float)
    if jitter:
        xy = xy + rng.uniform(-jitter, jitter, xy.shape)

    def vid(i, j):
        return j * nx + i

    segs = []
    for j in range(ny):
        for i in range(nx):
            if i + 1 < nx:
                segs.append((vid(i, j), vid(i + 1, j)))
            if j + 1 < ny:
                segs.append((vid(i, j), vid(i, j + 1)))
    if keep < 1.0:
        segs = [s for s in segs if rng.random() < keep]
    used = sorted({v for s in segs for v in s})
    relab = {v: k for k, v in enumerate(used)}
    segs = [(relab[a], relab[b]) for a, b in segs]
    if not segs:
        raise ValueError("random grid lost all edges; raise keep")
    return build_network(xy[used], segs)


def random_network(rng, max_side=3, keep=0.7, spacing=1.0):
    """Small random grid-subset network (possibly disconnected)."""
    for _ in range(50):
        nx = int(rng.integers(2, max_side + 1))
        ny = int(rng.integers(2, max_side + 1))
        try:
            return grid_network(
                nx, ny, spacing=spacing, keep=keep,
                jitter=0.25 * spacing * rng.random(), rng=rng,
            )
        except ValueError:
            continue
    raise RuntimeError("could not generate a random network")


def random_location(net, rng):
    e = int(rng.integers(net.n_edges))
    return NetworkLocation(e, float(rng.random() * net.edge_lengths[e]))


def random_pattern(net, n, rng):
    """Uniform-by-length points."""
    p = net.edge_lengths / net.total_length
    edges = rng.choice(net.n_edges, size=n, p=p)
    pts = [
        NetworkLocation(int(e), float(rng.random() * net.edge_lengths[e]))
        for e in edges
    ]
    return PointPattern(net, pts)


# -- oracles -------------------------------------------------------------------


def brute_force_distance(net: LinearNetwork, a: NetworkLocation, b: NetworkLocation):
    """Minimum over exhaustively enumerated paths, summed left to right.

    Enumerates vertex-simple paths between every (endpoint of a's edge,
    endpoint of b's edge) combination plus the direct same-edge route; mirrors
    the float accumulation order of a relaxation-based computation.
    """
    if net.canonical_location(a) == net.canonical_location(b):
        return 0.0
    best = math.inf
    if a.edge == b.edge:
        best = abs(a.offset - b.offset)
    ua, va = net.edge_vertices[a.edge]
    ub, vb = net.edge_vertices[b.edge]
    la = float(net.edge_lengths[a.edge])
    lb = float(net.edge_lengths[b.edge])
    starts = [(int(ua), a.offset), (int(va), la - a.offset)]
    ends = {int(ub): b.offset, int(vb): lb - b.offset}

    def extend(vertex, acc, visited):
        nonlocal best
        if vertex in ends:
            cand = acc + ends[vertex]
            if cand < best:
                best = cand
        for e in net.incident_edges[vertex]:
            x, y = net.edge_vertices[e]
            w = int(y if x == vertex else x)
            if w not in visited:
                extend(w, acc + float(net.edge_lengths[e]), visited | {w})

    for s, d0 in starts:
        extend(s, d0, {s})
    return best


def enumerate_equal_split(net, source, target, kernel, continuous, max_depth=64):
    """Breadth-first path enumeration of the equal-split kernels.

    Independent of the production depth-first deposit: enumerates whole paths
    from source to target and sums kernel(length) * weight.
    """
    support = kernel.support
    total = 0.0
    src = net.canonical_location(source)
    tgt = net.canonical_location(target)

    def vfac(vertex):
        # value at a vertex: continuity limit scales the arrival by 2/deg
        return 2.0 / net.degrees[vertex] if continuous else 1.0

    # queue entries: (vertex, arrival_edge, dist, weight)
    queue = []
    if src[0] == "v":
        v0 = src[1]
        m = int(net.degrees[v0])
        if tgt == src:
            total += float(kernel(0.0)) * vfac(v0)
        for e in net.incident_edges[v0]:
            queue.append((int(v0), int(e), 0.0, 2.0 / m, True))
    else:
        e0, o0 = src[1], src[2]
        u0, w0 = net.edge_vertices[e0]
        # direct hits on the source edge
        if tgt[0] == "e" and tgt[1] == e0:
            d = abs(tgt[2] - o0)
            if d <= support:
                total += float(kernel(d))
        for vert, d0 in ((int(u0), o0), (int(w0), float(net.edge_lengths[e0]) - o0)):
            if tgt[0] == "v" and tgt[1] == vert and d0 <= support:
                total += float(kernel(d0)) * vfac(vert)
            queue.append((vert, int(e0), d0, 1.0, False))

    # expand: each queue entry is "standing at vertex, about to branch"
    for _ in range(max_depth):
        if not queue:
            break
        nxt = []
        for vertex, arr, dist, weight, from_vertex_source in queue:
            if dist >= support:
                continue
            m = int(net.degrees[vertex])
            for e in net.incident_edges[vertex]:
                e = int(e)
                if from_vertex_source:
                    w = weight  # initial split already applied
                    if e != arr:
                        continue
                elif continuous:
                    w = weight * (2.0 / m - (1.0 if e == arr else 0.0))
                    if w == 0.0:
                        continue
                else:
                    if m == 1 or e == arr:
                        continue
                    w = weight / (m - 1)
                x, y = net.edge_vertices[e]
                far = int(y if x == vertex else x)
                ell = float(net.edge_lengths[e])
                if tgt[0] == "e" and tgt[1] == e:
                    off = tgt[2]
                    s = off if vertex == int(x) else ell - off
                    if dist + s <= support:
                        total += w * float(kernel(dist + s))
                if tgt[0] == "v" and tgt[1] == far and dist + ell <= support:
                    total += w * float(kernel(dist + ell)) * vfac(far)
                if dist + ell < support:
                    nxt.append((far, e, dist + ell, w, False))
        queue = nxt
    if queue:
        raise RuntimeError("max_depth too small for this support")
    return total


def images_series(x, source, t, n_images=6):
    """Reflected-interval heat solution on [0, 1] via the method of images."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k in range(-n_images, n_images + 1):
        total += _gauss_pdf(x - source + 2 * k, t) + _gauss_pdf(x + source + 2 * k, t)
    return total


def _gauss_pdf(x, var):
    return np.exp(-0.5 * x * x / var) / math.sqrt(2 * math.pi * var)
