"""Spectral analysis of the coding transition matrix: irreducible components,
Perron growth data, Parry (maximal-entropy) chains, the limit vectors behind
the boundary measure, and the finite-path comparison measures.

Throughout, the matrix is A' (the 0 vertex discarded): its depth-n paths from
'*' are exactly the radius-n sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    LengthMismatch,
    NoGrowth,
    NonConvergence,
    SupportTooLarge,
)
from .automaton import START, ZERO


# ---------------------------------------------------------------------------
# transition matrix


@dataclass
class TransitionMatrix:
    """0/1 matrix over the non-0 vertices, with the start row distinguished."""

    vertices: tuple
    entries: np.ndarray
    star_index: int

    @staticmethod
    def from_automaton(aut):
        vertices = aut.coding_vertices()
        index = {v: i for i, v in enumerate(vertices)}
        a = np.zeros((len(vertices), len(vertices)), dtype=np.int64)
        for (src, dst), _ in aut.edge_labels.items():
            if src != ZERO and dst != ZERO:
                a[index[src], index[dst]] = 1
        return TransitionMatrix(vertices, a, index[START])

    @property
    def size(self):
        return len(self.vertices)

    def index(self, v):
        return self.vertices.index(v)

    def successors(self, i):
        return np.nonzero(self.entries[i])[0]


# ---------------------------------------------------------------------------
# components


@dataclass
class ComponentDecomposition:
    components: list  # vertex-index tuples, in condensation (topological) order
    condensation_order: list  # component indices, sources first
    trivial: list  # True for singleton components without a self-loop
    periods: list  # gcd of cycle lengths (0 for trivial components)
    radii: list  # Perron radius per component (0.0 for trivial ones)
    maximal_flags: list = field(default_factory=list)

    def component_of(self):
        out = {}
        for ci, comp in enumerate(self.components):
            for v in comp:
                out[v] = ci
        return out


def _tarjan_scc(adj):
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    onstack = [False] * n
    stack = []
    comps = []
    counter = [0]

    def strongconnect(v0):
        work = [(v0, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter[0]
                counter[0] += 1
                stack.append(v)
                onstack[v] = True
            recurse = False
            for i in range(pi, len(adj[v])):
                w = adj[v][i]
                if index[w] == -1:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    recurse = True
                    break
                elif onstack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(sorted(comp)))

    for v in range(n):
        if index[v] == -1:
            strongconnect(v)
    return comps  # reverse topological order

def _component_period(block):
    """gcd of cycle lengths through the first vertex, by BFS level differences."""
    n = block.shape[0]
    if n == 0:
        return 0
    dist = [-1] * n
    dist[0] = 0
    queue = [0]
    g = 0
    adj = [list(np.nonzero(block[i])[0]) for i in range(n)]
    while queue:
        nxt = []
        for u in queue:
            for w in adj[u]:
                if dist[w] == -1:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        queue = nxt
    for u in range(n):
        for w in adj[u]:
            g = math.gcd(g, dist[u] + 1 - dist[w])
    return abs(g)


def perron_data(block, tol=1e-13, max_iter=100_000):
    """Perron radius and positive right/left eigenvectors of an irreducible
    0/1 block, by power iteration on block + I (primitive, same eigenvectors).
    The radius comes from the bilinear Rayleigh quotient l^T B r / l^T r, which
    is second-order accurate in the vector error."""
    n = block.shape[0]
    b = block.astype(float)
    shifted = b + np.eye(n)

    def iterate(m):
        v = np.full(n, 1.0 / n)
        for _ in range(max_iter):
            w = m @ v
            w = w / w.max()
            if np.abs(w - v).max() < tol:
                return w / w.sum()
            v = w
        raise NonConvergence("power iteration did not converge")

    right = iterate(shifted)
    left = iterate(shifted.T)
    radius = float(left @ (b @ right)) / float(left @ right)
    resid = np.abs(b @ right - radius * right).max()
    if resid > 1e-9 * max(radius, 1.0):
        raise NonConvergence(f"Perron residual {resid}")
    return radius, right, left


def scc_decomposition(tm):
    """Strongly connected components of the coding graph with '*' discarded,
    with per-component periods and Perron radii."""
    keep = [i for i in range(tm.size) if i != tm.star_index]
    sub = {v: k for k, v in enumerate(keep)}
    adj = [[sub[j] for j in tm.successors(v) if j != tm.star_index] for v in keep]
    comps_local = _tarjan_scc(adj)
    comps = [tuple(keep[i] for i in c) for c in reversed(comps_local)]  # sources first
    trivial, periods, radii = [], [], []
    for comp in comps:
        block = tm.entries[np.ix_(comp, comp)]
        if len(comp) == 1 and block[0, 0] == 0:
            trivial.append(True)
            periods.append(0)
            radii.append(0.0)
            continue
        trivial.append(False)
        periods.append(_component_period(block))
        radius, _, _ = perron_data(block)
        radii.append(radius)
    return ComponentDecomposition(comps, list(range(len(comps))), trivial, periods, radii)


def growth_rate(tm, tol=1e-12):
    """Exponential growth rate: the largest component Perron radius."""
    decomp = scc_decomposition(tm)
    radii = [r for r, t in zip(decomp.radii, decomp.trivial) if not t]
    if not radii:
        raise NoGrowth("all components are trivial")
    return max(radii)


def _component_reach(tm, decomp):
    """Reachability between components in the condensation DAG (reflexive)."""
    m = len(decomp.components)
    comp_of = decomp.component_of()
    reach = [set([i]) for i in range(m)]
    edges = set()
    for i in range(tm.size):
        if i == tm.star_index:
            continue
        ci = comp_of[i]
        for j in tm.successors(i):
            if j == tm.star_index:
                continue
            cj = comp_of[j]
            if ci != cj:
                edges.add((ci, cj))
    # components are listed sources-first, so scan in reverse topological order
    for ci in range(m - 1, -1, -1):
        for (a, b) in edges:
            if a == ci:
                reach[ci] |= reach[b]
    return reach


def maximal_components(tm, decomp, lam, tol=1e-9):
    """Indices of components with Perron radius lam, plus the Coornaert
    disjointness flag (no path between distinct maximal components)."""
    maximal = [
        (not t) and (r >= lam * (1.0 - tol))
        for t, r in zip(decomp.trivial, decomp.radii)
    ]
    decomp.maximal_flags = maximal
    reach = _component_reach(tm, decomp)
    idx = [i for i, f in enumerate(maximal) if f]
    disjoint = True
    for i in idx:
        for j in idx:
            if i != j and j in reach[i]:
                disjoint = False
    return idx, disjoint


def period(block):
    return _component_period(np.asarray(block))


# ---------------------------------------------------------------------------
# Parry measures


@dataclass
class ParryMeasure:
    """Maximal-entropy Markov chain of an irreducible block: kernel
    P(i,j) = A_ij r_j / (lam r_i), stationary pi_i ∝ l_i r_i."""

    states: tuple  # vertex names
    kernel: np.ndarray
    stationary: np.ndarray
    period: int
    radius: float

    def entropy(self):
        p = self.kernel
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        return -float(self.stationary @ plogp.sum(axis=1))


def parry_measure(tm, component):
    """Parry construction on one irreducible component (vertex-index tuple)."""
    block = tm.entries[np.ix_(component, component)].astype(float)
    radius, right, left = perron_data(block)
    n = len(component)
    kernel = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if block[i, j]:
                kernel[i, j] = right[j] / (radius * right[i])
    stationary = left * right
    stationary = stationary / stationary.sum()
    states = tuple(tm.vertices[v] for v in component)
    return ParryMeasure(states, kernel, stationary, _component_period(block), radius)


def edge_chain(pm):
    """Markov chain on the component's edges: from (v1,v2) step to (v2,v3) with
    the vertex-chain probability P(v2,v3); stationary mass of (v1,v2) is
    pi(v1) P(v1,v2)."""
    n = len(pm.states)
    edges = [(i, j) for i in range(n) for j in range(n) if pm.kernel[i, j] > 0]
    m = len(edges)
    pos = {e: k for k, e in enumerate(edges)}
    kernel = np.zeros((m, m))
    stationary = np.zeros(m)
    for k, (i, j) in enumerate(edges):
        stationary[k] = pm.stationary[i] * pm.kernel[i, j]
        for j2 in range(n):
            if pm.kernel[j, j2] > 0:
                kernel[k, pos[(j, j2)]] = pm.kernel[j, j2]
    states = tuple((pm.states[i], pm.states[j]) for (i, j) in edges)
    block = (kernel > 0).astype(np.int64)
    return ParryMeasure(states, kernel, stationary, _component_period(block), pm.radius)


# ---------------------------------------------------------------------------
# limit vectors and the harmonic vector


@dataclass
class LimitVectors:
    """Limits p_i = lim e_i^T A^{np} 1 / lam^{np}, u_i = lim e_*^T A^{np} e_i / lam^{np},
    the projector A_inf = lim (A^p/lam^p)^n, and the Cesaro harmonic vector
    q(v) = (1/p) sum_r lam^-r (A_inf A^r 1)(v), which satisfies A q = lam q exactly."""

    tm: TransitionMatrix
    lam: float
    p_common: int
    a_infinity: np.ndarray
    p_vec: np.ndarray
    u_vec: np.ndarray
    q_vec: np.ndarray


def limit_vectors(tm, p_common=None, tol=1e-13, max_iter=100_000):
    lam = growth_rate(tm)
    if lam <= 1.0 + 1e-12:
        raise NoGrowth(f"growth rate {lam} <= 1")
    decomp = scc_decomposition(tm)
    idx, disjoint = maximal_components(tm, decomp, lam)
    if not disjoint:
        raise NonConvergence("maximal components are not disjoint; A_inf does not exist")
    if p_common is None:
        p_common = math.lcm(*[decomp.periods[i] for i in idx])
    for i in idx:
        if p_common % decomp.periods[i] != 0:
            raise ValueError("p_common must be divisible by every maximal period")
    a = tm.entries.astype(float)
    step = np.linalg.matrix_power(a, p_common) / lam**p_common
    w = step.copy()
    prev = None
    for it in range(max_iter):
        if prev is not None and np.abs(w - prev).max() < tol:
            break
        prev = w
        w = w @ step
    else:
        raise NonConvergence("A^{np}/lam^{np} did not stabilize")
    a_inf = w
    p_vec = a_inf @ np.ones(tm.size)
    u_vec = a_inf[tm.star_index, :].copy()
    q = np.zeros(tm.size)
    for r in range(p_common):
        q += (a_inf @ np.linalg.matrix_power(a, r) @ np.ones(tm.size)) / lam**r
    q /= p_common
    return LimitVectors(tm, lam, p_common, a_inf, p_vec, u_vec, q)


# ---------------------------------------------------------------------------
# finite-path measures (comparison machinery for the counting CLT)


@dataclass
class PathMeasure:
    """Probability measure on fixed-length vertex paths (tuples of vertex names)."""

    length: int
    weights: dict

    def total(self):
        return sum(self.weights.values())

    def to_csv(self):
        lines = ["path;weight"]
        for path in sorted(self.weights):
            lines.append("-".join(path) + ";" + repr(self.weights[path]))
        return "\n".join(lines) + "\n"


def tv_distance(m1, m2):
    """Total variation distance (1/2) sum |w1 - w2| over the union of supports."""
    if m1.length != m2.length:
        raise LengthMismatch(f"path lengths {m1.length} != {m2.length}")
    keys = set(m1.weights) | set(m2.weights)
    return 0.5 * sum(abs(m1.weights.get(k, 0.0) - m2.weights.get(k, 0.0)) for k in keys)


MAX_SUPPORT = 5_000_000


def _all_paths(tm, length, start=None):
    """All coding paths of the given length as index tuples (start fixed or free)."""
    if start is None:
        heads = [(i,) for i in range(tm.size)]
    else:
        heads = [(start,)]
    paths = heads
    succ = [list(tm.successors(i)) for i in range(tm.size)]
    for _ in range(length):
        nxt = []
        for p in paths:
            for j in succ[p[-1]]:
                nxt.append(p + (j,))
            if len(nxt) > MAX_SUPPORT:
                raise SupportTooLarge(f"more than {MAX_SUPPORT} paths")
        paths = nxt
    return paths


def pi_measure(lv, kp):
    """pi_kp(w_0..w_kp) = u_{w0} p_{wkp} / (lam^{kp} p_*)."""
    tm, lam = lv.tm, lv.lam
    p_star = lv.p_vec[tm.star_index]
    weights = {}
    for path in _all_paths(tm, kp):
        w = lv.u_vec[path[0]] * lv.p_vec[path[-1]] / (lam**kp * p_star)
        if w > 0:
            weights[tuple(tm.vertices[i] for i in path)] = w
    return PathMeasure(kp, weights)


def n_step_kernel(lv, kp):
    """Transition weight of the block chain: from a path ending at v to a path
    starting at v, with probability p_end / (lam^{kp} p_start_of_next)."""
    def kernel(path_from, path_to):
        if path_from[-1] != path_to[0]:
            return 0.0
        p0 = lv.p_vec[lv.tm.index(path_to[0])]
        if p0 <= 0:
            return 0.0
        return lv.p_vec[lv.tm.index(path_to[-1])] / (lv.lam**kp * p0)

    return kernel


def mu_prefix_measure(lv, r):
    """mu_r on depth-r paths from '*': weight proportional to p_{end}."""
    tm = lv.tm
    weights = {}
    denom = 0.0
    paths = _all_paths(tm, r, start=tm.star_index)
    for path in paths:
        denom += lv.p_vec[path[-1]]
    for path in paths:
        w = lv.p_vec[path[-1]] / denom
        if w > 0:
            weights[tuple(tm.vertices[i] for i in path)] = w
    return PathMeasure(r, weights)


def mu_extended_measure(lv, table, n_total, r):
    """mu_{np+r}: the mu_r prefix law, then uniform over the count of
    continuations of length n_total - r (exact big-integer counts)."""
    tm = lv.tm
    mu_r = mu_prefix_measure(lv, r)
    weights = {}
    rest = n_total - r
    for prefix, wr in mu_r.weights.items():
        end = prefix[-1]
        denom = table.count(end, rest)
        if denom == 0:
            continue
        unit = wr / float(denom)
        for path in _all_paths(tm, rest, start=tm.index(end)):
            full = prefix + tuple(tm.vertices[i] for i in path[1:])
            weights[full] = unit
    return PathMeasure(n_total, weights)


def uniform_sphere_path_measure(tm, table, n):
    """tau_n: uniform on the depth-n coding paths from '*' (vertex paths include '*')."""
    total = table.sphere_count(n)
    weights = {}
    unit = 1.0 / float(total)
    for path in _all_paths(tm, n, start=tm.star_index):
        weights[tuple(tm.vertices[i] for i in path)] = unit
    return PathMeasure(n, weights)


def tau_tilde_measure(lv, table, n, c):
    """Middle-path census: a path gamma of length np - 2pL (L = floor(c ln n))
    from v_i to v_j carries (number of depth-pL '*'->v_i paths) x (number of
    length-pL paths from v_j) / #S_{np}."""
    tm, p = lv.tm, lv.p_common
    L = int(math.floor(c * math.log(n)))
    middle = n * p - 2 * p * L
    if L < 1 or middle < 1:
        raise SupportTooLarge(f"infeasible (n={n}, c={c}: L={L}, middle={middle})")
    denom = float(table.sphere_count(n * p))
    prefix_counts = table.paths_into(p * L)  # vertex -> #('*' -> v) of length pL
    weights = {}
    for path in _all_paths(tm, middle):
        i, j = path[0], path[-1]
        w = prefix_counts[i] * table.count(tm.vertices[j], p * L) / denom
        if w > 0:
            weights[tuple(tm.vertices[k] for k in path)] = float(w)
    return PathMeasure(middle, weights)


def clt_measures(lv, table, k, r, c, n):
    """The three comparison measures at one parameter point."""
    return {
        "pi": pi_measure(lv, k * lv.p_common),
        "mu": mu_prefix_measure(lv, r),
        "tau_tilde": tau_tilde_measure(lv, table, n, c),
    }


# ---------------------------------------------------------------------------
# report


@dataclass
class SpectralReport:
    lam: float
    component_radii: list
    periods: list
    maximal: list
    disjoint: bool
    pure_growth_range: tuple  # (min, max) of #S_n lam^-n over the sampled n

    def to_json(self):
        import json

        return json.dumps(
            {
                "lambda": self.lam,
                "component_radii": self.component_radii,
                "periods": self.periods,
                "maximal_components": self.maximal,
                "maximal_disjoint": self.disjoint,
                "pure_growth_min": self.pure_growth_range[0],
                "pure_growth_max": self.pure_growth_range[1],
            },
            sort_keys=True,
            indent=2,
        )


def spectral_report(tm, sphere_counts, n_range=(5, 30)):
    """Assemble growth data; sphere_counts maps n -> #S_n (exact integers)."""
    decomp = scc_decomposition(tm)
    lam = growth_rate(tm)
    idx, disjoint = maximal_components(tm, decomp, lam)
    ratios = [
        sphere_counts[n] / lam**n
        for n in range(n_range[0], n_range[1] + 1)
        if n in sphere_counts
    ]
    return SpectralReport(
        lam,
        [float(r) for r in decomp.radii],
        list(decomp.periods),
        idx,
        disjoint,
        (min(ratios), max(ratios)),
    )
