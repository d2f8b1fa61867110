"""Exact and Monte Carlo spherical statistics: big-integer path counting,
lexicographic enumeration, exactly-uniform sphere sampling by completion
counts, streaming functional statistics over spheres, limit extrapolation,
and the finite-path measure comparison suite.
"""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthTooLarge, InsufficientData, SupportTooLarge
from .automaton import START, ZERO
from .group_core import Word, eval_functional, spectral_norm_batch
from . import spectral as _spectral

EXACT_LIMIT = 16


def stream(seed, index):
    """Counter-based splittable RNG: one independent Philox stream per index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


# ---------------------------------------------------------------------------
# count table


@dataclass
class CountTable:
    """c_v(m) = number of length-m coding paths starting at v (0 avoided),
    exact arbitrary-precision integers."""

    vertices: tuple
    depth: int
    aut_hash: str
    columns: dict  # vertex -> list of ints, index = depth
    _succ: dict = field(default=None, repr=False)

    def count(self, v, m):
        if m < 0:
            return 0
        if m > self.depth:
            raise DepthTooLarge(f"table holds depth {self.depth}, asked {m}")
        return self.columns[v][m]

    def sphere_count(self, n):
        return self.count(START, n)

    def paths_into(self, m):
        """Number of length-m paths from '*' ending at each vertex."""
        if m > self.depth:
            raise DepthTooLarge(f"table holds depth {self.depth}, asked {m}")
        f = {v: 0 for v in self.vertices}
        f[START] = 1
        for _ in range(m):
            g = {v: 0 for v in self.vertices}
            for v, succs in self._succ.items():
                fv = f[v]
                if fv:
                    for u in succs:
                        g[u] += fv
            f = g
        return f

    def to_text(self):
        lines = [f"# hyperlab-count-table v1 hash={self.aut_hash} depth={self.depth}"]
        for v in self.vertices:
            for m, c in enumerate(self.columns[v]):
                lines.append(f"{v} {m} {c}")
        return "\n".join(lines) + "\n"


def automaton_hash(aut):
    return hashlib.sha256(aut.serialize().encode()).hexdigest()


def build_count_table(aut, n_max):
    """Transfer-matrix DP: c_v(0) = 1 and c_v(m) = sum over edges (v,u) of c_u(m-1)."""
    vertices = aut.coding_vertices()
    succ = {v: [u for u, _ in aut.coding_successors(v)] for v in vertices}
    cols = {v: [1] for v in vertices}
    for m in range(1, n_max + 1):
        prev = {v: cols[v][m - 1] for v in vertices}
        for v in vertices:
            cols[v].append(sum(prev[u] for u in succ[v]))
    return CountTable(vertices, n_max, automaton_hash(aut), cols, succ)


def save_count_table(table, path):
    with open(path, "w") as fh:
        fh.write(table.to_text())


def load_count_table(path, aut):
    with open(path) as fh:
        header = fh.readline().strip()
        want = automaton_hash(aut)
        if f"hash={want}" not in header:
            return None
        depth = int(header.rsplit("depth=", 1)[1])
        vertices = aut.coding_vertices()
        cols = {v: [0] * (depth + 1) for v in vertices}
        for line in fh:
            v, m, c = line.rsplit(" ", 2)
            cols[v][int(m)] = int(c)
    succ = {v: [u for u, _ in aut.coding_successors(v)] for v in vertices}
    return CountTable(vertices, depth, want, cols, succ)


def cached_count_table(aut, n_max, cache_dir=None):
    cache_dir = cache_dir or os.environ.get("HYPERLAB_CACHE_DIR")
    if not cache_dir:
        return build_count_table(aut, n_max)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"counts-{automaton_hash(aut)[:16]}-{n_max}.txt")
    if os.path.exists(path):
        table = load_count_table(path, aut)
        if table is not None and table.depth >= n_max:
            return table
    table = build_count_table(aut, n_max)
    save_count_table(table, path)
    return table


# ---------------------------------------------------------------------------
# enumeration and sampling


def enumerate_sphere(aut, n, exact_limit=EXACT_LIMIT):
    """Yield (Word, end vertex) for every radius-n element, each exactly once,
    in lexicographic successor order."""
    if n > exact_limit:
        raise DepthTooLarge(f"exact enumeration capped at {exact_limit}")
    for path, letters in aut.paths_from_start(n):
        end = path[-1] if path else START
        yield Word(letters), end


def sample_sphere_uniform(aut, table, n, rng):
    """Exactly uniform element of the radius-n sphere: at each step an edge
    (v,u) is taken with probability c_u(remaining-1)/c_v(remaining), decided by
    comparing one 128-bit uniform draw against exact big-integer thresholds."""
    if n > table.depth:
        raise DepthTooLarge(f"count table too shallow for n={n}")
    v = START
    letters = []
    for k in range(n):
        rem = n - k
        succs = aut.coding_successors(v)
        total = table.count(v, rem)
        hi, lo = rng.integers(0, 2**64, size=2, dtype=np.uint64)
        u128 = (int(hi) << 64) | int(lo)
        cum = 0
        choice = None
        for u, lab in succs:
            cum += table.count(u, rem - 1)
            if u128 < (cum << 128) // total:
                choice = (u, lab)
                break
        if choice is None:  # only possible through rounding at the last slot
            choice = succs[-1]
        v, lab = choice
        letters.append(lab)
    return Word(tuple(letters))


_CHUNK = 65536


def batch_sample_paths(aut, table, n, size, seed, want_ranks=False):
    """Vectorized uniform sphere sampling. Returns (paths, ranks): paths is an
    (size, n+1) int16 array of vertex indices (column 0 is '*'), ranks the
    lexicographic rank of each path (or None when the sphere is too large for
    int64 ranks). Work is split into fixed 65536-sample chunks, one RNG stream
    per chunk, so results do not depend on worker scheduling."""
    vertices = aut.coding_vertices()
    vindex = {v: i for i, v in enumerate(vertices)}
    succ = {
        vindex[v]: [vindex[u] for u, _ in aut.coding_successors(v)] for v in vertices
    }
    counts = {vindex[v]: [table.count(v, m) for m in range(n + 1)] for v in vertices}
    rankable = want_ranks and table.sphere_count(n) < 2**62
    paths = np.zeros((size, n + 1), dtype=np.int16)
    ranks = np.zeros(size, dtype=np.int64) if rankable else None
    mask64 = (1 << 64) - 1
    for c0 in range(0, size, _CHUNK):
        c1 = min(c0 + _CHUNK, size)
        rng = stream(seed, c0 // _CHUNK)
        m = c1 - c0
        cur = np.full(m, vindex[START], dtype=np.int16)
        for k in range(n):
            rem = n - k
            draws = rng.integers(0, 2**64, size=(m, 2), dtype=np.uint64)
            uhi, ulo = draws[:, 0], draws[:, 1]
            nxt = np.empty(m, dtype=np.int16)
            for v in np.unique(cur):
                sel = cur == v
                options = succ[int(v)]
                total = counts[int(v)][rem]
                cum = 0
                offsets = []
                thresholds = []
                for u in options:
                    offsets.append(cum)
                    cum += counts[u][rem - 1]
                    thresholds.append((cum << 128) // total)
                chosen = np.full(sel.sum(), len(options) - 1, dtype=np.int64)
                for i in range(len(options) - 2, -1, -1):
                    t = thresholds[i]
                    thi = np.uint64(t >> 64)
                    tlo = np.uint64(t & mask64)
                    below = (uhi[sel] < thi) | ((uhi[sel] == thi) & (ulo[sel] < tlo))
                    chosen[below] = i
                nxt[sel] = np.array(options, dtype=np.int16)[chosen]
                if rankable:
                    offs = np.array(offsets, dtype=np.int64)
                    ranks[c0:c1][sel] += offs[chosen]
            cur = nxt
            paths[c0:c1, k + 1] = cur
    return paths, ranks


# ---------------------------------------------------------------------------
# batched functional evaluation over spheres


class _MatrixCarrier:
    """Per-path renormalized products for matrix-backed functionals."""

    def __init__(self, rep):
        self.rep = rep
        self.images = {lab: rep.image(lab) for lab in rep.alphabet}
        self.d = rep.dimension

    def init(self, size):
        return (
            np.broadcast_to(np.eye(self.d), (size, self.d, self.d)).copy(),
            np.zeros(size),
        )

    def extend(self, state, label):
        units, logs = state
        prod = units @ self.images[label]
        s = self._norms(prod)
        mask = (s < 0.5) | (s > 2.0)
        if mask.any():
            prod[mask] /= s[mask, None, None]
            logs = logs.copy()
            logs[mask] += np.log(s[mask])
        return prod, logs

    def _norms(self, mats):
        return spectral_norm_batch(mats)

    def concat(self, states):
        return (
            np.concatenate([s[0] for s in states]),
            np.concatenate([s[1] for s in states]),
        )


def _readout(kind, carrier, state):
    from .group_core import batch_displacement, batch_log_norm, batch_singular_logs

    units, logs = state
    if kind == "log_norm":
        return batch_log_norm(units, logs)
    if kind == "displacement_h2":
        return batch_displacement(units, logs)
    if kind == "cartan":
        return batch_singular_logs(units, logs)
    raise ValueError(kind)


def sphere_functional_values(aut, functional, depths, chunk_depth=4, kind=None):
    """Exact functional values over full spheres, {n: values array}, evaluated
    by level-expanding path products in prefix chunks (memory stays bounded).

    kind overrides the readout: "cartan" gives the full log singular value
    vector; for abs_homomorphism functionals the readout is the signed weight
    sum (the spherical statistics track the homomorphism itself; the
    functional's value is its absolute value)."""
    depths = sorted(depths)
    n_max = max(depths)
    kind = kind or functional.kind
    out = {n: [] for n in depths}
    if kind == "word_length" and functional.translation is None:
        table = build_count_table(aut, n_max)
        return {n: np.full(int(table.sphere_count(n)), float(n)) for n in depths}
    if kind in {"log_norm", "displacement_h2", "cartan"}:
        carrier = _MatrixCarrier(functional.rep)
        chunk_depth = min(chunk_depth, min(depths))
        for prefix_units, prefix_logs, end in _prefix_chunks(aut, carrier, chunk_depth):
            states = {end: (prefix_units, prefix_logs)}
            depth = chunk_depth
            if depth in depths:
                for v, st in states.items():
                    out[depth].append(_readout(kind, carrier, st))
            while depth < n_max:
                states = _advance(aut, carrier, states)
                depth += 1
                if depth in depths:
                    for v, st in sorted(states.items()):
                        out[depth].append(_readout(kind, carrier, st))
        return {n: np.concatenate(out[n]) for n in depths}
    if kind == "abs_homomorphism":
        weights = functional.weights
        sums = {START: np.zeros(1)}
        vals = {}
        depth = 0
        while depth < n_max:
            nxt = {}
            for v, arr in sums.items():
                for u, lab in aut.coding_successors(v):
                    nxt.setdefault(u, []).append(arr + weights.get(lab, 0.0))
            sums = {u: np.concatenate(parts) for u, parts in nxt.items()}
            depth += 1
            if depth in depths:
                vals[depth] = np.concatenate([sums[v] for v in sorted(sums)])
        return vals
    # generic fallback: one word at a time
    vals = {}
    for n in depths:
        vals[n] = np.array(
            [eval_functional(functional, w) for w, _ in enumerate_sphere(aut, n)]
        )
    return vals


def _prefix_chunks(aut, carrier, chunk_depth):
    for path, letters in aut.paths_from_start(chunk_depth):
        units = np.eye(carrier.d)[None, :, :].copy()
        logs = np.zeros(1)
        st = (units, logs)
        for lab in letters:
            st = carrier.extend(st, lab)
        yield st[0], st[1], path[-1]


def _advance(aut, carrier, states):
    nxt = {}
    for v, st in states.items():
        for u, lab in aut.coding_successors(v):
            nxt.setdefault(u, []).append(carrier.extend(st, lab))
    return {u: carrier.concat(parts) if len(parts) > 1 else parts[0] for u, parts in nxt.items()}


def path_functional_values(aut, functional, paths, kind=None):
    """Evaluate the functional on sampled vertex paths ((N, n+1) index array)."""
    kind = kind or functional.kind
    vertices = aut.coding_vertices()
    label_of = {}
    for (src, dst), lab in aut.edge_labels.items():
        if src != ZERO and dst != ZERO:
            label_of[(vertices.index(src), vertices.index(dst))] = lab
    n = paths.shape[1] - 1
    if kind == "word_length" and functional.translation is None:
        return np.full(paths.shape[0], float(n))
    if kind == "abs_homomorphism":
        w = np.zeros(paths.shape[0])
        for k in range(n):
            pairs = paths[:, k].astype(np.int64) * len(vertices) + paths[:, k + 1]
            step = np.array(
                [functional.weights.get(label_of[(i // len(vertices), i % len(vertices))], 0.0)
                 for i in np.unique(pairs)]
            )
            lut = dict(zip(np.unique(pairs).tolist(), step))
            w += np.array([lut[p] for p in pairs.tolist()])
        return w
    carrier = _MatrixCarrier(functional.rep)
    st = carrier.init(paths.shape[0])
    for k in range(n):
        pairs = paths[:, k].astype(np.int64) * len(vertices) + paths[:, k + 1]
        units, logs = st
        new_units = np.empty_like(units)
        new_logs = logs.copy()
        for p in np.unique(pairs):
            lab = label_of[(int(p) // len(vertices), int(p) % len(vertices))]
            sel = pairs == p
            new_units[sel] = units[sel] @ carrier.images[lab]
        s = carrier._norms(new_units)
        mask = (s < 0.5) | (s > 2.0)
        new_units[mask] /= s[mask, None, None]
        new_logs[mask] += np.log(s[mask])
        st = (new_units, new_logs)
    return _readout(kind if kind != "word_length" else "log_norm", carrier, st)


# ---------------------------------------------------------------------------
# statistics


@dataclass
class SphereStatistics:
    n: int
    count: int
    mean: float
    variance: float
    deviation_fractions: dict
    histogram: tuple  # (bin edges, normalized masses)
    mode: str
    samples: int = 0
    seed: int = None

    def to_csv_rows(self):
        rows = []
        for eps, frac in sorted(self.deviation_fractions.items()):
            rows.append(
                (self.n, str(self.count), self.mean, self.variance, eps, frac, self.mode, self.seed)
            )
        return rows


def freedman_diaconis_bins(values):
    q75, q25 = np.percentile(values, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        return np.linspace(values.min() - 0.5, values.max() + 0.5, 11)
    h = 2 * iqr / len(values) ** (1 / 3)
    lo, hi = values.min(), values.max()
    nbins = max(int(math.ceil((hi - lo) / h)), 1)
    return np.linspace(lo, hi, min(nbins, 400) + 1)


def spherical_statistics(
    aut, functional, n, mode="exact", lambda_ref=None, eps_list=(), samples=0, seed=0, bins=None
):
    """One-pass spherical statistics of the functional at radius n.

    mode "exact" enumerates the sphere (n <= EXACT_LIMIT); "monte_carlo" uses
    the uniform sampler. For abs_homomorphism functionals the recorded values
    are the signed weight sums (see sphere_functional_values)."""
    table = build_count_table(aut, n)
    count = table.sphere_count(n)
    if mode == "exact":
        if n > EXACT_LIMIT:
            raise DepthTooLarge(f"exact mode capped at {EXACT_LIMIT}")
        values = sphere_functional_values(aut, functional, [n])[n]
        used = len(values)
    elif mode == "monte_carlo":
        paths, _ = batch_sample_paths(aut, table, n, samples, seed)
        values = path_functional_values(aut, functional, paths)
        used = samples
    else:
        raise ValueError(mode)
    mean = float(values.mean())
    var = float(values.var())
    lam_ref = mean / n if lambda_ref is None else lambda_ref
    fractions = {
        float(eps): float(np.mean(np.abs(values / n - lam_ref) > eps)) for eps in eps_list
    }
    normalized = (values - n * lam_ref) / math.sqrt(n)
    edges = bins if bins is not None else freedman_diaconis_bins(normalized)
    masses, edges = np.histogram(normalized, bins=edges)
    hist = (edges, masses / masses.sum())
    return SphereStatistics(
        n, count, mean, var, fractions, hist,
        mode if mode == "exact" else f"monte_carlo({used})",
        used, seed if mode == "monte_carlo" else None,
    )


@dataclass
class LimitEstimates:
    lam: float
    sigma2: float
    method: str
    standard_error: float
    sigma2_se: float
    points: list = field(default_factory=list)


def _wls_line(xs, ys, ses):
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    w = 1.0 / np.maximum(np.asarray(ses, dtype=float), 1e-12) ** 2
    w = w / w.max()
    sw, sx, sy = w.sum(), (w * xs).sum(), (w * ys).sum()
    sxx, sxy = (w * xs * xs).sum(), (w * xs * ys).sum()
    denom = sw * sxx - sx * sx
    slope = (sw * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / sw
    resid = ys - slope * xs - intercept
    dof = max(len(xs) - 2, 1)
    s2 = float((w * resid**2).sum() / w.sum()) * len(xs) / dof
    slope_se = math.sqrt(max(s2 * sw / denom, 0.0))
    return slope, intercept, slope_se


def estimate_limits(aut, functional, schedule, seed=0):
    """Lambda and sigma^2 by fitting mean_n = Lambda n + C and var_n = sigma^2 n + c
    over exact depths plus optional Monte Carlo points ("mc", n, samples)."""
    points = []
    for entry in schedule:
        if entry[0] == "exact":
            st = spherical_statistics(aut, functional, entry[1], mode="exact")
            points.append((st.n, st.mean, st.variance, 0.0, "exact"))
        elif entry[0] == "mc":
            _, n, samples = entry
            st = spherical_statistics(
                aut, functional, n, mode="monte_carlo", samples=samples, seed=seed
            )
            se = math.sqrt(st.variance / samples)
            points.append((st.n, st.mean, st.variance, se, "mc"))
        else:
            raise ValueError(entry)
    if len(points) < 3:
        raise InsufficientData("need at least 3 depths")
    xs = [p[0] for p in points]
    means = [p[1] for p in points]
    mean_ses = [p[3] for p in points]
    lam, _, lam_se = _wls_line(xs, means, mean_ses)
    exact = [(p[0], p[2]) for p in points if p[4] == "exact"]
    if len(exact) >= 3:
        sig2, _, sig2_se = _wls_line([e[0] for e in exact], [e[1] for e in exact], [1.0] * len(exact))
    else:
        sig2, sig2_se = points[-1][2] / points[-1][0], 0.0
    sig2 = max(sig2, 0.0)
    method = "counting_extrapolation"
    return LimitEstimates(lam, sig2, method, lam_se, sig2_se, points)


# ---------------------------------------------------------------------------
# comparison suite (finite-path measures)


def clt_comparison_suite(aut, n_list, p_common=None, c_list=(1, 2, 4), max_tv_len=12):
    """TV tables for the two finite-path approximation lemmas.

    Part A: TV(tau_q, mu_q) per sphere radius q (split by residue class mod p).
    Part B: TV(pi_{np-2pL}, tau~^c_{np}) per block count n and constant c;
    rows with floor(c ln n) < 1 or an empty middle segment are infeasible."""
    tm = _spectral.TransitionMatrix.from_automaton(aut)
    lv = _spectral.limit_vectors(tm, p_common)
    p = lv.p_common
    table = build_count_table(aut, max(max(n_list, default=0), max(n_list, default=1) * p) + 2 * p)
    part_a = []
    for q in n_list:
        if q > max_tv_len:
            raise SupportTooLarge(f"q={q} too deep for exhaustive TV")
        tau = _spectral.uniform_sphere_path_measure(tm, table, q)
        mu = _spectral.mu_extended_measure(lv, table, q, q % p)
        part_a.append({"q": q, "r": q % p, "tv": _spectral.tv_distance(tau, mu)})
    ratios = _geometric_ratios([row["tv"] for row in part_a])
    part_b = []
    for c in c_list:
        for n in n_list:
            if n * p > max_tv_len + 2 * p:
                continue
            try:
                tt = _spectral.tau_tilde_measure(lv, table, n, c)
            except SupportTooLarge as exc:
                part_b.append({"c": c, "n": n, "feasible": False, "reason": str(exc)})
                continue
            pi = _spectral.pi_measure(lv, tt.length)
            part_b.append(
                {"c": c, "n": n, "feasible": True, "middle": tt.length,
                 "tv": _spectral.tv_distance(pi, tt)}
            )
    return {"p": p, "lemma_tv": part_a, "tv_ratios": ratios, "lemma_approx2": part_b}


def _geometric_ratios(tvs):
    out = []
    for a, b in zip(tvs, tvs[1:]):
        out.append(b / a if a > 0 else None)
    return out
