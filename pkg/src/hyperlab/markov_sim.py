"""Markovian random matrix products over finite chains: simulation, Lyapunov
spectra, the simplicity gap, large-deviation / Berry-Esseen / Wiener-path /
iterated-logarithm experiments, the aperiodizing path ("hat") chain, and the
edge-chain process built from a geodesic coding with the transpose trick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LabelMismatch, NotIrreducible, SigmaZero
from .counting import stream
from .group_core import (
    batch_displacement,
    batch_log_norm,
    singular_values,
    spectral_norm_batch,
    wedge_power_matrix,
)

_BATCH = 16384  # trajectories per RNG chunk; fixed so results are scheduling-independent


# ---------------------------------------------------------------------------
# chains and processes


@dataclass
class FiniteChain:
    """Finite-state Markov kernel with start state (index) or start distribution."""

    states: tuple
    kernel: np.ndarray
    start: object = 0  # int index or probability vector

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if np.abs(k.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("kernel rows must sum to 1")
        self.kernel = k
        self.irreducible = self._irreducible()
        self.period = self._period() if self.irreducible else 0

    def _adj(self):
        return self.kernel > 0

    def _irreducible(self):
        n = len(self.states)
        adj = self._adj()
        reach = np.eye(n, dtype=bool)
        for _ in range(n):
            reach = reach | (reach @ adj)
        return bool(reach.all())

    def _period(self):
        n = len(self.states)
        adj = self._adj()
        dist = np.full(n, -1)
        dist[0] = 0
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for w in np.nonzero(adj[u])[0]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        nxt.append(int(w))
            frontier = nxt
        g = 0
        for u in range(n):
            for w in np.nonzero(adj[u])[0]:
                g = math.gcd(g, int(dist[u] + 1 - dist[w]))
        return abs(g)

    def classes(self):
        """Periodic classes: state -> BFS distance from state 0 mod period."""
        if self.period <= 1:
            return np.zeros(len(self.states), dtype=int)
        n = len(self.states)
        adj = self._adj()
        dist = np.full(n, -1)
        dist[0] = 0
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for w in np.nonzero(adj[u])[0]:
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        nxt.append(int(w))
            frontier = nxt
        return dist % self.period

    def stationary(self):
        n = len(self.states)
        a = np.vstack([self.kernel.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


@dataclass
class MarkovMatrixProcess:
    """Finite chain plus an invertible-matrix map on its states."""

    chain: FiniteChain
    matrices: np.ndarray  # (S, d, d), aligned with chain.states

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=float)
        dets = np.linalg.det(self.matrices)
        if np.any(np.abs(dets) < 1e-300):
            raise LabelMismatch("all state matrices must be invertible")

    @property
    def d(self):
        return self.matrices.shape[1]

    def log_abs_det_mean(self):
        """E_pi[log |det X|], exact from the stationary law."""
        pi = self.chain.stationary()
        return float(pi @ np.log(np.abs(np.linalg.det(self.matrices))))


def from_parry(parry, start=None):
    """FiniteChain from a ParryMeasure (stationary start by default)."""
    return FiniteChain(parry.states, parry.kernel, parry.stationary if start is None else start)


def parry_product_process(aut, parry_edge, rep):
    """Edge-chain process with the transpose trick: the state (v1,v2) acts by
    the transpose of the image of its edge label, so the Markovian product
    (new factors on the left) has the law of transposed path products."""
    mats = []
    for (v1, v2) in parry_edge.states:
        lab = aut.edge_labels.get((v1, v2))
        if lab is None or lab not in rep.images:
            raise LabelMismatch(f"edge ({v1},{v2}) label {lab!r} has no image")
        mats.append(rep.image(lab).T)
    return MarkovMatrixProcess(from_parry(parry_edge), np.stack(mats))


def hat_chain(chain, p, anchor=None):
    """Aperiodizing chain on admissible length-p state paths:
    P_hat((x1..xp),(y1..yp)) = P(xp,y1) * prod P(yj,yj+1).

    p must be a multiple of the chain period. The space is the set of paths
    whose first state lies in the periodic class following `anchor`'s class,
    so paths ending at `anchor` are states; a trajectory of n hat steps has the
    law of pn original steps started at the path's last state."""
    if not chain.irreducible:
        raise NotIrreducible("hat chain needs an irreducible base chain")
    if chain.period and p % chain.period != 0:
        raise ValueError(f"p={p} is not a multiple of the period {chain.period}")
    if anchor is None:
        anchor = chain.start if isinstance(chain.start, (int, np.integer)) else 0
    classes = chain.classes()
    want = (classes[anchor] + 1) % max(chain.period, 1)
    adj = chain.kernel > 0
    paths = [(i,) for i in range(len(chain.states)) if classes[i] == want]
    for _ in range(p - 1):
        paths = [q + (j,) for q in paths for j in np.nonzero(adj[q[-1]])[0]]
    paths = [tuple(int(x) for x in q) for q in paths]
    pos = {q: k for k, q in enumerate(paths)}
    m = len(paths)
    kernel = np.zeros((m, m))
    for a, q in enumerate(paths):
        for r in paths:
            w = chain.kernel[q[-1], r[0]]
            for j in range(p - 1):
                w *= chain.kernel[r[j], r[j + 1]]
            kernel[a, pos[r]] = w
    start_candidates = [k for k, q in enumerate(paths) if q[-1] == anchor]
    names = tuple(tuple(chain.states[i] for i in q) for q in paths)
    return FiniteChain(names, kernel, start_candidates[0] if start_candidates else 0), paths


def hat_process(proc, p, anchor=None):
    """Lift a matrix process to its hat chain: X_hat(x1..xp) = X(xp)...X(x1)."""
    chain, paths = hat_chain(proc.chain, p, anchor)
    mats = []
    for q in paths:
        m = np.eye(proc.d)
        for i in q:
            m = proc.matrices[i] @ m
        mats.append(m)
    return MarkovMatrixProcess(chain, np.stack(mats))


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Trajectory:
    n: int
    states: np.ndarray  # visited state indices, length n
    log_norm: np.ndarray  # log||M_k|| for k = 0..n
    log_norm_wedge2: np.ndarray  # log||wedge^2 M_k|| for k = 0..n
    seed: int


def _draw_start(chain, rng):
    if isinstance(chain.start, (int, np.integer)):
        return int(chain.start)
    cum = np.cumsum(chain.start)
    return int(np.searchsorted(cum, rng.random()))


def simulate(proc, n, rng=None, seed=0):
    """One trajectory with per-step log norms, deterministic given (seed, proc).

    ||wedge^2 M_k|| is tracked by its own renormalized product of exterior-power
    matrices: reading the second singular value off the renormalized endpoint
    would drown in rounding noise once sigma_2/sigma_1 < 1e-16."""
    rng = rng or stream(seed, 0)
    cum = np.cumsum(proc.chain.kernel, axis=1)
    d = proc.d
    wedge_maps = np.stack([wedge_power_matrix(m, 2) for m in proc.matrices]) if d >= 2 else None
    state = _draw_start(proc.chain, rng)
    unit = np.eye(d)
    log_scale = 0.0
    wunit = np.eye(wedge_maps.shape[1]) if d >= 2 else None
    wlog = 0.0
    states = np.empty(n, dtype=np.int64)
    log_norm = np.zeros(n + 1)
    wedge = np.zeros(n + 1)
    for k in range(n):
        state = int(np.searchsorted(cum[state], rng.random()))
        states[k] = state
        unit = proc.matrices[state] @ unit
        s = np.abs(unit).max()
        unit /= s
        log_scale += math.log(s)
        log_norm[k + 1] = log_scale + math.log(singular_values(unit)[0])
        if d >= 2:
            wunit = wedge_maps[state] @ wunit
            ws = np.abs(wunit).max()
            wunit /= ws
            wlog += math.log(ws)
            wedge[k + 1] = wlog + math.log(singular_values(wunit)[0])
    return Trajectory(n, states, log_norm, wedge, seed)


def batch_state(proc, trials, seed):
    """Initialize a batched simulation: (states, units, logs, rngs per chunk)."""
    chunks = []
    for c0 in range(0, trials, _BATCH):
        c1 = min(c0 + _BATCH, trials)
        chunks.append((c0, c1, stream(seed, c0 // _BATCH)))
    return chunks


def batch_checkpoint_values(proc, n, trials, seed, checkpoints=None, readout="log_norm"):
    """Simulate `trials` independent trajectories for n steps, harvesting the
    chosen readout at the checkpoints. Returns {k: (trials,) array}. Trajectory
    randomness is a fixed function of (seed, trajectory index), split in
    16384-trajectory chunks so any worker partition reproduces identical output."""
    checkpoints = sorted(set(checkpoints or [n]))
    if checkpoints[-1] > n:
        raise ValueError("checkpoint beyond horizon")
    cum = np.cumsum(proc.chain.kernel, axis=1)
    d = proc.d
    out = {k: [] for k in checkpoints}
    for c0, c1, rng in batch_state(proc, trials, seed):
        m = c1 - c0
        states = _batch_start(proc.chain, m, rng)
        units = np.broadcast_to(np.eye(d), (m, d, d)).copy()
        logs = np.zeros(m)
        cps = list(checkpoints)
        for k in range(1, n + 1):
            states = _batch_step(cum, states, rng.random(m))
            units = proc.matrices[states] @ units
            scale = np.abs(units).max(axis=(1, 2))
            units /= scale[:, None, None]
            logs += np.log(scale)
            if cps and k == cps[0]:
                cps.pop(0)
                if readout == "log_norm":
                    out[k].append(batch_log_norm(units, logs))
                elif readout == "displacement":
                    out[k].append(batch_displacement(units, logs))
                else:
                    raise ValueError(readout)
    return {k: np.concatenate(v) for k, v in out.items()}


def _batch_start(chain, m, rng):
    if isinstance(chain.start, (int, np.integer)):
        return np.full(m, int(chain.start), dtype=np.int64)
    start_cum = np.cumsum(chain.start)
    return np.searchsorted(start_cum, rng.random(m)).astype(np.int64)


def _batch_step(cum, states, u):
    nxt = np.empty_like(states)
    for s in np.unique(states):
        sel = states == s
        nxt[sel] = np.searchsorted(cum[s], u[sel])
    return nxt


def batch_exterior_lognorms(proc, n, trials, seed, checkpoints=None, ks=(1, 2)):
    """log||wedge^k M_cp|| per trajectory for each k, via renormalized products
    of the exterior-power matrices. Returns {cp: {k: (trials,) array}}."""
    checkpoints = sorted(set(checkpoints or [n]))
    cum = np.cumsum(proc.chain.kernel, axis=1)
    lifts = {k: np.stack([wedge_power_matrix(m, k) for m in proc.matrices]) for k in ks}
    out = {cp: {k: [] for k in ks} for cp in checkpoints}
    for c0, c1, rng in batch_state(proc, trials, seed):
        m = c1 - c0
        states = _batch_start(proc.chain, m, rng)
        prods = {}
        logs = {}
        for k in ks:
            dk = lifts[k].shape[1]
            prods[k] = np.broadcast_to(np.eye(dk), (m, dk, dk)).copy()
            logs[k] = np.zeros(m)
        cps = list(checkpoints)
        for step in range(1, n + 1):
            states = _batch_step(cum, states, rng.random(m))
            for k in ks:
                prods[k] = lifts[k][states] @ prods[k]
                scale = np.abs(prods[k]).max(axis=(1, 2))
                prods[k] /= scale[:, None, None]
                logs[k] += np.log(scale)
            if cps and step == cps[0]:
                cps.pop(0)
                for k in ks:
                    out[step][k].append(logs[k] + np.log(spectral_norm_batch(prods[k])))
    return {cp: {k: np.concatenate(v) for k, v in d2.items()} for cp, d2 in out.items()}


# ---------------------------------------------------------------------------
# Lyapunov spectrum and the simplicity gap


@dataclass
class LyapunovSpectrum:
    estimates: np.ndarray  # descending
    standard_errors: np.ndarray
    n: int
    trials: int


def lyapunov_spectrum(proc, n, trials, seed=0):
    """Estimates from exterior-power norms: (1/n) log||wedge^k M_n|| estimates
    the k-th partial sum of exponents; successive differences give the spectrum."""
    if not proc.chain.irreducible:
        raise NotIrreducible("Lyapunov spectrum needs an irreducible chain")
    ks = tuple(range(1, proc.d + 1))
    values = batch_exterior_lognorms(proc, n, trials, seed, ks=ks)[n]
    partial = np.stack([values[k] for k in ks], axis=1) / n
    means = partial.mean(axis=0)
    ses = partial.std(axis=0, ddof=1) / math.sqrt(trials)
    est = np.empty(proc.d)
    se = np.empty(proc.d)
    est[0], se[0] = means[0], ses[0]
    for k in range(1, proc.d):
        est[k] = means[k] - means[k - 1]
        se[k] = math.hypot(ses[k], ses[k - 1])
    return LyapunovSpectrum(est, se, n, trials)


def simplicity_gap(proc, n, trials, seed=0, eps_fracs=(0.1, 0.2)):
    """Distribution summary of (2 log||M_n|| - log||wedge^2 M_n||)/n, whose mean
    estimates the top gap; lower-tail frequencies at mean*(1 - frac)."""
    values = batch_exterior_lognorms(proc, n, trials, seed, ks=(1, 2))[n]
    stat = (2.0 * values[1] - values[2]) / n
    mean = float(stat.mean())
    tails = {}
    for frac in eps_fracs:
        thr = mean - frac * abs(mean)
        freq = float(np.mean(stat <= thr)) if abs(mean) > 0 else float(np.mean(stat <= 0))
        tails[frac] = {
            "threshold": thr,
            "frequency": freq,
            "log_rate": math.log(freq) / n if freq > 0 else -math.inf,
        }
    return {"n": n, "trials": trials, "mean": mean, "std": float(stat.std()), "tails": tails}


# ---------------------------------------------------------------------------
# deviation, Berry-Esseen, Wiener, LIL


def wilson_interval(successes, total, z=1.96):
    if total == 0:
        return (0.0, 1.0)
    phat = successes / total
    denom = 1 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return (max(center - half, 0.0), min(center + half, 1.0))


def deviation_curve(proc, lambda_ref, eps, n_list, trials, seed=0, functional="log_norm"):
    """Empirical exceedance table for P(|phi(M_n) - n Lambda| >= n eps)."""
    readout = "log_norm" if functional == "log_norm" else "displacement"
    values = batch_checkpoint_values(proc, max(n_list), trials, seed, checkpoints=n_list, readout=readout)
    rows = []
    for n in sorted(n_list):
        v = values[n]
        exceed = int(np.sum(np.abs(v - n * lambda_ref) >= n * eps))
        freq = exceed / trials
        lo, hi = wilson_interval(exceed, trials)
        rows.append(
            {"n": n, "frequency": freq, "wilson": (lo, hi),
             "log_rate": math.log(freq) / n if freq > 0 else -math.inf}
        )
    finite = [(r["n"], r["log_rate"]) for r in rows if np.isfinite(r["log_rate"])]
    slope = None
    if len(finite) >= 2:
        xs, ys = zip(*finite)
        slope = float(np.polyfit(xs, ys, 1)[0])
    return {"eps": eps, "rows": rows, "rate_slope": slope, "nonnegative_slope": bool(slope is not None and slope >= 0)}


def gaussian_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def berry_esseen_curve(proc, lam, sigma, n_list, trials, seed=0, grid_size=1000):
    """sup_t |F_n(t) - Phi_sigma(t)| on a t-grid for (log||M_n|| - n lam)/sqrt(n),
    with the sqrt(n)/log n scaled column."""
    if not sigma or sigma <= 0:
        raise SigmaZero("positive sigma required")
    values = batch_checkpoint_values(proc, max(n_list), trials, seed, checkpoints=n_list)
    rows = []
    for n in sorted(n_list):
        z = np.sort((values[n] - n * lam) / math.sqrt(n))
        degenerate = bool(z.std() < 1e-12)
        grid = np.linspace(-5 * sigma, 5 * sigma, grid_size)
        emp = np.searchsorted(z, grid, side="right") / trials
        gauss = np.array([gaussian_cdf(t / sigma) for t in grid])
        sup = float(np.abs(emp - gauss).max())
        rows.append(
            {"n": n, "sup_distance": sup, "scaled": sup * math.sqrt(n) / math.log(n),
             "degenerate": degenerate}
        )
    return rows


def wiener_path(traj, lam, sigma, grid=None):
    """Affine interpolation S_n(t) = (log||M_[tn]|| - n t lam + frac * increment)
    / sqrt(n sigma^2), sampled on a grid in [0, 1]."""
    if not sigma or sigma <= 0:
        raise SigmaZero("positive sigma required")
    n = traj.n
    ts = np.asarray(grid if grid is not None else np.linspace(0.0, 1.0, 101))
    out = np.empty_like(ts)
    for i, t in enumerate(ts):
        k = min(int(math.floor(t * n)), n)
        frac = t * n - k
        base = traj.log_norm[k] - n * t * lam
        if k < n:
            base += frac * (traj.log_norm[k + 1] - traj.log_norm[k])
        out[i] = base / math.sqrt(n * sigma * sigma)
    return ts, out


def geometric_checkpoints(n_total, first=16):
    cps = []
    k = first
    while k < n_total:
        cps.append(k)
        k *= 2
    cps.append(n_total)
    return cps


def lil_statistic(trajs, lam, sigma, checkpoints=None):
    """Per-trajectory running max/min of (log||M_n|| - n lam)/sqrt(2 sigma^2 n ln ln n)
    over geometric checkpoints (n >= 16 so the normalizer is defined)."""
    if not sigma or sigma <= 0:
        raise SigmaZero("positive sigma required")
    records = []
    for traj in trajs:
        cps = checkpoints or geometric_checkpoints(traj.n)
        stats = []
        for k in cps:
            norm = math.sqrt(2 * sigma * sigma * k * math.log(math.log(k)))
            stats.append((traj.log_norm[k] - k * lam) / norm)
        stats = np.array(stats)
        records.append({"checkpoints": list(cps), "stats": stats,
                        "running_max": float(stats.max()), "running_min": float(stats.min())})
    return records


def lil_experiment(proc, n_total, trials, lam, sigma, seed=0):
    """Batched LIL run: running max/min per trajectory over geometric checkpoints."""
    if not sigma or sigma <= 0:
        raise SigmaZero("positive sigma required")
    cps = geometric_checkpoints(n_total)
    values = batch_checkpoint_values(proc, n_total, trials, seed, checkpoints=cps)
    stats = np.stack(
        [
            (values[k] - k * lam) / math.sqrt(2 * sigma * sigma * k * math.log(math.log(k)))
            for k in cps
        ],
        axis=1,
    )
    return {"checkpoints": cps, "running_max": stats.max(axis=1), "running_min": stats.min(axis=1)}


# ---------------------------------------------------------------------------
# calibration, cross-component agreement, two-sample KS


def calibrate(proc, n, trials, seed=0):
    """Lambda and sigma^2 estimates (with standard errors) from endpoint norms."""
    v = batch_checkpoint_values(proc, n, trials, seed)[n]
    lam = float(v.mean() / n)
    lam_se = float(v.std(ddof=1) / math.sqrt(trials) / n)
    sig2 = float(v.var(ddof=1) / n)
    sig2_se = sig2 * math.sqrt(2.0 / max(trials - 1, 1))
    return {"lambda": lam, "lambda_se": lam_se, "sigma2": sig2, "sigma2_se": sig2_se,
            "n": n, "trials": trials}


def cross_component_consistency(aut, rep, n, trials, seed=0):
    """Per-maximal-component Lyapunov mean and variance of the edge-chain
    process; flags any pair differing by more than 3 joint standard errors."""
    from . import spectral as sp

    tm = sp.TransitionMatrix.from_automaton(aut)
    decomp = sp.scc_decomposition(tm)
    lam = sp.growth_rate(tm)
    idx, disjoint = sp.maximal_components(tm, decomp, lam)
    reports = []
    for ci in idx:
        parry = sp.parry_measure(tm, decomp.components[ci])
        proc = parry_product_process(aut, sp.edge_chain(parry), rep)
        reports.append(calibrate(proc, n, trials, seed=seed + ci))
    flagged = []
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            a, b = reports[i], reports[j]
            dl = abs(a["lambda"] - b["lambda"])
            se_l = math.hypot(a["lambda_se"], b["lambda_se"])
            ds = abs(a["sigma2"] - b["sigma2"])
            se_s = math.hypot(a["sigma2_se"], b["sigma2_se"])
            if dl > 3 * se_l or ds > 3 * se_s:
                flagged.append((i, j, dl, 3 * se_l, ds, 3 * se_s))
    return {"components": reports, "disjoint": disjoint, "flagged": flagged,
            "consistent": not flagged}


def kolmogorov_sf(lam):
    """Asymptotic Kolmogorov survival function Q(lam) = 2 sum (-1)^{j-1} exp(-2 j^2 lam^2)."""
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(max(total, 0.0), 1.0)


def ks_two_sample(x, y):
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    x = np.sort(np.asarray(x))
    y = np.sort(np.asarray(y))
    allv = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, allv, side="right") / len(x)
    cdf_y = np.searchsorted(y, allv, side="right") / len(y)
    d = float(np.abs(cdf_x - cdf_y).max())
    en = math.sqrt(len(x) * len(y) / (len(x) + len(y)))
    return d, kolmogorov_sf(d * en)


# ---------------------------------------------------------------------------
# builtin processes


def coin_diagonal_process():
    """iid coin: X = diag(4, 1/4) or the identity with probability 1/2 each,
    as a 2-state chain with equal rows. log||M_n|| = K_n log 4 with K_n binomial,
    so Lambda = log(4)/2 and sigma = log(4)/2 exactly."""
    chain = FiniteChain(("hit", "idle"), np.array([[0.5, 0.5], [0.5, 0.5]]),
                        np.array([0.5, 0.5]))
    mats = np.stack([np.diag([4.0, 0.25]), np.eye(2)])
    return MarkovMatrixProcess(chain, mats)
