"""Concrete group arithmetic: symmetric alphabets, word oracles for free groups,
free products of finite cyclic groups and C'(1/6) small-cancellation presentations,
matrix representations with renormalized long products, and subadditive functionals.
"""
from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    InvalidOrders,
    NotSmallCancellation,
    NotUnimodular,
    ParseError,
    SingularImage,
    UnknownSymbol,
)

NORM_WINDOW = (0.5, 2.0)


# ---------------------------------------------------------------------------
# alphabets and words


class GeneratorAlphabet:
    """A finite symmetric generating alphabet with an involutive inverse pairing."""

    def __init__(self, symbols, inverse_pairing):
        self.symbols = tuple(symbols)
        self.inverse_pairing = dict(inverse_pairing)
        symset = set(self.symbols)
        if len(symset) != len(self.symbols):
            raise ValueError("duplicate symbols")
        for s in self.symbols:
            t = self.inverse_pairing.get(s)
            if t is None or t not in symset:
                raise ValueError(f"alphabet not symmetric at {s!r}")
            if self.inverse_pairing.get(t) != s:
                raise ValueError(f"inverse pairing is not an involution at {s!r}")
        if set(self.inverse_pairing) != symset:
            raise ValueError("pairing domain differs from symbol set")

    def inverse(self, s):
        try:
            return self.inverse_pairing[s]
        except KeyError:
            raise UnknownSymbol(s) from None

    def __contains__(self, s):
        return s in self.inverse_pairing

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return (
            isinstance(other, GeneratorAlphabet)
            and self.symbols == other.symbols
            and self.inverse_pairing == other.inverse_pairing
        )


@dataclass(frozen=True)
class Word:
    """A word in a generating alphabet, stored as a tuple of symbol names."""

    letters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __add__(self, other):
        return Word(self.letters + tuple(other))


def word(*letters):
    return Word(tuple(letters))


def inverse_word(w, alphabet):
    return Word(tuple(alphabet.inverse(s) for s in reversed(tuple(w))))


def _gen_name(i):
    if i < 26:
        return string.ascii_lowercase[i]
    return f"x{i}"


def free_alphabet(rank):
    """Standard free alphabet a, A=a^-1, b, B, ... for the given rank."""
    syms, pairing = [], {}
    for i in range(rank):
        lo = _gen_name(i)
        hi = lo.upper() if len(lo) == 1 else "X" + lo[1:]
        syms += [lo, hi]
        pairing[lo] = hi
        pairing[hi] = lo
    return GeneratorAlphabet(syms, pairing)


_FACTOR_LETTERS = "stuvwpqr"


def free_product_alphabet(orders):
    """Alphabet for a free product of cyclic groups: one symbol per nonidentity
    power of each factor, so that syllable count equals word length.

    Returns (alphabet, info) with info[symbol] = (factor index, power).
    """
    syms, pairing, info = [], {}, {}
    for i, o in enumerate(orders):
        letter = _FACTOR_LETTERS[i] if i < len(_FACTOR_LETTERS) else f"f{i}_"
        for p in range(1, o):
            name = letter if o == 2 else f"{letter}{p}"
            syms.append(name)
            info[name] = (i, p)
    for name, (i, p) in info.items():
        o = orders[i]
        letter = _FACTOR_LETTERS[i] if i < len(_FACTOR_LETTERS) else f"f{i}_"
        inv = letter if o == 2 else f"{letter}{o - p}"
        pairing[name] = inv
    return GeneratorAlphabet(syms, pairing), info


# ---------------------------------------------------------------------------
# oracles


class GroupOracle:
    """Word-problem oracle: reduce() returns a fixpoint normal form.

    For free and free-product oracles the normal form is the unique geodesic
    representative; for Dehn oracles it is a Dehn-reduced word (geodesic length
    is reached, uniqueness is not guaranteed).
    """

    kind = "abstract"
    unique_normal_forms = False

    def __init__(self, alphabet):
        self.alphabet = alphabet

    def _check(self, w):
        for s in w:
            if s not in self.alphabet:
                raise UnknownSymbol(s)

    def reduce(self, w):
        raise NotImplementedError

    def equal(self, u, v):
        uv = tuple(u) + tuple(inverse_word(v, self.alphabet))
        return len(self.reduce(Word(uv))) == 0


class FreeOracle(GroupOracle):
    kind = "free"
    unique_normal_forms = True

    def __init__(self, rank):
        if rank < 1:
            raise InvalidOrders("free rank must be >= 1")
        self.rank = rank
        super().__init__(free_alphabet(rank))

    def reduce(self, w):
        self._check(w)
        out = []
        inv = self.alphabet.inverse_pairing
        for s in w:
            if out and out[-1] == inv[s]:
                out.pop()
            else:
                out.append(s)
        return Word(tuple(out))


class FreeProductOracle(GroupOracle):
    kind = "free_product"
    unique_normal_forms = True

    def __init__(self, orders):
        orders = tuple(int(o) for o in orders)
        if len(orders) < 2 or any(o < 2 for o in orders):
            raise InvalidOrders(f"need >= 2 cyclic factors of order >= 2, got {orders}")
        self.orders = orders
        alphabet, info = free_product_alphabet(orders)
        self.symbol_info = info
        self._by_factor = {}
        for name, (i, p) in info.items():
            self._by_factor[(i, p)] = name
        super().__init__(alphabet)

    def symbol(self, factor, power):
        power %= self.orders[factor]
        if power == 0:
            return None
        return self._by_factor[(factor, power)]

    def reduce(self, w):
        self._check(w)
        syll = []  # list of [factor, power]
        for s in w:
            f, p = self.symbol_info[s]
            if syll and syll[-1][0] == f:
                syll[-1][1] = (syll[-1][1] + p) % self.orders[f]
                if syll[-1][1] == 0:
                    syll.pop()
            else:
                syll.append([f, p])
        return Word(tuple(self._by_factor[(f, p)] for f, p in syll))


def _cyclic_rotations(t):
    return [t[i:] + t[:i] for i in range(len(t))]


class DehnOracle(GroupOracle):
    """Greedy Dehn's algorithm for presentations passing an automated C'(1/6) check."""

    kind = "dehn"
    unique_normal_forms = False

    def __init__(self, generators, relators):
        alphabet = free_alphabet(len(generators))
        rename = {}
        for i, g in enumerate(generators):
            lo = _gen_name(i)
            rename[g] = lo
            rename[g.upper() if len(g) == 1 else "X" + g[1:]] = alphabet.inverse(lo)
        super().__init__(alphabet)
        self._free = FreeOracle(len(generators))
        rels = []
        for r in relators:
            letters = tuple(rename.get(s, s) for s in r)
            red = self._cyclically_reduce(self._free.reduce(Word(letters)).letters)
            if not red:
                raise NotSmallCancellation("trivial relator")
            rels.append(red)
        self.relators = tuple(rels)
        self._symmetrized = self._symmetrize()
        self._check_c16()
        # all factors of more than half of a symmetrized relator, with replacement
        self._table = {}
        for r in self._symmetrized:
            n = len(r)
            for k in range(n // 2 + 1, n + 1):
                u = r[:k]
                v = tuple(self.alphabet.inverse(s) for s in reversed(r[k:]))
                prev = self._table.get(u)
                if prev is None or len(v) < len(prev):
                    self._table[u] = v
        self._max_piece_len = max(len(u) for u in self._table)

    def _cyclically_reduce(self, t):
        t = list(t)
        inv = self.alphabet.inverse_pairing
        while len(t) >= 2 and t[0] == inv[t[-1]]:
            t = t[1:-1]
        return tuple(t)

    def _symmetrize(self):
        out = set()
        for r in self.relators:
            rinv = tuple(self.alphabet.inverse(s) for s in reversed(r))
            for w in _cyclic_rotations(r) + _cyclic_rotations(rinv):
                out.add(w)
        return sorted(out)

    def _check_c16(self):
        words = self._symmetrized
        for r in self.relators:
            if len(set(_cyclic_rotations(r))) != len(r):
                raise NotSmallCancellation("relator is a proper power")
        # longest common prefix over distinct symmetrized relators = longest piece
        by_rel = {}
        for w in words:
            n = len(w)
            best = 0
            for w2 in words:
                if w2 == w:
                    continue
                k = 0
                m = min(len(w), len(w2))
                while k < m and w[k] == w2[k]:
                    k += 1
                best = max(best, k)
            by_rel[n] = max(by_rel.get(n, 0), best)
        for n, piece in by_rel.items():
            if not piece < n / 6.0:
                raise NotSmallCancellation(
                    f"piece of length {piece} in relator of length {n} violates C'(1/6)"
                )

    def reduce(self, w):
        self._check(w)
        cur = self._free.reduce(w).letters
        while True:
            n = len(cur)
            hit = None
            # longest match first, then leftmost
            for k in range(min(n, self._max_piece_len), 0, -1):
                for i in range(n - k + 1):
                    v = self._table.get(cur[i : i + k])
                    if v is not None:
                        hit = (i, k, v)
                        break
                if hit:
                    break
            if hit is None:
                return Word(cur)
            i, k, v = hit
            cur = self._free.reduce(Word(cur[:i] + v + cur[i + k :])).letters


def reduce_word(w, oracle):
    """Normal form of w in the oracle's group; idempotent."""
    return oracle.reduce(w)


def word_length(w, oracle):
    return len(oracle.reduce(w))


def gromov_product(g, h, oracle):
    """<g,h> = (|g| + |h| - |g^-1 h|)/2, exact as a Fraction (half-integers)."""
    lg = word_length(g, oracle)
    lh = word_length(h, oracle)
    ginv_h = inverse_word(g, oracle.alphabet) + tuple(h)
    doubled = lg + lh - word_length(ginv_h, oracle)
    return Fraction(doubled, 2)


def sphere_sizes_normal_form(oracle, n_max):
    """Sphere sizes from the normal-form theory (independent of any automaton):
    free(k) has 2k(2k-1)^(n-1) reduced words; free products count alternating
    syllable sequences."""
    if oracle.kind == "free":
        k = oracle.rank
        return [1] + [2 * k * (2 * k - 1) ** (n - 1) for n in range(1, n_max + 1)]
    if oracle.kind == "free_product":
        orders = oracle.orders
        t = [o - 1 for o in orders]  # normal forms of syllable length 1 by last factor
        sizes = [1, sum(t)]
        for _ in range(2, n_max + 1):
            total = sum(t)
            t = [(o - 1) * (total - t_i) for o, t_i in zip(orders, t)]
            sizes.append(sum(t))
        return sizes[: n_max + 1]
    raise ValueError("no closed-form sphere count for this oracle kind")


def sphere_sizes_bfs(oracle, n_max):
    """Exhaustive Cayley BFS sphere sizes [#S_0, ..., #S_n_max].

    Requires unique normal forms (free / free_product oracles).
    """
    if not oracle.unique_normal_forms:
        raise ValueError("BFS census needs an oracle with unique normal forms")
    sizes = [1]
    frontier = {(): None}
    seen = {()}
    for _ in range(n_max):
        nxt = set()
        for w in frontier:
            for s in oracle.alphabet:
                r = oracle.reduce(Word(w + (s,))).letters
                if r not in seen and len(r) == len(w) + 1:
                    nxt.add(r)
        # elements may also appear at the same or smaller radius; only new,
        # strictly longer normal forms belong to the next sphere
        seen |= nxt
        sizes.append(len(nxt))
        frontier = dict.fromkeys(nxt)
    return sizes


# ---------------------------------------------------------------------------
# scaled matrices and spectral data


def _jacobi_eigenvalues(sym):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps,
    iterated until the off-diagonal mass is below 1e-12 of the Frobenius norm.
    """
    a = np.array(sym, dtype=float, copy=True)
    n = a.shape[0]
    fro = math.sqrt((a * a).sum())
    if fro == 0.0:
        return np.zeros(n)
    for _ in range(100):
        off = math.sqrt(max((a * a).sum() - (np.diag(a) ** 2).sum(), 0.0))
        if off <= 1e-12 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-30 * fro:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def singular_values(m):
    """Singular values in decreasing order: closed form for d=2, Jacobi on MᵀM for d>=3."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    if d == 1:
        return np.array([abs(m[0, 0])])
    if d == 2:
        t = float((m * m).sum())
        det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        disc = max(t * t - 4.0 * det * det, 0.0)
        s1sq = 0.5 * (t + math.sqrt(disc))
        s1 = math.sqrt(max(s1sq, 0.0))
        s2 = abs(det) / s1 if s1 > 0 else 0.0
        return np.array([s1, s2])
    eig = _jacobi_eigenvalues(m.T @ m)
    return np.sqrt(np.clip(eig, 0.0, None))


def spectral_norm(m):
    return float(singular_values(m)[0])


def spectral_norm_batch(mats):
    """Vectorized top singular value: closed form for a (N, 2, 2) stack,
    batched symmetric eigensolve on MᵀM otherwise."""
    mats = np.asarray(mats)
    if mats.shape[-1] != 2:
        gram = np.einsum("nji,njk->nik", mats, mats)
        return np.sqrt(np.clip(np.linalg.eigvalsh(gram)[:, -1], 0.0, None))
    t = (mats * mats).sum(axis=(-2, -1))
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    disc = np.clip(t * t - 4.0 * det * det, 0.0, None)
    return np.sqrt(0.5 * (t + np.sqrt(disc)))


def batch_log_norm(units, logs):
    """log operator norms for a renormalized stack (units (N,d,d), logs (N,))."""
    return logs + np.log(spectral_norm_batch(units))


def batch_singular_logs(units, logs):
    """(N, d) descending log singular values for a renormalized stack."""
    mats = np.asarray(units)
    if mats.shape[-1] == 2:
        top = np.log(spectral_norm_batch(mats))
        _, logdet = np.linalg.slogdet(mats)
        return np.stack([top + logs, logdet - top + logs], axis=1)
    gram = np.einsum("nji,njk->nik", mats, mats)
    eig = np.clip(np.linalg.eigvalsh(gram), 1e-300, None)[:, ::-1]
    return 0.5 * np.log(eig) + logs[:, None]


def wedge_power_matrix(m, k):
    """k-th exterior power of a d x d matrix: entries are k x k minors indexed by
    sorted k-subsets. Satisfies ||wedge^k M|| = product of the top k singular values."""
    import itertools

    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    subsets = list(itertools.combinations(range(d), k))
    out = np.empty((len(subsets), len(subsets)))
    for a, rows in enumerate(subsets):
        for b, cols in enumerate(subsets):
            out[a, b] = np.linalg.det(m[np.ix_(rows, cols)])
    return out


def batch_displacement(units, logs):
    """Vectorized hyperbolic displacement for det-1 2x2 stacks, in log scale."""
    f2 = (units * units).sum(axis=(1, 2))
    log_x = 2.0 * logs + np.log(f2 / 2.0)
    out = np.empty_like(log_x)
    big = log_x > 30.0
    out[big] = math.log(2.0) + log_x[big]
    out[~big] = np.arccosh(np.maximum(np.exp(log_x[~big]), 1.0))
    return out


@dataclass(frozen=True)
class ScaledMatrix:
    """Matrix exp(log_scale) * unit with the unit's operator norm kept in [0.5, 2]."""

    unit: np.ndarray
    log_scale: float = 0.0

    @staticmethod
    def from_matrix(m):
        m = np.array(m, dtype=float)
        return ScaledMatrix(m, 0.0).renormalized()

    @staticmethod
    def identity(d):
        return ScaledMatrix(np.eye(d), 0.0)

    @property
    def dim(self):
        return self.unit.shape[0]

    def renormalized(self):
        s = spectral_norm(self.unit)
        if s == 0.0 or not np.isfinite(s):
            raise SingularImage("zero or non-finite matrix")
        if NORM_WINDOW[0] <= s <= NORM_WINDOW[1]:
            return self
        return ScaledMatrix(self.unit / s, self.log_scale + math.log(s))

    def rmul(self, m):
        """Product self @ m (appending a letter on the right), renormalized."""
        return ScaledMatrix(self.unit @ m, self.log_scale).renormalized()

    def lmul(self, m):
        """Product m @ self (a Markovian step on the left), renormalized."""
        return ScaledMatrix(m @ self.unit, self.log_scale).renormalized()

    def represented(self):
        return math.exp(self.log_scale) * self.unit

    def log_abs_det(self):
        sign, logdet = np.linalg.slogdet(self.unit)
        if sign == 0:
            raise SingularImage("singular unit")
        return self.dim * self.log_scale + float(logdet)


def log_operator_norm(m: ScaledMatrix):
    """log of the Euclidean operator norm of the represented matrix."""
    return m.log_scale + math.log(spectral_norm(m.unit))


def cartan_vector(m: ScaledMatrix):
    """Descending log singular values of the represented matrix; sums to log|det|."""
    sv = singular_values(m.unit)
    if sv[-1] <= 0:
        raise SingularImage("singular matrix has no Cartan vector")
    return np.log(sv) + m.log_scale


def displacement_h2(m: ScaledMatrix):
    """Hyperbolic displacement d(g·i, i) = arccosh((a²+b²+c²+d²)/2) for g in SL2(R).

    Computed in log scale so that products of length ~1e6 do not overflow.
    """
    if m.dim != 2:
        raise NotUnimodular("displacement defined for 2x2 unimodular matrices")
    if abs(m.log_abs_det()) > 1e-9:
        raise NotUnimodular("determinant is not +-1 within 1e-9")
    det = float(np.linalg.det(m.unit)) * math.exp(2 * m.log_scale)
    if det < 0:
        raise NotUnimodular("determinant -1 does not act on the upper half-plane")
    f2 = float((m.unit * m.unit).sum())
    log_x = 2.0 * m.log_scale + math.log(f2 / 2.0)  # x = (sum of squares)/2
    if log_x > 30.0:
        # arccosh(x) = log(2x) + O(x^-2), error far below double precision here
        return math.log(2.0) + log_x
    x = math.exp(log_x)
    return math.acosh(max(x, 1.0))


# ---------------------------------------------------------------------------
# representations


class LinearRepresentation:
    """Generator-to-matrix map; inverse letters must map to inverse matrices."""

    def __init__(self, dimension, images, alphabet):
        self.dimension = int(dimension)
        self.alphabet = alphabet
        self.images = {}
        for s, m in images.items():
            arr = np.array(m, dtype=float)
            if arr.shape != (self.dimension, self.dimension):
                raise ParseError(f"image of {s!r} has shape {arr.shape}")
            self.images[s] = arr
        if set(self.images) != set(alphabet.symbols):
            raise ParseError("images must cover the alphabet exactly")
        for s in alphabet:
            m = self.images[s]
            if abs(np.linalg.det(m)) < 1e-300:
                raise SingularImage(f"image of {s!r} is singular")
            minv = np.linalg.inv(m)
            other = self.images[alphabet.inverse(s)]
            scale = max(np.abs(minv).max(), 1e-300)
            if np.abs(other - minv).max() > 1e-10 * scale:
                raise ParseError(f"image of {s!r}^-1 is not the inverse image")

    def image(self, s):
        try:
            return self.images[s]
        except KeyError:
            raise UnknownSymbol(s) from None


def eval_representation(rep, w):
    """Product of generator images along w, as a renormalized ScaledMatrix."""
    acc = ScaledMatrix.identity(rep.dimension)
    for s in w:
        acc = acc.rmul(rep.image(s))
    return acc


def load_representation(text):
    try:
        data = json.loads(text)
        dim = data["dimension"]
        pairing = data["inverse_pairing"]
        raw = data["images"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(str(exc)) from exc
    alphabet = GeneratorAlphabet(sorted(raw), pairing)
    images = {s: np.array(m, dtype=float).reshape(dim, dim) for s, m in raw.items()}
    return LinearRepresentation(dim, images, alphabet)


def serialize_representation(rep):
    return json.dumps(
        {
            "dimension": rep.dimension,
            "images": {s: [float(x) for x in rep.images[s].ravel()] for s in rep.alphabet},
            "inverse_pairing": dict(rep.alphabet.inverse_pairing),
        },
        sort_keys=True,
    )


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return [[c, -s], [s, c]]


def builtin_representation(name, alphabet=None):
    """Named representations used by the experiments.

    sanov     : free(2) -> SL2(Z), a=[[1,2],[0,1]], b=[[1,0],[2,1]]
    rotation  : free(2) -> SO(2), orthogonal images (log-norm identically 0)
    fuchsian  : Z/2 * Z/3 -> GL2(R), involution s and order-3 t with st hyperbolic
    """
    if name == "sanov":
        alphabet = alphabet or free_alphabet(2)
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        b = np.array([[1.0, 0.0], [2.0, 1.0]])
        images = {"a": a, "A": np.linalg.inv(a), "b": b, "B": np.linalg.inv(b)}
        return LinearRepresentation(2, images, alphabet)
    if name == "rotation":
        alphabet = alphabet or free_alphabet(2)
        images = {
            "a": _rot(1.0),
            "A": _rot(-1.0),
            "b": _rot(math.sqrt(2.0) - 1.0),
            "B": _rot(1.0 - math.sqrt(2.0)),
        }
        return LinearRepresentation(2, images, alphabet)
    if name == "fuchsian":
        alphabet = alphabet or free_product_alphabet((2, 3))[0]
        s = np.array([[1.0, 1.0], [0.0, -1.0]])
        t = np.array([[0.0, -1.0], [1.0, -1.0]])
        images = {"s": s, "t1": t, "t2": np.linalg.inv(t)}
        return LinearRepresentation(2, images, alphabet)
    raise KeyError(f"unknown builtin representation {name!r}")


# ---------------------------------------------------------------------------
# subadditive functionals


@dataclass
class SubadditiveFunctional:
    """phi(g) with phi(gh) <= phi(g) + phi(h).

    kinds: log_norm (log operator norm of a representation), displacement_h2
    (hyperbolic displacement of a det-1 representation), word_length (length
    under a translated alphabet in another oracle), abs_homomorphism
    (|sum of letter weights|; the signed sum is a homomorphism to R).
    """

    kind: str
    rep: LinearRepresentation = None
    oracle: GroupOracle = None
    translation: dict = None
    weights: dict = None
    alphabet: GeneratorAlphabet = None

    def __post_init__(self):
        if self.kind not in {"log_norm", "displacement_h2", "word_length", "abs_homomorphism"}:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "abs_homomorphism" and self.alphabet is not None:
            for s in self.alphabet:
                inv = self.alphabet.inverse(s)
                if abs(self.weights.get(s, 0.0) + self.weights.get(inv, 0.0)) > 1e-12:
                    raise ValueError("weights must be odd under inversion")

    def lipschitz_constant(self, alphabet):
        """max over generators of |phi(s)|; phi is Lipschitz with this constant
        in both the left and right word metrics."""
        return max(abs(eval_functional(self, Word((s,)))) for s in alphabet)


def signed_weight_sum(f, w):
    return sum(f.weights.get(s, 0.0) for s in w)


def eval_functional(f, w):
    if f.kind == "log_norm":
        return log_operator_norm(eval_representation(f.rep, w))
    if f.kind == "displacement_h2":
        return displacement_h2(eval_representation(f.rep, w))
    if f.kind == "word_length":
        translated = []
        for s in w:
            piece = f.translation[s] if f.translation else (s,)
            translated.extend(piece)
        return float(word_length(Word(tuple(translated)), f.oracle))
    if f.kind == "abs_homomorphism":
        return abs(signed_weight_sum(f, w))
    raise ValueError(f.kind)


def builtin_functional(name, oracle=None):
    if name == "log_norm:sanov":
        return SubadditiveFunctional("log_norm", rep=builtin_representation("sanov"))
    if name == "log_norm:rotation":
        return SubadditiveFunctional("log_norm", rep=builtin_representation("rotation"))
    if name == "log_norm:fuchsian":
        return SubadditiveFunctional("log_norm", rep=builtin_representation("fuchsian"))
    if name == "displacement:sanov":
        return SubadditiveFunctional("displacement_h2", rep=builtin_representation("sanov"))
    if name == "word_length":
        if oracle is None:
            oracle = FreeOracle(2)
        return SubadditiveFunctional("word_length", oracle=oracle, translation=None)
    if name == "abs_homomorphism":
        return SubadditiveFunctional(
            "abs_homomorphism",
            weights={"a": 1.0, "A": -1.0, "b": 0.0, "B": 0.0},
            alphabet=free_alphabet(2),
        )
    raise KeyError(f"unknown builtin functional {name!r}")
