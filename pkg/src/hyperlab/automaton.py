"""Geodesic coding automata: builders for free groups and free products,
JSON (de)serialization, the 0-vertex augmentation, and exhaustive validation
of the coding bijection against a word-problem oracle.

A valid structure is a labeled directed graph whose paths from the start
vertex "*" biject with group elements, path length matching word length.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    AlreadyAugmented,
    DepthTooLarge,
    DuplicateEdge,
    EdgeIntoStart,
    InvalidOrders,
    ParseError,
    UnknownSymbol,
)
from .group_core import (
    FreeOracle,
    FreeProductOracle,
    GeneratorAlphabet,
    Word,
    free_alphabet,
    free_product_alphabet,
    sphere_sizes_bfs,
    sphere_sizes_normal_form,
)

START = "*"
ZERO = "0"
ID_LABEL = "id"


class Automaton:
    """Immutable labeled digraph with distinguished start vertex "*" and at most
    one edge per ordered vertex pair; vertex "0" (if present) is the absorbing
    augmentation vertex whose incoming edges all carry the identity label."""

    def __init__(self, alphabet, vertices, edges, augmented=False):
        self.alphabet = alphabet
        self.vertices = tuple(vertices)
        self.augmented = bool(augmented)
        vset = set(self.vertices)
        if START not in vset:
            raise ParseError("missing start vertex '*'")
        if len(vset) != len(self.vertices):
            raise ParseError("duplicate vertices")
        edge_map = {}
        for src, dst, label in edges:
            if src not in vset or dst not in vset:
                raise ParseError(f"edge endpoint not a vertex: {(src, dst)}")
            if dst == START:
                raise EdgeIntoStart(f"edge {(src, dst)} enters the start vertex")
            if (src, dst) in edge_map:
                raise DuplicateEdge(f"parallel edge {(src, dst)}")
            if label != ID_LABEL and label not in self.alphabet:
                raise ParseError(f"unknown label {label!r}")
            if label == ID_LABEL and dst != ZERO:
                raise ParseError("identity labels are reserved for edges into 0")
            edge_map[(src, dst)] = label
        self.edge_labels = edge_map
        succ = {v: [] for v in self.vertices}
        for (src, dst), label in edge_map.items():
            succ[src].append((dst, label))
        for v in succ:
            succ[v].sort()
        self.successors = succ
        if self.augmented:
            if ZERO not in vset:
                raise ParseError("augmented flag set but no vertex 0")
            for v in self.vertices:
                if edge_map.get((v, ZERO)) != ID_LABEL:
                    raise ParseError(f"augmented automaton lacks id edge {v} -> 0")

    # -- structure ---------------------------------------------------------

    def coding_vertices(self):
        """Vertices of the counting matrix A' (everything except 0)."""
        return tuple(v for v in self.vertices if v != ZERO)

    def coding_successors(self, v):
        return [(u, lab) for (u, lab) in self.successors[v] if u != ZERO]

    def label(self, src, dst):
        return self.edge_labels[(src, dst)]

    def paths_from_start(self, depth):
        """Yield (vertex path excluding '*', word letters) for all depth-n
        coding paths (0 avoided)."""
        if depth == 0:
            yield (), ()
            return
        stack = [((), (), START)]
        while stack:
            path, letters, v = stack.pop()
            for u, lab in self.coding_successors(v):
                np_, nl = path + (u,), letters + (lab,)
                if len(np_) == depth:
                    yield np_, nl
                else:
                    stack.append((np_, nl, u))

    def path_of_word(self, w):
        """Follow edge labels from '*' along the reduced word w; None if the word
        is not the label sequence of a coding path."""
        v = START
        path = [START]
        for s in w:
            nxt = [u for (u, lab) in self.coding_successors(v) if lab == s]
            if len(nxt) != 1:
                return None
            v = nxt[0]
            path.append(v)
        return tuple(path)

    def serialize(self):
        edges = sorted([src, dst, lab] for (src, dst), lab in self.edge_labels.items())
        return json.dumps(
            {
                "alphabet": list(self.alphabet.symbols),
                "inverse_pairing": dict(self.alphabet.inverse_pairing),
                "vertices": list(self.vertices),
                "start": START,
                "edges": edges,
                "augmented": self.augmented,
            },
            sort_keys=True,
        )

    def __eq__(self, other):
        return isinstance(other, Automaton) and self.serialize() == other.serialize()


def build_free_group_automaton(rank):
    """Classical coding of a free group: one vertex per letter; x -> y unless
    y is the inverse of x. Satisfies the coding bijection exactly."""
    if rank < 1:
        raise InvalidOrders("rank must be >= 1")
    alphabet = free_alphabet(rank)
    vertices = [START] + list(alphabet.symbols)
    edges = [(START, s, s) for s in alphabet]
    for x in alphabet:
        for y in alphabet:
            if y != alphabet.inverse(x):
                edges.append((x, y, y))
    return Automaton(alphabet, vertices, edges)


def build_free_product_automaton(orders):
    """Syllable coding of a free product of finite cyclic groups with all
    nonidentity powers as generators: states are the generators themselves and
    transitions change factor."""
    orders = tuple(int(o) for o in orders)
    if len(orders) < 2 or any(o < 2 for o in orders):
        raise InvalidOrders(f"need >= 2 factors of order >= 2, got {orders}")
    alphabet, info = free_product_alphabet(orders)
    vertices = [START] + list(alphabet.symbols)
    edges = [(START, s, s) for s in alphabet]
    for x in alphabet:
        for y in alphabet:
            if info[x][0] != info[y][0]:
                edges.append((x, y, y))
    return Automaton(alphabet, vertices, edges)


def augment_zero_vertex(aut):
    """Add the absorbing vertex 0 with identity-labeled edges from every vertex."""
    if aut.augmented or ZERO in aut.vertices:
        raise AlreadyAugmented("automaton already has a 0 vertex")
    vertices = aut.vertices + (ZERO,)
    edges = [(src, dst, lab) for (src, dst), lab in aut.edge_labels.items()]
    edges += [(v, ZERO, ID_LABEL) for v in aut.vertices]
    edges.append((ZERO, ZERO, ID_LABEL))
    return Automaton(aut.alphabet, vertices, edges, augmented=True)


def load_automaton(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    try:
        alphabet = GeneratorAlphabet(data["alphabet"], data["inverse_pairing"])
        vertices = data["vertices"]
        edges = [tuple(e) for e in data["edges"]]
        augmented = bool(data.get("augmented", False))
        if data.get("start", START) != START:
            raise ParseError("start vertex must be named '*'")
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    return Automaton(alphabet, vertices, edges, augmented=augmented)


# ---------------------------------------------------------------------------
# fixtures (synthetic automata used by experiments and tests)


def build_golden_automaton():
    """Period-2 bipartite automaton with Fibonacci-type inhomogeneous path counts
    (growth rate = golden ratio). Not a group coding; used to exercise the
    finite-n/limit measure comparisons non-degenerately."""
    alphabet = GeneratorAlphabet(["p", "q"], {"p": "q", "q": "p"})
    vertices = [START, "x1", "x2", "y1", "y2"]
    edges = [(START, v, "p" if v.startswith("x") else "q") for v in vertices[1:]]
    for src, dst in [("x1", "y1"), ("x2", "y1"), ("x2", "y2"), ("y1", "x1"), ("y1", "x2"), ("y2", "x2")]:
        edges.append((src, dst, "p" if dst.startswith("x") else "q"))
    return Automaton(alphabet, vertices, edges)


def build_twin_free2_automaton():
    """Two disjoint copies of the free(2) letter component hanging off '*':
    a fixture with two maximal components (both of spectral radius 3)."""
    syms = ["a", "A", "b", "B", "c", "C", "d", "D"]
    pairing = {}
    for i in range(0, len(syms), 2):
        pairing[syms[i]] = syms[i + 1]
        pairing[syms[i + 1]] = syms[i]
    alphabet = GeneratorAlphabet(syms, pairing)
    vertices = [START] + syms
    edges = [(START, s, s) for s in syms]
    for block in (syms[:4], syms[4:]):
        bset = set(block)
        for x in block:
            for y in block:
                if y != pairing[x] and y in bset:
                    edges.append((x, y, y))
    return Automaton(alphabet, vertices, edges)


def build_lollipop_automaton():
    """free(2) coding with one extra transient looping vertex 'w' between '*'
    and the letter component; boundary rays have a geometric entry time."""
    base = build_free_group_automaton(2)
    vertices = list(base.vertices) + ["w"]
    edges = [(src, dst, lab) for (src, dst), lab in base.edge_labels.items()]
    edges.append((START, "w", "a"))
    edges.append(("w", "w", "a"))
    for s in base.alphabet:
        edges.append(("w", s, s))
    return Automaton(base.alphabet, vertices, edges)


def builtin_automaton(name):
    """Registry: free:k, fp:o1,o2,..., golden, twin, lollipop."""
    if name.startswith("free:"):
        return build_free_group_automaton(int(name.split(":", 1)[1]))
    if name.startswith("fp:"):
        orders = [int(x) for x in name.split(":", 1)[1].split(",")]
        return build_free_product_automaton(orders)
    if name == "golden":
        return build_golden_automaton()
    if name == "twin":
        return build_twin_free2_automaton()
    if name == "lollipop":
        return build_lollipop_automaton()
    raise KeyError(f"unknown builtin automaton {name!r}")


def builtin_oracle(name):
    if name.startswith("free:"):
        return FreeOracle(int(name.split(":", 1)[1]))
    if name.startswith("fp:"):
        return FreeProductOracle([int(x) for x in name.split(":", 1)[1].split(",")])
    raise KeyError(f"no oracle for {name!r}")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    max_depth: int
    bijection_ok: bool
    length_preserving_ok: bool
    first_failure: tuple = None  # (depth, witness words)
    counts_checked_to: int = 0


def validate_strongly_markov(aut, oracle, n_max=8, counts_to=14):
    """Exhaustively check the coding bijection to depth n_max: decoded words must
    have word length equal to path length, be pairwise distinct, and number
    exactly the oracle's BFS sphere size. Beyond n_max, path counts are compared
    with sphere sizes up to counts_to."""
    for (_, _), lab in aut.edge_labels.items():
        if lab != ID_LABEL and lab not in oracle.alphabet:
            raise UnknownSymbol(lab)
    if not oracle.unique_normal_forms:
        raise ValueError("validation requires an oracle with unique normal forms")
    sphere = sphere_sizes_bfs(oracle, n_max)
    bijection_ok = True
    length_ok = True
    first_failure = None
    for n in range(1, n_max + 1):
        seen = {}
        count = 0
        for _, letters in aut.paths_from_start(n):
            count += 1
            nf = oracle.reduce(Word(letters)).letters
            if len(nf) != n:
                length_ok = False
                bijection_ok = False
                first_failure = first_failure or (n, ("length", letters, nf))
                continue
            if nf in seen:
                bijection_ok = False
                first_failure = first_failure or (n, ("collision", seen[nf], letters))
            else:
                seen[nf] = letters
        if count != sphere[n]:
            bijection_ok = False
            first_failure = first_failure or (n, ("count", count, sphere[n]))
        if first_failure and first_failure[0] == n:
            break
    counts_checked = n_max
    if bijection_ok and length_ok and counts_to > n_max:
        from .counting import build_count_table  # local import to avoid a cycle

        table = build_count_table(aut, counts_to)
        sizes = sphere_sizes_normal_form(oracle, counts_to)
        for n in range(n_max + 1, counts_to + 1):
            if table.sphere_count(n) != sizes[n]:
                bijection_ok = False
                first_failure = first_failure or (n, ("count", table.sphere_count(n), sizes[n]))
                break
            counts_checked = n
    return ValidationReport(n_max, bijection_ok, length_ok, first_failure, counts_checked)
