"""Cocompact Fuchsian groups and the quotient space they define.

The default group is the genus-2 regular-octagon group (Bolza surface),
given by its four side-pairing translations and their inverses. Words over
generator indices, a Dirichlet-domain reduction centred at i, and a
finite-ball upper bound for the quotient distance provide the concrete
realization of the quotient of the isometry group by the lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import moebius
from .errors import BadIndex, ConfigError, NoConvergence
from .moebius import IDENTITY, PSLElement, local_distance

Word = tuple[int, ...]

BALL_DEDUP_TOL = 1e-8
# circumradius of the regular octagon fundamental domain, acosh(3 + 2 sqrt 2)
BOLZA_CIRCUMRADIUS = math.acosh(3.0 + 2.0 * math.sqrt(2.0))


def hyperbolic_distance(z: complex, w: complex) -> float:
    """Distance in the upper half-plane metric."""
    num = abs(z - w) ** 2
    return math.acosh(1.0 + num / (2.0 * z.imag * w.imag))


def free_reduce(letters, inverse_index) -> Word:
    out: list[int] = []
    for k in letters:
        if out and inverse_index[out[-1]] == k:
            out.pop()
        else:
            out.append(k)
    return tuple(out)


def word_inverse(w: Word, inverse_index) -> Word:
    return tuple(inverse_index[k] for k in reversed(w))


class FuchsianGroup:
    """Generator set closed under inversion, with an optional defining relation."""

    def __init__(self, generators, labels, inverse_index, relation=None):
        self.generators: list[PSLElement] = list(generators)
        self.labels: list[str] = list(labels)
        self.inverse_index: list[int] = list(inverse_index)
        self.relation: Word | None = tuple(relation) if relation is not None else None
        self._gen_mats = np.stack([g.rep for g in self.generators])
        self._gen_inv_mats = np.stack([g.inv().rep for g in self.generators])
        self._centers = np.array([g.apply(1j) for g in self.generators])
        self._ball_cache: dict[int, tuple[list[Word], np.ndarray]] = {}
        self._validate()

    def _validate(self) -> None:
        n = len(self.generators)
        if n == 0 or n % 2 != 0:
            raise ConfigError("generator count must be positive and even")
        if len(self.labels) != n or len(self.inverse_index) != n:
            raise ConfigError("labels and inverse_index must match generator count")
        if sorted(self.inverse_index) != list(range(n)):
            raise ConfigError("inverse_index must be a permutation of the indices")
        for i, g in enumerate(self.generators):
            if moebius.classify(g) is not moebius.ElementClass.HYPERBOLIC:
                raise ConfigError(f"generator {self.labels[i]} is not hyperbolic")
            j = self.inverse_index[i]
            if self.inverse_index[j] != i:
                raise ConfigError("inverse_index is not an involution")
            if local_distance(self.generators[j], g.inv()) > 1e-10:
                raise ConfigError(f"generator {self.labels[j]} is not the inverse of {self.labels[i]}")
        if self.relation is not None:
            rel = self.evaluate_word(self.relation)
            if local_distance(rel, IDENTITY) > 1e-8:
                raise ConfigError("relation word does not evaluate to the identity")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    def inverse_letter(self, k: int) -> int:
        return self.inverse_index[k]

    def evaluate_word(self, w) -> PSLElement:
        m = np.eye(2)
        for k in w:
            if not 0 <= k < len(self.generators):
                raise BadIndex(f"letter {k} outside generator range")
            m = m @ self._gen_mats[k]
        return PSLElement(m)

    def word_label(self, w: Word) -> str:
        return "".join(self.labels[k] for k in w) if w else "e"

    # -- finite ball -------------------------------------------------------

    def ball(self, radius: int) -> tuple[list[Word], np.ndarray]:
        """Freely reduced words of length <= radius, deduplicated by element.

        Returns the word list and the matching stack of canonical matrices;
        index 0 is the identity. Results are cached per radius.
        """
        if radius < 0:
            raise ValueError("radius must be >= 0")
        if radius not in self._ball_cache:
            self._ball_cache[radius] = self._build_ball(radius)
        return self._ball_cache[radius]

    def _build_ball(self, radius: int) -> tuple[list[Word], np.ndarray]:
        n = self.n_generators
        words: list[Word] = [()]
        mats = [np.eye(2)]
        level_words: list[Word] = [()]
        level_mats = np.eye(2)[None, :, :]
        for _ in range(radius):
            # extend every word of the previous level by every non-cancelling letter
            idx_prev, letters = [], []
            for i, w in enumerate(level_words):
                last_inv = self.inverse_index[w[-1]] if w else -1
                for k in range(n):
                    if k != last_inv:
                        idx_prev.append(i)
                        letters.append(k)
            if not idx_prev:
                break
            new_mats = np.einsum("nab,nbc->nac", level_mats[idx_prev], self._gen_mats[letters])
            new_words = [level_words[i] + (k,) for i, k in zip(idx_prev, letters)]
            words.extend(new_words)
            mats.extend(new_mats)
            level_words = new_words
            level_mats = new_mats
        stack = np.array(mats)
        keep = _dedupe_indices(stack)
        words = [words[i] for i in keep]
        return words, np.ascontiguousarray(stack[keep])

    def enumerate_ball(self, radius: int) -> list[tuple[Word, PSLElement]]:
        words, mats = self.ball(radius)
        return [(w, PSLElement(m)) for w, m in zip(words, mats)]


def _canon_sign_rows(flat: np.ndarray) -> np.ndarray:
    sign = np.ones(len(flat))
    undecided = np.ones(len(flat), dtype=bool)
    for col in range(4):
        big = undecided & (np.abs(flat[:, col]) > 1e-12)
        sign[big] = np.sign(flat[big, col])
        undecided &= ~big
    return flat * sign[:, None]


def _dedupe_indices(stack: np.ndarray, tol: float = BALL_DEDUP_TOL) -> list[int]:
    """Indices of first representatives among PSL-equal matrices.

    Scale-free coarse candidate search (unit-norm canonical keys) followed
    by an exact check in the left-invariant metric.
    """
    flat = _canon_sign_rows(stack.reshape(-1, 4).copy())
    keys = flat / np.linalg.norm(flat, axis=1, keepdims=True)
    tree = cKDTree(keys)
    pairs = tree.query_pairs(1e-5, output_type="ndarray")
    parent = list(range(len(stack)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if len(pairs):
        adj = _pairwise_close(stack, pairs, tol)
        for (i, j), ok in zip(pairs, adj):
            if ok:
                ri, rj = find(int(i)), find(int(j))
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    return sorted({find(i) for i in range(len(stack))})


def _pairwise_close(stack: np.ndarray, pairs: np.ndarray, tol: float) -> np.ndarray:
    a = stack[pairs[:, 0]]
    b = stack[pairs[:, 1]]
    m = np.einsum("nab,nbc->nac", _adjugate(a), b)
    eye = np.eye(2)
    dplus = np.sqrt(((m - eye) ** 2).sum(axis=(1, 2)))
    dminus = np.sqrt(((m + eye) ** 2).sum(axis=(1, 2)))
    return np.minimum(dplus, dminus) < tol


def _adjugate(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    out[..., 1, 1] = m[..., 0, 0]
    return out


def _batch_local_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Left-invariant distance between stacks of representatives (broadcasting)."""
    m = np.einsum("...ab,...bc->...ac", _adjugate(a), b)
    eye = np.eye(2)
    dplus = np.sqrt(((m - eye) ** 2).sum(axis=(-2, -1)))
    dminus = np.sqrt(((m + eye) ** 2).sum(axis=(-2, -1)))
    return np.minimum(dplus, dminus)


# -- Bolza group ------------------------------------------------------------


def bolza_group() -> FuchsianGroup:
    """Side-pairing translations of the regular hyperbolic octagon (genus 2).

    The four pairings a, b, c, d all have trace 2 + 2 sqrt 2 and satisfy the
    single octagon relation a b c d a^-1 b^-1 c^-1 d^-1 = e.
    """
    alpha = 1.0 + math.sqrt(2.0)
    beta = math.sqrt(2.0 + 2.0 * math.sqrt(2.0))

    def pairing(k: int) -> PSLElement:
        c = math.cos(k * math.pi / 4.0)
        s = math.sin(k * math.pi / 4.0)
        return PSLElement([[alpha + beta * c, -beta * s], [-beta * s, alpha - beta * c]])

    raw = [pairing(k) for k in range(8)]  # raw[k+4] = raw[k]^-1
    # ordering in which the octagon relation takes the plain surface-word form
    gens = [raw[0], raw[5], raw[2], raw[7], raw[4], raw[1], raw[6], raw[3]]
    labels = ["a", "b", "c", "d", "A", "B", "C", "D"]
    inverse_index = [4, 5, 6, 7, 0, 1, 2, 3]
    relation = (0, 1, 2, 3, 4, 5, 6, 7)
    return FuchsianGroup(gens, labels, inverse_index, relation)


def load_group(path) -> FuchsianGroup:
    """Load a group from its JSON description, validating all invariants."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read group file {path}: {exc}") from exc
    try:
        mats = data["generators"]
        labels = data.get("labels") or [f"g{i}" for i in range(len(mats))]
        relation = data.get("relation")
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed group file {path}: {exc}") from exc
    gens = []
    for i, row in enumerate(mats):
        if len(row) != 4:
            raise ConfigError(f"generator {i} must have 4 entries [a, b, c, d]")
        a, b, c, d = (float(x) for x in row)
        det = a * d - b * c
        if abs(det - 1.0) > 1e-8:
            raise ConfigError(f"generator {i} has determinant {det}, expected 1")
        gens.append(PSLElement([[a, b], [c, d]]))
    inverse_index = _derive_inverse_index(gens)
    return FuchsianGroup(gens, labels, inverse_index, relation)


def _derive_inverse_index(gens: list[PSLElement]) -> list[int]:
    idx = [-1] * len(gens)
    for i, g in enumerate(gens):
        gi = g.inv()
        for j, h in enumerate(gens):
            if local_distance(gi, h) < 1e-10:
                idx[i] = j
                break
        else:
            raise ConfigError(f"generator set not closed under inverses (index {i})")
    return idx


# -- quotient points and reduction -------------------------------------------


@dataclass(frozen=True)
class QuotientPoint:
    """A point of the quotient space, held as one frame representative."""

    frame: PSLElement

    @property
    def base(self) -> complex:
        return self.frame.apply(1j)

    def flow(self, t: float) -> "QuotientPoint":
        return QuotientPoint(self.frame * moebius.geodesic_flow(t))


def reduce_point(group: FuchsianGroup, z: complex, max_steps: int = 200):
    """Move z into the Dirichlet domain centred at i by greedy side pairings.

    Returns (z0, w) with z0 = evaluate_word(w) applied to z. Idempotent on
    points already inside the closed domain.
    """
    if z.imag <= 0:
        raise ValueError("point must lie in the upper half plane")
    word: list[int] = []
    cur = z
    for _ in range(max_steps):
        best_k = -1
        # cosh distances to i and to every generator translate of i
        d_center = _cosh_dist(cur, 1j)
        best = d_center * (1.0 - 1e-15)
        for k, c in enumerate(group._centers):
            dk = _cosh_dist(cur, complex(c))
            if dk < best:
                best = dk
                best_k = k
        if best_k < 0:
            return cur, free_reduce(word, group.inverse_index)
        inv_k = group.inverse_index[best_k]
        cur = group.generators[inv_k].apply(cur)
        word.insert(0, inv_k)
    raise NoConvergence(f"domain reduction did not settle in {max_steps} steps")


def _cosh_dist(z: complex, w: complex) -> float:
    return 1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag)


def reduce_frame(group: FuchsianGroup, frame: PSLElement, max_steps: int = 200):
    """Reduce the frame's base point; returns (reduced_frame, word)."""
    _, w = reduce_point(group, frame.apply(1j), max_steps)
    return group.evaluate_word(w) * frame, w


def _reduce_frames_batch(group: FuchsianGroup, frames: np.ndarray, max_steps: int = 200) -> np.ndarray:
    """Vectorized Dirichlet reduction of a stack of frames (base points into F)."""
    frames = frames.copy()
    z = _apply_i(frames)
    centers = group._centers
    for _ in range(max_steps):
        d_center = np.abs(z[:, None] - 1j) ** 2 / (2.0 * z.imag[:, None])
        d_gen = np.abs(z[:, None] - centers[None, :]) ** 2 / (
            2.0 * np.outer(z.imag, centers.imag)
        )
        best_k = np.argmin(d_gen, axis=1)
        improves = d_gen[np.arange(len(z)), best_k] < d_center[:, 0] * (1.0 - 1e-15)
        if not improves.any():
            return frames
        rows = np.nonzero(improves)[0]
        inv_k = np.array(group.inverse_index)[best_k[rows]]
        frames[rows] = np.einsum("nab,nbc->nac", group._gen_mats[inv_k], frames[rows])
        z = _apply_i(frames)
    raise NoConvergence(f"batch domain reduction did not settle in {max_steps} steps")


def _apply_i(frames: np.ndarray) -> np.ndarray:
    num = frames[:, 0, 0] * 1j + frames[:, 0, 1]
    den = frames[:, 1, 0] * 1j + frames[:, 1, 1]
    return num / den


def quotient_distance(group: FuchsianGroup, x: QuotientPoint, y: QuotientPoint, radius: int = 4) -> float:
    """Upper bound on the quotient distance via a finite lattice-ball search.

    Both representatives are reduced into the fundamental domain first; the
    ball radius then grows until the minimizer sits strictly inside the
    search window, which guards against truncation.
    """
    fx, _ = reduce_frame(group, x.frame)
    fy, _ = reduce_frame(group, y.frame)
    r = radius
    while True:
        words, mats = group.ball(r)
        lhs = np.einsum("nab,bc->nac", mats, fx.rep)
        dists = _batch_local_distance(lhs, fy.rep[None, :, :])
        i = int(np.argmin(dists))
        if len(words[i]) < r or r >= radius + 3:
            return float(dists[i])
        r += 1


def quotient_distance_frames(group: FuchsianGroup, fx: np.ndarray, fy: np.ndarray, radius: int = 3) -> np.ndarray:
    """Batched quotient distance for stacks of already-reduced frames."""
    _, mats = group.ball(radius)
    out = np.empty(len(fx))
    rho_inv = _adjugate(mats)
    block = max(1, int(4_000_000 // max(len(mats), 1)))
    for lo in range(0, len(fx), block):
        hi = min(lo + block, len(fx))
        lhs = np.einsum("rab,nbc->nrac", rho_inv, fy[lo:hi])
        d = _batch_local_distance(fx[lo:hi, None, :, :], lhs)
        out[lo:hi] = d.min(axis=1)
    return out


# -- conjugacy-class keys -----------------------------------------------------


def cyclic_reduce(w: Word, inverse_index) -> Word:
    w = free_reduce(w, inverse_index)
    while len(w) >= 2 and inverse_index[w[0]] == w[-1]:
        w = free_reduce(w[1:-1], inverse_index)
    return w


def cyclic_canonical_oriented(w: Word, group: FuchsianGroup) -> tuple[Word, bool]:
    """Canonical rotation of the cyclically reduced word; flag marks whether
    the inverse word's rotations won (time-reversal representative)."""
    w = cyclic_reduce(w, group.inverse_index)
    if not w:
        return (), False
    candidates = [(w[i:] + w[:i], False) for i in range(len(w))]
    wi = word_inverse(w, group.inverse_index)
    candidates += [(wi[i:] + wi[:i], True) for i in range(len(wi))]
    best = min(candidates, key=lambda c: c[0])
    return best


def cyclic_canonical(w: Word, group: FuchsianGroup) -> Word:
    return cyclic_canonical_oriented(w, group)[0]
