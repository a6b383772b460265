"""Closed geodesics as conjugacy classes and their configuration-space traces.

A closed geodesic is enumerated as a cyclically reduced word class, realized
by the axis frame of its holonomy, unfolded into a chain of chords of the
fundamental domain, and scanned for transversal self-intersections. Every
reported crossing carries the lattice element that witnesses the coset
identity relating the two passes, so downstream constructions are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import moebius
from .errors import NotHyperbolic, UnfoldFailure
from .moebius import PSLElement, local_distance
from .surface import (
    FuchsianGroup,
    Word,
    cyclic_canonical_oriented,
    cyclic_reduce,
    free_reduce,
    hyperbolic_distance,
    reduce_point,
    word_inverse,
    _canon_sign_rows,
)

TIME_TOL = 1e-9
CROSSING_MERGE_TOL = 1e-8
WITNESS_TOL = 1e-7


@dataclass
class ClosedGeodesic:
    """A primitive periodic orbit of the geodesic flow."""

    word: Word
    element: PSLElement
    period: float
    frame: PSLElement

    @classmethod
    def from_word(cls, word: Word, group: FuchsianGroup) -> "ClosedGeodesic":
        elem = group.evaluate_word(word)
        if moebius.classify(elem) is not moebius.ElementClass.HYPERBOLIC:
            raise NotHyperbolic(f"word {word} does not define a closed geodesic")
        period = moebius.translation_length(elem)
        frame = moebius.axis_frame(elem)
        return cls(word=word, element=elem, period=period, frame=frame)

    def holonomy_residual(self) -> float:
        target = moebius.geodesic_flow(self.period)
        return local_distance(self.frame.inv() * self.element * self.frame, target)

    def label(self, group: FuchsianGroup) -> str:
        return group.word_label(self.word)


@dataclass
class GeodesicSegment:
    """One chord of the orbit inside the closed fundamental domain."""

    start: complex
    end: complex
    times: tuple[float, float]
    frame: PSLElement            # unfolded frame: base point is frame * (i e^t)
    chain_word: Word             # pairing word accumulated before this segment
    endpoints: tuple[float, float]  # ideal endpoints of the supporting geodesic

    @property
    def length(self) -> float:
        return self.times[1] - self.times[0]


@dataclass
class Crossing:
    """A transversal configuration-space self-intersection."""

    tau: float
    L: float
    theta: float
    phi: float
    point: complex
    witness: PSLElement
    witness_word: Word
    sign: int

    def passage_times(self) -> tuple[float, float]:
        return self.tau, self.tau + self.L


# -- unfolding ---------------------------------------------------------------


def _halfspace_coeffs(center: complex, h: np.ndarray):
    """Quadratic in mu = e^{2t} whose sign tells if h*(i e^t) is closer to i
    than to the given translate of i (positive inside the halfspace)."""
    u0, v0 = center.real, center.imag
    p, q = h[0, 0], h[0, 1]
    r, s = h[1, 0], h[1, 1]
    k = u0 * u0 + v0 * v0 - v0
    pr, qs, r2, s2 = p * r, q * s, r * r, s * s
    a = (1.0 - v0) * pr * pr - 2.0 * u0 * pr * r2 + k * r2 * r2
    b = (1.0 - v0) * (2.0 * qs * pr + 1.0) - 2.0 * u0 * (qs * r2 + pr * s2) + 2.0 * k * r2 * s2
    c = (1.0 - v0) * qs * qs - 2.0 * u0 * qs * s2 + k * s2 * s2
    return a, b, c


def _halfspace_value(center: complex, z: complex) -> float:
    """cosh d(z, center) - cosh d(z, i); positive strictly inside."""
    du = abs(z - center) ** 2 / (2.0 * z.imag * center.imag)
    di = abs(z - 1j) ** 2 / (2.0 * z.imag)
    return du - di


def _exit_time(group: FuchsianGroup, h: np.ndarray, t_now: float, t_cap: float):
    """First time > t_now at which the point h*(i e^t) leaves the domain.

    Returns (t_exit, side) or (t_cap, -1) when the cap is reached first.
    Raises UnfoldFailure for vertex grazing.
    """
    mu_now = math.exp(2.0 * t_now)
    candidates = []
    for kk, center in enumerate(group._centers):
        a, b, c = _halfspace_coeffs(complex(center), h)
        roots = []
        if abs(a) > 1e-300:
            disc = b * b - 4.0 * a * c
            if disc > 0.0:
                sq = math.sqrt(disc)
                roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        elif abs(b) > 1e-300:
            roots = [-c / b]
        for mu in roots:
            if mu > mu_now * (1.0 + 1e-13):
                # crossing into the exterior of this halfspace?
                slope = 2.0 * a * mu + b
                if slope < 0.0:
                    candidates.append((mu, kk))
    if not candidates:
        return t_cap, -1
    candidates.sort()
    mu_star, side = candidates[0]
    t_star = 0.5 * math.log(mu_star)
    if t_star >= t_cap:
        return t_cap, -1
    # at a vertex several walls exit together; any choice works, the copy
    # advance at the next step settles the picture
    return t_star, side


def _point_on(h: np.ndarray, t: float) -> complex:
    lam = math.exp(t)
    num = complex(h[0, 1], h[0, 0] * lam)
    den = complex(h[1, 1], h[1, 0] * lam)
    return num / den


def _unfold_once(geo: ClosedGeodesic, group: FuchsianGroup, delta: float) -> list[GeodesicSegment]:
    frame0 = geo.frame * moebius.geodesic_flow(delta)
    _, w0 = reduce_point(group, frame0.apply(1j))
    h = group.evaluate_word(w0) * frame0
    T = geo.period
    segments: list[GeodesicSegment] = []
    chain: Word = w0  # chain words are relative to the geodesic's own frame
    t = 0.0
    max_segments = int(10 * T) + 40
    while t < T - TIME_TOL:
        h, applied = _advance_copy(group, h, t)
        for letter in applied:
            chain = free_reduce((letter,) + chain, group.inverse_index)
        t_exit, side = _exit_time(group, h.rep, t, T)
        seg = GeodesicSegment(
            start=_point_on(h.rep, t),
            end=_point_on(h.rep, t_exit),
            times=(t, t_exit),
            frame=h,
            chain_word=chain,
            endpoints=(h.apply_boundary(0.0), h.apply_boundary(math.inf)),
        )
        segments.append(seg)
        if side < 0:
            break
        inv_side = group.inverse_index[side]
        h = group.generators[inv_side] * h
        chain = free_reduce((inv_side,) + chain, group.inverse_index)
        t = t_exit
        if len(segments) > max_segments:
            raise UnfoldFailure("segment budget exceeded")
    return segments


def _advance_copy(group: FuchsianGroup, h: PSLElement, t: float):
    """Hop domain copies until the point just ahead of t lies inside.

    Needed where the walk hands off at a vertex (several walls meet) or the
    axis runs inside a wall: the exit solver requires the upcoming arc to
    start in the closed domain of the current copy.
    """
    probe = 1e-7
    applied: list[int] = []
    for _ in range(2 * group.n_generators):
        z = _point_on(h.rep, t + probe)
        worst_k, worst = -1, math.inf
        for k, c in enumerate(group._centers):
            val = _halfspace_value(complex(c), z)
            if val < worst:
                worst, worst_k = val, k
        if worst >= -1e-10:
            return h, tuple(applied)
        inv_k = group.inverse_index[worst_k]
        h = group.generators[inv_k] * h
        applied.append(inv_k)
    raise UnfoldFailure(f"vertex cycling at t = {t:.6f}")


def geodesic_segments(geo: ClosedGeodesic, group: FuchsianGroup) -> list[GeodesicSegment]:
    """Partition of one period into chords of the fundamental domain.

    End of segment k maps to the start of segment k+1 by a single side
    pairing; the final chain closes up to the holonomy. Vertex-grazing
    parametrizations are retried from a slightly shifted start.
    """
    last_exc: Exception | None = None
    for delta in (0.0, 1e-6, -1e-6, 3.1e-6):
        try:
            segs = _unfold_once(geo, group, delta)
            _check_closure(geo, group, segs)
        except UnfoldFailure as exc:
            last_exc = exc
            continue
        return segs
    raise UnfoldFailure(f"unfolding failed for word {geo.word}: {last_exc}")


def _check_closure(geo: ClosedGeodesic, group: FuchsianGroup, segs: list[GeodesicSegment]) -> None:
    total = sum(s.length for s in segs)
    if abs(total - geo.period) > 1e-8:
        raise UnfoldFailure(f"segment lengths sum to {total}, period is {geo.period}")
    for s in segs:
        if abs(hyperbolic_distance(s.start, s.end) - s.length) > 1e-8:
            raise UnfoldFailure("segment length mismatch with its endpoints")
    # the walk returns to its start frame after one period, possibly up to
    # the short pairing word of a wall or vertex at the base point
    h_first = segs[0].frame
    h_last = segs[-1].frame
    back = (h_last * moebius.geodesic_flow(geo.period)).rep
    _, mats = group.ball(2)
    lhs = np.einsum("nab,bc->nac", mats, back)
    from .surface import _batch_local_distance

    if _batch_local_distance(lhs, h_first.rep[None, :, :]).min() > 1e-7:
        raise UnfoldFailure("segment chain does not close up")


# -- crossings ----------------------------------------------------------------


def _geodesic_intersection(e1: tuple[float, float], e2: tuple[float, float]):
    """Intersection point of two complete geodesics given by ideal endpoints."""

    def as_circle(e):
        a, b = e
        if math.isinf(a) or math.isinf(b):
            x = b if math.isinf(a) else a
            return ("line", x)
        return ("circle", 0.5 * (a + b), 0.5 * abs(b - a))

    c1, c2 = as_circle(e1), as_circle(e2)
    if c1[0] == "line" and c2[0] == "line":
        return None
    if c1[0] == "line" or c2[0] == "line":
        if c1[0] == "line":
            x = c1[1]
            _, m, r = c2
        else:
            x = c2[1]
            _, m, r = c1
        y2 = r * r - (x - m) ** 2
        if y2 <= 1e-24:
            return None
        return complex(x, math.sqrt(y2))
    _, m1, r1 = c1
    _, m2, r2 = c2
    if abs(m2 - m1) < 1e-14:
        return None
    x = (r1 * r1 - r2 * r2 - m1 * m1 + m2 * m2) / (2.0 * (m2 - m1))
    y2 = r1 * r1 - (x - m1) ** 2
    if y2 <= 1e-24:
        return None
    return complex(x, math.sqrt(y2))


def _time_on_segment(seg: GeodesicSegment, z: complex):
    """Orbit time of z along the segment's supporting geodesic, or None."""
    h = seg.frame.rep
    w = (h[1, 1] * z - h[0, 1]) / (-h[1, 0] * z + h[0, 0])
    if w.imag <= 0:
        return None
    if abs(w.real) > 1e-6 * abs(w):
        return None
    return math.log(abs(w))


def _direction(seg: GeodesicSegment, t: float) -> complex:
    h = seg.frame.rep
    lam = math.exp(t)
    den = complex(h[1, 1], h[1, 0] * lam)
    return complex(0.0, lam) / (den * den)


def detect_self_crossings(geo: ClosedGeodesic, group: FuchsianGroup) -> list[Crossing]:
    """All transversal self-intersections, one entry per passage pair."""
    segs = geodesic_segments(geo, group)
    found: list[Crossing] = []
    T = geo.period
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            si, sj = segs[i], segs[j]
            if _same_line(si.endpoints, sj.endpoints):
                continue
            z = _geodesic_intersection(si.endpoints, sj.endpoints)
            if z is None:
                continue
            ti = _time_on_segment(si, z)
            tj = _time_on_segment(sj, z)
            if ti is None or tj is None:
                continue
            if not (si.times[0] - TIME_TOL <= ti <= si.times[1] + TIME_TOL):
                continue
            if not (sj.times[0] - TIME_TOL <= tj <= sj.times[1] + TIME_TOL):
                continue
            L = tj - ti
            if L < 1e-9 or L > T - 1e-9:
                continue
            cr = _build_crossing(geo, group, si, sj, ti, tj, z)
            if cr is not None:
                found.append(cr)
    return _merge_crossings(found, T)


def _same_line(e1, e2) -> bool:
    def key(e):
        return tuple(sorted(e))

    a1, b1 = key(e1)
    a2, b2 = key(e2)

    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return math.isinf(x) and math.isinf(y)
        return abs(x - y) < 1e-9 * (1.0 + abs(x) + abs(y))

    return close(a1, a2) and close(b1, b2)


def _flow_rot_flow(m: np.ndarray):
    """Solve a_p * d_chi * a_q = m in closed form, or None if not of that shape."""
    m11, m12 = m[0, 0], m[0, 1]
    m21, m22 = m[1, 0], m[1, 1]
    if m11 * m22 <= 0.0 or m12 * m21 >= 0.0:
        return None
    ppq = math.log(m11 / m22)
    pmq = math.log(-m12 / m21)
    p = 0.5 * (ppq + pmq)
    q = 0.5 * (ppq - pmq)
    c = math.copysign(math.sqrt(m11 * m22), m11)
    s = m21 * math.exp(0.5 * pmq)
    chi = 2.0 * math.atan2(s, c)
    return p, chi, q


def _build_crossing(geo, group, si, sj, ti, tj, z):
    """Exact crossing data from the pairing chains of the two passes.

    The measured intersection only locates the passage pair; times, angle
    and witness are then recovered in closed form from the lattice element
    relating the two unfolded frames. Chords on walls leave the chain
    ambiguous by a short pairing word, hence the correction search.
    """
    vi = _direction(si, ti)
    vj = _direction(sj, tj)
    psi = math.atan2((vj / vi).imag, (vj / vi).real)
    theta_meas = abs(psi)
    if theta_meas < 1e-9 or theta_meas > math.pi - 1e-9:
        return None
    base_word = free_reduce(
        word_inverse(sj.chain_word, group.inverse_index) + si.chain_word,
        group.inverse_index,
    )
    frame_inv = geo.frame.inv()
    corrections, _ = group.ball(2)
    best = None
    for mid in corrections:
        witness_word = free_reduce(
            word_inverse(sj.chain_word, group.inverse_index) + mid + si.chain_word,
            group.inverse_index,
        )
        witness = group.evaluate_word(witness_word)
        m = (frame_inv * witness * geo.frame).rep
        solved = _flow_rot_flow(m)
        if solved is None:
            continue
        p, chi, q = solved
        tau, length = -q, p + q
        theta = abs(chi)
        # measured times may carry the unfold's start perturbation (~1e-6);
        # distinct group candidates differ by >> 1e-3, so this window is safe
        err = max(abs(tau - ti), abs(length - (tj - ti)), abs(theta - theta_meas))
        if err < 1e-4 and (best is None or err < best[0]):
            best = (err, tau, length, theta, -int(math.copysign(1.0, chi)), witness, witness_word)
    if best is None:
        raise UnfoldFailure(
            f"no witness matches crossing of word {geo.word} at t = {ti:.6f}"
        )
    _, tau, length, theta, sign, witness, witness_word = best
    return Crossing(
        tau=tau,
        L=length,
        theta=theta,
        phi=math.pi - theta,
        point=z,
        witness=witness,
        witness_word=witness_word,
        sign=sign,
    )


def _merge_crossings(found: list[Crossing], T: float) -> list[Crossing]:
    found.sort(key=lambda c: (c.tau, c.L))
    out: list[Crossing] = []
    for c in found:
        dup = False
        for o in out:
            if (
                abs(math.remainder(c.tau - o.tau, T)) < CROSSING_MERGE_TOL
                and abs(math.remainder(c.tau + c.L - o.tau - o.L, T)) < CROSSING_MERGE_TOL
            ):
                dup = True
                break
        if not dup:
            out.append(c)
    return out


def crossing_relation_check(geo: ClosedGeodesic, crossing: Crossing, group: FuchsianGroup) -> float:
    """Residual of the coset identity the crossing claims to satisfy."""
    lhs = geo.frame * moebius.geodesic_flow(crossing.tau + crossing.L)
    rhs = (
        crossing.witness
        * geo.frame
        * moebius.geodesic_flow(crossing.tau)
        * moebius.rotation(crossing.sign * crossing.theta)
    )
    return local_distance(lhs, rhs)


# -- enumeration ---------------------------------------------------------------


def closed_geodesics_up_to(
    group: FuchsianGroup, max_length: float, max_word_length: int
) -> list[ClosedGeodesic]:
    """All primitive unoriented closed geodesics with period <= max_length
    realizable by words of length <= max_word_length.

    One entry per class, keyed by the canonical cyclic word; geometric
    duplicates (conjugate words) are removed by comparing domain chords.
    """
    if max_word_length < 1 or max_length <= 0:
        return []
    words, mats = group.ball(max_word_length)
    traces = np.abs(mats[:, 0, 0] + mats[:, 1, 1])
    cap = 2.0 * math.cosh(0.5 * max_length)
    keep = (traces > 2.0 + 1e-10) & (traces <= cap + 1e-9)

    seen: dict[Word, int] = {}
    chosen: list[Word] = []
    for idx in np.nonzero(keep)[0]:
        w = words[idx]
        key, _ = cyclic_canonical_oriented(w, group)
        if not key or key in seen:
            continue
        if len(key) > max_word_length:
            continue
        if _word_is_power(key):
            continue
        seen[key] = idx
        chosen.append(key)

    geos = []
    for key in chosen:
        geo = ClosedGeodesic.from_word(key, group)
        if geo.period <= max_length + 1e-9:
            geos.append(geo)
    geos = _dedupe_conjugates(geos, group)
    geos = _drop_hidden_powers(geos, group, max_word_length)
    geos.sort(key=lambda g: (g.period, g.word))
    return geos


def _word_is_power(w: Word) -> bool:
    n = len(w)
    for p in range(1, n):
        if n % p == 0 and w == w[p:] + w[:p]:
            return True
    return False


def _line_set(segs: list[GeodesicSegment], group: FuchsianGroup) -> list[tuple[float, float]]:
    """Supporting lines of all chords, extended by single-pairing images.

    The images make the set stable for chords running inside a wall, which
    the unfolding may attribute to either of the two neighbouring copies.
    """
    lines = []
    for s in segs:
        lines.append(s.endpoints)
        for g in group.generators:
            lines.append(
                (g.apply_boundary(s.endpoints[0]), g.apply_boundary(s.endpoints[1]))
            )
    return lines


def _dedupe_conjugates(geos: list[ClosedGeodesic], group: FuchsianGroup) -> list[ClosedGeodesic]:
    """Drop geodesics tracing a curve already kept.

    Two primitive closed geodesics coincide exactly when they share one
    supporting line of a domain chord, so line-set overlap is the test.
    """
    buckets: dict[int, list[tuple[list, ClosedGeodesic]]] = {}
    out = []
    for geo in geos:
        segs = geodesic_segments(geo, group)
        tkey = round(geo.period * 1e6)
        dup = False
        for near in (tkey - 1, tkey, tkey + 1):
            for lines2, _ in buckets.get(near, ()):
                if any(
                    _same_line(s.endpoints, line) for s in segs for line in lines2
                ):
                    dup = True
                    break
            if dup:
                break
        if not dup:
            buckets.setdefault(tkey, []).append((_line_set(segs, group), geo))
            out.append(geo)
    return out


def _drop_hidden_powers(
    geos: list[ClosedGeodesic], group: FuchsianGroup, max_word_length: int
) -> list[ClosedGeodesic]:
    """Remove k-th powers whose word happens not to look periodic."""
    if not geos:
        return geos
    min_period = min(g.period for g in geos)
    words, mats = group.ball(max_word_length)
    flat = _canon_sign_rows(mats.reshape(-1, 4).copy())
    keys = flat / np.linalg.norm(flat, axis=1, keepdims=True)
    tree = cKDTree(keys)
    out = []
    for geo in geos:
        power = False
        k = 2
        while geo.period / k >= min_period - 1e-6 and not power:
            root = (
                geo.frame
                * moebius.geodesic_flow(geo.period / k)
                * geo.frame.inv()
            )
            q = _canon_sign_rows(root.rep.reshape(1, 4).copy())
            q = q / np.linalg.norm(q)
            dist, idx = tree.query(q[0], k=1)
            if dist < 1e-7 and local_distance(PSLElement(mats[idx]), root) < 1e-6:
                power = True
            k += 1
        if not power:
            out.append(geo)
    return out
