"""Machine-precision arithmetic in PSL(2,R) = SL(2,R)/{+-1}.

Elements are stored as sign-canonicalized unit-determinant 2x2 matrices.
The one-parameter subgroups used throughout are the diagonal geodesic flow,
the two horocyclic shears (stable upper / unstable lower triangular) and
the rotation subgroup fixing i.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDecomposition, NotHyperbolic

DET_TOL = 1e-12
SIGN_TOL = 1e-12
PSL_EQ_TOL = 1e-10
CLASSIFY_TOL = 1e-10


def _canonical_sign(mat: np.ndarray) -> np.ndarray:
    for x in mat.flat:
        if abs(x) > SIGN_TOL:
            return mat if x > 0 else -mat
    return mat


class PSLElement:
    """An element of PSL(2,R), held as its canonical-sign representative."""

    __slots__ = ("rep",)

    def __init__(self, mat) -> None:
        rep = np.array(mat, dtype=float).reshape(2, 2)
        det = rep[0, 0] * rep[1, 1] - rep[0, 1] * rep[1, 0]
        # float error in det is relative to the squared matrix scale
        scale2 = max(1.0, float((rep * rep).sum()))
        if not math.isfinite(det) or det <= 0.0 or abs(det - 1.0) > 1e-10 * scale2:
            raise ValueError(f"matrix is not close to unit determinant (det={det})")
        if abs(det - 1.0) > 1e-15:
            rep /= math.sqrt(det)
        rep = _canonical_sign(rep)
        rep.setflags(write=False)
        self.rep = rep

    @property
    def a(self) -> float:
        return self.rep[0, 0]

    @property
    def b(self) -> float:
        return self.rep[0, 1]

    @property
    def c(self) -> float:
        return self.rep[1, 0]

    @property
    def d(self) -> float:
        return self.rep[1, 1]

    def trace(self) -> float:
        """Trace of the canonical representative; |trace| is sign-free."""
        return self.rep[0, 0] + self.rep[1, 1]

    def inv(self) -> "PSLElement":
        r = self.rep
        return PSLElement([[r[1, 1], -r[0, 1]], [-r[1, 0], r[0, 0]]])

    def __mul__(self, other: "PSLElement") -> "PSLElement":
        return PSLElement(self.rep @ other.rep)

    def apply(self, z: complex) -> complex:
        """Moebius action on a point of the upper half plane."""
        a, b, c, d = self.rep.flat
        return (a * z + b) / (c * z + d)

    def apply_boundary(self, x: float) -> float:
        """Moebius action on the real boundary line; returns inf when x is a pole."""
        a, b, c, d = self.rep.flat
        if math.isinf(x):
            return a / c if c != 0.0 else math.inf
        den = c * x + d
        if den == 0.0:
            return math.inf
        return (a * x + b) / den

    def is_close(self, other: "PSLElement", tol: float = PSL_EQ_TOL) -> bool:
        return local_distance(self, other) < tol

    def __repr__(self) -> str:
        a, b, c, d = self.rep.flat
        return f"PSLElement([[{a:.6g}, {b:.6g}], [{c:.6g}, {d:.6g}]])"


IDENTITY = PSLElement(np.eye(2))
HALF_TURN = PSLElement([[0.0, 1.0], [-1.0, 0.0]])  # rotation by pi, implements time reversal


class ElementClass(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    IDENTITY = "identity"


class NSATriple(NamedTuple):
    """Coordinates of the unstable-shear * stable-shear * flow factorization."""

    t: float
    s: float
    u: float


def compose(g: PSLElement, h: PSLElement) -> PSLElement:
    return g * h


def geodesic_flow(t: float) -> PSLElement:
    e = math.exp(0.5 * t)
    return PSLElement([[e, 0.0], [0.0, 1.0 / e]])


def stable_shear(s: float) -> PSLElement:
    return PSLElement([[1.0, s], [0.0, 1.0]])


def unstable_shear(u: float) -> PSLElement:
    return PSLElement([[1.0, 0.0], [u, 1.0]])


def rotation(phi: float) -> PSLElement:
    c = math.cos(0.5 * phi)
    s = math.sin(0.5 * phi)
    return PSLElement([[c, -s], [s, c]])


_ONE_PARAM = {"A": geodesic_flow, "B": stable_shear, "C": unstable_shear, "D": rotation}


def one_param(kind: str, v: float) -> PSLElement:
    """One-parameter subgroup element: A=flow, B=stable, C=unstable, D=rotation."""
    try:
        return _ONE_PARAM[kind](v)
    except KeyError:
        raise ValueError(f"unknown one-parameter family {kind!r}, expected A/B/C/D") from None


def nsa_decompose(g: PSLElement) -> NSATriple:
    """Factor g = unstable_shear(u) * stable_shear(s) * geodesic_flow(t).

    Defined whenever the upper-left entry of a representative is nonzero;
    then t = 2 ln|a|, s = a b, u = c / a.
    """
    a, b, c, _ = g.rep.flat
    if abs(a) <= 1e-12:
        raise DegenerateDecomposition("upper-left entry vanishes")
    return NSATriple(t=2.0 * math.log(abs(a)), s=a * b, u=c / a)


def rotation_decompose(phi: float) -> tuple[float, float, float]:
    """Coordinates (t, u, s) with rotation(phi) = c_u * b_s * a_t, |phi| < pi.

    t = 2 ln cos(phi/2), u = tan(phi/2), s = -sin(phi/2) cos(phi/2).
    """
    if not abs(phi) < math.pi:
        raise ValueError("rotation angle must satisfy |phi| < pi")
    half = 0.5 * phi
    return 2.0 * math.log(math.cos(half)), math.tan(half), -math.sin(half) * math.cos(half)


def reversal_conjugate(g: PSLElement) -> PSLElement:
    """Conjugate by the half turn: flow reverses, the two shears swap."""
    return HALF_TURN.inv() * g * HALF_TURN


def classify(g: PSLElement, tol: float = CLASSIFY_TOL) -> ElementClass:
    tr = abs(g.trace())
    if tr > 2.0 + tol:
        return ElementClass.HYPERBOLIC
    if local_distance(g, IDENTITY) < tol:
        return ElementClass.IDENTITY
    if tr >= 2.0 - tol:
        return ElementClass.PARABOLIC
    return ElementClass.ELLIPTIC


def translation_length(g: PSLElement) -> float:
    """Length of the closed geodesic of a hyperbolic element: |tr| = 2 cosh(T/2)."""
    tr = abs(g.trace())
    if tr <= 2.0 + CLASSIFY_TOL:
        raise NotHyperbolic(f"|trace| = {tr} is not > 2")
    return 2.0 * math.acosh(0.5 * tr)


def axis_frame(g: PSLElement) -> PSLElement:
    """A frame f with f^-1 g f = geodesic_flow(T), T = translation_length(g).

    Deterministic choice: equal-norm eigenvector columns, unit determinant,
    canonical sign. Returns the identity when g is already diagonal flow.
    """
    tr = g.trace()
    if abs(tr) <= 2.0 + CLASSIFY_TOL:
        raise NotHyperbolic(f"|trace| = {abs(tr)} is not > 2")
    m = g.rep if tr > 0 else -g.rep
    t = m[0, 0] + m[1, 1]
    disc = math.sqrt(t * t - 4.0)
    lam_plus = 0.5 * (t + disc)
    lam_minus = 0.5 * (t - disc)

    def eigvec(lam: float) -> np.ndarray:
        v1 = np.array([m[0, 1], lam - m[0, 0]])
        v2 = np.array([lam - m[1, 1], m[1, 0]])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        n = np.linalg.norm(v)
        if n < 1e-15:
            v = np.array([1.0, 0.0])
            n = 1.0
        v = v / n
        for x in v:
            if abs(x) > SIGN_TOL:
                return v if x > 0 else -v
        return v

    vp = eigvec(lam_plus)
    vm = eigvec(lam_minus)
    frame = np.column_stack([vp, vm])
    det = frame[0, 0] * frame[1, 1] - frame[0, 1] * frame[1, 0]
    if abs(det) < 1e-12:
        raise NotHyperbolic("eigenvectors degenerate; element too close to parabolic")
    if det < 0:
        frame[:, 1] = -frame[:, 1]
        det = -det
    return PSLElement(frame / math.sqrt(det))


def local_distance(g: PSLElement, h: PSLElement) -> float:
    """Left-invariant local distance surrogate: Frobenius gap of g^-1 h from +-1.

    Valid as a chart only for small separations (< 0.5); left invariance is
    what makes the flow contract the stable shear at rate e^{-t} uniformly
    along orbits.
    """
    gr = g.rep
    hr = h.rep
    # inline 2x2 inverse-times: adj(g) @ h
    m00 = gr[1, 1] * hr[0, 0] - gr[0, 1] * hr[1, 0]
    m01 = gr[1, 1] * hr[0, 1] - gr[0, 1] * hr[1, 1]
    m10 = -gr[1, 0] * hr[0, 0] + gr[0, 0] * hr[1, 0]
    m11 = -gr[1, 0] * hr[0, 1] + gr[0, 0] * hr[1, 1]
    dplus = math.sqrt((m00 - 1.0) ** 2 + m01**2 + m10**2 + (m11 - 1.0) ** 2)
    dminus = math.sqrt((m00 + 1.0) ** 2 + m01**2 + m10**2 + (m11 + 1.0) ** 2)
    return min(dplus, dminus)
