"""Heisenberg-type group structures built from real Clifford generators.

A structure is a family of m skew-symmetric orthogonal matrices J_1..J_m on
R^{2n} satisfying the anticommutation relations J_i J_j + J_j J_i = -2 d_ij I.
Such a family exists iff m < radon_hurwitz(2n). The group carried by the
structure is R^{2n} x R^m with the step-2 product
(x, z)(y, z') = (x + y, z + z' + [x, y]/2).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InadmissibleDimensionsError,
    InvalidDimensionError,
    StructureMismatchError,
)


def radon_hurwitz(two_n):
    """Radon-Hurwitz number of an even dimension.

    For 2n = a * 2^(4p+q) with a odd and 0 <= q <= 3 the value is 8p + 2^q.
    It bounds the center dimension: structures exist iff m < radon_hurwitz(2n).
    """
    two_n = int(two_n)
    if two_n <= 0 or two_n % 2 != 0:
        raise InvalidDimensionError(
            "horizontal dimension must be a positive even integer, got %r"
            % (two_n,))
    v = 0
    rest = two_n
    while rest % 2 == 0:
        rest //= 2
        v += 1
    p, q = divmod(v, 4)
    return 8 * p + 2 ** q


def _cd_conj(a):
    # Cayley-Dickson conjugate: negate everything but the real slot.
    out = -a
    out[..., 0] = a[..., 0]
    return out


def _cd_multiply(a, b):
    """Cayley-Dickson product on length-2^k coefficient arrays."""
    d = a.shape[-1]
    if d == 1:
        return a * b
    h = d // 2
    a1, a2 = a[..., :h], a[..., h:]
    b1, b2 = b[..., :h], b[..., h:]
    # (a1, a2)(b1, b2) = (a1 b1 - conj(b2) a2, b2 a1 + a2 conj(b1))
    top = _cd_multiply(a1, b1) - _cd_multiply(_cd_conj(b2), a2)
    bot = _cd_multiply(b2, a1) + _cd_multiply(a2, _cd_conj(b1))
    return np.concatenate([top, bot], axis=-1)


def _left_mult_matrices(dim):
    """Left-multiplication matrices of the imaginary basis units.

    For dim in {2, 4, 8} (complex, quaternion, octonion) these are dim-1
    integer skew-orthogonal anticommuting matrices.
    """
    units = np.eye(dim)
    mats = []
    for i in range(1, dim):
        cols = [_cd_multiply(units[i], units[j]) for j in range(dim)]
        mats.append(np.stack(cols, axis=1))
    return mats


def _minimal_dim(m):
    # 2^(number of s <= m with s mod 8 in {0, 1, 2, 4})
    count = sum(1 for s in range(1, m + 1) if s % 8 in (0, 1, 2, 4))
    return 2 ** count


def _generators(m):
    """Integer generator family for center dimension m on R^{_minimal_dim(m)}."""
    if m <= 1:
        return [np.array([[0.0, -1.0], [1.0, 0.0]])]
    if m <= 3:
        return _left_mult_matrices(4)[:m]
    if m <= 7:
        return _left_mult_matrices(8)[:m]
    if m == 8:
        eye8 = np.eye(8)
        e2 = np.array([[0.0, -1.0], [1.0, 0.0]])
        h2 = np.array([[1.0, 0.0], [0.0, -1.0]])
        octo = _left_mult_matrices(8)
        return [np.kron(e2, eye8)] + [np.kron(h2, o) for o in octo]
    base = _generators(8)
    # volume element: symmetric, squares to +I, anticommutes with the base
    omega = base[0]
    for g in base[1:]:
        omega = omega @ g
    tail = _generators(m - 8)
    d_tail = tail[0].shape[0]
    gens = [np.kron(c, np.eye(d_tail)) for c in base]
    gens += [np.kron(omega, a) for a in tail]
    return gens


@dataclass(frozen=True)
class HTypeStructure:
    """Immutable family of Clifford generators for the group R^{2n} x R^m."""

    n: int
    m: int
    J: tuple = field(repr=False)

    @property
    def horizontal_dim(self):
        return 2 * self.n

    @property
    def center_dim(self):
        return self.m

    def jz(self, z):
        """Matrix J_z = sum_k z_k J_k acting on the horizontal layer."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.m,):
            raise StructureMismatchError(
                "center vector of length %d expected, got shape %s"
                % (self.m, z.shape))
        out = np.zeros((2 * self.n, 2 * self.n))
        for zk, jk in zip(z, self.J):
            out += zk * jk
        return out

    def verify(self, tol=1e-14):
        """Recheck all construction invariants; raises on violation."""
        eye = np.eye(2 * self.n)
        for i, ji in enumerate(self.J):
            if np.max(np.abs(ji.T + ji)) > tol:
                raise InadmissibleDimensionsError("J_%d not skew" % i)
            if np.max(np.abs(ji.T @ ji - eye)) > tol:
                raise InadmissibleDimensionsError("J_%d not orthogonal" % i)
            for j, jj in enumerate(self.J):
                target = -2.0 * eye if i == j else 0.0
                if np.max(np.abs(ji @ jj + jj @ ji - target)) > tol:
                    raise InadmissibleDimensionsError(
                        "anticommutation fails at (%d, %d)" % (i, j))
        if self.m >= radon_hurwitz(2 * self.n):
            raise InadmissibleDimensionsError(
                "m=%d admits no structure on R^%d" % (self.m, 2 * self.n))
        return True


def build_structure(n, m):
    """Deterministic H-type structure with integer generator entries.

    Raises InadmissibleDimensionsError unless m < radon_hurwitz(2n).
    """
    n = int(n)
    m = int(m)
    if n <= 0 or m <= 0:
        raise InvalidDimensionError("n and m must be positive, got (%d, %d)"
                                    % (n, m))
    bound = radon_hurwitz(2 * n)
    if m >= bound:
        raise InadmissibleDimensionsError(
            "m=%d is not < radon_hurwitz(%d)=%d" % (m, 2 * n, bound))
    gens = _generators(m)
    d = gens[0].shape[0]
    reps = (2 * n) // d
    if reps * d != 2 * n:
        raise InadmissibleDimensionsError(
            "internal: minimal dimension %d does not divide %d" % (d, 2 * n))
    js = []
    for g in gens:
        jk = np.kron(np.eye(reps), g) if reps > 1 else g.copy()
        jk.setflags(write=False)
        js.append(jk)
    s = HTypeStructure(n=n, m=m, J=tuple(js))
    s.verify()
    return s


@dataclass(frozen=True)
class GroupPoint:
    """Group element (x, z) with x in R^{2n} and z in R^m."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))


def _check_point(s, g):
    if g.x.shape != (2 * s.n,) or g.z.shape != (s.m,):
        raise StructureMismatchError(
            "point with shapes x%s z%s does not fit structure (n=%d, m=%d)"
            % (g.x.shape, g.z.shape, s.n, s.m))


def bracket(s, x, y):
    """Center-valued bracket [x, y]_k = <J_k x, y>; bilinear, antisymmetric."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (2 * s.n,) or y.shape != (2 * s.n,):
        raise StructureMismatchError(
            "horizontal vectors of length %d expected" % (2 * s.n))
    return np.array([jk @ x @ y for jk in s.J])


def multiply(s, g, h):
    """Group product (x,z)(y,z') = (x+y, z+z'+[x,y]/2)."""
    _check_point(s, g)
    _check_point(s, h)
    return GroupPoint(g.x + h.x, g.z + h.z + 0.5 * bracket(s, g.x, h.x))


def inverse(s, g):
    """Group inverse (-x, -z)."""
    _check_point(s, g)
    return GroupPoint(-g.x, -g.z)


def identity(s):
    return GroupPoint(np.zeros(2 * s.n), np.zeros(s.m))


def dilate(s, a, g):
    """Anisotropic dilation (x, z) -> (a x, a^2 z); a group automorphism."""
    if a == 0:
        raise InvalidDimensionError("dilation factor must be nonzero")
    _check_point(s, g)
    return GroupPoint(a * g.x, a * a * g.z)
