"""Finite groups, truncated free groups and length functions.

Elements of a finite group are dense integer indices into a materialized
multiplication table.  Free-group elements are freely reduced words stored
as tuples of nonzero integers: ``i`` stands for the generator ``a_i`` and
``-i`` for its inverse.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, ClassVar, Hashable, Iterable, Sequence

import numpy as np

#: Largest order for which tables are built by default.
DEFAULT_MAX_ORDER = 512
#: Group axioms are verified exhaustively up to this order.
AXIOM_CHECK_LIMIT = 512
#: Default cap on ``|ball(2r)|`` for free-group truncations.
DEFAULT_FREE_CAP = 20_000


class GroupError(ValueError):
    """Raised for invalid group tables or group parameters."""


class LengthDomainError(ValueError):
    """Raised when a length function is evaluated outside its domain."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its multiplication table.

    Parameters
    ----------
    mul : (N, N) int array
        ``mul[g, h]`` is the index of ``g h``.
    inv : (N,) int array
        ``inv[g]`` is the index of ``g^{-1}``.
    identity : int
        Index of the neutral element.
    labels : sequence, optional
        Human readable label per element (defaults to the index).
    name : str
        Short model name used in reports.
    """

    mul: np.ndarray
    inv: np.ndarray
    identity: int = 0
    labels: tuple = ()
    name: str = "group"

    def __post_init__(self):
        mul = np.asarray(self.mul, dtype=np.int64)
        inv = np.asarray(self.inv, dtype=np.int64)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise GroupError("multiplication table must be a nonempty square array")
        n = mul.shape[0]
        if inv.shape != (n,):
            raise GroupError("inverse table has the wrong length")
        labels = tuple(self.labels) if len(self.labels) else tuple(range(n))
        if len(labels) != n:
            raise GroupError("one label per element is required")
        object.__setattr__(self, "mul", _frozen(mul))
        object.__setattr__(self, "inv", _frozen(inv))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "identity", int(self.identity))
        if n <= AXIOM_CHECK_LIMIT:
            verify_group_axioms(self.mul, self.inv, self.identity)

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self) -> int:
        return self.order

    def elements(self) -> range:
        return range(self.order)

    def multiply(self, g: int, h: int) -> int:
        return int(self.mul[g, h])

    def inverse(self, g: int) -> int:
        return int(self.inv[g])

    def inv_mul(self, g: int, h: int) -> int:
        """Index of ``g^{-1} h``."""
        return int(self.mul[self.inv[g], h])

    def index(self, label: Hashable) -> int:
        return self.labels.index(label)

    def label(self, g: int) -> Hashable:
        return self.labels[g]

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))

    def center(self) -> list[int]:
        """Indices of central elements."""
        return [g for g in self.elements() if np.array_equal(self.mul[g], self.mul[:, g])]

    def to_table_text(self) -> str:
        """Plain-text table: first line ``N``, then ``N`` rows of indices."""
        buf = io.StringIO()
        buf.write(f"{self.order}\n")
        for row in self.mul:
            buf.write(" ".join(str(int(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_table_text(cls, text: str, name: str = "table") -> "FiniteGroup":
        """Parse the format written by :meth:`to_table_text`.

        The identity and inverses are recovered from the table itself.
        """
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise GroupError("empty table text")
        try:
            n = int(lines[0])
            rows = [[int(v) for v in ln.split()] for ln in lines[1:]]
        except ValueError as exc:
            raise GroupError(f"malformed table text: {exc}") from None
        mul = np.array(rows, dtype=np.int64)
        if mul.shape != (n, n):
            raise GroupError(f"expected {n} rows of {n} entries")
        if mul.min() < 0 or mul.max() >= n:
            raise GroupError("table entries out of range")
        ident = [e for e in range(n) if np.array_equal(mul[e], np.arange(n))]
        if not ident:
            raise GroupError("table has no identity row")
        e = ident[0]
        inv = np.empty(n, dtype=np.int64)
        for g in range(n):
            hits = np.flatnonzero(mul[g] == e)
            if hits.size != 1:
                raise GroupError(f"element {g} has no unique inverse")
            inv[g] = hits[0]
        return cls(mul, inv, identity=e, name=name)


def verify_group_axioms(mul: np.ndarray, inv: np.ndarray, e: int) -> None:
    """Raise :class:`GroupError` unless ``(mul, inv, e)`` is a group law."""
    n = mul.shape[0]
    if mul.min() < 0 or mul.max() >= n or inv.min() < 0 or inv.max() >= n:
        raise GroupError("table entries out of range")
    idx = np.arange(n)
    if not (np.array_equal(mul[e], idx) and np.array_equal(mul[:, e], idx)):
        raise GroupError("identity axiom fails")
    if not (np.all(mul[idx, inv] == e) and np.all(mul[inv, idx] == e)):
        raise GroupError("inverse axiom fails")
    # (ab)c == a(bc), one row of a at a time to keep memory at O(N^2).
    for a in range(n):
        if not np.array_equal(mul[mul[a]], mul[a][mul]):
            raise GroupError(f"associativity fails for a={a}")


def _check_order(n: int, max_order: int) -> None:
    if n > max_order:
        raise GroupError(f"group order {n} exceeds the cap {max_order}")


def build_cyclic(n: int, max_order: int = DEFAULT_MAX_ORDER) -> FiniteGroup:
    """The cyclic group Z_n with ``mul(i, j) = (i + j) mod n``."""
    if n < 1:
        raise GroupError("n must be positive")
    _check_order(n, max_order)
    i = np.arange(n)
    return FiniteGroup((i[:, None] + i[None, :]) % n, (-i) % n, 0, tuple(range(n)), f"Z{n}")


def heisenberg_index(a: int, b: int, c: int, n: int) -> int:
    """Index of ``(a, b, c)`` in :func:`build_heisenberg`."""
    return (a % n) * n * n + (b % n) * n + (c % n)


def build_heisenberg(n: int, max_order: int = DEFAULT_MAX_ORDER) -> FiniteGroup:
    """The discrete Heisenberg group H_3(Z_n).

    The law is ``(a,b,c)(a',b',c') = (a+a'+bc', b+b', c+c')`` and the
    element ``(a, b, c)`` has index ``a n^2 + b n + c``.
    """
    if n < 2:
        raise GroupError("Heisenberg group needs n >= 2")
    _check_order(n**3, max_order)
    a, b, c = (x.ravel() for x in np.meshgrid(*(np.arange(n),) * 3, indexing="ij"))
    pa = a[:, None] + a[None, :] + b[:, None] * c[None, :]
    pb = b[:, None] + b[None, :]
    pc = c[:, None] + c[None, :]
    mul = (pa % n) * n * n + (pb % n) * n + (pc % n)
    # (a,b,c)^{-1} = (-a + bc, -b, -c)
    inv = ((-a + b * c) % n) * n * n + ((-b) % n) * n + ((-c) % n)
    labels = tuple(zip(a.tolist(), b.tolist(), c.tolist()))
    return FiniteGroup(mul, inv, 0, labels, f"H3(Z{n})")


@dataclass(frozen=True, eq=False)
class LengthFunction:
    """Values ``psi[g]`` of a length function on a finite group.

    ``scale`` records the normalization already folded into ``values``.
    """

    values: np.ndarray
    scale: float = 1.0
    name: str = "psi"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("length values must be a 1-d array")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "values", _frozen(v))

    def __call__(self, g: int) -> float:
        return float(self.values[g])

    def __len__(self) -> int:
        return self.values.shape[0]

    def scaled(self, c: float) -> "LengthFunction":
        return LengthFunction(self.values * c, self.scale * c, self.name)


def check_length_axioms(group: FiniteGroup, psi: LengthFunction, atol: float = 1e-12) -> bool:
    """True when ``psi(e) = 0``, ``psi >= 0`` and ``psi(g) = psi(g^{-1})``."""
    v = psi.values
    if v.shape != (group.order,):
        return False
    return bool(
        abs(v[group.identity]) <= atol
        and v.min() >= -atol
        and np.allclose(v, v[group.inv], atol=atol, rtol=0)
    )


def delta_length(group: FiniteGroup, scale: float = 1.0) -> LengthFunction:
    """``psi = scale * (1 - delta_e)``."""
    v = np.full(group.order, float(scale))
    v[group.identity] = 0.0
    return LengthFunction(v, scale, "1-delta")


def heisenberg_length(n: int) -> LengthFunction:
    """``psi(a, b, c) = 2 - delta_{b,0} - delta_{c,0}`` on H_3(Z_n)."""
    idx = np.arange(n**3)
    b = (idx // n) % n
    c = idx % n
    return LengthFunction(2.0 - (b == 0) - (c == 0), 1.0, "2-delta_b-delta_c")


def build_direct_product(
    gs: Sequence[FiniteGroup],
    psis: Sequence[LengthFunction],
    max_order: int = DEFAULT_MAX_ORDER,
) -> tuple[FiniteGroup, LengthFunction]:
    """Componentwise product group with the summed length function.

    Indices are mixed radix with the first factor most significant.
    """
    if not gs or not psis:
        raise GroupError("direct product needs at least one factor")
    if len(gs) != len(psis):
        raise GroupError("one length function per factor is required")
    for g, p in zip(gs, psis):
        if len(p) != g.order:
            raise GroupError("length function does not match its factor")
    if len(gs) == 1:
        return gs[0], psis[0]
    sizes = [g.order for g in gs]
    total = int(np.prod(sizes))
    _check_order(total, max_order)
    comps = np.stack(np.unravel_index(np.arange(total), sizes), axis=1)
    strides = np.array([int(np.prod(sizes[i + 1:])) for i in range(len(sizes))])
    mul = np.zeros((total, total), dtype=np.int64)
    inv = np.zeros(total, dtype=np.int64)
    psi = np.zeros(total)
    ident = 0
    for i, (g, p) in enumerate(zip(gs, psis)):
        ci = comps[:, i]
        mul += g.mul[ci[:, None], ci[None, :]] * strides[i]
        inv += g.inv[ci] * strides[i]
        psi += p.values[ci]
        ident += g.identity * strides[i]
    labels = tuple(tuple(gs[i].labels[c] for i, c in enumerate(row)) for row in comps.tolist())
    name = "x".join(g.name for g in gs)
    scales = {p.scale for p in psis}
    scale = scales.pop() if len(scales) == 1 else 1.0
    return (
        FiniteGroup(mul, inv, ident, labels, name),
        LengthFunction(psi, scale, "+".join(p.name for p in psis)),
    )


# ---------------------------------------------------------------------------
# Free groups
# ---------------------------------------------------------------------------

Word = tuple


def free_ball_size(k: int, r: int) -> int:
    """Number of reduced words of length at most ``r`` over ``k`` generators."""
    if k == 0 or r == 0:
        return 1
    # 1 + 2k * sum_{i<r} (2k-1)^i, valid for k = 1 as well.
    return 1 + 2 * k * sum((2 * k - 1) ** i for i in range(r))


def reduce_word(word: Iterable[int]) -> Word:
    """Freely reduce a word by cancelling adjacent ``x x^{-1}`` pairs."""
    out: list[int] = []
    for letter in word:
        if letter == 0:
            raise ValueError("0 is not a generator letter")
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(int(letter))
    return tuple(out)


@dataclass(frozen=True)
class FreeWordArena:
    """Reduced words of the free group F_k, truncated to a ball.

    The basis is ``ball(radius)``.  Word length is evaluable up to
    ``2 * radius`` so that ``g^{-1} h`` is covered for any basis pair.
    """

    generators: int
    radius: int
    cap: int = DEFAULT_FREE_CAP

    def __post_init__(self):
        if self.generators < 1:
            raise GroupError("free group needs at least one generator")
        if self.radius < 0:
            raise GroupError("radius must be nonnegative")
        size = free_ball_size(self.generators, 2 * self.radius)
        if size > self.cap:
            raise GroupError(
                f"|ball(2r)| = {size} exceeds the cap {self.cap} "
                f"(k={self.generators}, r={self.radius})"
            )

    @property
    def name(self) -> str:
        return f"F{self.generators}"

    def letters(self) -> list[int]:
        """Letters in lexicographic order a_1, a_1^{-1}, a_2, a_2^{-1}, ..."""
        out = []
        for i in range(1, self.generators + 1):
            out += [i, -i]
        return out

    def ball(self, r: int | None = None) -> list[Word]:
        """All reduced words of length <= r, breadth first, lexicographic per length."""
        r = self.radius if r is None else r
        if r > 2 * self.radius:
            raise LengthDomainError(f"ball({r}) lies outside the arena")
        words: list[Word] = [()]
        layer: list[Word] = [()]
        for _ in range(r):
            nxt = []
            for w in layer:
                for x in self.letters():
                    if w and w[-1] == -x:
                        continue
                    nxt.append(w + (x,))
            words += nxt
            layer = nxt
        return words

    identity: ClassVar[Word] = ()

    @staticmethod
    def reduce(word: Iterable[int]) -> Word:
        return reduce_word(word)

    def multiply(self, g: Word, h: Word) -> Word:
        return reduce_word(tuple(g) + tuple(h))

    def inverse(self, g: Word) -> Word:
        return tuple(-x for x in reversed(g))

    def inv_mul(self, g: Word, h: Word) -> Word:
        return self.multiply(self.inverse(g), h)

    def length(self, g: Word) -> float:
        """Word length ``|g|``; only defined inside ``ball(2 * radius)``."""
        g = reduce_word(g)
        if len(g) > 2 * self.radius:
            raise LengthDomainError(f"|{g}| exceeds 2r = {2 * self.radius}")
        if any(abs(x) > self.generators for x in g):
            raise LengthDomainError(f"{g} uses an unknown generator")
        return float(len(g))

    def label(self, g: Word) -> str:
        return word_label(g)


def word_label(g: Word) -> str:
    """Readable label such as ``a b^-1``; the empty word is ``e``."""
    if not g:
        return "e"
    names = "abcdefghijklmnopqrstuvwxyz"
    parts = []
    for x in g:
        s = names[abs(x) - 1] if abs(x) <= len(names) else f"g{abs(x)}"
        parts.append(s if x > 0 else s + "^-1")
    return " ".join(parts)


def free_ball(k: int, r: int, cap: int = DEFAULT_FREE_CAP) -> FreeWordArena:
    """Truncated free group on ``k`` generators with word length as psi."""
    return FreeWordArena(k, r, cap)


# ---------------------------------------------------------------------------
# Conditional negativity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnCertificate:
    is_cn: bool
    min_eig: float
    tol: float


def check_cn_length(basis, psi: Callable | LengthFunction, group) -> CnCertificate:
    """Certify conditional negativity of ``psi`` on ``basis``.

    ``psi`` is conditionally negative on the basis exactly when its Gromov
    form is positive semidefinite, so a single symmetric eigensolve decides.
    """
    from .curvature import gromov_form, psd_tolerance

    form = gromov_form(basis, psi, group)
    min_eig = float(np.linalg.eigvalsh(form.K)[0]) if form.K.size else 0.0
    tol = psd_tolerance(form.K)
    return CnCertificate(min_eig >= -tol, min_eig, tol)
