"""Local operator algebra on C^n and its embedding into an N-site chain.

Sites are 1-based in every public function; storage is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DENSE_CAP = 4096


@dataclass(frozen=True, eq=False)
class LocalOp:
    """Dense complex n x n operator on the local physical space."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"local operator must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("local operator has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def dag(self) -> LocalOp:
        return LocalOp(self.entries.conj().T)

    def hermitian(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def __matmul__(self, other):
        return LocalOp(self.entries @ np.asarray(other))

    def __add__(self, other):
        return LocalOp(self.entries + np.asarray(other))

    def __sub__(self, other):
        return LocalOp(self.entries - np.asarray(other))

    def __neg__(self):
        return LocalOp(-self.entries)

    def __mul__(self, c):
        return LocalOp(self.entries * complex(c))

    __rmul__ = __mul__

    def __repr__(self):
        return f"LocalOp({np.array2string(self.entries, precision=4)})"


def _as_matrix(Q) -> np.ndarray:
    return np.asarray(Q, dtype=complex)


def pauli(alpha: int) -> LocalOp:
    """sigma^alpha for alpha in 0..3; sigma^0 is the identity."""
    mats = (
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    )
    if alpha not in range(4):
        raise IndexError(f"Pauli index must be in 0..3, got {alpha}")
    return LocalOp(np.array(mats[alpha], dtype=complex))


def basis_unit(alpha: int, beta: int, n: int = 2) -> LocalOp:
    """Matrix unit E^{alpha beta} = |alpha)(beta| on C^n."""
    if not (0 <= alpha < n and 0 <= beta < n):
        raise IndexError(f"indices ({alpha}, {beta}) out of range for n={n}")
    e = np.zeros((n, n), dtype=complex)
    e[alpha, beta] = 1.0
    return LocalOp(e)


def levi_civita(a: int, b: int, c: int) -> int:
    """epsilon_{abc} on {1,2,3}; zero for any index outside that set."""
    if {a, b, c} != {1, 2, 3}:
        return 0
    return 1 if (a, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)) else -1


def zeta(alpha: int, beta: int, gamma: int) -> complex:
    """Pauli structure constants: sigma^a sigma^b = sum_c zeta_{abc} sigma^c."""
    for i in (alpha, beta, gamma):
        if i not in range(4):
            raise IndexError(f"index {i} out of range 0..3")
    if alpha == 0:
        return complex(beta == gamma)
    if beta == 0:
        return complex(alpha == gamma)
    if gamma == 0:
        return complex(alpha == beta)
    return 1j * levi_civita(alpha, beta, gamma)


def rotation_u() -> LocalOp:
    """Single-site unitary u with u sigma^a u^dag = sigma^{a+1} (cyclic in 1..3)."""
    return LocalOp(np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2))


# A term is (coefficient, ((site0, matrix), ...)) with strictly increasing 0-based sites.
Term = tuple


def _merge_factors(f1, f2):
    out = dict(f1)
    for s, m in f2:
        out[s] = out[s] @ m if s in out else m
    return tuple(sorted(out.items(), key=lambda t: t[0]))


@dataclass(frozen=True, eq=False)
class ChainOp:
    """Operator on (C^n)^{tensor N} stored as a lazy sum of site-local products.

    Each term is ``(coef, ((site, Q), ...))`` with 0-based sites; identity
    factors are implicit. Use :meth:`dense` to materialize small chains.
    """

    n: int
    N: int
    terms: tuple = field(default=())

    @classmethod
    def identity(cls, n: int, N: int) -> ChainOp:
        return cls(n, N, ((1.0 + 0j, ()),))

    @classmethod
    def zero(cls, n: int, N: int) -> ChainOp:
        return cls(n, N, ())

    @classmethod
    def from_two_site(cls, h, k: int, N: int) -> ChainOp:
        """Embed a two-site operator ``h`` on C^{n^2} at sites (k, k+1).

        ``h`` is expanded in matrix units E^{ab} (x) E^{cd} so that the result
        stays in factored form.
        """
        h = _as_matrix(h)
        n = int(round(np.sqrt(h.shape[0])))
        if n * n != h.shape[0] or h.shape[0] != h.shape[1]:
            raise ValueError(f"two-site operator has incompatible shape {h.shape}")
        if not 1 <= k < N:
            raise IndexError(f"bond ({k}, {k + 1}) outside chain of length {N}")
        t = h.reshape(n, n, n, n)  # t[a, c, b, d] = h[(ac), (bd)]
        terms = []
        for a, c, b, d in zip(*np.nonzero(t)):
            ea = np.zeros((n, n), complex)
            ea[a, b] = 1
            ec = np.zeros((n, n), complex)
            ec[c, d] = 1
            terms.append((complex(t[a, c, b, d]), ((k - 1, ea), (k, ec))))
        return cls(n, N, tuple(terms))

    def _check(self, other: ChainOp):
        if (self.n, self.N) != (other.n, other.N):
            raise ValueError("chain operators live on different spaces")

    def __add__(self, other: ChainOp) -> ChainOp:
        self._check(other)
        return ChainOp(self.n, self.N, self.terms + other.terms)

    def __neg__(self) -> ChainOp:
        return self * -1

    def __sub__(self, other: ChainOp) -> ChainOp:
        return self + (-other)

    def __mul__(self, c) -> ChainOp:
        c = complex(c)
        return ChainOp(self.n, self.N, tuple((c * a, f) for a, f in self.terms))

    __rmul__ = __mul__

    def __matmul__(self, other: ChainOp) -> ChainOp:
        self._check(other)
        terms = tuple(
            (a * b, _merge_factors(f, g)) for a, f in self.terms for b, g in other.terms
        )
        return ChainOp(self.n, self.N, terms)

    def dag(self) -> ChainOp:
        return ChainOp(
            self.n,
            self.N,
            tuple((np.conj(a), tuple((s, m.conj().T) for s, m in f)) for a, f in self.terms),
        )

    def transpose(self) -> ChainOp:
        return ChainOp(
            self.n, self.N, tuple((a, tuple((s, m.T) for s, m in f)) for a, f in self.terms)
        )

    def map_factors(self, fn) -> ChainOp:
        """Apply ``fn`` to every local factor (e.g. a frame rotation)."""
        return ChainOp(
            self.n, self.N, tuple((a, tuple((s, fn(m)) for s, m in f)) for a, f in self.terms)
        )

    @property
    def size(self) -> int:
        return self.n**self.N

    def dense(self) -> np.ndarray:
        if self.size > DENSE_CAP:
            raise MemoryError(
                f"refusing dense build of dimension {self.size} > {DENSE_CAP}"
            )
        eye = np.eye(self.n, dtype=complex)
        out = np.zeros((self.size, self.size), dtype=complex)
        for a, f in self.terms:
            fd = dict(f)
            out += a * reduce(np.kron, [fd.get(s, eye) for s in range(self.N)], np.ones((1, 1)))
        return out

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Matrix-free product ``A @ X`` for X of shape (n^N,) or (n^N, m)."""
        X = np.asarray(X, dtype=complex)
        vec = X.ndim == 1
        Xr = X.reshape((self.n,) * self.N + (-1,))
        out = np.zeros_like(Xr)
        for a, f in self.terms:
            Y = Xr
            for s, m in f:
                Y = np.moveaxis(np.tensordot(m, Y, axes=([1], [s])), 0, s)
            out += a * Y
        out = out.reshape(self.size, -1)
        return out[:, 0] if vec else out

    def apply_right(self, X: np.ndarray) -> np.ndarray:
        """Matrix-free product ``X @ A``."""
        return self.transpose().apply(np.asarray(X).T).T

    def trace(self) -> complex:
        tot = 0j
        for a, f in self.terms:
            t = a * self.n ** (self.N - len(f))
            for _, m in f:
                t *= np.trace(m)
            tot += t
        return tot


def embed(Q, k: int, N: int) -> ChainOp:
    """Q_k = 1^{(k-1)} (x) Q (x) 1^{(N-k)} in lazy form (k is 1-based)."""
    Q = _as_matrix(Q)
    if not 1 <= k <= N:
        raise IndexError(f"site {k} outside chain of length {N}")
    return ChainOp(Q.shape[0], N, ((1.0 + 0j, ((k - 1, Q),)),))


def conjugate_frame(A: ChainOp) -> ChainOp:
    """U A U^dag with U = u^{(x)N}; maps sigma^a_k -> sigma^{a+1}_k."""
    if A.n != 2:
        raise ValueError("frame rotation is defined for n = 2 only")
    u = rotation_u().entries
    return A.map_factors(lambda m: u @ m @ u.conj().T)


def kron_all(ops: Sequence) -> np.ndarray:
    return reduce(np.kron, [_as_matrix(o) for o in ops], np.ones((1, 1), dtype=complex))


def sum_ops(ops: Iterable[ChainOp], n: int, N: int) -> ChainOp:
    return reduce(lambda x, y: x + y, ops, ChainOp.zero(n, N))
