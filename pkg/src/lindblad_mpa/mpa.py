"""Matrix-product ansatz on the doubled auxiliary space.

Doubled vectors |x> in A (x) A are stored as M x M arrays X[i, j] (first
factor = row). A :class:`DoubledOp` is a sum of Kronecker pairs A (x) conj(B);
applying it never builds the M^2 x M^2 matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .spinspace import LocalOp, basis_unit, pauli


class ZeroContractionError(ArithmeticError):
    """The contraction vanished identically (not an underflow)."""


@dataclass(frozen=True, eq=False)
class AuxRep:
    """Truncated auxiliary representation.

    ``omega[a, a']`` and ``xi[a, a']`` are M x M matrices; ``W`` is the
    left boundary form and ``V`` the right boundary vector. The doubled
    boundary vectors are W (x) conj(W) and V (x) conj(V) unless ``Vbar`` /
    ``Wbar`` are given explicitly.
    """

    omega: np.ndarray
    xi: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Wbar: np.ndarray | None = None
    Vbar: np.ndarray | None = None

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=complex)
        xi = np.asarray(self.xi, dtype=complex)
        if om.ndim != 4 or om.shape[0] != om.shape[1] or om.shape[2] != om.shape[3]:
            raise ValueError(f"omega must have shape (n, n, M, M), got {om.shape}")
        if xi.shape != om.shape:
            raise ValueError("xi and omega shapes differ")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "xi", xi)
        for name in ("W", "V", "Wbar", "Vbar"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=complex)
            if v.shape != (self.M,):
                raise ValueError(f"{name} must have length {self.M}")
            object.__setattr__(self, name, v)
        if self.Wbar is None:
            object.__setattr__(self, "Wbar", self.W.conj())
        if self.Vbar is None:
            object.__setattr__(self, "Vbar", self.V.conj())
        for a in (om, xi, self.W, self.V):
            if not np.all(np.isfinite(a)):
                raise ValueError("representation has non-finite entries")

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def M(self) -> int:
        return self.omega.shape[2]

    def left(self) -> np.ndarray:
        return np.outer(self.W, self.Wbar)

    def right(self) -> np.ndarray:
        return np.outer(self.V, self.Vbar)


@dataclass(frozen=True, eq=False)
class DoubledOp:
    """Operator sum_i A_i (x) conj(B_i) on C^M (x) C^M."""

    M: int
    terms: tuple = field(default=())

    def __add__(self, other: DoubledOp) -> DoubledOp:
        return DoubledOp(self.M, self.terms + other.terms)

    def __sub__(self, other: DoubledOp) -> DoubledOp:
        return self + other * -1

    def __mul__(self, c) -> DoubledOp:
        return DoubledOp(self.M, tuple((c * A, B) for A, B in self.terms))

    __rmul__ = __mul__

    def __matmul__(self, other: DoubledOp) -> DoubledOp:
        return DoubledOp(
            self.M, tuple((A @ C, B @ D) for A, B in self.terms for C, D in other.terms)
        )

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Column action Op|x> with x given as an M x M array."""
        out = np.zeros((self.M, self.M), dtype=complex)
        for A, B in self.terms:
            out += A @ X @ B.conj().T
        return out

    def apply_left(self, Y: np.ndarray) -> np.ndarray:
        """Row action <y|Op (bilinear, no conjugation of y)."""
        out = np.zeros((self.M, self.M), dtype=complex)
        for A, B in self.terms:
            out += A.T @ Y @ B.conj()
        return out

    def dense(self) -> np.ndarray:
        out = np.zeros((self.M**2, self.M**2), dtype=complex)
        for A, B in self.terms:
            out += np.kron(A, B.conj())
        return out


def pair(Y: np.ndarray, X: np.ndarray) -> complex:
    """Bilinear pairing <<Y|X>> of two doubled vectors."""
    return complex(np.sum(Y * X))


@dataclass
class ContractionState:
    """Doubled vector with its natural-log magnitude carried separately."""

    vec: np.ndarray
    logscale: float = 0.0

    def rescale(self) -> ContractionState:
        s = np.max(np.abs(self.vec))
        if s == 0:
            raise ZeroContractionError("contraction vector vanished")
        if not np.isfinite(s):
            raise OverflowError("contraction overflowed before rescaling")
        self.vec = self.vec / s
        self.logscale += float(np.log(s))
        return self


def theta(rep: AuxRep, a: int, ap: int) -> DoubledOp:
    """Theta^{a a'} = sum_b Omega^{a b} (x) conj(Omega^{a' b})."""
    n = rep.n
    if not (0 <= a < n and 0 <= ap < n):
        raise IndexError(f"physical indices ({a}, {ap}) out of range for n={n}")
    return DoubledOp(rep.M, tuple((rep.omega[a, b], rep.omega[ap, b]) for b in range(n)))


def theta0(rep: AuxRep) -> DoubledOp:
    return DoubledOp(
        rep.M,
        tuple((rep.omega[a, b], rep.omega[a, b]) for a in range(rep.n) for b in range(rep.n)),
    )


def left_sweep(rep: AuxRep, steps: int, rescale: bool = True) -> list[ContractionState]:
    """States <<W,W~| Theta0^k for k = 0..steps."""
    T0 = theta0(rep)
    st = ContractionState(rep.left().astype(complex))
    out = [ContractionState(st.vec.copy(), st.logscale)]
    for _ in range(steps):
        st = ContractionState(T0.apply_left(st.vec), st.logscale)
        if rescale:
            st.rescale()
        out.append(ContractionState(st.vec.copy(), st.logscale))
    return out


def right_sweep(rep: AuxRep, steps: int, rescale: bool = True) -> list[ContractionState]:
    """States Theta0^k |V,V~>> for k = 0..steps."""
    T0 = theta0(rep)
    st = ContractionState(rep.right().astype(complex))
    if rescale:
        st.rescale()
    out = [ContractionState(st.vec.copy(), st.logscale)]
    for _ in range(steps):
        st = ContractionState(T0.apply(st.vec), st.logscale)
        if rescale:
            st.rescale()
        out.append(ContractionState(st.vec.copy(), st.logscale))
    return out


def partition_function(rep: AuxRep, N: int, rescale: bool = True) -> tuple[complex, float]:
    """Z = <<W,W~| Theta0^N |V,V~>> returned as (mantissa, logscale)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not np.any(rep.omega):
        raise ZeroContractionError("all Omega vanish: Z is identically zero")
    st = left_sweep(rep, N, rescale=rescale)[-1]
    z = pair(st.vec, rep.right())
    if z == 0:
        raise ZeroContractionError("partition function vanished")
    return z, st.logscale


def correlation(rep: AuxRep, N: int, insertions: Sequence[tuple[int, int, int]]) -> complex:
    """Normalized <E^{a1 a1'}_{k1} ... E^{am am'}_{km}> with 1-based ascending sites.

    Each insertion (k, a, a') contributes Theta^{a' a} (note the transposed
    indices).
    """
    sites = [k for k, _, _ in insertions]
    if any(s2 <= s1 for s1, s2 in zip(sites, sites[1:])):
        raise ValueError(f"insertion sites must be strictly ascending, got {sites}")
    if sites and not (1 <= sites[0] and sites[-1] <= N):
        raise IndexError("insertion site outside chain")
    T0 = theta0(rep)
    at = dict((k, (a, ap)) for k, a, ap in insertions)
    num = ContractionState(rep.left().astype(complex))
    den = ContractionState(rep.left().astype(complex))
    for k in range(1, N + 1):
        op = theta(rep, at[k][1], at[k][0]) if k in at else T0
        num = ContractionState(op.apply_left(num.vec), num.logscale)
        den = ContractionState(T0.apply_left(den.vec), den.logscale)
        den.rescale()
        s = np.max(np.abs(num.vec))
        if s > 0:
            num.rescale()
    z = pair(den.vec, rep.right())
    if z == 0:
        raise ZeroContractionError("partition function vanished")
    return pair(num.vec, rep.right()) / z * np.exp(num.logscale - den.logscale)


# Pauli matrices expanded in matrix units: sigma^a = sum c[a][x, y] E^{xy}.
def pauli_expectation(rep: AuxRep, N: int, factors: Sequence[tuple[int, int]]) -> complex:
    """<prod_i sigma^{alpha_i}_{k_i}> for n = 2 via matrix-unit expansion."""
    if rep.n != 2:
        raise ValueError("Pauli expectations need n = 2")
    factors = sorted(factors)
    choices = []
    for k, alpha in factors:
        s = pauli(alpha).entries
        choices.append([(k, x, y, s[x, y]) for x in (0, 1) for y in (0, 1) if s[x, y] != 0])
    total = 0j
    for combo in itertools.product(*choices):
        c = np.prod([t[3] for t in combo])
        total += c * correlation(rep, N, [(k, x, y) for k, x, y, _ in combo])
    return total


def _mpa_strings(rep: AuxRep, N: int, step) -> dict:
    """Map each index string to <<W| prod step(...) (row vector), depth-first."""
    layer = {(): rep.W.astype(complex)}
    for _ in range(N):
        layer = {
            key + (lab,): vec @ mat for key, vec in layer.items() for lab, mat in step()
        }
    return layer


def mpa_matrix(rep: AuxRep, N: int, cap: int = 64) -> np.ndarray:
    """Explicit M_{a,a'} = <W| Omega^{a1 a1'} ... Omega^{aN aN'} |V>."""
    n = rep.n
    d = n**N
    if d > cap:
        raise ValueError(f"dimension {d} exceeds cap {cap}")
    labels = [((a, ap), rep.omega[a, ap]) for a in range(n) for ap in range(n)]
    strings = _mpa_strings(rep, N, lambda: labels)
    out = np.zeros((d, d), dtype=complex)
    for key, vec in strings.items():
        row = sum(a * n ** (N - 1 - i) for i, (a, _) in enumerate(key))
        col = sum(ap * n ** (N - 1 - i) for i, (_, ap) in enumerate(key))
        out[row, col] = vec @ rep.V
    return out


def density_matrix_from_mpa(rep: AuxRep, N: int, cap: int = 64) -> np.ndarray:
    """rho_{a,a'} = <<W,W~| Theta^{a1 a1'} ... Theta^{aN aN'} |V,V~>> / Z."""
    n = rep.n
    d = n**N
    if d > cap:
        raise ValueError(f"dimension {d} exceeds cap {cap}")
    layer = {(): ContractionState(rep.left().astype(complex))}
    ops = {(a, ap): theta(rep, a, ap) for a in range(n) for ap in range(n)}
    for _ in range(N):
        nxt = {}
        for key, st in layer.items():
            for lab, op in ops.items():
                nxt[key + (lab,)] = ContractionState(op.apply_left(st.vec), st.logscale)
        layer = nxt
    ref = max(st.logscale for st in layer.values())
    rho = np.zeros((d, d), dtype=complex)
    for key, st in layer.items():
        row = sum(a * n ** (N - 1 - i) for i, (a, _) in enumerate(key))
        col = sum(ap * n ** (N - 1 - i) for i, (_, ap) in enumerate(key))
        rho[row, col] = pair(st.vec, rep.right()) * np.exp(st.logscale - ref)
    z = np.trace(rho)
    if z == 0:
        raise ZeroContractionError("partition function vanished")
    return rho / z


# --- local divergence and boundary matching -------------------------------------------


@dataclass(frozen=True)
class Residual:
    """Relative residual on the trusted interior block and on the truncation edge."""

    interior: float
    boundary: float

    def __float__(self):
        return self.interior


def _rel(res, scale) -> float:
    return float(res / scale) if scale > 0 else float(res)


def check_ldc(rep: AuxRep, h, edge: int = 1) -> Residual:
    """Residual of [h^, Omega (x)_p Omega] = Xi (x)_p Omega - Omega (x)_p Xi.

    Checked block by block: for physical entry ((a b), (a' b')) an M x M
    identity. The top ``edge`` levels are reported separately since products
    of truncated shift operators are wrong there.
    """
    n, M = rep.n, rep.M
    h = np.asarray(h, dtype=complex).reshape(n, n, n, n)  # h[a, b, c, d] = h[(ab), (cd)]
    Om, Xi = rep.omega, rep.xi
    # OO[a, a', b, b'] = Omega^{a a'} Omega^{b b'}
    OO = np.einsum("acij,bdjk->acbdik", Om, Om)
    hOO = np.einsum("abgd,gidjxy->abijxy", h, OO)  # sum_{g d} h[(ab),(gd)] Om^{g a'} Om^{d b'}
    OOh = np.einsum("agbdxy,gdij->abijxy", OO, h)  # sum Om^{a g} Om^{b d} h[(gd),(a'b')]
    lhs = hOO - OOh
    rhs = np.einsum("aixy,bjyz->abijxz", Xi, Om) - np.einsum("aixy,bjyz->abijxz", Om, Xi)
    diff = np.abs(lhs - rhs)
    scale = max(np.abs(hOO).max(), np.abs(OOh).max(), np.abs(rhs).max())
    k = M - edge
    inner = diff[..., :k, :k].max()
    outer = max(diff[..., k:, :].max(initial=0), diff[..., :, k:].max(initial=0))
    return Residual(_rel(inner, scale), _rel(outer, scale))


def lambda_op(rep: AuxRep) -> dict:
    """Lambda^{a a'} = i sum_b (Omega^{ab} (x) conj(Xi^{a'b}) - Xi^{ab} (x) conj(Omega^{a'b}))."""
    n, Om, Xi = rep.n, rep.omega, rep.xi
    out = {}
    for a in range(n):
        for ap in range(n):
            terms = []
            for b in range(n):
                terms.append((1j * Om[a, b], Xi[ap, b]))
                terms.append((-1j * Xi[a, b], Om[ap, b]))
            out[a, ap] = DoubledOp(rep.M, tuple(terms))
    return out


def gamma_b(rep: AuxRep, b) -> dict:
    """Boundary-field blocks Gamma_B^{a a'}."""
    n, Om = rep.n, rep.omega
    b = np.asarray(b, dtype=complex)
    out = {}
    for a in range(n):
        for ap in range(n):
            terms = []
            for be in range(n):
                for bp in range(n):
                    if b[a, be] != 0:
                        terms.append((-1j * b[a, be] * Om[be, bp], Om[ap, bp]))
                    if b[ap, be] != 0:
                        terms.append((1j * np.conj(b[ap, be]) * Om[a, bp], Om[be, bp]))
            out[a, ap] = DoubledOp(rep.M, tuple(terms))
    return out


def delta_b(rep: AuxRep, D) -> dict:
    """Dissipator blocks Delta_B^{a a'} built term by term."""
    n, Om = rep.n, rep.omega
    D = np.asarray(D, dtype=complex)
    Db = D.conj()
    out = {}
    for a in range(n):
        for ap in range(n):
            terms = []
            for be, bp, g in itertools.product(range(n), repeat=3):
                c1 = D[a, be] * Db[ap, bp]
                if c1 != 0:
                    terms.append((c1 * Om[be, g], Om[bp, g]))
                c2 = -0.5 * D[be, ap] * Db[be, bp]
                if c2 != 0:
                    terms.append((c2 * Om[a, g], Om[bp, g]))
                c3 = -0.5 * D[bp, be] * Db[bp, a]
                if c3 != 0:
                    terms.append((c3 * Om[be, g], Om[ap, g]))
            out[a, ap] = DoubledOp(rep.M, tuple(terms))
    return out


def _local_dissipator(D: np.ndarray, X: np.ndarray) -> np.ndarray:
    DD = D.conj().T @ D
    return D @ X @ D.conj().T - 0.5 * (X @ DD + DD @ X)


def delta_from_dissipator(rep: AuxRep, D) -> dict:
    """Delta blocks assembled from the local dissipator action on each E^{a a'}.

    Delta = sum_{a a'} D(E^{a a'}) (x) Theta^{a a'}; block (g, g') collects the
    (g, g') entry of D(E^{a a'}). Independent of :func:`delta_b`.
    """
    n = rep.n
    D = np.asarray(D, dtype=complex)
    out = {(g, gp): DoubledOp(rep.M) for g in range(n) for gp in range(n)}
    for a in range(n):
        for ap in range(n):
            img = _local_dissipator(D, basis_unit(a, ap, n).entries)
            th = theta(rep, a, ap)
            for g in range(n):
                for gp in range(n):
                    if img[g, gp] != 0:
                        out[g, gp] = out[g, gp] + th * img[g, gp]
    return out


def gamma_from_commutator(rep: AuxRep, b) -> dict:
    """Gamma blocks from -i [b, E^{a a'}] (x) Theta^{a a'}."""
    n = rep.n
    b = np.asarray(b, dtype=complex)
    out = {(g, gp): DoubledOp(rep.M) for g in range(n) for gp in range(n)}
    for a in range(n):
        for ap in range(n):
            E = basis_unit(a, ap, n).entries
            img = -1j * (b @ E - E @ b)
            th = theta(rep, a, ap)
            for g in range(n):
                for gp in range(n):
                    if img[g, gp] != 0:
                        out[g, gp] = out[g, gp] + th * img[g, gp]
    return out


def _sum_blocks(blocks: Iterable[dict], n: int, M: int) -> dict:
    out = {(a, ap): DoubledOp(M) for a in range(n) for ap in range(n)}
    for blk in blocks:
        for key, op in blk.items():
            out[key] = out[key] + op
    return out


def _as_list(D) -> list:
    if D is None:
        return []
    if isinstance(D, (LocalOp, np.ndarray)):
        return [np.asarray(D)]
    return [np.asarray(d) for d in D]


def span_samples(rep: AuxRep, N: int, samples: int = 64, seed: int = 0) -> list[np.ndarray]:
    """Vectors from span{Theta^{a2 a2'} ... Theta^{aN aN'} |V,V~>>}.

    Exhaustive when n^{2(N-1)} <= samples, otherwise random site-wise
    combinations plus the all-Theta0 element. Each vector is normalized.
    """
    n = rep.n
    ops = [theta(rep, a, ap) for a in range(n) for ap in range(n)]
    out = []

    def norm(x):
        s = np.max(np.abs(x))
        return x / s if s > 0 else x

    if len(ops) ** (N - 1) <= samples:
        for combo in itertools.product(ops, repeat=N - 1):
            x = rep.right().astype(complex)
            for op in reversed(combo):
                x = norm(op.apply(x))
            out.append(x)
        return out
    rng = np.random.default_rng(seed)
    T0 = theta0(rep)
    x = rep.right().astype(complex)
    for _ in range(N - 1):
        x = norm(T0.apply(x))
    out.append(x)
    for _ in range(samples):
        x = rep.right().astype(complex)
        for _ in range(N - 1):
            c = rng.standard_normal(len(ops)) + 1j * rng.standard_normal(len(ops))
            x = norm(sum(ci * op.apply(x) for ci, op in zip(c, ops)))
        out.append(x)
    return out


def check_lbmc(
    rep: AuxRep,
    bL,
    bR,
    DL,
    DR,
    N: int,
    samples: int = 64,
    seed: int = 0,
    edge: int = 1,
) -> tuple[Residual, Residual]:
    """(left, right) relative residuals of the boundary matching condition.

    Right: (Gamma_R + Delta_R - Lambda)^{a a'} |V,V~>> must vanish as a vector;
    the top ``edge`` levels of each factor are excluded from the interior
    figure. Left: <<W,W~| (Gamma_L + Delta_L + Lambda)^{a a'} |Y>> for Y in the
    span from :func:`span_samples`.
    """
    if N < 2:
        raise ValueError("boundary matching needs N >= 2")
    n, M = rep.n, rep.M
    lam = lambda_op(rep)
    zero = np.zeros((n, n))
    right_blocks = _sum_blocks(
        [gamma_b(rep, zero if bR is None else bR)] + [delta_b(rep, d) for d in _as_list(DR)],
        n,
        M,
    )
    left_blocks = _sum_blocks(
        [gamma_b(rep, zero if bL is None else bL)] + [delta_b(rep, d) for d in _as_list(DL)],
        n,
        M,
    )
    Vd = rep.right()
    k = M - edge
    r_in = r_out = r_scale = 0.0
    for key in lam:
        a = right_blocks[key].apply(Vd)
        lv = lam[key].apply(Vd)
        diff = np.abs(a - lv)
        r_scale = max(r_scale, np.abs(a[:k, :k]).max(), np.abs(lv[:k, :k]).max())
        r_in = max(r_in, diff[:k, :k].max())
        r_out = max(r_out, diff[k:, :].max(initial=0), diff[:, k:].max(initial=0))
    Wd = rep.left()
    l_res = l_scale = 0.0
    for Y in span_samples(rep, N, samples, seed):
        for key in lam:
            a = pair(Wd, left_blocks[key].apply(Y))
            lv = pair(Wd, lam[key].apply(Y))
            l_res = max(l_res, abs(a + lv))
            l_scale = max(l_scale, abs(a), abs(lv))
    right = Residual(_rel(r_in, r_scale), _rel(r_out, r_scale))
    left = Residual(_rel(l_res, l_scale), 0.0)
    return left, right


def lambda0_projections(rep: AuxRep, N: int, samples: int = 64, seed: int = 0) -> tuple[float, float]:
    """Relative size of Lambda_0 |V,V~>> (interior) and max |<<W,W~|Lambda_0|Y>>|."""
    lam = lambda_op(rep)
    L0 = DoubledOp(rep.M)
    for a in range(rep.n):
        L0 = L0 + lam[a, a]
    k = rep.M - 1
    v = L0.apply(rep.right())
    parts = [lam[a, a].apply(rep.right()) for a in range(rep.n)]
    scale = max(np.abs(p[:k, :k]).max() for p in parts)
    right = _rel(np.abs(v[:k, :k]).max(), scale)
    left = 0.0
    for Y in span_samples(rep, N, samples, seed):
        vals = [pair(rep.left(), lam[a, a].apply(Y)) for a in range(rep.n)]
        left = max(left, _rel(abs(sum(vals)), max(abs(x) for x in vals)))
    return right, left
