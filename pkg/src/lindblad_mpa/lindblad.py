"""Brute-force Lindblad generator and stationary-state oracle for small chains.

Every matrix-product result in this package is cross-checked against the
dense kernel computed here.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .spinspace import ChainOp, LocalOp, embed, levi_civita, pauli, sum_ops

log = logging.getLogger(__name__)

SOLVE_TOL = 1e-10
IDENTITY_TOL = 1e-12
SIZE_CAP = 64


class NonConvergenceError(RuntimeError):
    pass


class DegenerateKernelError(RuntimeError):
    pass


def _ops(x) -> tuple:
    if x is None:
        return ()
    if isinstance(x, (LocalOp, np.ndarray)):
        return (LocalOp(x),)
    return tuple(LocalOp(d) for d in x)


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Boundary-driven chain: bulk coupling h, fields bL/bR, Lindblad ops at the ends.

    ``dissL`` acts on site 1 and ``dissR`` on site N.
    """

    n: int
    N: int
    h: LocalOp
    bL: LocalOp | None = None
    bR: LocalOp | None = None
    dissL: tuple = field(default=())
    dissR: tuple = field(default=())

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("chain length must be >= 1")
        n = self.n
        object.__setattr__(self, "h", LocalOp(self.h))
        zero = np.zeros((n, n), dtype=complex)
        object.__setattr__(self, "bL", LocalOp(zero if self.bL is None else self.bL))
        object.__setattr__(self, "bR", LocalOp(zero if self.bR is None else self.bR))
        object.__setattr__(self, "dissL", _ops(self.dissL))
        object.__setattr__(self, "dissR", _ops(self.dissR))
        if self.h.dim != n * n:
            raise ValueError(f"bulk coupling has dim {self.h.dim}, expected {n * n}")
        for name in ("h", "bL", "bR"):
            if not getattr(self, name).hermitian(1e-14):
                raise ValueError(f"{name} is not self-adjoint")
        for D in self.dissL + self.dissR:
            if D.dim != n:
                raise ValueError("Lindblad operator dimension mismatch")

    @property
    def dim(self) -> int:
        return self.n**self.N

    def lindblad_ops(self) -> list[tuple[int, LocalOp]]:
        """All (site, D) pairs, sites 1-based."""
        return [(1, D) for D in self.dissL] + [(self.N, D) for D in self.dissR]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    N: int
    entries: np.ndarray
    n: int = 2

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.shape != (self.n**self.N,) * 2:
            raise ValueError(f"density matrix has shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def violations(self, herm_tol=1e-12, trace_tol=1e-12, psd_tol=1e-10) -> list[str]:
        r = self.entries
        out = []
        if np.max(np.abs(r - r.conj().T)) > herm_tol:
            out.append("not hermitian")
        if abs(np.trace(r) - 1) > trace_tol:
            out.append("trace != 1")
        if np.linalg.eigvalsh((r + r.conj().T) / 2).min() < -psd_tol:
            out.append("not positive semidefinite")
        return out

    def expect(self, op) -> complex:
        op = op.dense() if isinstance(op, ChainOp) else np.asarray(op)
        return complex(np.sum(op.T * self.entries))


def hamiltonian(spec: ChainSpec) -> ChainOp:
    """H = bL_1 + bR_N + sum_k h_{k,k+1}; for N = 1 this is bL + bR on one site."""
    n, N = spec.n, spec.N
    H = embed(spec.bL, 1, N) + embed(spec.bR, N, N)
    bonds = [ChainOp.from_two_site(spec.h, k, N) for k in range(1, N)]
    return H + sum_ops(bonds, n, N)


def dissipator_apply(D, k: int, rho) -> np.ndarray:
    """D_k rho D_k^dag - 1/2 {rho, D_k^dag D_k} for a single-site Lindblad op."""
    rho = np.asarray(rho, dtype=complex)
    D = np.asarray(D, dtype=complex)
    n = D.shape[0]
    N = int(round(np.log(rho.shape[0]) / np.log(n)))
    Dk = embed(D, k, N)
    DD = embed(D.conj().T @ D, k, N)
    return Dk.apply(Dk.dag().apply_right(rho)) - 0.5 * (DD.apply_right(rho) + DD.apply(rho))


def liouvillian_apply(spec: ChainSpec, rho) -> np.ndarray:
    """Matrix-free L(rho) = -i[H, rho] + sum_j D_j(rho)."""
    rho = np.asarray(rho, dtype=complex)
    H = hamiltonian(spec)
    out = -1j * (H.apply(rho) - H.apply_right(rho))
    for k, D in spec.lindblad_ops():
        out += dissipator_apply(D, k, rho)
    return out


def liouvillian_matrix(spec: ChainSpec) -> np.ndarray:
    """Dense superoperator acting on row-major vec(rho): vec(A rho B) = (A (x) B^T) vec(rho)."""
    d = spec.dim
    H = hamiltonian(spec).dense()
    eye = np.eye(d)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for k, D in spec.lindblad_ops():
        Dk = embed(D, k, spec.N).dense()
        DD = Dk.conj().T @ Dk
        L += np.kron(Dk, Dk.conj()) - 0.5 * np.kron(DD, eye) - 0.5 * np.kron(eye, DD.T)
    return L


def _inverse_iteration(L: np.ndarray, tol: float, maxiter: int = 50) -> np.ndarray:
    shift = 1e-10 * np.linalg.norm(L, 1)
    lu = sla.lu_factor(L - shift * np.eye(L.shape[0]))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(L.shape[0]) + 0j
    for _ in range(maxiter):
        x = sla.lu_solve(lu, x)
        x /= np.linalg.norm(x)
        if np.max(np.abs(L @ x)) <= tol * 1e-2:
            return x
    raise NonConvergenceError("inverse iteration did not reach the kernel")


def steady_state(
    spec: ChainSpec,
    tol: float = SOLVE_TOL,
    size_cap: int = SIZE_CAP,
    check_degeneracy: bool | None = None,
) -> DensityMatrix:
    """Unique stationary state from the dense superoperator kernel.

    One equation of L x = 0 is replaced by the trace constraint. Because the
    trace functional is a left null vector of L, the replaced system is
    singular exactly when the kernel is more than one dimensional.
    """
    d = spec.dim
    if d > size_cap:
        raise ValueError(f"Hilbert space dimension {d} exceeds oracle cap {size_cap}")
    L = liouvillian_matrix(spec)
    A = L.copy()
    A[0, :] = np.eye(d).reshape(-1)
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    with warnings.catch_warnings():
        # a singular factorization is handled below via rcond
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(A)
    rcond, _ = sla.lapack.zgecon(lu[0], np.abs(A).sum(axis=0).max())
    if rcond < 1e-12:
        log.warning("trace-replaced system ill-conditioned (rcond=%.2e), using inverse iteration", rcond)
        x = _inverse_iteration(L, tol)
        x = x / np.trace(x.reshape(d, d))
    else:
        x = sla.lu_solve(lu, b)
    if check_degeneracy is None:
        check_degeneracy = d * d <= 1024
    if check_degeneracy:
        s = sla.svdvals(L)
        if s[-2] <= 1e-8 * s[0]:
            raise DegenerateKernelError(
                f"second-smallest singular value {s[-2]:.3e} indicates a degenerate kernel"
            )
    elif rcond < 1e-14:
        raise DegenerateKernelError(f"trace-replaced system singular (rcond={rcond:.2e})")
    rho = x.reshape(d, d)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho)
    res = np.max(np.abs(liouvillian_apply(spec, rho)))
    if res > tol:
        raise NonConvergenceError(f"stationarity residual {res:.3e} above {tol:.1e}")
    return DensityMatrix(spec.N, rho, spec.n)


def adjoint_apply(spec: ChainSpec, F: ChainOp) -> ChainOp:
    """Heisenberg-picture generator L^dag(F) = i[H, F] + sum_j (D^dag F D - 1/2 {F, D^dag D}).

    The commutator sign is the one fixed by Tr(F L(rho)) = Tr(L^dag(F) rho).
    """
    H = hamiltonian(spec)
    out = 1j * (H @ F - F @ H)
    for k, D in spec.lindblad_ops():
        Dk = embed(D, k, spec.N)
        DD = embed(D.dag() @ D, k, spec.N)
        out = out + Dk.dag() @ F @ Dk - 0.5 * (F @ DD + DD @ F)
    return out


def current_operator(k: int, alpha: int, N: int) -> ChainOp:
    """Spin current j_k^alpha = 2 sum eps_{alpha beta gamma} sigma^beta_k sigma^gamma_{k+1}."""
    if not 1 <= k < N:
        raise IndexError(f"bond ({k}, {k + 1}) outside chain of length {N}")
    terms = []
    for b in (1, 2, 3):
        for c in (1, 2, 3):
            e = levi_civita(alpha, b, c)
            if e:
                terms.append(2 * e * (embed(pauli(b), k, N) @ embed(pauli(c), k + 1, N)))
    return sum_ops(terms, 2, N)


def local_current(rho, k: int, alpha: int, tol: float = IDENTITY_TOL) -> float:
    rho = np.asarray(rho, dtype=complex)
    N = int(round(np.log2(rho.shape[0])))
    val = np.trace(current_operator(k, alpha, N).apply(rho))
    if abs(val.imag) > tol:
        raise ValueError(f"current expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def shifted_spec(spec: ChainSpec, shifts: Sequence[complex]) -> ChainSpec:
    """Spec with D_j -> D_j - c_j and the compensating fields G_j moved into bL/bR."""
    ops = spec.lindblad_ops()
    if len(shifts) != len(ops):
        raise ValueError(f"need {len(ops)} shifts, got {len(shifts)}")
    eye = np.eye(spec.n)
    bL, bR = spec.bL.entries.copy(), spec.bR.entries.copy()
    nl = len(spec.dissL)
    new = []
    for i, ((_, D), c) in enumerate(zip(ops, shifts)):
        D = D.entries
        G = 0.5j * (c * D.conj().T - np.conj(c) * D)
        if i < nl:
            bL = bL - G
        else:
            bR = bR - G
        new.append(D - c * eye)
    return ChainSpec(spec.n, spec.N, spec.h, bL, bR, new[:nl], new[nl:])


def gauge_shift_check(spec: ChainSpec, shifts: Sequence[complex], rho) -> float:
    """max |L(rho) - L~(rho)| for the shifted generator."""
    rho = np.asarray(rho, dtype=complex)
    if not np.any(shifts):
        return 0.0
    a = liouvillian_apply(spec, rho)
    b = liouvillian_apply(shifted_spec(spec, shifts), rho)
    return float(np.max(np.abs(a - b)))


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    r = A @ A.conj().T
    return r / np.trace(r)
