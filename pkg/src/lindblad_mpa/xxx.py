"""Twisted-boundary isotropic Heisenberg chain: exact matrix-product steady state.

The auxiliary space is the lowest-weight gl(2) module with complex spin
parameter p = i/Gamma. The state built here lives in a rotated frame; the
lab frame differs by u^{(x)N}, which relabels Pauli axes cyclically
(lab x <- mpa z, lab y <- mpa x, lab z <- mpa y).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import mpa
from .lindblad import ChainSpec
from .spinspace import LocalOp, kron_all, pauli, rotation_u
from .mpa import AuxRep, ContractionState, DoubledOp, pair, theta, theta0

# XXX coupling with the Xi normalization that closes the local divergence
# condition for h = sigma . sigma.
XI_SCALE = 2j

# lab axis alpha reads mpa axis LAB_FROM_MPA[alpha]
LAB_FROM_MPA = {1: 3, 2: 1, 3: 2}


@dataclass(frozen=True)
class XxxParams:
    N: int
    Gamma: float
    theta: float
    M: int | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not self.Gamma > 0:
            raise ValueError(f"Gamma must be positive, got {self.Gamma}")
        if not 0 < self.theta <= np.pi:
            raise ValueError(f"theta must lie in (0, pi], got {self.theta}")
        if self.M is not None and self.M < self.N + 1:
            raise ValueError(f"truncation M={self.M} below N+1={self.N + 1}")

    @property
    def p(self) -> complex:
        return 1j / self.Gamma

    @property
    def trunc(self) -> int:
        return self.N + 1 if self.M is None else self.M


@dataclass(frozen=True, eq=False)
class Gl2Rep:
    M: int
    p: complex
    I: np.ndarray
    Splus: np.ndarray
    Sminus: np.ndarray
    Sz: np.ndarray


def gl2_rep(p: complex, M: int) -> Gl2Rep:
    """Truncated lowest-weight module: S+ lowers the level, S- raises it."""
    if M < 2:
        raise ValueError("need M >= 2")
    lv = np.arange(M)
    Sp = np.zeros((M, M), dtype=complex)
    Sm = np.zeros((M, M), dtype=complex)
    Sp[lv[:-1], lv[1:]] = lv[1:]
    Sm[lv[1:], lv[:-1]] = 2 * p - lv[:-1]
    Sz = np.diag(p - lv).astype(complex)
    return Gl2Rep(M, complex(p), np.eye(M, dtype=complex), Sp, Sm, Sz)


def gl2_commutator_residual(rep: Gl2Rep) -> float:
    """max |.| of the gl(2) relations on levels <= M-2."""
    k = rep.M - 1
    Sp, Sm, Sz = rep.Splus, rep.Sminus, rep.Sz
    rels = (
        Sp @ Sm - Sm @ Sp - 2 * Sz,
        Sz @ Sp - Sp @ Sz - Sp,
        Sz @ Sm - Sm @ Sz + Sm,
    )
    return float(max(np.abs(r[:k, :k]).max() for r in rels))


def _binomial_series(two_p: complex, c: float, M: int) -> np.ndarray:
    """c^m * binom(two_p, m), m < M, by term ratios."""
    v = np.zeros(M, dtype=complex)
    v[0] = 1.0
    for m in range(M - 1):
        v[m + 1] = v[m] * c * (two_p - m) / (m + 1)
    return v


def boundary_vectors(theta_: float, Gamma: float, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(W, V, Vbar) single-factor boundary vectors; the doubled V is V (x) Vbar."""
    if not 0 < theta_ <= np.pi:
        raise ValueError(f"theta must lie in (0, pi], got {theta_}")
    p = 1j / Gamma
    c = -1.0 / np.tan(theta_ / 2) if theta_ < np.pi else 0.0
    W = np.zeros(M, dtype=complex)
    W[0] = 1.0
    return W, _binomial_series(2 * p, c, M), _binomial_series(2 * np.conj(p), c, M)


def _series_dtheta(two_p: complex, c: float, dc: float, M: int) -> np.ndarray:
    # d/dtheta c^m binom = m c^{m-1} dc binom, with w_m = c^{m-1} binom(two_p, m)
    out = np.zeros(M, dtype=complex)
    if M < 2:
        return out
    w = two_p
    for m in range(1, M):
        out[m] = m * dc * w
        w = w * c * (two_p - m) / (m + 1)
    return out


def boundary_vectors_dtheta(theta_: float, Gamma: float, M: int) -> np.ndarray:
    """d/dtheta of the doubled right vector V (x) Vbar, as an M x M array."""
    if not 0 < theta_ <= np.pi:
        raise ValueError(f"theta must lie in (0, pi], got {theta_}")
    p = 1j / Gamma
    c = -1.0 / np.tan(theta_ / 2) if theta_ < np.pi else 0.0
    dc = 1.0 / (2 * np.sin(theta_ / 2) ** 2)
    _, v, vb = boundary_vectors(theta_, Gamma, M)
    dv = _series_dtheta(2 * p, c, dc, M)
    dvb = _series_dtheta(2 * np.conj(p), c, dc, M)
    return np.outer(dv, vb) + np.outer(v, dvb)


def xxx_rep(params: XxxParams) -> AuxRep:
    M = params.trunc
    g = gl2_rep(params.p, M)
    omega = np.empty((2, 2, M, M), dtype=complex)
    omega[0, 0] = 1j * g.Sz
    omega[1, 1] = -1j * g.Sz
    omega[0, 1] = 1j * g.Splus
    omega[1, 0] = 1j * g.Sminus
    xi = np.zeros_like(omega)
    xi[0, 0] = xi[1, 1] = XI_SCALE * g.I
    W, V, Vb = boundary_vectors(params.theta, params.Gamma, M)
    return AuxRep(omega, xi, W, V, Wbar=W.conj(), Vbar=Vb)


def heisenberg_coupling() -> np.ndarray:
    return sum(np.kron(pauli(a).entries, pauli(a).entries) for a in (1, 2, 3))


def lab_dissipators(Gamma: float, theta_: float) -> tuple[np.ndarray, np.ndarray]:
    """Lindblad operators targeting n_L = x at site 1 and n_R = (cos, sin, 0) at site N."""
    s1, s2, s3 = (pauli(a).entries for a in (1, 2, 3))
    g = np.sqrt(Gamma)
    return g * (s2 + 1j * s3), g * (s2 * np.cos(theta_) - s1 * np.sin(theta_) + 1j * s3)


def mpa_dissipators(Gamma: float, theta_: float) -> tuple[np.ndarray, np.ndarray]:
    """Lab dissipators pulled back to the matrix-product frame, u^dag D u."""
    u = rotation_u().entries
    DL, DR = lab_dissipators(Gamma, theta_)
    return u.conj().T @ DL @ u, u.conj().T @ DR @ u


def xxx_chain_spec(N: int, Gamma: float, theta_: float, frame: str = "lab") -> ChainSpec:
    if frame == "lab":
        DL, DR = lab_dissipators(Gamma, theta_)
    elif frame == "mpa":
        DL, DR = mpa_dissipators(Gamma, theta_)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    return ChainSpec(2, N, heisenberg_coupling(), dissL=[DL], dissR=[DR])


def frame_unitary(N: int) -> np.ndarray:
    return kron_all([rotation_u()] * N)


def untwisted_state(N: int) -> np.ndarray:
    """Pure product state ((1 + sigma^x)/2)^{(x)N} solving the theta = 0 chain."""
    return kron_all([(np.eye(2) + pauli(1).entries) / 2] * N)


def density_matrix(params: XxxParams) -> np.ndarray:
    """Dense lab-frame steady state U rho U^dag (small N only)."""
    rho = mpa.density_matrix_from_mpa(xxx_rep(params), params.N)
    U = frame_unitary(params.N)
    return U @ rho @ U.conj().T


# --- observables -----------------------------------------------------------------------


def b_operators(rep: AuxRep) -> dict[int, DoubledOp]:
    """B^alpha on the doubled space, keyed by mpa Pauli axis 1, 2, 3."""
    t01, t10 = theta(rep, 0, 1), theta(rep, 1, 0)
    return {
        1: t01 + t10,
        2: (t01 - t10) * 1j,
        3: theta(rep, 0, 0) - theta(rep, 1, 1),
    }


def b_operators_explicit(g: Gl2Rep, gb: Gl2Rep) -> dict[int, np.ndarray]:
    """B^alpha written through S^{+-z}, keyed by lab axis (second factor uses conj(p)).

    Entry alpha equals ``b_operators(rep)[LAB_FROM_MPA[alpha]]``.
    """
    k = np.kron
    return {
        1: k(g.Splus, gb.Splus) - k(g.Sminus, gb.Sminus),
        2: k(g.Sz, gb.Sminus - gb.Splus) + k(g.Sminus - g.Splus, gb.Sz),
        3: 1j * k(g.Sz, gb.Sminus + gb.Splus) - 1j * k(g.Sminus + g.Splus, gb.Sz),
    }


def theta0_explicit(g: Gl2Rep, gb: Gl2Rep) -> np.ndarray:
    return 2 * np.kron(g.Sz, gb.Sz) + np.kron(g.Splus, gb.Splus) + np.kron(g.Sminus, gb.Sminus)


def _check_real(z: complex, tol: float, what: str, floor: float = np.finfo(float).tiny) -> float:
    # floor sets the magnitude below which the check becomes absolute
    if abs(z.imag) > tol * max(abs(z.real), floor):
        raise ArithmeticError(f"{what} has imaginary residue {z.imag:.3e} (value {z.real:.6e})")
    return float(z.real)


def currents(params: XxxParams, tol: float = 1e-10) -> tuple[float, float, float]:
    """Lab-frame steady-state currents (jx, jy, jz) from partition-function ratios."""
    N = params.N
    rep = xxx_rep(params)
    sweep = mpa.left_sweep(rep, N)
    prev, last = sweep[N - 1], sweep[N]
    zN = pair(last.vec, rep.right())
    zNm1 = pair(prev.vec, rep.right())
    dzNm1 = pair(prev.vec, boundary_vectors_dtheta(params.theta, params.Gamma, rep.M))
    ratio = np.exp(prev.logscale - last.logscale) / zN
    jx = _check_real(-8j * params.p * zNm1 * ratio, tol, "jx")
    jz = _check_real(-4 * dzNm1 * ratio, tol, "jz")
    c = 1.0 / np.tan(params.theta / 2) if params.theta < np.pi else 0.0
    return jx, -c * jx, jz


def unnormalized_profile(rep: AuxRep, N: int) -> tuple[np.ndarray, np.ndarray, float]:
    """S^alpha_{k,N} mantissas (shape (N, 3), mpa axes), per-k logscales, and log Z_N."""
    lefts = mpa.left_sweep(rep, N)
    rights = mpa.right_sweep(rep, N - 1)
    B = b_operators(rep)
    S = np.zeros((N, 3), dtype=complex)
    logs = np.zeros(N)
    for k in range(1, N + 1):
        L, R = lefts[k - 1], rights[N - k]
        for a in (1, 2, 3):
            S[k - 1, a - 1] = pair(L.vec, B[a].apply(R.vec))
        logs[k - 1] = L.logscale + R.logscale
    zN = pair(lefts[N].vec, rep.right())
    return S, logs, np.log(zN + 0j) + lefts[N].logscale


def magnetization_profile(params: XxxParams, frame: str = "lab", tol: float = 1e-10) -> np.ndarray:
    """Rows (k, mx, my, mz) of one-point magnetizations <sigma^alpha_k>."""
    N = params.N
    S, logs, logZ = unnormalized_profile(xxx_rep(params), N)
    m = S * np.exp(logs[:, None] - logZ)
    mr = np.empty((N, 3))
    for i in range(N):
        for a in range(3):
            mr[i, a] = _check_real(complex(m[i, a]), tol, "magnetization", floor=1.0)
    if frame == "lab":
        mr = mr[:, [LAB_FROM_MPA[a] - 1 for a in (1, 2, 3)]]
    elif frame != "mpa":
        raise ValueError(f"unknown frame {frame!r}")
    return np.column_stack([np.arange(1, N + 1), mr])


def lab_pauli_expectation(params: XxxParams, factors) -> complex:
    """<prod sigma^alpha_k> in the lab frame via the mpa-frame contraction."""
    rep = xxx_rep(params)
    return mpa.pauli_expectation(rep, params.N, [(k, LAB_FROM_MPA[a]) for k, a in factors])


# --- algebraic checks ------------------------------------------------------------------


def check_cubic(params: XxxParams, p: complex | None = None, edge: int = 2) -> dict[int, float]:
    """Relative residual of [T0,[T0,B]] + 2{T0,B} - 8 p^2 B on levels <= M-3.

    ``p`` overrides the value used in the relation (for sensitivity probes).
    """
    M = params.trunc
    if M < 4:
        raise ValueError("cubic check needs M >= 4")
    rep = xxx_rep(params)
    pp = params.p if p is None else p
    T = theta0(rep).dense()
    keep = [i * M + j for i in range(M - edge) for j in range(M - edge)]
    out = {}
    for a, Bop in b_operators(rep).items():
        B = Bop.dense()
        TB = T @ B
        BT = B @ T
        parts = (T @ TB, -2 * T @ BT, BT @ T, 2 * TB, 2 * BT, -8 * pp**2 * B)
        res = sum(parts)[np.ix_(keep, keep)]
        scale = max(np.abs(x[np.ix_(keep, keep)]).max() for x in parts)
        out[a] = float(np.abs(res).max() / scale)
    return out


RECURSION_VARIANTS = ("printed", "sign_variant", "cubic_derived")


def _recursion_terms(S, k: int, N: int, p: complex):
    """Coefficient/term lists for each variant at (k, N); S(k, N) -> (mantissa, log)."""
    p2 = -8 * p**2
    return {
        "printed": [(1, S(k + 2, N + 1)), (1, S(k, N + 1)), (-2, S(k, N)), (2, S(k, N)),
                    (2, S(k + 1, N)), (p2, S(k, N - 1))],
        "sign_variant": [(1, S(k + 2, N + 1)), (1, S(k, N + 1)), (-2, S(k, N)), (2, S(k, N)),
                         (-2, S(k + 1, N)), (p2, S(k, N - 1))],
        "cubic_derived": [(1, S(k + 2, N + 1)), (-2, S(k + 1, N + 1)), (1, S(k, N + 1)),
                          (2, S(k, N)), (2, S(k + 1, N)), (p2, S(k, N - 1))],
    }


def check_recursion(Gamma: float, theta_: float, N_values, tol: float = 1e-8) -> dict:
    """Evaluate the one-point recursion variants on unnormalized S^alpha_{k,N}.

    Returns ``{"rows": [...], "verdict": {variant: bool}}`` where each row is
    (variant, alpha, k, N, relative residual).
    """
    N_values = sorted(N_values)
    if N_values[0] < 3:
        raise ValueError("recursion needs N >= 3")
    Nmax = N_values[-1] + 1
    params = XxxParams(Nmax, Gamma, theta_)
    rep = xxx_rep(params)
    lefts = mpa.left_sweep(rep, Nmax)
    rights = mpa.right_sweep(rep, Nmax)
    B = b_operators(rep)
    cache: dict = {}

    def S_fn(alpha):
        def S(k, N):
            key = (alpha, k, N)
            if key not in cache:
                L, R = lefts[k - 1], rights[N - k]
                cache[key] = (pair(L.vec, B[alpha].apply(R.vec)), L.logscale + R.logscale)
            return cache[key]
        return S

    rows = []
    worst = {v: 0.0 for v in RECURSION_VARIANTS}
    for alpha in (1, 2, 3):
        S = S_fn(alpha)
        for N in N_values:
            for k in range(1, N):
                for name, terms in _recursion_terms(S, k, N, params.p).items():
                    ref = max(lg for _, (_, lg) in terms)
                    vals = [c * m * np.exp(lg - ref) for c, (m, lg) in terms]
                    scale = max(abs(v) for v in vals)
                    r = abs(sum(vals)) / scale if scale > 0 else 0.0
                    rows.append((name, alpha, k, N, float(r)))
                    worst[name] = max(worst[name], float(r))
    return {"rows": rows, "worst": worst, "verdict": {v: worst[v] <= tol for v in worst}}


# --- scans -----------------------------------------------------------------------------


def z_ratio_scan(Gamma: float, theta_: float, N_max: int) -> np.ndarray:
    """Rows (N, N^2 Z_{N-1}/Z_N) for N = 2..N_max."""
    if N_max > 200:
        raise ValueError("N_max above 200 exceeds the cost guard")
    rep = xxx_rep(XxxParams(N_max, Gamma, theta_))
    sweep = mpa.left_sweep(rep, N_max)
    V = rep.right()
    z = [pair(s.vec, V) for s in sweep]
    rows = []
    for N in range(2, N_max + 1):
        r = N**2 * z[N - 1] / z[N] * np.exp(sweep[N - 1].logscale - sweep[N].logscale)
        rows.append((N, _check_real(complex(r), 1e-10, "Z ratio")))
    return np.array(rows)


def partition_value(params: XxxParams) -> tuple[float, float]:
    """Z_N as (positive real mantissa, logscale)."""
    m, lg = mpa.partition_function(xxx_rep(params), params.N)
    return _check_real(complex(m), 1e-10, "Z"), lg


def helix_reference(r, theta_: float):
    """Continuum spin-helix profile (cos theta r, sin theta r, 0)."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise ValueError("position must lie in [0, 1]")
    return np.cos(theta_ * r), np.sin(theta_ * r), np.zeros_like(r)


def zeno_scan(theta_: float, N: int, Gamma_list) -> list[dict]:
    """Rescaled partition function and currents along increasing Gamma."""
    Gamma_list = list(Gamma_list)
    if any(b <= a for a, b in zip(Gamma_list, Gamma_list[1:])):
        raise ValueError("Gamma_list must be ascending")
    if Gamma_list[-1] > 1e6:
        warnings.warn("Gamma above 1e6: p = i/Gamma is close to degenerate", RuntimeWarning)
    rows = []
    for G in Gamma_list:
        params = XxxParams(N, G, theta_)
        m, lg = partition_value(params)
        jx, jy, jz = currents(params)
        rows.append({
            "Gamma": G,
            "scaled_Z": G**2 / 4 * m * np.exp(lg),
            "jx": jx,
            "jy": jy,
            "jz": jz,
        })
    return rows
