"""Truncated Fock-space arithmetic.

Ladder operators, displacement operators, standard states, Hermite
functions and position-representation overlaps, all on the basis
{|0>, ..., |N>}. Complex phase-space points are plain Python/numpy
complex numbers z = re + 1j*im; the alternative splitting
z = (nu + i mu)/sqrt(2) is a view used only by position-representation
helpers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln, eval_genlaguerre

from .errors import TruncationError, UnderflowError

DEFAULT_TAIL_TOL = 1e-10

# exp(-u/2) underflows to zero near u = 1490; refuse well before that
_UNDERFLOW_U = 1400.0


@dataclass
class FockOperator:
    """Dense complex matrix on the truncated Fock basis."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=complex)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.entries.shape != (self.dim, self.dim):
            raise ValueError("entries shape does not match dim")
        if not np.all(np.isfinite(self.entries.view(float))):
            raise ValueError("entries must be finite")

    @property
    def truncation(self) -> int:
        return self.dim - 1

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [[[v.real, v.imag] for v in row] for row in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FockOperator":
        ent = np.array([[complex(re, im) for re, im in row] for row in obj["entries"]])
        return cls(dim=int(obj["dim"]), entries=ent)


@dataclass
class FockVector:
    """State vector on the truncated Fock basis. Norm is reported, never silently fixed."""

    dim: int
    amplitudes: np.ndarray
    tail_mass: float | None = field(default=None)

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.amplitudes.shape != (self.dim,):
            raise ValueError("amplitudes shape does not match dim")
        if not np.all(np.isfinite(self.amplitudes.view(float))):
            raise ValueError("amplitudes must be finite")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": [[v.real, v.imag] for v in self.amplitudes]}

    @classmethod
    def from_json(cls, obj: dict) -> "FockVector":
        amp = np.array([complex(re, im) for re, im in obj["entries"]])
        return cls(dim=int(obj["dim"]), amplitudes=amp)


def nu_mu(z: complex) -> tuple[float, float]:
    """Split z = (nu + i mu)/sqrt(2) used by position-representation formulas."""
    z = complex(z)
    return np.sqrt(2.0) * z.real, np.sqrt(2.0) * z.imag


def ladder_operators(N: int):
    """Annihilation, creation and number operators at truncation N.

    a[m, n] = sqrt(n) at m = n-1. The truncated commutator a a+ - a+ a is
    diag(1, ..., 1, -N); the last entry is the truncation artifact.
    """
    if N < 1:
        raise ValueError("N must be >= 1 (no room for ladder action at N=0)")
    n = np.arange(N + 1)
    a = np.diag(np.sqrt(n[1:].astype(float)), k=1)
    return (
        FockOperator(N + 1, a),
        FockOperator(N + 1, a.conj().T),
        FockOperator(N + 1, np.diag(n.astype(complex))),
    )


def displacement_block(z: complex, row_dim: int, col_dim: int) -> np.ndarray:
    """Rows 0..row_dim-1, columns 0..col_dim-1 of the displacement matrix.

    For m >= n:  D_mn = sqrt(n!/m!) z^(m-n) e^(-|z|^2/2) L_n^(m-n)(|z|^2),
    and for m < n the same with indices swapped and z -> -conj(z). Exact per
    element, so no truncation error enters the matrix itself.
    """
    z = complex(z)
    u = abs(z) ** 2
    if u > _UNDERFLOW_U:
        raise UnderflowError(
            f"e^(-|z|^2/2) underflows at |z|^2 = {u:.3g}; displacement not representable"
        )
    if z == 0:
        return np.eye(row_dim, col_dim, dtype=complex)
    M, Nn = np.meshgrid(np.arange(row_dim), np.arange(col_dim), indexing="ij")
    lo = np.minimum(M, Nn)
    hi = np.maximum(M, Nn)
    k = hi - lo
    logpre = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))
    lag = np.empty_like(logpre)
    for kk in np.unique(k):
        sel = k == kk
        lag[sel] = eval_genlaguerre(lo[sel], kk, u)
    zpow = np.where(M >= Nn, z, -np.conj(z)) ** k.astype(float)
    return np.exp(logpre - u / 2) * zpow * lag


def displacement_matrix(z: complex, N: int) -> np.ndarray:
    """D(z) = exp(z a+ - z* a) as a raw array, each element by its closed form."""
    return displacement_block(z, N + 1, N + 1)


def displacement(z: complex, N: int) -> FockOperator:
    return FockOperator(N + 1, displacement_matrix(z, N))


def coherent_amplitudes(z: complex, N: int) -> np.ndarray:
    """c_n = e^(-|z|^2/2) z^n / sqrt(n!), without any tail check."""
    z = complex(z)
    n = np.arange(N + 1)
    if z == 0:
        amp = np.zeros(N + 1, dtype=complex)
        amp[0] = 1.0
        return amp
    u = abs(z) ** 2
    if u > _UNDERFLOW_U:
        raise UnderflowError(
            f"e^(-|z|^2/2) underflows at |z|^2 = {u:.3g}; coherent state not representable"
        )
    return np.exp(-u / 2 + n * np.log(z) - 0.5 * gammaln(n + 1))


def coherent_tail(z: complex, N: int) -> float:
    """Probability mass of |z> beyond level N: the Poisson(|z|^2) upper tail."""
    u = abs(complex(z)) ** 2
    if u == 0:
        return 0.0
    return float(gammainc(N + 1, u))


def suggest_truncation(z: complex, tol: float) -> int:
    """Smallest N with coherent tail below tol (search, not a bound)."""
    u = abs(complex(z)) ** 2
    N = max(1, int(u))
    while gammainc(N + 1, u) >= tol and N < 100000:
        N += max(4, N // 6)
    return N


def coherent_state(z: complex, N: int, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    z = complex(z)
    tail = coherent_tail(z, N)
    if tail > tail_tol:
        raise TruncationError(
            f"coherent-state tail {tail:.3e} above tolerance {tail_tol:.1e} at N={N}; "
            f"try N >= {suggest_truncation(z, tail_tol)}",
            tail=tail,
            suggested_dim=suggest_truncation(z, tail_tol) + 1,
        )
    return FockVector(N + 1, coherent_amplitudes(z, N), tail_mass=tail)


def build_state(kind: str, param, N: int, tail_tol: float = DEFAULT_TAIL_TOL) -> FockOperator:
    """Density-matrix factory: fock n | coherent z | thermal nbar | cat z.

    Thermal and coherent states keep their exact truncated coefficients
    (trace = 1 - tail, with the tail checked against tail_tol); the cat
    state is normalized numerically after truncation.
    """
    if kind == "fock":
        n = int(param)
        if n < 0 or n > N:
            raise ValueError(f"fock level {n} outside 0..{N}")
        rho = np.zeros((N + 1, N + 1), dtype=complex)
        rho[n, n] = 1.0
        return FockOperator(N + 1, rho)
    if kind == "coherent":
        amp = coherent_state(complex(param), N, tail_tol).amplitudes
        return FockOperator(N + 1, np.outer(amp, amp.conj()))
    if kind == "thermal":
        nbar = float(param)
        if nbar < 0:
            raise ValueError("thermal mean occupation must be >= 0")
        n = np.arange(N + 1)
        if nbar == 0:
            p = np.zeros(N + 1)
            p[0] = 1.0
        else:
            p = np.exp(n * np.log(nbar / (nbar + 1)) - np.log(nbar + 1))
        tail = (nbar / (nbar + 1)) ** (N + 1) if nbar > 0 else 0.0
        if tail > tail_tol:
            raise TruncationError(
                f"thermal tail {tail:.3e} above tolerance at N={N}", tail=tail
            )
        return FockOperator(N + 1, np.diag(p.astype(complex)))
    if kind == "cat":
        z = complex(param)
        cp = coherent_state(z, N, tail_tol).amplitudes
        cm = coherent_amplitudes(-z, N)
        v = cp + cm
        v = v / np.linalg.norm(v)
        return FockOperator(N + 1, np.outer(v, v.conj()))
    raise ValueError(f"unknown state kind {kind!r}")


def check_density(op: FockOperator, tail_tol: float = DEFAULT_TAIL_TOL) -> dict:
    """Density-matrix invariant report: hermiticity, trace and eigenvalue floor."""
    A = op.entries
    herm = float(np.abs(A - A.conj().T).max())
    trace_dev = float(abs(np.trace(A) - 1.0))
    eigs = np.linalg.eigvalsh((A + A.conj().T) / 2)
    return {
        "hermiticity": herm,
        "trace_deviation": trace_dev,
        "min_eigenvalue": float(eigs.min()),
        "ok": herm < 1e-10 and trace_dev < max(tail_tol * 10, 1e-10) and eigs.min() > -1e-10,
    }


def hermite_functions(nmax: int, q) -> np.ndarray:
    """h_n(q) for n = 0..nmax, rows indexed by n.

    Normalized oscillator eigenfunctions <q|n> by the stable recurrence
    h_k = sqrt(2/k) q h_{k-1} - sqrt((k-1)/k) h_{k-2}; never overflows.
    """
    q = np.asarray(q, dtype=float)
    out = np.zeros((nmax + 1,) + q.shape)
    out[0] = np.pi ** -0.25 * np.exp(-(q ** 2) / 2)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * q * out[0]
    for k in range(2, nmax + 1):
        out[k] = np.sqrt(2.0 / k) * q * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    return out


def hermite_function(n: int, q: float):
    """<q|n> for a single level n (scalar or array q)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    vals = hermite_functions(n, q)
    return vals[n] if np.ndim(q) else float(vals[n])


def displaced_number_wavefunction(n: int, z: complex, y: float) -> complex:
    """<y|n z> = exp[i(mu y - mu nu / 2)] <y - nu|n> with z = (nu + i mu)/sqrt(2)."""
    nu, mu = nu_mu(z)
    return np.exp(1j * (mu * y - mu * nu / 2)) * hermite_function(n, y - nu)
