"""Photon-number tomography.

Displaced-number tomograms <nz|A|nz> with |nz> = D(z)|n>, the lambda-indexed
family of dual Gram kernels, reconstruction with a duality self-check, the
position-representation kernel element in closed form, and the bilinear
Hermite generating identity it rests on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import BranchError, ConvergenceError, SpecError, TruncationError
from .fock import (
    DEFAULT_TAIL_TOL,
    FockOperator,
    displacement_block,
    displacement_matrix,
    hermite_functions,
    nu_mu,
)
from .cstomo import PhaseGrid


@dataclass
class PNKernelParams:
    """Kernel family label lambda, restricted to the numerically stable half.

    For lam in (-1, 0] the diagonal core ((lam-1)/(lam+1))^n has modulus >= 1
    and truncation artifacts dominate, so only (0, 1) is accepted.
    """

    lam: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise SpecError(
                f"lambda = {self.lam!r} outside (0, 1); kernels are only "
                "numerically bounded on that half of the formal (-1, 1) range"
            )

    @property
    def beta(self) -> float:
        """Prefactor base (lam+1)/(lam-1); negative, |beta| > 1."""
        return (self.lam + 1) / (self.lam - 1)

    @property
    def gamma(self) -> float:
        """Core base (lam-1)/(lam+1); negative, |gamma| < 1."""
        return (self.lam - 1) / (self.lam + 1)

    @property
    def tau(self) -> complex:
        """Phase parameter with (lam+1)/(lam-1) = e^{i tau}, principal branch."""
        return np.pi - 1j * np.log((1 + self.lam) / (1 - self.lam))


@dataclass
class PNTomogram:
    """Real tomogram matrix value(n, node) over a phase-space grid."""

    n_max: int
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            if np.abs(vals.imag).max() > 1e-12:
                raise ValueError(
                    "tomogram values must be real; split non-Hermitian operators "
                    "into Hermitian parts first"
                )
            vals = vals.real
        self.values = np.ascontiguousarray(vals, dtype=float)
        if self.values.shape != (self.n_max + 1, self.grid.nodes.size):
            raise ValueError("values must have shape (n_max+1, n_nodes)")


# ---------------------------------------------------------------------------
# tomograms


def pn_tomogram(A: FockOperator, n: int, z: complex,
                tail_tol: float = DEFAULT_TAIL_TOL) -> complex:
    """<n|D(z)+ A D(z)|n>, the displaced-number expectation.

    The Fock expansion is exact for the finite matrix A; the tail guard fires
    only when the displaced probe leaks past the truncation while A still has
    weight at its edge, i.e. when the value could see content the truncation
    cut away.
    """
    N = A.truncation
    if not 0 <= n <= N:
        raise ValueError(f"level n={n} outside truncation {N}")
    col = displacement_matrix(z, N)[:, n]
    leak = abs(1.0 - float(np.vdot(col, col).real))
    edge = float(np.abs(A.entries[-1, :]).max() + np.abs(A.entries[:, -1]).max())
    if leak * edge > tail_tol:
        raise TruncationError(
            f"displaced |{n}> leaks norm {leak:.3e} past truncation {N} where the "
            f"operator still has weight {edge:.3e}; increase N",
            tail=leak * edge,
        )
    return complex(np.vdot(col, A.entries @ col))


def pn_tomogram_grid(A: FockOperator, n_max: int, grid: PhaseGrid) -> PNTomogram:
    """Tomogram matrix for levels 0..n_max over all grid nodes.

    Rectangular displacement blocks make each value exact for the finite
    matrix A, so n_max may exceed A's truncation.
    """
    if np.abs(A.entries - A.entries.conj().T).max() > 1e-12:
        raise ValueError("grid tomograms are defined for Hermitian operators; "
                         "split non-Hermitian operators into Hermitian parts")
    N = A.truncation
    vals = np.empty((n_max + 1, grid.nodes.size))
    for j, z in enumerate(grid.nodes):
        B = displacement_block(z, N + 1, n_max + 1)
        vals[:, j] = np.einsum("kn,kl,ln->n", B.conj(), A.entries, B).real
    return PNTomogram(n_max, grid, vals)


# ---------------------------------------------------------------------------
# Gram kernels


def pn_gram(n: int, z: complex, params: PNKernelParams, N: int) -> FockOperator:
    """G_lambda(n, z) = (4/(1-lam^2)) beta^n D(z) gamma^{nhat} D(z)+."""
    if n < 0:
        raise ValueError("n must be >= 0")
    D = displacement_matrix(z, N)
    core = params.gamma ** np.arange(N + 1)
    pref = 4.0 / (1 - params.lam ** 2) * params.beta ** n
    return FockOperator(N + 1, pref * (D * core) @ D.conj().T)


def _core_dim(u_max: float) -> int:
    # inner Fock cutoff for the gamma^n core: Poisson bulk at u plus slack
    return int(np.ceil(u_max + 12 * np.sqrt(u_max) + 20))


def auto_n_max(N_target: int, R: float, params: PNKernelParams,
               log_floor: float = -36.0) -> int:
    """Smallest level cutoff where the beta^n-amplified tomogram tail is dead.

    Bounds the n-th term of the reconstruction sum by
    e^{-u} (|beta| u)^n / n! times the polynomial growth of kernel elements,
    maximized at the grid rim u = R^2, and cuts when its log drops below
    log_floor.
    """
    u = R * R
    b = abs(params.beta)
    for n in range(1, 500):
        t = -u + n * np.log(b * u) - gammaln(n + 1) + 2 * N_target * np.log(max(n, 2))
        if t < log_floor:
            return n
    return 500


def default_pn_params(N_target: int):
    """Documented defaults: lam=0.5, n_max=3*N_target, R=sqrt(N_target)+4."""
    return PNKernelParams(0.5), 3 * N_target, float(np.sqrt(N_target) + 4.0)


def safe_pn_params(N_target: int):
    """Empirically stable working set: lam=0.3, auto level cutoff, R=5."""
    params = PNKernelParams(0.3)
    R = 5.0
    return params, auto_n_max(N_target, R, params), R


def default_pn_grid(R: float, N_target: int) -> PhaseGrid:
    return PhaseGrid.polar(R, 32, 4 * N_target + 4)


def _node_blocks(z: complex, d: int, n_max: int, params: PNKernelParams, C: int):
    """Per-node pieces: rows of D up to d and the gamma-core matrix M (d x d)."""
    cols = max(C, n_max + 1)
    Drows = displacement_block(z, d, cols)
    core = params.gamma ** np.arange(cols)
    M = (Drows * core) @ Drows.conj().T
    return Drows[:, : n_max + 1], M


def pn_duality_table(params: PNKernelParams, n_max: int, grid: PhaseGrid,
                     N_target: int) -> np.ndarray:
    """Residuals of the kernel duality on every basis element |m><m'|.

    Entry (m, m') is the max elementwise error of
    sum_n sum_j w_j G(n, z_j) <n z_j|(|m><m'|)|n z_j> against |m><m'|.
    """
    d = N_target + 1
    C = _core_dim(grid.max_radius ** 2)
    pref = 4.0 / (1 - params.lam ** 2)
    bpow = params.beta ** np.arange(n_max + 1)
    Q = np.zeros((d, d, d, d), dtype=complex)
    for w, z in zip(grid.weights, grid.nodes):
        Dn, M = _node_blocks(z, d, n_max, params, C)
        # tomogram of |m><m'| at level n is conj(D[m,n]) D[m',n]
        t = np.einsum("mn,pn,n->mp", Dn.conj(), Dn, bpow)
        Q += w * np.einsum("mp,ab->mpab", t, M)
    Q *= pref
    eye4 = np.einsum("ma,pb->mpab", np.eye(d), np.eye(d))
    return np.abs(Q - eye4).max(axis=(2, 3))


def pn_reconstruct(tomogram: PNTomogram, params: PNKernelParams, N_target: int,
                   check_tol: float = 1e-4, noise_tol: float = 1e-6) -> FockOperator:
    """sum_n sum_j w_j G(n, z_j) value(n, j), after a basis duality self-check.

    The self-check reconstructs every |m><m'| with m, m' <= N_target on the
    tomogram's own grid and level cutoff; if any residual exceeds check_tol
    the parameter set cannot resolve the target block and the reconstruction
    is refused with the residual table.

    A second guard watches the data itself: the level series is amplified by
    beta^n before it cancels, so its rounding-noise floor scales with the
    largest intermediate term. Sources with slowly decaying level profiles
    (thermal-like states at large grid radii) can push that floor above any
    useful accuracy; such tomograms are refused rather than silently averaged.
    """
    resid = pn_duality_table(params, tomogram.n_max, tomogram.grid, N_target)
    if resid.max() > check_tol:
        bad = [(resid[m, mp], m, mp)
               for m in range(N_target + 1) for mp in range(N_target + 1)
               if resid[m, mp] > check_tol]
        bad.sort(reverse=True)
        lines = "; ".join(f"|{m}><{mp}|: {r:.2e}" for r, m, mp in bad[:5])
        raise ConvergenceError(
            f"duality self-check failed on {len(bad)} basis elements "
            f"(worst {resid.max():.2e} > {check_tol:.0e}) for "
            f"lambda={params.lam}, n_max={tomogram.n_max}, "
            f"R={tomogram.grid.coverage_radius:.3g}: {lines}",
            residuals=resid,
        )
    d = N_target + 1
    C = _core_dim(tomogram.grid.max_radius ** 2)
    pref = 4.0 / (1 - params.lam ** 2)
    bpow = params.beta ** np.arange(tomogram.n_max + 1)
    eps = np.finfo(float).eps
    out = np.zeros((d, d), dtype=complex)
    out_abs = np.zeros((d, d))
    noise = 0.0
    for j, (w, z) in enumerate(zip(tomogram.grid.weights, tomogram.grid.nodes)):
        _, M = _node_blocks(z, d, tomogram.n_max, params, C)
        terms = bpow * tomogram.values[:, j]
        s = terms.sum()
        out += w * s * M
        out_abs += w * abs(s) * np.abs(M)
        noise += w * eps * np.abs(terms).max() * np.abs(M).max()
    floor = pref * (eps * out_abs.max() + noise)
    if floor > noise_tol:
        raise ConvergenceError(
            f"amplified level series of this tomogram has a cancellation floor "
            f"~{floor:.2e} above {noise_tol:.0e}; the source state's level "
            f"profile decays too slowly for lambda={params.lam} at "
            f"R={tomogram.grid.coverage_radius:.3g}",
            residuals=resid,
        )
    return FockOperator(d, pref * out)


# ---------------------------------------------------------------------------
# position-representation kernel element


_BRANCH_CACHE: dict = {}


def _position_element_raw(n: int, z: complex, params: PNKernelParams,
                          x: float, y: float, sign: float) -> complex:
    tau = params.tau
    nu, mu = nu_mu(z)
    xs, ys = x - nu, y - nu
    sint = np.sin(tau)
    pref = 4 * np.sin(tau / 2) ** 2 * np.exp(1j * tau * (n + 0.5))
    root = sign * np.sqrt(2j * np.pi * sint)
    phase = np.exp(1j * mu * (x - y))
    gauss = np.exp(1j * ((xs ** 2 + ys ** 2) * np.cos(tau) / (2 * sint) - xs * ys / sint))
    return complex(pref / root * phase * gauss)


def _branch_sign(params: PNKernelParams) -> float:
    """Fix the sqrt(sin tau) branch against a Fock-basis oracle, once per lam.

    At z=0 the kernel is diagonal, so <x|G(0,0)|y> is a fast convergent sum
    over Hermite functions; the branch whose closed form matches it wins.
    """
    key = round(params.lam, 15)
    if key in _BRANCH_CACHE:
        return _BRANCH_CACHE[key]
    x, y = 0.3, -0.2
    nref = 80
    h_x = hermite_functions(nref, np.array([x]))[:, 0]
    h_y = hermite_functions(nref, np.array([y]))[:, 0]
    core = params.gamma ** np.arange(nref + 1)
    oracle = 4.0 / (1 - params.lam ** 2) * float((core * h_x) @ h_y)
    best = None
    for sign in (1.0, -1.0):
        val = _position_element_raw(0, 0.0, params, x, y, sign)
        if abs(val - oracle) <= 1e-8 * max(1.0, abs(oracle)):
            best = sign
            break
    if best is None:
        raise BranchError(
            f"neither sqrt branch matches the Fock-sum oracle at lambda={params.lam}"
        )
    _BRANCH_CACHE[key] = best
    return best


def pn_gram_position_element(n: int, z: complex, params: PNKernelParams,
                             x: float, y: float) -> complex:
    """Closed form of <x|G_lambda(n, z)|y> in the position representation.

    The phase parameter tau is complex for lam in (0,1); the square-root
    branch is anchored to a Fock-sum oracle at a reference point the first
    time each lam is used.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return _position_element_raw(n, z, params, x, y, _branch_sign(params))


# ---------------------------------------------------------------------------
# bilinear Hermite generating identity


def mehler(x: float, y: float, zeta: complex, mode: str = "closed",
           n_max: int = 200) -> complex:
    """Bilinear Hermite sum sum_n (zeta/2)^n H_n(x) H_n(y) / n!.

    closed: (1 - zeta^2)^{-1/2} exp[(zeta^2 (x^2+y^2) - 2 zeta x y)/(zeta^2 - 1)].
    series: partial sum through n_max, evaluated with normalized Hermite
    functions rescaled by e^{(x^2+y^2)/2} to avoid overflow.
    """
    zeta = complex(zeta)
    if abs(zeta) > 1 + 1e-12:
        raise SpecError(f"|zeta| = {abs(zeta):.6g} > 1 outside the validity disc")
    if zeta == 1 or zeta == -1:
        raise SpecError(
            "delta-function limit: at zeta = +/-1 the sum is sqrt(pi) delta(x -+ y), "
            "not a function"
        )
    if mode == "closed":
        return complex(
            (1 - zeta ** 2) ** -0.5
            * np.exp((zeta ** 2 * (x ** 2 + y ** 2) - 2 * zeta * x * y) / (zeta ** 2 - 1))
        )
    if mode == "series":
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        h_x = hermite_functions(n_max, np.array([float(x)]))[:, 0]
        h_y = hermite_functions(n_max, np.array([float(y)]))[:, 0]
        s = np.sum(zeta ** np.arange(n_max + 1) * h_x * h_y)
        return complex(np.sqrt(np.pi) * np.exp((x ** 2 + y ** 2) / 2) * s)
    raise ValueError(f"unknown mode {mode!r}; use 'closed' or 'series'")
