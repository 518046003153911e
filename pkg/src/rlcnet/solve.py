"""Resonance spectra, driven responses and dispersion maps.

The lossless network maps onto the 5-point discrete Dirichlet Laplacian:
its eigenvalues lam = a0^2 k^2 give circuit resonances omega = omega0 *
sqrt(lam) for model I and omega = omega0 / sqrt(lam) for model II.
"""

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import GridGeometry
from .network import (MODEL_I, CircuitSpec, Perturbation, assemble_admittance,
                      identity_perturbation)

DENSE_EIG_LIMIT = 4000
RESIDUAL_TOL = 1e-10


class SingularSystemError(RuntimeError):
    """Driven system is singular or too ill-conditioned to meet the
    residual contract (e.g. a lossless drive exactly on resonance)."""


@dataclass
class Mode:
    """One lossless resonance: circuit frequency and billiard eigenvalue."""

    index: int
    omega: float          # rad/s
    lam_grid: float       # a0^2 k^2, discrete-Laplacian eigenvalue
    eps: float            # lam_grid / a0^2, billiard eigenvalue
    vector: np.ndarray    # real, unit norm, over interior sites (row-major)


@dataclass
class ComplexField:
    """Complex voltage over the lattice; the wave-function analogue.

    `values` is (nx, ny) complex with zeros outside the unknown sites, so
    Dirichlet boundaries read naturally as V = 0.
    """

    geometry: GridGeometry
    values: np.ndarray
    omega: float
    spec: CircuitSpec
    source: tuple | None = None
    perturbation: Perturbation | None = None

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.geometry.interior]


def dispersion(spec: CircuitSpec, omega: float) -> complex:
    """Map circuit frequency to the complex billiard eigenvalue a0^2 k^2."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    w0 = spec.omega0
    g = spec.linewidth
    if spec.model == MODEL_I:
        return omega ** 2 / w0 ** 2 - 1j * g * omega / w0 ** 2
    return w0 ** 2 / omega ** 2 + 1j * g * w0 ** 2 / omega


def wavelength(spec: CircuitSpec, spacing: float, omega: float) -> float:
    """Characteristic wavelength 2*pi*a0*omega0/omega in billiard-width units."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    return 2.0 * pi * spacing * spec.omega0 / omega


def damping_length(spec: CircuitSpec, spacing: float) -> float:
    """Spatial decay scale (4*pi*a0/R)*sqrt(L/C) of the damped response."""
    if spec.resistance <= 0.0:
        raise ValueError("no damping: R must be positive for a finite length")
    return (4.0 * pi * spacing / spec.resistance) \
        * sqrt(spec.inductance / spec.capacitance)


def quality_factor(spec: CircuitSpec) -> float:
    """Q = sqrt(L/C) / R of one cell."""
    if spec.resistance <= 0.0:
        raise ValueError("Q undefined for R = 0")
    return sqrt(spec.inductance / spec.capacitance) / spec.resistance


def dirichlet_laplacian(geometry: GridGeometry) -> sp.csr_matrix:
    """5-point discrete Laplacian over interior sites, Dirichlet boundary.

    Diagonal 4, off-diagonal -1 for interior neighbors; boundary neighbors
    contribute V = 0.
    """
    inter = geometry.interior
    index = -np.ones((geometry.nx, geometry.ny), dtype=np.int64)
    n = geometry.n_interior
    index[inter] = np.arange(n)
    rows, cols = [], []
    for lo, hi in ((np.s_[:-1, :], np.s_[1:, :]), (np.s_[:, :-1], np.s_[:, 1:])):
        both = inter[lo] & inter[hi]
        rows.extend(index[lo][both]); cols.extend(index[hi][both])
        rows.extend(index[hi][both]); cols.extend(index[lo][both])
    vals = -np.ones(len(rows))
    lap = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    lap += sp.eye(n, format="csr") * 4.0
    return lap


def _omega_from_lam(spec: CircuitSpec, lam):
    lam = np.asarray(lam, dtype=float)
    if spec.model == MODEL_I:
        return spec.omega0 * np.sqrt(lam)
    return spec.omega0 / np.sqrt(lam)


def eigenmodes_lossless(geometry: GridGeometry, spec: CircuitSpec,
                        n_modes: int) -> list[Mode]:
    """Lowest-lam resonances of the lossless (R = 0) Dirichlet network.

    Dense symmetric solve up to DENSE_EIG_LIMIT unknowns, shift-invert
    Lanczos above.  Eigenvectors are orthonormal and real.
    """
    n = geometry.n_interior
    if not 1 <= n_modes <= n:
        raise ValueError(f"n_modes must be in [1, {n}]")
    lap = dirichlet_laplacian(geometry)
    if n <= DENSE_EIG_LIMIT:
        lam, vec = scipy.linalg.eigh(lap.toarray())
        lam, vec = lam[:n_modes], vec[:, :n_modes]
    else:
        lam, vec = spla.eigsh(lap, k=n_modes, sigma=0.0, which="LM")
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
    a0sq = geometry.spacing ** 2
    omegas = _omega_from_lam(spec, lam)
    return [
        Mode(index=k, omega=float(omegas[k]), lam_grid=float(lam[k]),
             eps=float(lam[k] / a0sq), vector=np.ascontiguousarray(vec[:, k]))
        for k in range(n_modes)
    ]


def eigenmode_nearest(geometry: GridGeometry, spec: CircuitSpec,
                      omega_target: float,
                      pert: Perturbation | None = None) -> Mode:
    """Lossless eigenmode whose frequency is nearest omega_target.

    Supports component-tolerance realizations: the perturbed problem is the
    generalized symmetric pencil K v = omega^2 M v (model I: K the
    1/L-weighted Laplacian, M = diag(C); model II dual with mu = 1/omega^2).
    """
    if omega_target <= 0.0:
        raise ValueError("omega_target must be positive")
    if pert is None:
        pert = identity_perturbation(geometry)
    inter = geometry.interior
    index = -np.ones((geometry.nx, geometry.ny), dtype=np.int64)
    n = geometry.n_interior
    index[inter] = np.arange(n)

    if spec.model == MODEL_I:
        wx = 1.0 / (spec.inductance * pert.link_x)
        wy = 1.0 / (spec.inductance * pert.link_y)
        m_diag = spec.capacitance * pert.site[inter]
        sigma = omega_target ** 2
    else:
        wx = spec.capacitance * pert.link_x
        wy = spec.capacitance * pert.link_y
        m_diag = pert.site[inter] / spec.inductance
        sigma = 1.0 / omega_target ** 2

    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    member = geometry.interior | geometry.boundary
    for w_arr, lo, hi in ((wx, np.s_[:-1, :], np.s_[1:, :]),
                          (wy, np.s_[:, :-1], np.s_[:, 1:])):
        w_link = w_arr[lo]
        exists = member[lo] & member[hi] & (inter[lo] | inter[hi])
        ia, ib, wl = index[lo][exists], index[hi][exists], w_link[exists]
        both = (ia >= 0) & (ib >= 0)
        rows.extend(ia[both]); cols.extend(ib[both]); vals.extend(-wl[both])
        rows.extend(ib[both]); cols.extend(ia[both]); vals.extend(-wl[both])
        np.add.at(diag, ia[ia >= 0], wl[ia >= 0])
        np.add.at(diag, ib[ib >= 0], wl[ib >= 0])
    rows.extend(range(n)); cols.extend(range(n)); vals.extend(diag)
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
    M = sp.diags(m_diag, format="csc")

    val, vec = spla.eigsh(K, k=1, M=M, sigma=sigma, which="LM")
    lam_pencil = float(val[0])
    omega = sqrt(lam_pencil) if spec.model == MODEL_I else 1.0 / sqrt(lam_pencil)
    v = vec[:, 0]
    v /= np.linalg.norm(v)
    a0sq = geometry.spacing ** 2
    if spec.model == MODEL_I:
        lam_grid = lam_pencil / spec.omega0 ** 2
    else:
        lam_grid = spec.omega0 ** 2 / (1.0 / lam_pencil)
    return Mode(index=-1, omega=omega, lam_grid=lam_grid,
                eps=lam_grid / a0sq, vector=v)


def mode_field(geometry: GridGeometry, mode: Mode, spec: CircuitSpec) -> ComplexField:
    """Lift a mode eigenvector to a ComplexField on the lattice."""
    values = np.zeros((geometry.nx, geometry.ny), dtype=complex)
    values[geometry.interior] = mode.vector
    return ComplexField(geometry=geometry, values=values, omega=mode.omega,
                        spec=spec)


def driven_response(geometry: GridGeometry, spec: CircuitSpec, omega: float,
                    source, pert: Perturbation | None = None) -> ComplexField:
    """Exact solution of the driven network at frequency omega.

    Sparse direct factorization with iterative refinement until the relative
    residual is below RESIDUAL_TOL; raises SingularSystemError when the
    contract cannot be met (lossless drive on resonance).
    """
    system = assemble_admittance(geometry, spec, omega, pert=pert, source=source)
    A, b = system.matrix, system.rhs
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        raise ValueError("driven solve needs a nonzero source")
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"factorization failed: {exc}") from exc
    # reject numerically singular systems that still factorize (an exact
    # lossless resonance): condition estimate from the factorization
    n = A.shape[0]
    if n >= 2:
        inv_op = spla.LinearOperator(
            (n, n), matvec=lu.solve,
            rmatvec=lambda v: lu.solve(v, trans="H"), dtype=A.dtype)
        cond = spla.onenormest(inv_op) * spla.onenormest(A)
    else:
        # 1x1 system: compare the surviving entry against the admittance
        # scale of its summands (cancellation to roundoff means resonance)
        from .network import ground_impedance, link_impedance
        scale = 4.0 / abs(link_impedance(spec, omega)) \
            + 1.0 / abs(ground_impedance(spec, omega))
        cond = scale / abs(A[0, 0])
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(
            f"system numerically singular (condition estimate {cond:.2e})")
    x = lu.solve(b)
    for _ in range(5):
        r = b - A @ x
        if np.linalg.norm(r) <= RESIDUAL_TOL * bnorm:
            break
        x = x + lu.solve(r)
    r = b - A @ x
    if not np.all(np.isfinite(x)) \
            or np.linalg.norm(r) > RESIDUAL_TOL * bnorm:
        raise SingularSystemError(
            "system too ill-conditioned for the residual contract "
            "(lossless drive on resonance?)")
    values = np.zeros((geometry.nx, geometry.ny), dtype=complex)
    values[tuple(system.unknown_sites.T)] = x
    return ComplexField(geometry=geometry, values=values, omega=omega,
                        spec=spec, source=source, perturbation=pert)


def _response_norm_sq(geometry, spec, source, pert):
    def f(omega):
        field = driven_response(geometry, spec, omega, source, pert=pert)
        v = field.interior_values
        return float(np.real(np.vdot(v, v)))
    return f


def _golden_max(f, a, b, rel_tol):
    """Golden-section maximization of f on [a, b]."""
    invphi = (sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def resonance_sweep(geometry: GridGeometry, spec: CircuitSpec, omega_range,
                    n_points: int, source,
                    pert: Perturbation | None = None,
                    rel_tol: float = 1e-6):
    """Locate resonances of the driven lossy network.

    Sweeps |V|^2 over n_points in omega_range, then refines every local
    maximum by golden-section search to relative frequency accuracy rel_tol.
    Returns a list of (omega_peak, response_norm_sq) in ascending omega.
    """
    lo, hi = omega_range
    if not (0.0 < lo < hi):
        raise ValueError("omega_range must be positive and ordered")
    if n_points < 3:
        raise ValueError("need at least 3 sweep points")
    if spec.resistance <= 0.0:
        raise ValueError("resonance sweep requires R > 0")
    if source is None:
        raise ValueError("resonance sweep requires an interior source")
    f = _response_norm_sq(geometry, spec, source, pert)
    omegas = np.linspace(lo, hi, n_points)
    norms = np.array([f(w) for w in omegas])
    peaks = []
    for k in range(1, n_points - 1):
        if norms[k] > norms[k - 1] and norms[k] > norms[k + 1]:
            w_peak, val = _golden_max(f, omegas[k - 1], omegas[k + 1], rel_tol)
            peaks.append((w_peak, val))
    return peaks
