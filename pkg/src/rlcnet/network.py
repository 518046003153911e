"""Kirchhoff admittance assembly for the two RLC network models.

Model I:  inductor links (z = i*w*L + R), capacitor shunts (z = 1/(i*w*C)).
Model II: capacitor links (z = 1/(i*w*C)), resistive-inductor shunts.

The assembled row for site s reads

    sum_links (V_nbr - V_s) / z_link  -  V_s / z_shunt  =  -I_ext(s)

so the matrix is complex symmetric for any R and any tolerance realization.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np
import scipy.sparse as sp

from .geometry import DIRICHLET, NEUMANN, MIXED, GridGeometry

MODEL_I = "I"
MODEL_II = "II"

_SQRT3 = sqrt(3.0)


@dataclass(frozen=True)
class CircuitSpec:
    """One resonance cell: L, C and the inductor's parasitic resistance R."""

    model: str = MODEL_I
    inductance: float = 1e-4     # henry
    capacitance: float = 1e-9    # farad
    resistance: float = 0.0      # ohm

    def __post_init__(self):
        if self.model not in (MODEL_I, MODEL_II):
            raise ValueError(f"unknown network model: {self.model!r}")
        if self.inductance <= 0.0 or self.capacitance <= 0.0:
            raise ValueError("L and C must be positive")
        if self.resistance < 0.0:
            raise ValueError("R must be >= 0")

    @property
    def omega0(self) -> float:
        """Cell resonance frequency 1/sqrt(LC), rad/s."""
        return 1.0 / sqrt(self.inductance * self.capacitance)

    @property
    def linewidth(self) -> float:
        """R/L for model I, R*C for model II."""
        if self.model == MODEL_I:
            return self.resistance / self.inductance
        return self.resistance * self.capacitance


def link_impedance(spec: CircuitSpec, omega: float) -> complex:
    """Impedance of one lattice link at frequency omega."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if spec.model == MODEL_I:
        return complex(spec.resistance, omega * spec.inductance)
    return 1.0 / (1j * omega * spec.capacitance)


def ground_impedance(spec: CircuitSpec, omega: float) -> complex:
    """Impedance of the per-site shunt to ground."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if spec.model == MODEL_I:
        return 1.0 / (1j * omega * spec.capacitance)
    return complex(spec.resistance, omega * spec.inductance)


@dataclass(frozen=True)
class Perturbation:
    """Component-tolerance multipliers for one disorder realization.

    link_x[i, j] scales the link (i,j)-(i+1,j); link_y the link (i,j)-(i,j+1);
    site[i, j] scales the shunt element at (i, j).  Which physical element a
    multiplier hits depends on the model (links are L for model I, C for
    model II; R always follows its inductor).
    """

    tolerance: float
    seed: int
    link_x: np.ndarray
    link_y: np.ndarray
    site: np.ndarray
    distribution: str = "uniform"


def identity_perturbation(geometry: GridGeometry, seed: int = 0) -> Perturbation:
    ones = np.ones((geometry.nx, geometry.ny))
    return Perturbation(0.0, seed, ones, ones.copy(), ones.copy())


def sample_perturbation(geometry: GridGeometry, tolerance: float, seed: int,
                        distribution: str = "uniform") -> Perturbation:
    """Independent multiplier per element, std = tolerance, mean 1.

    Uniform draws span [1 - tau*sqrt(3), 1 + tau*sqrt(3)]; Gaussian draws are
    clipped to +-3 tau so multipliers stay in [1 - 3 tau, 1 + 3 tau].
    """
    if tolerance < 0.0:
        raise ValueError("tolerance must be >= 0")
    if distribution not in ("uniform", "gaussian"):
        raise ValueError(f"unknown tolerance distribution: {distribution!r}")
    rng = np.random.default_rng(seed)
    shape = (geometry.nx, geometry.ny)

    def draw():
        if tolerance == 0.0:
            return np.ones(shape)
        if distribution == "uniform":
            return rng.uniform(1.0 - tolerance * _SQRT3, 1.0 + tolerance * _SQRT3, shape)
        return 1.0 + np.clip(rng.normal(0.0, tolerance, shape),
                             -3.0 * tolerance, 3.0 * tolerance)

    return Perturbation(tolerance, seed, draw(), draw(), draw(),
                        distribution=distribution)


@dataclass
class AdmittanceSystem:
    """Sparse complex-symmetric Kirchhoff system over the unknown sites."""

    matrix: sp.csc_matrix
    rhs: np.ndarray
    omega: float
    unknown_sites: np.ndarray   # (n, 2) of (i, j), row-major
    index: np.ndarray           # (nx, ny) int, -1 where not an unknown


def _link_admittances(geometry, spec, omega, pert):
    """Per-link admittance arrays y_x[i, j], y_y[i, j] over the lattice."""
    if spec.model == MODEL_I:
        def y(mult):
            return 1.0 / (1j * omega * spec.inductance * mult
                          + spec.resistance * mult)
    else:
        def y(mult):
            return 1j * omega * spec.capacitance * mult
    return y(pert.link_x), y(pert.link_y)


def _shunt_admittance(geometry, spec, omega, pert):
    if spec.model == MODEL_I:
        return 1j * omega * spec.capacitance * pert.site
    return 1.0 / (1j * omega * spec.inductance * pert.site
                  + spec.resistance * pert.site)


def assemble_admittance(geometry: GridGeometry, spec: CircuitSpec, omega: float,
                        pert: Perturbation | None = None,
                        source=None) -> AdmittanceSystem:
    """Build the Kirchhoff current-law system at frequency omega.

    `source` is an optional ((i, j), complex amplitude) current injection at
    an interior site.  For Dirichlet boundaries the unknowns are the interior
    sites only; Neumann/mixed boundary sites enter as extra unknowns shunted
    through the tagged element.
    """
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if pert is None:
        pert = identity_perturbation(geometry)
    bc = geometry.bc
    unknown = geometry.interior.copy()
    if bc.kind != DIRICHLET:
        unknown |= geometry.boundary

    index = -np.ones((geometry.nx, geometry.ny), dtype=np.int64)
    sites = np.argwhere(unknown)
    index[unknown] = np.arange(len(sites))

    y_x, y_y = _link_admittances(geometry, spec, omega, pert)

    rows, cols, vals = [], [], []
    diag = np.zeros(len(sites), dtype=complex)
    inter = geometry.interior
    member = geometry.interior | geometry.boundary

    for axis, y_arr in ((0, y_x), (1, y_y)):
        # links (i,j)-(i+1,j) for axis 0, (i,j)-(i,j+1) for axis 1
        if axis == 0:
            a = np.s_[:-1, :], np.s_[1:, :]
            y_link = y_arr[:-1, :]
        else:
            a = np.s_[:, :-1], np.s_[:, 1:]
            y_link = y_arr[:, :-1]
        lo, hi = a
        # a link exists when both ends belong to the network and at least
        # one end is interior
        exists = member[lo] & member[hi] & (inter[lo] | inter[hi])
        ia = index[lo][exists]
        ib = index[hi][exists]
        yl = y_link[exists]
        both = (ia >= 0) & (ib >= 0)
        rows.extend(ia[both]); cols.extend(ib[both]); vals.extend(yl[both])
        rows.extend(ib[both]); cols.extend(ia[both]); vals.extend(yl[both])
        # every existing link adds -y to the diagonal of each unknown end;
        # a Dirichlet end contributes V = 0 so only the diagonal term remains
        np.add.at(diag, ia[ia >= 0], -yl[ia >= 0])
        np.add.at(diag, ib[ib >= 0], -yl[ib >= 0])

    # interior shunts
    y_shunt = _shunt_admittance(geometry, spec, omega, pert)
    int_idx = index[inter]
    diag[int_idx] -= y_shunt[inter]

    # boundary shunts for non-Dirichlet boundaries
    if bc.kind == NEUMANN:
        z_b = 1.0 / (1j * omega * spec.capacitance)
        diag[index[geometry.boundary]] -= 1.0 / z_b
    elif bc.kind == MIXED:
        z_b = complex(bc.shunt_resistance, omega * bc.shunt_inductance)
        diag[index[geometry.boundary]] -= 1.0 / z_b

    n = len(sites)
    rows.extend(range(n)); cols.extend(range(n)); vals.extend(diag)
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex).tocsc()

    rhs = np.zeros(n, dtype=complex)
    if source is not None:
        (si, sj), amplitude = source
        if not geometry.interior[si, sj]:
            raise ValueError(f"source site {(si, sj)} is not interior")
        rhs[index[si, sj]] = -amplitude

    return AdmittanceSystem(matrix=matrix, rhs=rhs, omega=omega,
                            unknown_sites=sites, index=index)
