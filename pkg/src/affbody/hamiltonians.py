"""Reduced channel Hamiltonians of the four kinetic-energy models.

Inertial bookkeeping:  with moment of inertia I and affine constants A, B,

    alpha = I + A,  mu = (I^2 - A^2)/I,
    beta  = -(I+A)(I+A+nB)/B  (1/beta = 0 when B = 0),
    beta~ = n(I+A+nB).

Two-dimensional channels (m, n) separate into an x-sector over the shear
coordinate x = q^2 - q^1 with weight |sh x| and a flat q-sector over the
mean dilatation q = (q^1 + q^2)/2:

    aff-aff:  -(hbar^2/A) D_x + hbar^2 (n-m)^2 / (16 A sh^2(x/2))
                              - hbar^2 (n+m)^2 / (16 A ch^2(x/2)),
              q-sector coefficient hbar^2/(4(A+2B));
    met-aff / aff-met:  same shape with A -> alpha, plus the constant
              hbar^2 m^2/mu (resp. hbar^2 n^2/mu),
              q-sector coefficient hbar^2/(2 beta~).

The isotropic model separates in Sigma = Q^1 + Q^2, Delta = Q^1 - Q^2 with
linear weights and inverse-square barriers hbar^2 (n-m)^2/(4 I Delta^2),
hbar^2 (n+m)^2/(4 I Sigma^2), both sectors sharing the coefficient
hbar^2/I.

Three-dimensional channels (s, j) act on (2s+1) x (2j+1) matrix
amplitudes over a tensor grid of deformation invariants: the weighted
Laplacian -(hbar^2/2A) D (staggered-flux divergence form), a dilatational
term along the grid diagonal (the mean-q second derivative), constant
Casimir shifts hbar^2 s(s+1)/2mu, hbar^2 j(j+1)/2mu for the mixed models,
and per ordered pair a != b the generator barriers

    (1/32A) (S_left - S_right)^2 / sh^2((q^a-q^b)/2)
  - (1/32A) (S_left + S_right)^2 / ch^2((q^a-q^b)/2)

where S_right f = S^(s) f and S_left f = f S^(j) act through the dual
axis of the pair.  The isotropic model uses weight P_l and both barrier
terms positive with (Q^a -+ Q^b)^-2 denominators and prefactor 1/8I.

Grid axes carry small relative offsets (0, h/3, 2h/3) so that nodes and
staggered flux midpoints never touch the coincidence strata where the
weights vanish.

The sqrt-weight symmetrization replaces the divergence-form operator by
-c d^2/dx^2 + U_eff with U_eff = c (w' + w^2), w = P'/(2P):
U_eff = c(1/4 - 1/(4 sh^2 x)) for P = |sh x| and -c/(4x^2) for P = x.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, DomainError
from .representations import RepLabel, generators

MAX_TWICE_SPIN = 20
MAX_FIELD_ELEMENTS = 1 << 26


class ModelKind(Enum):
    AFF_AFF = "aff-aff"
    MET_AFF = "met-aff"
    AFF_MET = "aff-met"
    DALEMBERT = "dalembert"


@dataclass(frozen=True)
class ModelParams:
    """Inertial constants; n is the spatial dimension the model lives in."""

    I: float
    A: float
    B: float
    hbar: float = 1.0
    n: int = 2

    def __post_init__(self):
        for name in ("I", "A", "B", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.n not in (2, 3):
            raise DomainError(f"spatial dimension must be 2 or 3, got {self.n}")
        if self.hbar <= 0.0:
            raise DomainError("hbar must be positive")


class DerivedConstants(NamedTuple):
    alpha: float
    beta: float
    mu: float
    beta_tilde: float

    @property
    def mu_degenerate(self) -> bool:
        return self.mu == 0.0


def derived_constants(params: ModelParams) -> DerivedConstants:
    """The four derived inertial constants (alpha, beta, mu, beta_tilde).

    B = 0 makes beta infinite (so 1/beta = 0 and consuming operators drop
    the term); I = 0 likewise marks mu infinite, deferring the error to
    the operators that would divide by it.  mu = 0 flags the degenerate
    boundary I = +-A.
    """
    I, A, B, n = params.I, params.A, params.B, params.n
    alpha = I + A
    beta = math.inf if B == 0.0 else -(I + A) * (I + A + n * B) / B
    mu = math.inf if I == 0.0 else (I * I - A * A) / I
    beta_tilde = n * (I + A + n * B)
    return DerivedConstants(alpha, beta, mu, beta_tilde)


def check_gates(kind: ModelKind, params: ModelParams) -> DerivedConstants:
    """Enforce the well-posedness inequalities, naming the offender."""
    cons = derived_constants(params)
    if kind is ModelKind.AFF_AFF:
        if params.A <= 0.0:
            raise DomainError(f"gate violated: A > 0 required, got A = {params.A}")
        anb = params.A + params.n * params.B
        if anb <= 0.0:
            raise DomainError(f"gate violated: A + nB > 0 required, got A + nB = {anb}")
    elif kind in (ModelKind.MET_AFF, ModelKind.AFF_MET):
        if params.I <= 0.0:
            raise DomainError(f"gate violated: I > 0 required, got I = {params.I}")
        if cons.alpha <= 0.0:
            raise DomainError(f"gate violated: alpha > 0 required, got alpha = {cons.alpha}")
        if cons.beta_tilde <= 0.0:
            raise DomainError(
                f"gate violated: beta_tilde > 0 required, got beta_tilde = {cons.beta_tilde}"
            )
        if cons.mu_degenerate:
            raise DomainError("gate violated: mu must be nonzero (I = +-A is degenerate)")
    elif kind is ModelKind.DALEMBERT:
        if params.I <= 0.0:
            raise DomainError(f"gate violated: I > 0 required, got I = {params.I}")
    return cons


# ---------------------------------------------------------------------------
# potentials


class PotentialKind(Enum):
    ZERO = "zero"
    HARMONIC = "harmonic"
    FINITE_WELL = "finite-well"


@dataclass(frozen=True)
class PotentialSpec:
    kind: PotentialKind
    k: float = 0.0
    q0: float = 0.0
    depth: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.width < 0.0:
            raise DomainError(f"well width must be non-negative, got {self.width}")

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls(PotentialKind.ZERO)

    @classmethod
    def harmonic(cls, k: float, q0: float = 0.0) -> "PotentialSpec":
        return cls(PotentialKind.HARMONIC, k=k, q0=q0)

    @classmethod
    def finite_well(cls, depth: float, width: float) -> "PotentialSpec":
        return cls(PotentialKind.FINITE_WELL, depth=depth, width=width)


ZERO_POTENTIAL = PotentialSpec.zero()


def potential(spec: PotentialSpec, x):
    """Evaluate a potential spec at a point or array of points."""
    x = np.asarray(x, dtype=float)
    if spec.kind is PotentialKind.ZERO:
        out = np.zeros_like(x)
    elif spec.kind is PotentialKind.HARMONIC:
        out = 0.5 * spec.k * (x - spec.q0) ** 2
    else:
        out = np.where(np.abs(x) <= 0.5 * spec.width, -spec.depth, 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# one-dimensional sector operators


class WeightKind1D(Enum):
    FLAT = "flat"
    SINH = "sinh"
    LINEAR = "linear"


def _weight_values(kind: WeightKind1D, x: np.ndarray) -> np.ndarray:
    if kind is WeightKind1D.FLAT:
        return np.ones_like(x)
    if kind is WeightKind1D.SINH:
        return np.abs(np.sinh(x))
    return x.copy()


@dataclass(frozen=True)
class Grid1D:
    """Interior nodes x_min + i h, i = 1..npoints, of a Dirichlet box.

    Both walls x_min and x_max are hard zeros of the eigenfunctions; the
    step is h = (x_max - x_min)/(npoints + 1).
    """

    x_min: float
    x_max: float
    npoints: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise DomainError("grid needs x_max > x_min")
        if self.npoints < 3:
            raise DomainError("grid needs at least three interior nodes")

    @classmethod
    def from_spec(cls, x_max: float, npoints: int, x_min: float = 0.0) -> "Grid1D":
        return cls(x_min, x_max, npoints)

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / (self.npoints + 1)

    @property
    def points(self) -> np.ndarray:
        h = self.step
        return self.x_min + h * np.arange(1, self.npoints + 1)

    @property
    def midpoints(self) -> np.ndarray:
        # flux positions between consecutive nodes, walls included
        h = self.step
        return self.x_min + h * (0.5 + np.arange(self.npoints + 1))

    def refine(self) -> "Grid1D":
        # 2n+1 interior nodes halve the step exactly and nest the old nodes
        return Grid1D(self.x_min, self.x_max, 2 * self.npoints + 1)

    def coarsen(self) -> "Grid1D":
        m = (self.npoints - 1) // 2
        if m < 3:
            raise DomainError("grid too small to coarsen")
        return Grid1D(self.x_min, self.x_max, m)


@dataclass(frozen=True)
class QSector:
    """Separable dilatational companion of a 2D channel operator."""

    kind: ModelKind
    channel: tuple
    coeff: float
    weight_kind: WeightKind1D
    inv_sq_coeff: float
    potential: PotentialSpec


@dataclass(frozen=True)
class ChannelOperator1D:
    """Divergence-form operator -(c/P) d/dx (P d/dx) + diag on a Grid1D.

    diag_potential already contains the hyperbolic (or inverse-square)
    barriers, the constant shift and the user potential.  threshold is
    the estimated continuum edge of the symmetrized problem.
    """

    kind: ModelKind
    channel: tuple
    grid: Grid1D
    weight_kind: WeightKind1D
    kinetic_coeff: float
    diag_potential: np.ndarray
    constant_shift: float
    threshold: float
    sh_coeff: float = 0.0
    ch_coeff: float = 0.0
    inv_sq_coeff: float = 0.0
    q_sector: QSector | None = None

    def __post_init__(self):
        diag = np.array(self.diag_potential, dtype=float)
        if diag.shape != (self.grid.npoints,):
            raise DomainError("diagonal potential does not match the grid")
        diag.flags.writeable = False
        object.__setattr__(self, "diag_potential", diag)
        if self.kinetic_coeff <= 0.0:
            raise DomainError("kinetic coefficient must be positive")

    @cached_property
    def weight(self) -> np.ndarray:
        w = _weight_values(self.weight_kind, self.grid.points)
        w.flags.writeable = False
        return w

    @cached_property
    def weight_mid(self) -> np.ndarray:
        w = _weight_values(self.weight_kind, self.grid.midpoints)
        w.flags.writeable = False
        return w

    def tridiagonal_weighted(self):
        """(K_diag, K_off, P) of the generalized problem K u = E P u."""
        P = self.weight
        if np.any(P <= 0.0):
            raise DomainError("weight must be positive on interior nodes")
        mid = self.weight_mid
        h2 = self.grid.step**2
        c = self.kinetic_coeff
        kdiag = c * (mid[:-1] + mid[1:]) / h2 + P * self.diag_potential
        koff = -c * mid[1:-1] / h2
        return kdiag, koff, P

    def symmetric_tridiagonal(self):
        """Tridiagonal of the exactly equivalent flat problem D^-1 K D^-1."""
        kdiag, koff, P = self.tridiagonal_weighted()
        d = np.sqrt(P)
        return kdiag / P, koff / (d[:-1] * d[1:])


@dataclass(frozen=True)
class SymmetrizedOperator1D:
    """Flat-measure image -c d^2/dx^2 + U_eff + diag of a channel operator."""

    kind: ModelKind
    channel: tuple
    grid: Grid1D
    kinetic_coeff: float
    diag_potential: np.ndarray
    constant_shift: float
    threshold: float
    source_weight: WeightKind1D

    def __post_init__(self):
        diag = np.array(self.diag_potential, dtype=float)
        diag.flags.writeable = False
        object.__setattr__(self, "diag_potential", diag)

    def symmetric_tridiagonal(self):
        h2 = self.grid.step**2
        c = self.kinetic_coeff
        diag = 2.0 * c / h2 + self.diag_potential
        off = np.full(self.grid.npoints - 1, -c / h2)
        return diag, off


def effective_weight_potential(kind: WeightKind1D, c: float, x: np.ndarray) -> np.ndarray:
    """U_eff = c (w' + w^2), w = P'/(2P), of the sqrt-weight transform."""
    if kind is WeightKind1D.FLAT:
        return np.zeros_like(x)
    if kind is WeightKind1D.SINH:
        return c * (0.25 - 0.25 / np.sinh(x) ** 2)
    return -c / (4.0 * x**2)


def symmetrize(op: ChannelOperator1D) -> SymmetrizedOperator1D:
    """Similarity transform to the flat measure; spectrum is preserved."""
    x = op.grid.points
    if np.any(op.weight <= 0.0):
        raise DomainError("weight vanishes on an interior node")
    u_eff = effective_weight_potential(op.weight_kind, op.kinetic_coeff, x)
    return SymmetrizedOperator1D(
        kind=op.kind,
        channel=op.channel,
        grid=op.grid,
        kinetic_coeff=op.kinetic_coeff,
        diag_potential=op.diag_potential + u_eff,
        constant_shift=op.constant_shift,
        threshold=op.threshold,
        source_weight=op.weight_kind,
    )


def _sym_tail(weight_kind: WeightKind1D, c: float) -> float:
    return 0.25 * c if weight_kind is WeightKind1D.SINH else 0.0


def assemble_2d_channel(
    kind: ModelKind,
    params: ModelParams,
    channel,
    grid: Grid1D,
    dil_potential: PotentialSpec = ZERO_POTENTIAL,
    shear_potential: PotentialSpec = ZERO_POTENTIAL,
) -> ChannelOperator1D:
    """x-sector operator of the planar channel (m, n), q-sector attached."""
    if params.n != 2:
        raise DomainError("planar channels require n = 2 parameters")
    cons = check_gates(kind, params)
    m, n = channel
    if m != int(m) or n != int(n):
        raise DomainError("planar channel labels must be integers")
    m, n = int(m), int(n)
    hb2 = params.hbar**2
    x = grid.points

    if kind is ModelKind.DALEMBERT:
        if grid.x_min < 0.0:
            raise DomainError("isotropic shear sector lives on positive coordinates")
        c = hb2 / params.I
        inv_sq = hb2 * (n - m) ** 2 / (4.0 * params.I)
        diag = inv_sq / x**2 + potential(shear_potential, x)
        qsec = QSector(
            kind,
            (m, n),
            coeff=c,
            weight_kind=WeightKind1D.LINEAR,
            inv_sq_coeff=hb2 * (n + m) ** 2 / (4.0 * params.I),
            potential=dil_potential,
        )
        return ChannelOperator1D(
            kind=kind,
            channel=(m, n),
            grid=grid,
            weight_kind=WeightKind1D.LINEAR,
            kinetic_coeff=c,
            diag_potential=diag,
            constant_shift=0.0,
            threshold=float(potential(shear_potential, grid.x_max)),
            inv_sq_coeff=inv_sq,
            q_sector=qsec,
        )

    if kind is ModelKind.AFF_AFF:
        denom = params.A
        shift = 0.0
        q_coeff = hb2 / (4.0 * (params.A + 2.0 * params.B))
    else:
        denom = cons.alpha
        gyro = m if kind is ModelKind.MET_AFF else n
        shift = hb2 * gyro**2 / cons.mu
        q_coeff = hb2 / (2.0 * cons.beta_tilde)

    c = hb2 / denom
    sh_coeff = hb2 * (n - m) ** 2 / (16.0 * denom)
    ch_coeff = hb2 * (n + m) ** 2 / (16.0 * denom)
    half = 0.5 * x
    diag = (
        sh_coeff / np.sinh(half) ** 2
        - ch_coeff / np.cosh(half) ** 2
        + shift
        + potential(shear_potential, x)
    )
    qsec = QSector(
        kind, (m, n), coeff=q_coeff, weight_kind=WeightKind1D.FLAT,
        inv_sq_coeff=0.0, potential=dil_potential,
    )
    return ChannelOperator1D(
        kind=kind,
        channel=(m, n),
        grid=grid,
        weight_kind=WeightKind1D.SINH,
        kinetic_coeff=c,
        diag_potential=diag,
        constant_shift=shift,
        threshold=shift + 0.25 * c + float(potential(shear_potential, grid.x_max)),
        sh_coeff=sh_coeff,
        ch_coeff=ch_coeff,
        q_sector=qsec,
    )


def assemble_q_sector(qsec: QSector, grid: Grid1D) -> ChannelOperator1D:
    """Materialize a dilatational descriptor on its own grid."""
    x = grid.points
    if qsec.weight_kind is WeightKind1D.LINEAR and grid.x_min < 0.0:
        raise DomainError("linear-weight sector lives on positive coordinates")
    diag = potential(qsec.potential, x)
    if qsec.inv_sq_coeff:
        diag = diag + qsec.inv_sq_coeff / x**2
    return ChannelOperator1D(
        kind=qsec.kind,
        channel=qsec.channel,
        grid=grid,
        weight_kind=qsec.weight_kind,
        kinetic_coeff=qsec.coeff,
        diag_potential=diag,
        constant_shift=0.0,
        threshold=_sym_tail(qsec.weight_kind, qsec.coeff)
        + float(potential(qsec.potential, grid.x_max)),
        inv_sq_coeff=qsec.inv_sq_coeff,
    )


# ---------------------------------------------------------------------------
# three-dimensional channels


@dataclass(frozen=True)
class GridND:
    """Tensor grid for the invariants (q^1, q^2, q^3) with offset axes.

    Axis a holds npoints interior nodes q_min + (i+1) h + a h/3 of its own
    Dirichlet box; the offsets keep every node and staggered flux midpoint
    clear of the coincidence strata q^a = q^b.
    """

    npoints: int
    q_min: float
    q_max: float

    def __post_init__(self):
        if self.npoints < 3:
            raise DomainError("grid needs at least three interior nodes per axis")
        if not self.q_max > self.q_min:
            raise DomainError("grid needs q_max > q_min")

    @property
    def step(self) -> float:
        return (self.q_max - self.q_min) / (self.npoints + 1)

    @property
    def axes(self) -> tuple:
        h = self.step
        base = self.q_min + h * np.arange(1, self.npoints + 1)
        return tuple(base + a * h / 3.0 for a in range(3))

    def refine(self) -> "GridND":
        return GridND(2 * self.npoints + 1, self.q_min, self.q_max)


def _pair_axis(a: int, b: int) -> int:
    return 3 - a - b  # dual axis of the unordered pair, 0-based


def _weight_nd(kind: ModelKind, axes) -> np.ndarray:
    g = np.meshgrid(*axes, indexing="ij")
    out = np.ones_like(g[0])
    for a in range(3):
        for b in range(a + 1, 3):
            if kind is ModelKind.DALEMBERT:
                out = out * np.abs((g[a] + g[b]) * (g[a] - g[b]))
            else:
                out = out * np.abs(np.sinh(g[a] - g[b]))
    return out


@dataclass(frozen=True)
class NDChannelOperator:
    """Matrix-free reduced operator on amplitudes of shape grid + (ds, dj)."""

    kind: ModelKind
    params: ModelParams
    labels: tuple
    grid: GridND
    kinetic_coeff: float
    q2_coeff: float
    casimir_shift: float
    pair_coeff: float

    def __post_init__(self):
        ds = int(2.0 * self.labels[0]) + 1
        dj = int(2.0 * self.labels[1]) + 1
        n3 = self.grid.npoints**3
        if n3 * ds * dj > MAX_FIELD_ELEMENTS:
            raise CapacityError(
                f"amplitude field of {n3 * ds * dj} elements exceeds the configured maximum"
            )

    @property
    def shape(self) -> tuple:
        N = self.grid.npoints
        ds = int(2.0 * self.labels[0]) + 1
        dj = int(2.0 * self.labels[1]) + 1
        return (N, N, N, ds, dj)

    @cached_property
    def weight(self) -> np.ndarray:
        w = _weight_nd(self.kind, self.grid.axes)
        w.flags.writeable = False
        return w

    @cached_property
    def _flux(self) -> tuple:
        # for each axis, the weight at nodes shifted by -h/2 along that
        # axis (npoints+1 entries covering both walls)
        h = self.grid.step
        out = []
        for a in range(3):
            axes = list(self.grid.axes)
            ax = axes[a]
            axes[a] = np.concatenate(([ax[0] - h], ax)) + 0.5 * h
            w = _weight_nd(self.kind, axes)
            w.flags.writeable = False
            out.append(w)
        return tuple(out)

    @cached_property
    def _spin_matrices(self) -> tuple:
        s, j = self.labels
        gs = generators(RepLabel.su2(s), self.params.hbar).S
        gj = generators(RepLabel.su2(j), self.params.hbar).S
        return gs, gj

    @cached_property
    def _pair_fields(self) -> tuple:
        # inverse barrier profiles per unordered pair, broadcastable shapes
        axes = self.grid.axes
        out = []
        for a in range(3):
            for b in range(a + 1, 3):
                qa = axes[a].reshape([-1 if d == a else 1 for d in range(3)])
                qb = axes[b].reshape([-1 if d == b else 1 for d in range(3)])
                if self.kind is ModelKind.DALEMBERT:
                    minus = 1.0 / (qa - qb) ** 2
                    plus = 1.0 / (qa + qb) ** 2
                else:
                    minus = 1.0 / np.sinh(0.5 * (qa - qb)) ** 2
                    plus = 1.0 / np.cosh(0.5 * (qa - qb)) ** 2
                out.append((a, b, minus, plus))
        return tuple(out)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """H f for an amplitude f of shape self.shape."""
        f = np.asarray(f)
        if f.shape != self.shape:
            raise DomainError(f"amplitude shape {f.shape} does not match {self.shape}")
        h2 = self.grid.step**2
        P = self.weight[..., None, None]
        out = np.zeros(self.shape, dtype=complex)

        # weighted Laplacian in staggered divergence form
        for a in range(3):
            lo = [slice(None)] * 5
            hi = [slice(None)] * 5
            lo[a] = slice(None, -1)
            hi[a] = slice(1, None)
            lo, hi = tuple(lo), tuple(hi)
            mid = self._flux[a]
            low = [slice(None)] * 3
            upp = [slice(None)] * 3
            low[a] = slice(None, -1)
            upp[a] = slice(1, None)
            m_low = mid[tuple(low)][..., None, None]  # flux below each node
            m_upp = mid[tuple(upp)][..., None, None]  # flux above each node
            div = (m_low + m_upp) * f
            div[hi] -= m_low[hi] * f[lo]
            div[lo] -= m_upp[lo] * f[hi]
            out += (self.kinetic_coeff / h2) * div / P

        # dilatational second difference along the grid diagonal; the
        # weight depends only on invariant differences, so this shift is
        # exactly symmetric for the sinh weight
        if self.q2_coeff:
            diag = -2.0 * f.astype(complex)
            core = (slice(1, None),) * 3
            back = (slice(None, -1),) * 3
            diag[core] += f[back]
            diag[back] += f[core]
            out += (self.q2_coeff / h2) * diag

        if self.casimir_shift:
            out += self.casimir_shift * f

        if self.pair_coeff:
            gs, gj = self._spin_matrices
            for a, b, minus, plus in self._pair_fields:
                c = _pair_axis(a, b)
                S, J = gs[c], gj[c]
                S2f = np.einsum("ab,...bk->...ak", S @ S, f)
                fJ2 = np.einsum("...ak,kl->...al", f, J @ J)
                SfJ = np.einsum("ab,...bk,kl->...al", S, f, J)
                sq_minus = S2f + fJ2 - 2.0 * SfJ
                sq_plus = S2f + fJ2 + 2.0 * SfJ
                if self.kind is ModelKind.DALEMBERT:
                    out += self.pair_coeff * (
                        minus[..., None, None] * sq_minus + plus[..., None, None] * sq_plus
                    )
                else:
                    out += self.pair_coeff * (
                        minus[..., None, None] * sq_minus - plus[..., None, None] * sq_plus
                    )
        return out

    def weighted_inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Sum of tr(f^+ g) P over the grid times the cell volume."""
        tr = np.einsum("ijkab,ijkab->ijk", f.conj(), g)
        return complex(np.sum(tr * self.weight) * self.grid.step**3)


def assemble_nd_channel(
    kind: ModelKind, params: ModelParams, labels, grid: GridND
) -> NDChannelOperator:
    """Reduced operator for the (s, j) channel on the invariant grid."""
    if params.n != 3:
        raise DomainError("matrix channels require n = 3 parameters")
    cons = check_gates(kind, params)
    s, j = labels
    for val in (s, j):
        twice = 2.0 * val
        if twice != int(twice) or val < 0:
            raise DomainError(f"channel labels must be non-negative half-integers, got {val}")
    if 2 * s > MAX_TWICE_SPIN or 2 * j > MAX_TWICE_SPIN:
        raise CapacityError(f"channel labels ({s}, {j}) exceed the configured maximum")
    hb2 = params.hbar**2

    if kind is ModelKind.DALEMBERT:
        if grid.q_min < 0.0:
            raise DomainError("isotropic invariants live on positive coordinates")
        return NDChannelOperator(
            kind, params, (s, j), grid,
            kinetic_coeff=hb2 / (2.0 * params.I),
            q2_coeff=0.0,
            casimir_shift=0.0,
            pair_coeff=1.0 / (8.0 * params.I) * 2.0,  # ordered double count
        )

    if kind is ModelKind.AFF_AFF:
        denom = params.A
        q2 = hb2 * params.B / (2.0 * params.A * (params.A + 3.0 * params.B))
        shift = 0.0
    else:
        denom = cons.alpha
        q2 = 0.0 if math.isinf(cons.beta) else -hb2 / (2.0 * cons.beta)
        gyro = s if kind is ModelKind.MET_AFF else j
        shift = hb2 * gyro * (gyro + 1.0) / (2.0 * cons.mu)
    return NDChannelOperator(
        kind, params, (s, j), grid,
        kinetic_coeff=hb2 / (2.0 * denom),
        q2_coeff=q2,
        casimir_shift=shift,
        pair_coeff=1.0 / (32.0 * denom) * 2.0,  # ordered double count
    )


# ---------------------------------------------------------------------------
# Casimir cross-check and export


def kinetic_from_casimirs(
    kind: ModelKind, params: ModelParams, casimir2: float, p2: float, spin2: float = 0.0
) -> float:
    """Kinetic energy from invariant values; cross-checks assembled constants."""
    cons = check_gates(kind, params)
    if kind is ModelKind.AFF_AFF:
        return casimir2 / (2.0 * params.A) - params.B * p2 / (
            2.0 * params.A * (params.A + params.n * params.B)
        )
    if kind in (ModelKind.MET_AFF, ModelKind.AFF_MET):
        out = casimir2 / (2.0 * cons.alpha) + spin2 / (2.0 * cons.mu)
        if not math.isinf(cons.beta):
            out += p2 / (2.0 * cons.beta)
        return out
    raise DomainError("the isotropic model has no Casimir decomposition of this form")


def write_operator(target, op) -> None:
    """Dump a 1D operator as structured text (grid, weight, diagonal)."""
    close = False
    if isinstance(target, (str, bytes)):
        fh = open(target, "w", encoding="utf-8")
        close = True
    else:
        fh = target
    try:
        flat = isinstance(op, SymmetrizedOperator1D)
        fh.write("# affbody-operator 1\n")
        fh.write(f"# kind {op.kind.value}\n")
        fh.write(f"# channel {op.channel[0]} {op.channel[1]}\n")
        fh.write(f"# form {'flat' if flat else 'weighted'}\n")
        fh.write(
            f"# grid {op.grid.x_min:.17g} {op.grid.x_max:.17g} {op.grid.npoints}\n"
        )
        fh.write(f"# kinetic_coeff {op.kinetic_coeff:.17g}\n")
        fh.write(f"# constant_shift {op.constant_shift:.17g}\n")
        fh.write(f"# threshold {op.threshold:.17g}\n")
        x = op.grid.points
        w = np.ones_like(x) if flat else op.weight
        for xi, wi, vi in zip(x, w, op.diag_potential):
            fh.write(f"{xi:.17g} {wi:.17g} {vi:.17g}\n")
    finally:
        if close:
            fh.close()


__all__ = [
    "MAX_FIELD_ELEMENTS",
    "MAX_TWICE_SPIN",
    "ChannelOperator1D",
    "DerivedConstants",
    "Grid1D",
    "GridND",
    "ModelKind",
    "ModelParams",
    "NDChannelOperator",
    "PotentialKind",
    "PotentialSpec",
    "QSector",
    "SymmetrizedOperator1D",
    "WeightKind1D",
    "ZERO_POTENTIAL",
    "assemble_2d_channel",
    "assemble_nd_channel",
    "assemble_q_sector",
    "check_gates",
    "derived_constants",
    "effective_weight_potential",
    "kinetic_from_casimirs",
    "potential",
    "symmetrize",
    "write_operator",
]
