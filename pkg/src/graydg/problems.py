"""Built-in benchmark configurations and boundary condition rules.

Boundary ghosts are built through the micro-macro split: a rule
produces a ghost intensity per ordinate (a prescribed Planckian on
inflow ordinates, the interior trace on outflow ones), averages it into
a ghost scalar flux, and divides the fluctuation by eps_tilde.  The
ghost scalar flux is affine in the interior trace; its linear
coefficient (one for extrapolation, one half where a source covers the
inflow half-sphere) feeds the operator assembly so the implicit
penalization solve stays linear, and the remaining constant is supplied
per stage.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .angular import gauss_legendre, legendre_chebyshev
from .errors import ConfigurationError, InvalidParameterError
from .imex import TABLEAUS, MicroMacroState, initial_gradient
from .mesh import NodalBasis, StructuredMesh, node_coords
from .operators import FLUX_ALT_LR, SideBC, assemble_operators, \
    interface_edge_weights
from .physics import MaterialModel, MaterialRegion, OpacityLaw, \
    PhysicalConstants, ProblemPhysics, ScalingParameters

_SIDE_AXIS = {"xlo": 0, "xhi": 0, "ylo": 1, "yhi": 1}
_SIDE_INFLOW_SIGN = {"xlo": +1, "xhi": -1, "ylo": +1, "yhi": -1}


# -- boundary rules ---------------------------------------------------


class PeriodicRule:
    periodic = True
    kind = "periodic"

    def lam(self, nb):
        return None


class OutflowRule:
    """Zero-order extrapolation of every ordinate."""

    periodic = False
    kind = "outflow"

    def lam(self, nb):
        return np.ones(nb)

    def ghost(self, side, rho_tr, g_tr, phys, eps_tilde=None):
        gc = np.zeros_like(rho_tr)
        return np.array(g_tr, copy=True), gc


class CloseLoopRule:
    """Inflow ordinates see a boundary Planckian, outflow extrapolates."""

    periodic = False
    kind = "closeloop"

    def __init__(self, t_source):
        self.t_source = float(t_source)

    def lam(self, nb):
        return np.full(nb, 0.5)

    def ghost(self, side, rho_tr, g_tr, phys, eps_tilde=None):
        et = phys.eps_tilde if eps_tilde is None else eps_tilde
        quad = phys.quad
        comp = quad.components()[_SIDE_AXIS[side]]
        inflow = _SIDE_INFLOW_SIGN[side] * comp > 0.0
        w = quad.weights
        i_b = phys.boundary_planck(self.t_source)
        # state-independent + frozen-fluctuation part of the ghost mean
        gc = (w[inflow].sum() * i_b
              + et * np.tensordot(w[~inflow], g_tr[~inflow], axes=(0, 0))) \
            / quad.sphere_measure
        rho_ghost = gc + 0.5 * rho_tr
        i_ghost = np.where(inflow[:, None], i_b,
                           rho_tr[None, :] + et * g_tr)
        if et > 0.0:
            g_ghost = (i_ghost - rho_ghost[None, :]) / et
        else:
            g_ghost = np.zeros_like(i_ghost)
        return g_ghost, gc


class HeatedSegmentRule:
    """A Planckian source over part of a side, outflow elsewhere."""

    periodic = False
    kind = "heated"

    def __init__(self, t_source, span):
        self.t_source = float(t_source)
        self.span = (float(span[0]), float(span[1]))
        self._mask = None  # bound to the side's node coordinates

    def bind(self, coords):
        self._mask = (coords >= self.span[0]) & (coords <= self.span[1])

    def lam(self, nb):
        if self._mask is None or self._mask.shape[0] != nb:
            raise ConfigurationError("heated segment rule is not bound to "
                                     "its boundary nodes")
        return np.where(self._mask, 0.5, 1.0)

    def ghost(self, side, rho_tr, g_tr, phys, eps_tilde=None):
        et = phys.eps_tilde if eps_tilde is None else eps_tilde
        quad = phys.quad
        comp = quad.components()[_SIDE_AXIS[side]]
        inflow = _SIDE_INFLOW_SIGN[side] * comp > 0.0
        w = quad.weights
        i_b = phys.boundary_planck(self.t_source)
        seg = self._mask
        gc_seg = (w[inflow].sum() * i_b
                  + et * np.tensordot(w[~inflow], g_tr[~inflow], axes=(0, 0))) \
            / quad.sphere_measure
        gc = np.where(seg, gc_seg, 0.0)
        rho_ghost = gc + np.where(seg, 0.5, 1.0) * rho_tr
        i_seg = np.where(inflow[:, None], i_b, rho_tr[None, :] + et * g_tr)
        if et > 0.0:
            g_seg = (i_seg - rho_ghost[None, :]) / et
        else:
            g_seg = np.zeros_like(i_seg)
        return np.where(seg[None, :], g_seg, g_tr), gc


def apply_boundary(rule, side, rho_tr, g_tr, phys, eps_tilde=None):
    """Full ghost traces (rho_ghost, g_ghost) for one boundary side."""
    g_ghost, gc = rule.ghost(side, np.asarray(rho_tr, dtype=float),
                             np.asarray(g_tr, dtype=float), phys, eps_tilde)
    lam = rule.lam(np.asarray(rho_tr).shape[0])
    rho_ghost = gc + (0.0 if lam is None else lam) * np.asarray(rho_tr)
    return rho_ghost, g_ghost


class BoundarySet:
    """Per-side bound rules for one problem instance."""

    def __init__(self, rules):
        self.rules = dict(rules)

    @property
    def all_periodic(self):
        return all(r.periodic for r in self.rules.values())

    def axis_periodic(self, axis):
        lo = ("xlo", "ylo")[axis]
        return self.rules[lo].periodic

    def side_bcs(self, ops_sides, mesh, basis):
        out = {}
        for side in ops_sides:
            rule = self.rules[side]
            if rule.periodic:
                out[side] = SideBC(periodic=True)
            else:
                axis = _SIDE_AXIS[side]
                nb = 1 if mesh.dimension == 1 else \
                    mesh.cells[1 - axis] * basis.k
                out[side] = SideBC(periodic=False, lam=rule.lam(nb))
        return out


# -- benchmark specification ------------------------------------------


@dataclass(frozen=True)
class RegionSpec:
    law_kind: str
    law_value: float
    density: float
    cv_specific: float
    rect: tuple = None

    def to_region(self):
        return MaterialRegion(OpacityLaw(self.law_kind, self.law_value),
                              self.density, self.cv_specific, self.rect)


@dataclass(frozen=True)
class BoundaryRuleSpec:
    kind: str                  # periodic | outflow | closeloop | heated
    t_source: float = None
    span: tuple = None

    def make(self):
        if self.kind == "periodic":
            return PeriodicRule()
        if self.kind == "outflow":
            return OutflowRule()
        if self.kind == "closeloop":
            return CloseLoopRule(self.t_source)
        if self.kind == "heated":
            return HeatedSegmentRule(self.t_source, self.span)
        raise ConfigurationError("unknown boundary rule %r" % (self.kind,))


@dataclass(frozen=True)
class BenchmarkSpec:
    """Complete, value-typed description of one benchmark run."""

    name: str
    dimension: int
    domain: tuple                 # ((x0,x1),) or ((x0,x1),(y0,y1))
    cells: tuple
    k: int
    tableau: str
    cfl: float                    # dt = cfl * h
    final_time: float
    snapshot_times: tuple
    eps: float
    sigma0: float
    a: float
    c: float
    regions: tuple                # of RegionSpec
    boundaries: tuple             # of (side, BoundaryRuleSpec)
    initial: str                  # key into the initial-data registry
    n_angles: tuple               # (n,) or (n_l, n_c)
    flux: str = FLUX_ALT_LR
    limiter: bool = False
    limit_vars: tuple = ("rho", "T")
    interface_policy: bool = False
    probes: tuple = ()
    probe_stride: int = 1
    description: str = ""


def accuracy_1d():
    """Smooth 1D equilibrium data on a periodic box.

    Normalized so the Planck factor and scaled heat capacity are one;
    sigma = 1/T^3 and the reference opacity is one.
    """
    return BenchmarkSpec(
        name="accuracy1d", dimension=1,
        domain=((0.0, 2.0 * np.pi),), cells=(40,), k=3,
        tableau="ars443", cfl=0.01, final_time=0.2, snapshot_times=(0.2,),
        eps=1.0, sigma0=1.0, a=2.0, c=1.0,
        regions=(RegionSpec("power", 1.0, 1.0, 2.0),),
        boundaries=(("xlo", BoundaryRuleSpec("periodic")),
                    ("xhi", BoundaryRuleSpec("periodic"))),
        initial="accuracy1d", n_angles=(8,),
        description="1D smooth periodic accuracy test",
    )


def accuracy_2d():
    """Smooth 2D equilibrium data on a periodic box, sigma = 1."""
    two_pi = 2.0 * np.pi
    return BenchmarkSpec(
        name="accuracy2d", dimension=2,
        domain=((0.0, two_pi), (0.0, two_pi)), cells=(16, 16), k=3,
        tableau="ars443", cfl=0.01, final_time=0.01, snapshot_times=(0.01,),
        eps=1.0, sigma0=1.0, a=two_pi, c=1.0,
        regions=(RegionSpec("constant", 1.0, 1.0, two_pi),),
        boundaries=(("xlo", BoundaryRuleSpec("periodic")),
                    ("xhi", BoundaryRuleSpec("periodic")),
                    ("ylo", BoundaryRuleSpec("periodic")),
                    ("yhi", BoundaryRuleSpec("periodic"))),
        initial="accuracy2d", n_angles=(8, 4),
        description="2D smooth periodic accuracy test",
    )


def marshak(variant="2B"):
    """Marshak wave into cold material, driven by a 1 keV Planckian.

    Variant 2B has kappa = 300 (thick, near the diffusion limit);
    variant 2A has kappa = 30 and visibly lags the diffusion front.
    """
    variant = str(variant).upper()
    if variant not in ("2A", "2B"):
        raise InvalidParameterError("marshak variant must be '2A' or '2B'")
    kappa = 300.0 if variant == "2B" else 30.0
    snaps = (10.0, 30.0, 50.0, 74.0) if variant == "2B" \
        else (0.2, 0.4, 0.6, 0.8)
    return BenchmarkSpec(
        name="marshak" + variant.lower(), dimension=1,
        domain=((0.0, 1.0),), cells=(80,), k=3,
        tableau="ars443", cfl=0.1, final_time=snaps[-1],
        snapshot_times=snaps,
        eps=1.0, sigma0=kappa, a=0.01372, c=29.98,
        regions=(RegionSpec("power", kappa, 3.0, 0.1),),
        boundaries=(("xlo", BoundaryRuleSpec("closeloop", t_source=1.0)),
                    ("xhi", BoundaryRuleSpec("outflow"))),
        initial="cold-equilibrium", n_angles=(8,),
        limiter=True,
        description="1D Marshak wave-%s, sigma = %g/T^3" % (variant, kappa),
    )


_TOPHAT_OPAQUE = (
    ((3.0, 4.0), (-1.0, 1.0)),
    ((0.0, 2.5), (-2.0, -0.5)),
    ((0.0, 2.5), (0.5, 2.0)),
    ((4.5, 7.0), (-2.0, -0.5)),
    ((4.5, 7.0), (0.5, 2.0)),
    ((2.5, 4.5), (-2.0, -1.5)),
    ((2.5, 4.5), (1.5, 2.0)),
)

_TOPHAT_PROBES = (("A", (0.25, 0.0)), ("B", (2.75, 0.0)),
                  ("C", (3.5, 1.25)), ("D", (4.25, 0.0)),
                  ("E", (6.75, 0.0)))


def tophat():
    """2D tophat: a hot pipe threading opaque blocks, heated at the left.

    Dense blocks carry sigma = 2000/cm at 10 g/cm^3; the pipe is thin
    (0.2/cm at 0.01 g/cm^3).  Probes A-E monitor the pipe temperatures.
    The default horizon is a 10 ns smoke run; stretch final_time for the
    long (hundreds of ns) simulation.
    """
    opaque = tuple(RegionSpec("constant", 2000.0, 10.0, 0.1, rect)
                   for rect in _TOPHAT_OPAQUE)
    pipe = (RegionSpec("constant", 0.2, 0.01, 0.1, None),)
    return BenchmarkSpec(
        name="tophat", dimension=2,
        domain=((0.0, 7.0), (-2.0, 2.0)), cells=(56, 32), k=3,
        tableau="imex1", cfl=0.002, final_time=10.0,
        snapshot_times=(10.0,),
        eps=1.0, sigma0=10000.0, a=0.01372, c=29.98,
        regions=opaque + pipe,
        boundaries=(("xlo", BoundaryRuleSpec("heated", t_source=0.5,
                                             span=(-0.5, 0.5))),
                    ("xhi", BoundaryRuleSpec("outflow")),
                    ("ylo", BoundaryRuleSpec("outflow")),
                    ("yhi", BoundaryRuleSpec("outflow"))),
        initial="cold-equilibrium-0.05", n_angles=(8, 4),
        limiter=True, interface_policy=True,
        probes=_TOPHAT_PROBES, probe_stride=5,
        description="2D tophat pipe benchmark with opacity interfaces",
    )


BENCHMARKS = {
    "accuracy1d": accuracy_1d,
    "accuracy2d": accuracy_2d,
    "marshak2a": lambda: marshak("2A"),
    "marshak2b": lambda: marshak("2B"),
    "tophat": tophat,
}


# -- initial data -----------------------------------------------------


def _initial_fields(spec, mesh, basis, quad, phys):
    name = spec.initial
    if name == "accuracy1d":
        b0, b1 = 0.8, 0.1
        x = mesh.axis_nodes(0, basis)
        t0 = b0 + b1 * np.sin(x)
        rho0 = t0**4
        mu = quad.ordinates
        g0 = -4.0 * mu[:, None] * b1 * np.cos(x)[None, :] * t0[None, :]**6
        return rho0, t0, g0
    if name == "accuracy2d":
        a1 = a2 = 0.8
        b1 = b2 = 0.1
        x, y = node_coords(mesh, basis)
        fx = a1 + b1 * np.sin(x)
        fy = a2 + b2 * np.sin(y)
        t0 = fx * fy
        rho0 = t0**4
        drho_dx = 4.0 * t0**3 * b1 * np.cos(x) * fy
        drho_dy = 4.0 * t0**3 * fx * b2 * np.cos(y)
        zeta, eta = quad.components()
        sigma = phys.sigma(t0)
        g0 = -(zeta[:, None, None] * drho_dx[None]
               + eta[:, None, None] * drho_dy[None]) / sigma[None]
        return rho0, t0, g0
    if name.startswith("cold-equilibrium"):
        t_init = 1.0e-6 if name == "cold-equilibrium" \
            else float(name.rsplit("-", 1)[1])
        shape = mesh.node_shape(basis)
        t0 = np.full(shape, t_init)
        rho0 = phys.planck(t0)
        g0 = np.zeros((quad.n_ordinates,) + shape)
        return rho0, t0, g0
    raise ConfigurationError("unknown initial data %r" % (name,))


# -- run assembly -----------------------------------------------------


@dataclass
class RunSetup:
    spec: BenchmarkSpec
    mesh: StructuredMesh
    basis: NodalBasis
    quad: object
    phys: ProblemPhysics
    ops: object
    boundary: BoundarySet
    tableau: object
    state0: MicroMacroState
    dt: float


def build_setup(spec, dt=None):
    """Instantiate meshes, physics, operators and the initial state."""
    mesh = StructuredMesh(spec.domain, spec.cells)
    basis = NodalBasis(spec.k)
    if spec.dimension == 1:
        quad = gauss_legendre(spec.n_angles[0])
    else:
        quad = legendre_chebyshev(*spec.n_angles)
    material = MaterialModel([r.to_region() for r in spec.regions])
    constants = PhysicalConstants(c=spec.c, a=spec.a)
    scaling = ScalingParameters(eps=spec.eps, sigma0=spec.sigma0)
    phys = ProblemPhysics(mesh, basis, quad, constants, material, scaling)

    rules = {}
    for side, rspec in spec.boundaries:
        rule = rspec.make()
        if isinstance(rule, HeatedSegmentRule):
            axis = _SIDE_AXIS[side]
            coords = np.zeros(1) if mesh.dimension == 1 \
                else mesh.axis_nodes(1 - axis, basis)
            rule.bind(coords)
        rules[side] = rule
    boundary = BoundarySet(rules)

    if dt is None:
        dt = spec.cfl * mesh.h
    sides = ("xlo", "xhi") if mesh.dimension == 1 \
        else ("xlo", "xhi", "ylo", "yhi")
    for side in sides:
        if side not in boundary.rules:
            raise ConfigurationError("no boundary rule for side %r" % side)
    side_bcs = boundary.side_bcs(sides, mesh, basis)

    edges = None
    if spec.interface_policy:
        edges = interface_edge_weights(
            material.region_ids(mesh), material.sigma_values(),
            phys.c, dt, phys.eps_tilde, phys.sigma0)
    ops = assemble_operators(mesh, basis, quad, spec.flux, side_bcs, edges)

    rho0, t0, g0 = _initial_fields(spec, mesh, basis, quad, phys)
    q0 = initial_gradient(rho0, g0, ops, boundary, phys)
    state0 = MicroMacroState(rho0, t0, g0, q0, 0.0)
    tableau = TABLEAUS[spec.tableau]()
    return RunSetup(spec, mesh, basis, quad, phys, ops, boundary, tableau,
                    state0, dt)


def override_spec(spec, **kwargs):
    """Typed override of benchmark fields (N/k/eps/... from the CLI)."""
    clean = {k: v for k, v in kwargs.items() if v is not None}
    if "cells" in clean:
        cells = clean["cells"]
        if np.isscalar(cells):
            cells = (int(cells),) * spec.dimension
        clean["cells"] = tuple(int(c) for c in cells)
    return replace(spec, **clean)
