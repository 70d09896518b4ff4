"""Physical constants, opacity closures, Planck coupling, scalings.

Unit conventions for the benchmark problems: lengths in cm, time in ns,
temperature in keV, energy in GJ.  With these, the light speed is
29.98 cm/ns and the radiation constant 0.01372 GJ/cm^3/keV^4.  The
accuracy tests instead use normalized constants chosen so the Planck
factor a*c/|Omega| and the scaled heat capacity C_v/|Omega| are unity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidParameterError
from .mesh import node_coords, quad_weights

T_FLOOR = 1.0e-6  # keV; opacity power laws and Newton brackets stop here


@dataclass(frozen=True)
class PhysicalConstants:
    """Light speed c and radiation constant a (positive)."""

    c: float = 29.98
    a: float = 0.01372

    def __post_init__(self):
        if self.c <= 0 or self.a <= 0:
            raise InvalidParameterError("constants must be positive")


@dataclass(frozen=True)
class OpacityLaw:
    """sigma(T): either a constant value or kappa / T^3.

    The power law is evaluated at max(T, T_FLOOR) so cold material has
    a finite (huge) opacity.
    """

    kind: str            # "constant" | "power"
    value: float         # sigma for constant, kappa for power

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise InvalidParameterError("opacity law kind must be "
                                        "'constant' or 'power'")
        if self.value <= 0:
            raise InvalidParameterError("opacity coefficient must be > 0")

    def sigma(self, t):
        if self.kind == "constant":
            return np.full_like(np.asarray(t, dtype=float), self.value)
        tf = np.maximum(np.asarray(t, dtype=float), T_FLOOR)
        return self.value / tf**3

    def kirchhoff(self, t, planck_coeff):
        """W(T) = int_0^T p 4 s^3 / (3 sigma(s)) ds, so that
        (1/(3 sigma)) grad(p T^4) = grad W exactly.

        Degenerate conductivities (the power law as T -> 0) make the
        plain product flux vanish in cold cells; differencing W instead
        keeps boundary-driven heating alive.
        """
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "constant":
            return planck_coeff * t**4 / (3.0 * self.value)
        tf = np.minimum(t, T_FLOOR)
        w_floor = planck_coeff * tf**4 * T_FLOOR**3 / (3.0 * self.value)
        hot = np.maximum(t, T_FLOOR)
        return w_floor + (4.0 * planck_coeff / (21.0 * self.value)) \
            * (hot**7 - T_FLOOR**7)

    @property
    def is_constant(self):
        return self.kind == "constant"


@dataclass(frozen=True)
class MaterialRegion:
    """One material: a rectangle (or None for the whole domain)."""

    law: OpacityLaw
    density: float = 1.0       # g/cm^3
    cv_specific: float = 1.0   # GJ/g/keV
    rect: tuple = None         # ((x0,x1),) or ((x0,x1),(y0,y1))

    @property
    def cv_volumetric(self):
        return self.density * self.cv_specific

    def contains(self, x, y=None):
        if self.rect is None:
            return np.ones_like(np.asarray(x), dtype=bool)
        (x0, x1) = self.rect[0]
        inside = (x >= x0) & (x <= x1)
        if y is not None and len(self.rect) > 1:
            (y0, y1) = self.rect[1]
            inside &= (y >= y0) & (y <= y1)
        return inside


class MaterialModel:
    """Ordered material regions; the first containing region wins.

    The last region is commonly a catch-all (rect=None) so the map
    covers the domain; a cell not covered by any region is an error.
    """

    def __init__(self, regions):
        if not regions:
            raise ConfigurationError("material model needs at least one region")
        self.regions = list(regions)

    def region_ids(self, mesh):
        """Per-cell region index, shape (ncx,) in 1D or (ncy, ncx)."""
        cx = mesh.cell_centers(0)
        if mesh.dimension == 1:
            ids = np.full(cx.shape, -1, dtype=int)
            for r, reg in enumerate(self.regions):
                hit = reg.contains(cx) & (ids < 0)
                ids[hit] = r
        else:
            cy = mesh.cell_centers(1)
            gx = np.broadcast_to(cx, (cy.size, cx.size))
            gy = np.broadcast_to(cy[:, None], (cy.size, cx.size))
            ids = np.full(gx.shape, -1, dtype=int)
            for r, reg in enumerate(self.regions):
                hit = reg.contains(gx, gy) & (ids < 0)
                ids[hit] = r
        if (ids < 0).any():
            raise ConfigurationError("material regions do not cover the domain")
        return ids

    def node_region_ids(self, mesh, basis):
        ids = self.region_ids(mesh)
        k = basis.k
        if mesh.dimension == 1:
            return np.repeat(ids, k)
        return np.repeat(np.repeat(ids, k, axis=0), k, axis=1)

    def region_property(self, attr):
        return np.array([getattr(r, attr) for r in self.regions])

    def sigma_values(self):
        """Constant opacities per region (interface-policy input)."""
        out = {}
        for i, reg in enumerate(self.regions):
            if not reg.law.is_constant:
                raise ConfigurationError(
                    "interface flux policy needs constant-opacity regions")
            out[i] = reg.law.value
        return out


@dataclass(frozen=True)
class ScalingParameters:
    """Knudsen number and the reference opacity of the penalization."""

    eps: float
    sigma0: float

    def __post_init__(self):
        if self.eps <= 0 or self.sigma0 <= 0:
            raise InvalidParameterError("eps and sigma0 must be positive")

    @property
    def eps_tilde(self):
        return self.eps / np.sqrt(self.sigma0)


def penalization_weight(eps_tilde, h):
    """omega = exp(-eps_tilde / h), in (0, 1]."""
    return float(np.exp(-eps_tilde / h))


def planck(t, constants, quad, diag=None):
    """Phi = a c T^4 / |Omega|, with negative nodal T clamped to zero."""
    t = np.asarray(t, dtype=float)
    neg = t < 0.0
    if neg.any():
        if diag is not None:
            diag["planck_floor"] = diag.get("planck_floor", 0) \
                + int(neg.sum())
        t = np.where(neg, 0.0, t)
    return constants.a * constants.c * t**4 / quad.sphere_measure


def radiative_temperature(rho, constants, quad, diag=None):
    """T_r = (|Omega| <I> / (a c))^(1/4), using rho as the angular mean."""
    rho = np.asarray(rho, dtype=float)
    neg = rho < 0.0
    if neg.any():
        if diag is not None:
            diag["tr_floor"] = diag.get("tr_floor", 0) + int(neg.sum())
        rho = np.where(neg, 0.0, rho)
    return (quad.sphere_measure * rho / (constants.a * constants.c))**0.25


def opacity_at(t, material, mesh, basis):
    """Nodal sigma from the per-region law evaluated at T."""
    ids = material.node_region_ids(mesh, basis)
    t = np.asarray(t, dtype=float)
    sigma = np.empty_like(t)
    for r, reg in enumerate(material.regions):
        mask = ids == r
        if mask.any():
            sigma[mask] = reg.law.sigma(t[mask])
    return sigma


class ProblemPhysics:
    """Mesh-bound physics bundle used by the time steppers.

    Exposes the nodal closures the stages need: Planck coupling,
    relative opacity, the penalization weight, and the scaled heat
    capacity field.
    """

    def __init__(self, mesh, basis, quad, constants, material, scaling):
        self.mesh = mesh
        self.basis = basis
        self.quad = quad
        self.constants = constants
        self.material = material
        self.scaling = scaling
        self.c = constants.c
        self.sigma0 = scaling.sigma0
        self.eps = scaling.eps
        self.eps_tilde = scaling.eps_tilde
        self.omega = penalization_weight(self.eps_tilde, mesh.h)
        self.planck_coeff = constants.a * constants.c / quad.sphere_measure
        self.weights = quad_weights(mesh, basis)
        self._node_ids = material.node_region_ids(mesh, basis)
        cv = material.region_property("cv_volumetric")
        self.cvt = cv[self._node_ids] / quad.sphere_measure
        self.diag = {}

    def planck(self, t):
        return planck(t, self.constants, self.quad, self.diag)

    def radiative_temperature(self, rho):
        return radiative_temperature(rho, self.constants, self.quad, self.diag)

    def sigma(self, t):
        """Nodal opacity using the cached region map."""
        t = np.asarray(t, dtype=float)
        if len(self.material.regions) == 1:
            return self.material.regions[0].law.sigma(t)
        out = np.empty_like(t)
        for r, reg in enumerate(self.material.regions):
            mask = self._node_ids == r
            if mask.any():
                out[mask] = reg.law.sigma(t[mask])
        return out

    def sigma_tilde(self, t):
        return self.sigma(t) / self.sigma0

    def kirchhoff(self, t):
        """Nodal Kirchhoff flux potential W(T) per region law."""
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        for r, reg in enumerate(self.material.regions):
            mask = self._node_ids == r
            if mask.any():
                out[mask] = reg.law.kirchhoff(t[mask], self.planck_coeff)
        return out

    def energy(self, rho, t_field):
        """Domain integral of rho + c * C_v/|Omega| * T (the conserved sum)."""
        return float(np.sum(self.weights * (rho + self.c * self.cvt * t_field)))

    def boundary_planck(self, t_source):
        """Isotropic boundary intensity at a source temperature."""
        return self.planck_coeff * float(t_source)**4
