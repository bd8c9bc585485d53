"""Declarative PDE specifications and the catalog of builder functions.

A PdeSpec describes
    du/dt + sum_terms a_{k,j}(x) d^k u / dx_j^k + b(x) u = f(x)        (order 1)
    d2u/dt2 + c0 du/dt + sum_j c_j d2u/(dx_j dt) + sum a d^k u + b u = 0  (order 2)

Divergence-form terms (symmetrized heat diffusion, Fokker-Planck drift and
diffusion) are kept as distinct kinds so the operator builder can emit the
exact symmetrized operator orderings instead of the expanded forms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .poly import Poly

X_AXIS = "x{}"   # spatial axis naming: x1..xD
Z_AXIS = "z{}"   # stochastic axis naming: z1..zL


def x_axis(j: int) -> str:
    return X_AXIS.format(j)


def z_axis(l: int) -> str:
    return Z_AXIS.format(l)


# ---------------------------------------------------------------------------
# coefficient expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientExpr:
    """Polynomial or tabulated coefficient over the spatial/stochastic axes."""

    poly: Poly | None = None
    tabulated: np.ndarray | None = None
    tab_axes: tuple[str, ...] = ()

    @classmethod
    def constant(cls, c: complex) -> "CoefficientExpr":
        return cls(poly=Poly.constant(c))

    @classmethod
    def polynomial(cls, poly: Poly) -> "CoefficientExpr":
        return cls(poly=poly)

    @classmethod
    def from_tab(cls, values: np.ndarray, axes: tuple[str, ...]) -> "CoefficientExpr":
        values = np.asarray(values)
        if not np.all(np.isfinite(values)):
            raise ValueError("tabulated coefficient contains non-finite samples")
        return cls(tabulated=values, tab_axes=axes)

    @property
    def is_poly(self) -> bool:
        return self.poly is not None

    def is_zero(self) -> bool:
        if self.is_poly:
            return self.poly.is_zero()
        return not np.any(self.tabulated)

    def is_real(self, tol: float = 0.0) -> bool:
        if self.is_poly:
            return self.poly.is_real(tol)
        return bool(np.all(np.abs(np.imag(self.tabulated)) <= tol))

    def to_json(self):
        if self.is_poly:
            return {"type": "polynomial", "terms": self.poly.to_json()}
        return {"type": "tabulated", "axes": list(self.tab_axes),
                "re": np.real(self.tabulated).tolist(),
                "im": np.imag(self.tabulated).tolist()}

    @classmethod
    def from_json(cls, data) -> "CoefficientExpr":
        if isinstance(data, (int, float)):
            return cls.constant(data)
        if data["type"] == "polynomial":
            return cls(poly=Poly.from_json(data["terms"]))
        vals = np.asarray(data["re"]) + 1j * np.asarray(data["im"])
        return cls.from_tab(vals, tuple(data["axes"]))


def _coef(c) -> CoefficientExpr:
    if isinstance(c, CoefficientExpr):
        return c
    if isinstance(c, Poly):
        return CoefficientExpr.polynomial(c)
    return CoefficientExpr.constant(c)


# ---------------------------------------------------------------------------
# derivative terms
# ---------------------------------------------------------------------------

PLAIN = "plain"            # a(x) d^k u/dx_j^k
DIV_HEAT = "div_heat"      # -d/dx_i ( D(x) du/dx_j )  [enters with this sign]
FP_DRIFT = "fp_drift"      # +d/dx_j ( mu(x) u )
FP_DIFF = "fp_diff"        # -d^2/dx_j^2 ( D(x) u )


@dataclass(frozen=True)
class DerivTerm:
    kind: str
    j: int                      # primary axis (1-based)
    k: int                      # derivative order (plain), 2 for div kinds
    coef: CoefficientExpr
    i: int | None = None        # second axis for div_heat cross terms

    def to_json(self):
        d = {"kind": self.kind, "j": self.j, "k": self.k, "coef": self.coef.to_json()}
        if self.i is not None:
            d["i"] = self.i
        return d

    @classmethod
    def from_json(cls, d) -> "DerivTerm":
        return cls(kind=d.get("kind", PLAIN), j=d["j"], k=d["k"],
                   coef=CoefficientExpr.from_json(d["coef"]), i=d.get("i"))


# ---------------------------------------------------------------------------
# grids and initial data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AxisSpec:
    lo: float
    hi: float
    n: int
    periodic: bool = False

    def validate(self, name: str, errors: list[str]):
        if not self.hi > self.lo:
            errors.append(f"axis {name}: max must exceed min ({self.lo}, {self.hi})")
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            errors.append(f"axis {name}: point count {self.n} is not a power of two")


@dataclass(frozen=True)
class GridSpec:
    x: tuple[AxisSpec, ...]                    # one per spatial dimension
    xi_halfwidth: float = 10.0
    xi_n: int = 512
    fock_nmax: tuple[int, ...] = ()            # per stochastic axis
    lift: tuple[AxisSpec, ...] = ()            # chi/q axes for lifts

    def validate(self, errors: list[str]):
        for j, ax in enumerate(self.x, start=1):
            ax.validate(x_axis(j), errors)
        for j, ax in enumerate(self.lift):
            ax.validate(f"lift{j}", errors)
        if self.xi_halfwidth <= 0:
            errors.append("xi half-width must be positive")
        if self.xi_n < 2 or (self.xi_n & (self.xi_n - 1)) != 0:
            errors.append(f"xi point count {self.xi_n} is not a power of two")

    def to_json(self):
        return {
            "x": [{"min": a.lo, "max": a.hi, "n": a.n, "periodic": a.periodic}
                  for a in self.x],
            "xi": {"halfwidth": self.xi_halfwidth, "n": self.xi_n},
            "fock_nmax": list(self.fock_nmax),
            "lift": [{"min": a.lo, "max": a.hi, "n": a.n, "periodic": a.periodic}
                     for a in self.lift],
        }

    @classmethod
    def from_json(cls, d) -> "GridSpec":
        return cls(
            x=tuple(AxisSpec(a["min"], a["max"], a["n"], a.get("periodic", False))
                    for a in d.get("x", [])),
            xi_halfwidth=d.get("xi", {}).get("halfwidth", 10.0),
            xi_n=d.get("xi", {}).get("n", 512),
            fock_nmax=tuple(d.get("fock_nmax", [])),
            lift=tuple(AxisSpec(a["min"], a["max"], a["n"], a.get("periodic", False))
                       for a in d.get("lift", [])),
        )


@dataclass
class InitialData:
    """u(0) samples on the spatial grid, optional du/dt(0), provenance tag."""

    u0: np.ndarray
    dudt0: np.ndarray | None = None
    provenance: str = "analytic"

    def validate(self, shape: tuple[int, ...], errors: list[str]):
        if tuple(self.u0.shape) != shape:
            errors.append(f"initial data shape {self.u0.shape} != grid shape {shape}")
        if not np.all(np.isfinite(self.u0)):
            errors.append("initial data contains non-finite values")
        if self.dudt0 is not None:
            if tuple(self.dudt0.shape) != shape:
                errors.append("du/dt(0) shape mismatch")
            if not np.all(np.isfinite(self.dudt0)):
                errors.append("du/dt(0) contains non-finite values")


# ---------------------------------------------------------------------------
# the PDE spec itself
# ---------------------------------------------------------------------------

@dataclass
class PdeSpec:
    name: str
    dim: int
    derivative_terms: list[DerivTerm] = field(default_factory=list)
    b: CoefficientExpr = field(default_factory=lambda: CoefficientExpr.constant(0))
    f: CoefficientExpr | None = None
    time_order: int = 1
    cross_c0: CoefficientExpr | None = None              # time_order 2 only
    cross_cj: list[CoefficientExpr] = field(default_factory=list)
    stochastic_dim: int = 0
    allow_unstable_sign: bool = False

    def x_axes(self) -> list[str]:
        return [x_axis(j) for j in range(1, self.dim + 1)]

    def to_json(self):
        d = {
            "name": self.name,
            "D": self.dim,
            "time_order": self.time_order,
            "terms": [t.to_json() for t in self.derivative_terms],
            "b": self.b.to_json(),
        }
        if self.f is not None:
            d["f"] = self.f.to_json()
        if self.time_order == 2:
            d["cross"] = {
                "c0": self.cross_c0.to_json() if self.cross_c0 else None,
                "cj": [c.to_json() for c in self.cross_cj],
            }
        if self.stochastic_dim:
            d["stochastic"] = {"L": self.stochastic_dim}
        if self.allow_unstable_sign:
            d["allow_unstable_sign"] = True
        return d

    @classmethod
    def from_json(cls, d) -> "PdeSpec":
        cross = d.get("cross") or {}
        return cls(
            name=d.get("name", "pde"),
            dim=d["D"],
            derivative_terms=[DerivTerm.from_json(t) for t in d.get("terms", [])],
            b=CoefficientExpr.from_json(d.get("b", 0)),
            f=CoefficientExpr.from_json(d["f"]) if d.get("f") is not None else None,
            time_order=d.get("time_order", 1),
            cross_c0=(CoefficientExpr.from_json(cross["c0"])
                      if cross.get("c0") is not None else None),
            cross_cj=[CoefficientExpr.from_json(c) for c in cross.get("cj", [])],
            stochastic_dim=d.get("stochastic", {}).get("L", 0),
            allow_unstable_sign=d.get("allow_unstable_sign", False),
        )


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]

    def __bool__(self):
        return self.ok


def _poly_min_on_box(poly: Poly, grid: GridSpec, axes: list[str]) -> float:
    """Crude pointwise minimum of a real polynomial on the declared box."""
    coords = {}
    for j, ax in enumerate(grid.x, start=1):
        coords[x_axis(j)] = np.linspace(ax.lo, ax.hi, 33)
    # broadcast over a tensor mesh of the axes that actually appear
    used = sorted(poly.axes)
    if not used:
        return float(np.real(poly.constant_value()))
    mesh = np.meshgrid(*[coords.get(a, np.zeros(1)) for a in used], indexing="ij")
    vals = poly.evaluate({a: m for a, m in zip(used, mesh)})
    return float(np.min(np.real(vals)))


def validate_spec(spec: PdeSpec, grid: GridSpec) -> ValidationReport:
    """Check the stability sign rule, axis bounds and shape consistency."""
    errors: list[str] = []
    grid.validate(errors)
    if len(grid.x) != spec.dim:
        errors.append(f"grid declares {len(grid.x)} spatial axes, spec has D={spec.dim}")

    seen: set[tuple] = set()
    for t in spec.derivative_terms:
        if not 1 <= t.j <= spec.dim:
            errors.append(f"term axis j={t.j} outside 1..{spec.dim}")
        if t.k < 1:
            errors.append(f"term order k={t.k} must be >= 1")
        key = (t.kind, t.i, t.j, t.k)
        if key in seen:
            errors.append(f"duplicate term {key}")
        seen.add(key)
        if t.kind == PLAIN and t.k % 2 == 0 and not spec.allow_unstable_sign:
            c = t.coef
            if c.is_poly and c.poly.is_real(1e-14):
                if _poly_min_on_box(c.poly, grid, spec.x_axes()) >= 0 and not c.is_zero():
                    errors.append(
                        f"even-order coefficient must be negative: term (j={t.j}, k={t.k})")
            elif not c.is_poly and c.is_real(1e-14):
                if np.min(np.real(c.tabulated)) >= 0 and not c.is_zero():
                    errors.append(
                        f"even-order coefficient must be negative: term (j={t.j}, k={t.k})")
        if t.kind in (DIV_HEAT, FP_DIFF):
            c = t.coef
            if c.is_poly and c.poly.is_real(1e-14) and t.i in (None, t.j):
                if _poly_min_on_box(c.poly, grid, spec.x_axes()) <= 0:
                    errors.append(f"diffusion coefficient must be positive (j={t.j})")
            elif not c.is_poly:
                if np.min(np.real(c.tabulated)) <= 0:
                    errors.append(f"diffusion coefficient must be positive (j={t.j})")
    if spec.time_order == 2 and spec.f is not None:
        errors.append("inhomogeneity with time_order=2 is not supported")
    return ValidationReport(ok=not errors, violations=errors)


# ---------------------------------------------------------------------------
# catalog builders
# ---------------------------------------------------------------------------

def build_convection(D: int, a) -> PdeSpec:
    """du/dt + sum a_j du/dx_j = 0 with constant real speeds."""
    a = np.atleast_1d(np.asarray(a, dtype=float if np.isrealobj(a) else complex))
    if np.iscomplexobj(a) and np.any(np.abs(a.imag) > 0):
        raise ValueError("convection speeds must be real")
    if len(a) != D:
        raise ValueError(f"need {D} speeds, got {len(a)}")
    terms = [DerivTerm(PLAIN, j + 1, 1, CoefficientExpr.constant(float(a[j])))
             for j in range(D)]
    return PdeSpec(name="convection", dim=D, derivative_terms=terms)


def build_heat(D: int, diffusion, potential=0) -> PdeSpec:
    """du/dt - sum_ij d/dx_i (D_ij du/dx_j) + V u = 0 in divergence form.

    diffusion: scalar, length-D diagonal, or DxD matrix of entries
    (numbers / Poly / CoefficientExpr).
    """
    diff = np.empty((D, D), dtype=object)
    arr = diffusion
    if np.isscalar(arr) or isinstance(arr, (Poly, CoefficientExpr)):
        for i in range(D):
            for j in range(D):
                diff[i, j] = _coef(arr if i == j else 0)
    else:
        arr = np.asarray(arr, dtype=object)
        if arr.ndim == 1:
            for i in range(D):
                for j in range(D):
                    diff[i, j] = _coef(arr[i] if i == j else 0)
        else:
            for i in range(D):
                for j in range(D):
                    diff[i, j] = _coef(arr[i, j])
    terms = []
    for i in range(D):
        for j in range(D):
            c = diff[i, j]
            if c.is_zero():
                continue
            if i == j and c.is_poly and c.poly.is_real(1e-14) and c.poly.is_constant():
                if np.real(c.poly.constant_value()) <= 0:
                    raise ValueError("diffusion must be positive")
            terms.append(DerivTerm(DIV_HEAT, j + 1, 2, c, i=i + 1))
    return PdeSpec(name="heat", dim=D, derivative_terms=terms, b=_coef(potential))


def build_fokker_planck(D: int, drift, diffusion) -> PdeSpec:
    """du/dt + sum_j d(mu_j u)/dx_j - sum_j d^2(D_j u)/dx_j^2 = 0."""
    drift = list(np.atleast_1d(np.asarray(drift, dtype=object)))
    diffusion = list(np.atleast_1d(np.asarray(diffusion, dtype=object)))
    if len(drift) == 1 and D > 1:
        drift = drift * D
    if len(diffusion) == 1 and D > 1:
        diffusion = diffusion * D
    terms = []
    for j in range(D):
        mu = _coef(drift[j])
        dd = _coef(diffusion[j])
        if not mu.is_real(1e-14) or not dd.is_real(1e-14):
            raise ValueError("drift and diffusion must be real")
        if not mu.is_zero():
            terms.append(DerivTerm(FP_DRIFT, j + 1, 1, mu))
        if not dd.is_zero():
            terms.append(DerivTerm(FP_DIFF, j + 1, 2, dd))
    return PdeSpec(name="fokker_planck", dim=D, derivative_terms=terms)


def build_black_scholes(sigma: float, r: float) -> PdeSpec:
    """du/dt + (1/2) s^2 x^2 u_xx + r x u_x - r u = 0."""
    sigma = float(sigma)
    r = float(r)
    terms = []
    if sigma != 0:
        terms.append(DerivTerm(PLAIN, 1, 2,
                               _coef(Poly.var("x1", 2, 0.5 * sigma**2))))
    if r != 0:
        terms.append(DerivTerm(PLAIN, 1, 1, _coef(Poly.var("x1", 1, r))))
    return PdeSpec(name="black_scholes", dim=1, derivative_terms=terms,
                   b=CoefficientExpr.constant(-r), allow_unstable_sign=True)


def build_wave(D: int, speeds, potential=0) -> PdeSpec:
    """d2u/dt2 - sum a_j d2u/dx_j^2 + V u = 0 with a_j > 0."""
    speeds = list(np.atleast_1d(np.asarray(speeds, dtype=object)))
    if len(speeds) == 1 and D > 1:
        speeds = speeds * D
    terms = []
    for j in range(D):
        a = _coef(speeds[j])
        if a.is_poly and a.poly.is_constant() and np.real(a.poly.constant_value()) <= 0:
            raise ValueError("wave speeds must be positive")
        if a.is_poly:
            terms.append(DerivTerm(PLAIN, j + 1, 2, _coef(a.poly.scale(-1))))
        else:
            terms.append(DerivTerm(PLAIN, j + 1, 2,
                                   CoefficientExpr.from_tab(-a.tabulated, a.tab_axes)))
    return PdeSpec(name="wave", dim=D, derivative_terms=terms, b=_coef(potential),
                   time_order=2)


def build_liouville(D: int, a_coeffs) -> PdeSpec:
    """du/dt + sum_j a_j(x) du/dx_j = 0 with real polynomial a_j."""
    a_coeffs = list(np.atleast_1d(np.asarray(a_coeffs, dtype=object)))
    terms = []
    for j in range(D):
        a = _coef(a_coeffs[j])
        if not a.is_real(1e-14):
            raise ValueError("transport speeds must be real")
        if not a.is_zero():
            terms.append(DerivTerm(PLAIN, j + 1, 1, a))
    return PdeSpec(name="liouville", dim=D, derivative_terms=terms)


def load_spec(path) -> tuple[PdeSpec, GridSpec, dict]:
    """Parse the JSON problem-spec file. Returns (spec, grid, raw dict)."""
    with open(path) as fh:
        raw = json.load(fh)
    spec = PdeSpec.from_json(raw)
    grid = GridSpec.from_json(raw.get("grid", {}))
    return spec, grid, raw
