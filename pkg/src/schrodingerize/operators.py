"""Operator sums over quadrature factors, their algebra, and resource counting.

An OperatorTerm is a complex coefficient times an ordered product of factors;
the rightmost factor acts first. Factors:

    XPoly(poly)        multiplication by a polynomial of grid coordinates
    XTab(axes, values) multiplication by tabulated samples
    Deriv(axis, k)     p_hat^k on a spatial axis (p = -i d/dx)
    Eta(axis)          multiplication by the Fourier-dual coordinate of a xi axis
    PauliF(axis, s)    Pauli sigma_s on a qubit axis
    FockZ(axis)        tridiagonal position matrix on a truncated Fock axis

The Hermitian/anti-Hermitian split, canonical normal ordering (derivatives
moved right of coordinate multipliers), Hermitian display regrouping, and the
inverse map from a Hamiltonian back to a PDE spec all live here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .poly import Poly
from .pde_model import (
    PLAIN, DIV_HEAT, FP_DRIFT, FP_DIFF,
    CoefficientExpr, DerivTerm, PdeSpec, x_axis, z_axis,
)

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# products sigma_a sigma_b = phase * sigma_c
_PAULI_MUL = {}
for _a in "ixyz":
    for _b in "ixyz":
        m = _PAULI[_a] @ _PAULI[_b]
        for _c in "ixyz":
            for ph in (1, -1, 1j, -1j):
                if np.allclose(m, ph * _PAULI[_c]):
                    _PAULI_MUL[(_a, _b)] = (ph, _c)


class CanonicalizationError(Exception):
    """Symbolic normal ordering is out of scope for this operator."""


# ---------------------------------------------------------------------------
# factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XPoly:
    poly: Poly

    def adjoint(self):
        return XPoly(self.poly.conj())

    def label(self):
        return f"[{self.poly!r}]"


@dataclass(frozen=True)
class XTab:
    axes: tuple[str, ...]
    values_key: int            # id into a registry (arrays are unhashable)

    def adjoint(self):
        return XTab(self.axes, _register_tab(np.conj(_TAB_REGISTRY[self.values_key])))

    def label(self):
        return f"tab{list(self.axes)}"


_TAB_REGISTRY: dict[int, np.ndarray] = {}
_TAB_NEXT = [0]


def _register_tab(values: np.ndarray) -> int:
    key = _TAB_NEXT[0]
    _TAB_NEXT[0] += 1
    _TAB_REGISTRY[key] = values
    return key


def make_xtab(values: np.ndarray, axes: tuple[str, ...]) -> XTab:
    return XTab(axes, _register_tab(np.asarray(values)))


def tab_values(f: XTab) -> np.ndarray:
    return _TAB_REGISTRY[f.values_key]


@dataclass(frozen=True)
class Deriv:
    axis: str
    order: int = 1

    def adjoint(self):
        return self

    def label(self):
        return f"p_{self.axis}" + (f"^{self.order}" if self.order > 1 else "")


@dataclass(frozen=True)
class Eta:
    axis: str

    def adjoint(self):
        return self

    def label(self):
        return f"eta_{self.axis}"


@dataclass(frozen=True)
class PauliF:
    axis: str
    s: str   # 'x' | 'y' | 'z' | 'i'

    def adjoint(self):
        return self

    def label(self):
        return f"sigma{self.s}_{self.axis}"


@dataclass(frozen=True)
class FockZ:
    axis: str

    def adjoint(self):
        return self

    def label(self):
        return f"z_{self.axis}"


Factor = XPoly | XTab | Deriv | Eta | PauliF | FockZ


# ---------------------------------------------------------------------------
# terms and sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorTerm:
    coeff: complex
    factors: tuple[Factor, ...]

    def adjoint(self) -> "OperatorTerm":
        return OperatorTerm(np.conj(self.coeff),
                            tuple(f.adjoint() for f in reversed(self.factors)))

    def scaled(self, c: complex) -> "OperatorTerm":
        return OperatorTerm(self.coeff * c, self.factors)


class OperatorSum:
    """Ordered sum of operator terms. Empty sum is the zero operator."""

    def __init__(self, terms=()):
        self.terms: tuple[OperatorTerm, ...] = tuple(
            t for t in terms if t.coeff != 0)
        self._hermitian_verdict: bool | None = None

    # -- constructors ----------------------------------------------------
    @classmethod
    def zero(cls) -> "OperatorSum":
        return cls()

    @classmethod
    def identity(cls, c: complex = 1.0) -> "OperatorSum":
        return cls([OperatorTerm(complex(c), ())])

    @classmethod
    def single(cls, coeff: complex, *factors: Factor) -> "OperatorSum":
        return cls([OperatorTerm(complex(coeff), tuple(factors))])

    # -- algebra -----------------------------------------------------------
    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        return OperatorSum(self.terms + other.terms)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "OperatorSum":
        return OperatorSum(t.scaled(c) for t in self.terms)

    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                out.append(OperatorTerm(t1.coeff * t2.coeff, t1.factors + t2.factors))
        return OperatorSum(out)

    def tensor(self, *factors: Factor) -> "OperatorSum":
        """Append factors (acting on other axes) to every term."""
        if not self.terms:
            return OperatorSum.zero()
        return OperatorSum(OperatorTerm(t.coeff, t.factors + tuple(factors))
                           for t in self.terms)

    def adjoint(self) -> "OperatorSum":
        return OperatorSum(t.adjoint() for t in self.terms)

    def merged(self, tol: float = 0.0) -> "OperatorSum":
        """Combine terms with identical factor tuples; drop vanishing ones."""
        acc: dict[tuple, complex] = {}
        for t in self.terms:
            acc[t.factors] = acc.get(t.factors, 0) + t.coeff
        scale = max((abs(c) for c in acc.values()), default=1.0)
        floor = tol * max(scale, 1.0)
        return OperatorSum(OperatorTerm(c, f) for f, c in acc.items()
                           if abs(c) > floor)

    def is_zero(self) -> bool:
        return not self.merged(1e-14).terms

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "OperatorSum<0>"
        parts = []
        for t in self.terms[:6]:
            fs = " ".join(f.label() for f in t.factors) or "I"
            parts.append(f"({t.coeff:g})*{fs}")
        more = "" if len(self.terms) <= 6 else f" ... +{len(self.terms)-6} terms"
        return "OperatorSum<" + " + ".join(parts) + more + ">"


# ---------------------------------------------------------------------------
# hermitian / anti-hermitian split
# ---------------------------------------------------------------------------

def hermitian_split(A: OperatorSum) -> tuple[OperatorSum, OperatorSum]:
    """A = A1 - i A2 with A1 = (A+A^)/2 and A2 = i(A-A^)/2, both Hermitian.

    Formed symbolically from adjoint terms; identical factor tuples merge so
    cancellations (e.g. symmetrized diffusion) happen exactly.
    """
    Ad = A.adjoint()
    A1 = (A + Ad).scale(0.5).merged(1e-15)
    A2 = (A - Ad).scale(0.5j).merged(1e-15)
    return A1, A2


# ---------------------------------------------------------------------------
# building A from a PdeSpec
# ---------------------------------------------------------------------------

def _coef_factor(c: CoefficientExpr) -> list[Factor]:
    if c.is_poly:
        if c.poly.is_constant():
            return []          # constant handled by caller via coefficient
        return [XPoly(c.poly)]
    return [make_xtab(c.tabulated, c.tab_axes)]


def _coef_scalar(c: CoefficientExpr) -> complex:
    if c.is_poly and c.poly.is_constant():
        return c.poly.constant_value()
    return 1.0


def coefficient_operator(c: CoefficientExpr) -> OperatorSum:
    """Multiplication operator for a coefficient expression."""
    if c.is_zero():
        return OperatorSum.zero()
    scal = _coef_scalar(c)
    return OperatorSum.single(scal, *_coef_factor(c))


def build_A(spec: PdeSpec) -> OperatorSum:
    """Generator A with du/dt = -iA u reproducing the first-order-in-time PDE.

    Plain terms contribute a_{k,j} i^{k+3} p_j^k; divergence-form kinds emit
    the symmetrized orderings (p D p for heat, p mu and p^2 D for the
    Fokker-Planck drift/diffusion). The zeroth term contributes -i b.
    For time_order 2 this is the A of the second-order system d2u/dt2 = -iA u.
    """
    terms: list[OperatorTerm] = []
    for t in spec.derivative_terms:
        ax = x_axis(t.j)
        cf = t.coef
        if t.kind == PLAIN:
            phase = 1j ** (t.k + 3)
            scal = phase * _coef_scalar(cf)
            terms.append(OperatorTerm(scal, tuple(_coef_factor(cf)) + (Deriv(ax, t.k),)))
        elif t.kind == DIV_HEAT:
            # -d/dx_i (D du/dx_j) -> A += -i * p_i D p_j
            axi = x_axis(t.i if t.i is not None else t.j)
            scal = -1j * _coef_scalar(cf)
            terms.append(OperatorTerm(
                scal, (Deriv(axi, 1),) + tuple(_coef_factor(cf)) + (Deriv(ax, 1),)))
        elif t.kind == FP_DRIFT:
            # +d/dx_j (mu u) -> A += p_j mu
            scal = _coef_scalar(cf)
            terms.append(OperatorTerm(scal, (Deriv(ax, 1),) + tuple(_coef_factor(cf))))
        elif t.kind == FP_DIFF:
            # -d^2/dx_j^2 (D u) -> A += -i p_j^2 D
            scal = -1j * _coef_scalar(cf)
            terms.append(OperatorTerm(scal, (Deriv(ax, 2),) + tuple(_coef_factor(cf))))
        else:
            raise ValueError(f"unsupported term kind {t.kind}")
    if not spec.b.is_zero():
        scal = -1j * _coef_scalar(spec.b)
        terms.append(OperatorTerm(scal, tuple(_coef_factor(spec.b))))
    return OperatorSum(terms)


def build_gamma(spec: PdeSpec) -> OperatorSum:
    """Gamma = c0 + i sum_j c_j p_j for the second-order-in-time cross terms."""
    out = OperatorSum.zero()
    if spec.cross_c0 is not None and not spec.cross_c0.is_zero():
        out = out + coefficient_operator(spec.cross_c0)
    for j, cj in enumerate(spec.cross_cj, start=1):
        if cj is None or cj.is_zero():
            continue
        out = out + coefficient_operator(cj).tensor(Deriv(x_axis(j), 1)).scale(1j)
    return out


# ---------------------------------------------------------------------------
# canonical normal ordering
# ---------------------------------------------------------------------------

@dataclass
class CanonicalTerm:
    """poly(x,z) * prod_j p_j^{k_j} * prod eta^e * paulis * prod z^m."""

    poly: Poly
    derivs: tuple[tuple[str, int], ...] = ()
    etas: tuple[tuple[str, int], ...] = ()
    paulis: tuple[tuple[str, str], ...] = ()
    focks: tuple[tuple[str, int], ...] = ()

    def key(self):
        return (self.derivs, self.etas, self.paulis, self.focks)


def _canon_mul_deriv(monos: list[CanonicalTerm], axis: str, order: int,
                     max_degree: int) -> list[CanonicalTerm]:
    """Left-multiply each monomial by p_axis^order.

    p^k a(x) = sum_m C(k,m) (-i)^m a^{(m)}(x) p^{k-m}.
    """
    out: list[CanonicalTerm] = []
    for t in monos:
        if t.poly.degree() > max_degree:
            raise CanonicalizationError(
                f"polynomial degree {t.poly.degree()} exceeds symbolic limit")
        dmap = dict(t.derivs)
        for m in range(order + 1):
            pm = t.poly
            ok = True
            for _ in range(m):
                pm = pm.diff(axis)
                if pm.is_zero():
                    ok = False
                    break
            if m > 0 and (not ok or pm.is_zero()):
                continue
            c = math.comb(order, m) * (-1j) ** m
            d2 = dict(dmap)
            rem = order - m
            if rem:
                d2[axis] = d2.get(axis, 0) + rem
            out.append(CanonicalTerm(pm.scale(c), tuple(sorted(d2.items())),
                                     t.etas, t.paulis, t.focks))
    return out


def canonicalize(A: OperatorSum, max_degree: int = 4) -> list[CanonicalTerm]:
    """Normal-ordered monomial form: coordinate polynomials left of derivative
    powers per axis, Pauli products reduced, eta/Fock powers collected.

    Raises CanonicalizationError for tabulated coefficients or degrees beyond
    the symbolic limit.
    """
    acc: dict[tuple, Poly] = {}
    for term in A.terms:
        monos = [CanonicalTerm(Poly.constant(term.coeff))]
        for f in reversed(term.factors):
            if isinstance(f, XPoly):
                monos = [CanonicalTerm(f.poly * t.poly, t.derivs, t.etas,
                                       t.paulis, t.focks) for t in monos]
            elif isinstance(f, XTab):
                raise CanonicalizationError("tabulated coefficient")
            elif isinstance(f, Deriv):
                monos = _canon_mul_deriv(monos, f.axis, f.order, max_degree)
            elif isinstance(f, Eta):
                nm = []
                for t in monos:
                    e = dict(t.etas)
                    e[f.axis] = e.get(f.axis, 0) + 1
                    nm.append(CanonicalTerm(t.poly, t.derivs,
                                            tuple(sorted(e.items())), t.paulis, t.focks))
                monos = nm
            elif isinstance(f, PauliF):
                nm = []
                for t in monos:
                    p = dict(t.paulis)
                    prev = p.get(f.axis, "i")
                    ph, res = _PAULI_MUL[(f.s, prev)]
                    if res == "i":
                        p.pop(f.axis, None)
                    else:
                        p[f.axis] = res
                    nm.append(CanonicalTerm(t.poly.scale(ph), t.derivs, t.etas,
                                            tuple(sorted(p.items())), t.focks))
                monos = nm
            elif isinstance(f, FockZ):
                nm = []
                for t in monos:
                    z = dict(t.focks)
                    z[f.axis] = z.get(f.axis, 0) + 1
                    nm.append(CanonicalTerm(t.poly, t.derivs, t.etas, t.paulis,
                                            tuple(sorted(z.items()))))
                monos = nm
            else:
                raise CanonicalizationError(f"unknown factor {f}")
        for t in monos:
            k = t.key()
            acc[k] = acc.get(k, Poly({})) + t.poly
    out = []
    for k, poly in acc.items():
        if not poly.is_zero():
            out.append(CanonicalTerm(poly, *k))
    return out


def canonical_equal(A: OperatorSum, B: OperatorSum, tol: float = 1e-10) -> bool:
    try:
        ca = canonicalize(A)
        cb = canonicalize(B)
    except CanonicalizationError:
        return False
    da = {t.key(): t.poly for t in ca}
    db = {t.key(): t.poly for t in cb}
    for k in set(da) | set(db):
        if not da.get(k, Poly({})).allclose(db.get(k, Poly({})), tol):
            return False
    return True


# ---------------------------------------------------------------------------
# hermitian display form (for resource counting and pretty printing)
# ---------------------------------------------------------------------------

@dataclass
class DisplayTerm:
    """One symmetrized display monomial; rev marks the D-left ordering."""

    poly: Poly
    derivs: tuple[tuple[str, int], ...]
    etas: tuple[tuple[str, int], ...]
    paulis: tuple[tuple[str, str], ...]
    focks: tuple[tuple[str, int], ...]
    rev: bool = False

    def key(self):
        return (self.derivs, self.etas, self.paulis, self.focks)


def _mono_total_order(key, poly: Poly) -> int:
    derivs, etas, _pauli, focks = key
    return (sum(k for _, k in derivs) + sum(e for _, e in etas)
            + sum(m for _, m in focks) + poly.degree())


def _key_factors(key, poly: Poly, deriv_left: bool) -> list[Factor]:
    derivs, etas, paulis, focks = key
    fs: list[Factor] = []
    dfs: list[Factor] = [Deriv(ax, k) for ax, k in derivs if k > 0]
    pf: list[Factor] = [] if poly.is_constant() else [XPoly(poly)]
    seq = dfs + pf if deriv_left else pf + dfs
    fs.extend(seq)
    for ax, e in etas:
        fs.extend([Eta(ax)] * e)
    for ax, s in paulis:
        fs.append(PauliF(ax, s))
    for ax, m in focks:
        fs.extend([FockZ(ax)] * m)
    return fs


def hermitian_display(O: OperatorSum, max_degree: int = 8) -> list[DisplayTerm]:
    """Rewrite a Hermitian operator as symmetrized display monomials.

    Processes normal-ordered monomials from highest total order down. A
    monomial whose coordinate polynomial commutes with its derivative factors
    is emitted as a single Hermitian term; otherwise the pair
    (poly/2) D + D (conj poly / 2) is emitted (counted as two terms, matching
    by-hand counting of anticommutator expansions) and its lower-order normal
    corrections are subtracted from the remainder.
    """
    monos = {t.key(): t.poly for t in canonicalize(O, max_degree)}
    display: list[DisplayTerm] = []
    guard = 0
    while monos:
        guard += 1
        if guard > 1000:
            raise CanonicalizationError("display regrouping did not terminate")
        key = max(monos, key=lambda k: _mono_total_order(k, monos[k]))
        poly = monos.pop(key)
        if poly.is_zero():
            continue
        derivs, etas, paulis, focks = key
        deriv_axes = {ax for ax, k in derivs if k > 0}
        scale = max(abs(c) for c in poly.terms.values())
        commuting = not (deriv_axes & poly.axes)
        if commuting:
            if not poly.is_real(1e-12 * scale):
                raise CanonicalizationError("non-Hermitian residual monomial")
            display.append(DisplayTerm(poly, *key))
            continue
        half = poly.scale(0.5)
        display.append(DisplayTerm(half, *key))
        display.append(DisplayTerm(half.conj(), *key, rev=True))
        # subtract normal corrections of D (conj poly / 2) beyond its leading term
        revop = OperatorSum.single(1.0, *_key_factors(key, half.conj(), True))
        for t in canonicalize(revop, max_degree):
            k2 = t.key()
            sub = t.poly - half.conj() if k2 == key else t.poly
            if sub.is_zero():
                continue
            cur = monos.get(k2, Poly({})) - sub
            if cur.is_zero():
                monos.pop(k2, None)
            else:
                monos[k2] = cur
    return display


def display_term_count(O: OperatorSum) -> int:
    return len(hermitian_display(O))


# ---------------------------------------------------------------------------
# assembly and layout
# ---------------------------------------------------------------------------

XI_AXIS = "xi{}"


def xi_axis(m: int = 1) -> str:
    return XI_AXIS.format(m)


QUBIT_AXIS = "qb{}"


def qubit_axis(m: int = 1) -> str:
    return QUBIT_AXIS.format(m)


@dataclass
class AncillaLayout:
    """Tensor-factor bookkeeping: spatial qumodes, eta ancillas, qubits, Fock."""

    x_axes: tuple[str, ...] = ()
    eta_axes: tuple[str, ...] = ()
    qubit_axes: tuple[str, ...] = ()
    fock_axes: tuple[str, ...] = ()
    fock_nmax: tuple[int, ...] = ()
    lift_axes: tuple[str, ...] = ()

    @property
    def qumodes(self) -> int:
        return (len(self.x_axes) + len(self.eta_axes) + len(self.fock_axes)
                + len(self.lift_axes))

    @property
    def qubits(self) -> int:
        return len(self.qubit_axes)


def assemble_hamiltonian(A1: OperatorSum, A2: OperatorSum,
                         layout: AncillaLayout) -> OperatorSum:
    """H = A2 (x) eta + A1 (x) I on the standard single-ancilla layout."""
    if len(layout.eta_axes) != 1:
        raise ValueError("standard assembly needs exactly one eta axis")
    eta = Eta(layout.eta_axes[0])
    return A2.tensor(eta) + A1


def assemble_extended(splits: list[tuple[OperatorSum, OperatorSum]],
                      layout: AncillaLayout) -> OperatorSum:
    """H = sum_j a_{j2} (x) eta_j + a_{j1} (x) I with one ancilla per axis."""
    if len(layout.eta_axes) != len(splits):
        raise ValueError("need one eta axis per per-axis split")
    H = OperatorSum.zero()
    for (a1, a2), ax in zip(splits, layout.eta_axes):
        H = H + a2.tensor(Eta(ax)) + a1
    return H


# ---------------------------------------------------------------------------
# numeric hermiticity probe (grid application is provided by the engine)
# ---------------------------------------------------------------------------

def is_hermitian(O: OperatorSum, probe_state, apply_fn, n_probes: int = 20,
                 tol: float = 1e-10, seed: int = 0) -> bool:
    """Random-state test of <phi, O psi> == <O phi, psi>.

    probe_state: template GridState defining shape/axes; apply_fn(O, state).
    """
    rng = np.random.default_rng(seed)
    norm_O = None
    for _ in range(n_probes):
        phi = probe_state.random_like(rng)
        psi = probe_state.random_like(rng)
        Ophi = apply_fn(O, phi)
        Opsi = apply_fn(O, psi)
        if norm_O is None:
            norm_O = max(Opsi.norm() / max(psi.norm(), 1e-300), 1e-30)
        lhs = phi.inner(Opsi)
        rhs = Ophi.inner(psi)
        bound = tol * norm_O * phi.norm() * psi.norm()
        if abs(lhs - rhs) > max(bound, 1e-300):
            return False
    return True


# ---------------------------------------------------------------------------
# resource counting
# ---------------------------------------------------------------------------

@dataclass
class ResourceRow:
    qumodes: int
    qubits: int
    term_count: int
    max_order: int
    max_order_label: str
    gaussian: bool
    gate_estimate: int | None = None
    direct: bool = False

    def to_json(self):
        return {
            "qumodes": self.qumodes, "qubits": self.qubits,
            "terms": self.term_count, "max_order": self.max_order,
            "max_order_term": self.max_order_label, "gaussian": self.gaussian,
            "elementary_gate_estimate": self.gate_estimate,
            "direct": self.direct,
        }


def _display_order(t: DisplayTerm) -> int:
    return (t.poly.degree() + sum(k for _, k in t.derivs)
            + sum(e for _, e in t.etas) + sum(m for _, m in t.focks))


def _axis_rename(layout: AncillaLayout | None) -> dict[str, str]:
    if layout is None:
        return {}
    ren = {}
    if len(layout.x_axes) == 1:
        ren[layout.x_axes[0]] = "x"
    if len(layout.lift_axes) == 1:
        ren[layout.lift_axes[0]] = "chi"
    return ren


def _fmt_core(poly_axes, derivs, rename, deriv_left=False) -> str:
    rn = lambda a: rename.get(a, a)
    ppart = " ".join(f"{rn(a)}^{e}" if e > 1 else rn(a) for a, e in poly_axes)
    dn = lambda a: "p" if rename.get(a) == "x" else f"p_{rn(a)}"
    dpart = " ".join(f"{dn(a)}^{k}" if k > 1 else dn(a) for a, k in derivs if k > 0)
    parts = [dpart, ppart] if deriv_left else [ppart, dpart]
    body = " ".join(p for p in parts if p)
    return body or "I"


def _fmt_tail(etas, paulis, focks) -> str:
    body = ""
    for _a, e in etas:
        body += " x eta" + ("" if e == 1 else f"^{e}")
    for _a, s in paulis:
        body += f" x sigma_{s}"
    for _a, m in focks:
        body += " x z" + ("" if m == 1 else f"^{m}")
    return body


def _leading_mono(t: DisplayTerm):
    if not t.poly.terms:
        return ()
    return max(t.poly.terms, key=lambda k: sum(e for _, e in k))


def format_display_term(t: DisplayTerm, partner: bool, rename) -> str:
    mono = _leading_mono(t)
    core = _fmt_core(mono, t.derivs, rename, deriv_left=t.rev)
    if partner:
        rev_core = _fmt_core(mono, t.derivs, rename, deriv_left=not t.rev)
        core = f"({core} + {rev_core})"
    return core + _fmt_tail(t.etas, t.paulis, t.focks)


def count_resources(H: OperatorSum, layout: AncillaLayout,
                    direct: bool = False) -> ResourceRow:
    """Qumode/qubit/term/order/Gaussian row for an assembled Hamiltonian."""
    rename = _axis_rename(layout)
    try:
        disp = hermitian_display(H)
        n_terms = len(disp)
        max_t = max(disp, key=_display_order) if disp else None
        max_order = _display_order(max_t) if max_t else 0
        label = ""
        if max_t is not None:
            partner = any(t is not max_t and t.key() == max_t.key()
                          and t.rev != max_t.rev for t in disp)
            if max_t.rev:
                max_t = next(t for t in disp if t.key() == max_t.key() and not t.rev)
            label = format_display_term(max_t, partner, rename)
        gaussian = all(_display_order(t) <= 2 for t in disp)
    except CanonicalizationError:
        n_terms = H.merged(1e-15).n_terms
        max_order = -1
        label = "(non-polynomial coefficients)"
        gaussian = False
    gate_est = _heat_gate_estimate(H, layout)
    return ResourceRow(qumodes=layout.qumodes, qubits=layout.qubits,
                       term_count=n_terms, max_order=max_order,
                       max_order_label=label, gaussian=gaussian,
                       gate_estimate=gate_est, direct=direct)


def _heat_gate_estimate(H: OperatorSum, layout: AncillaLayout) -> int | None:
    """2D elementary-gate estimate for H = sum_j (a p_j^2 + k_j x_j) (x) eta."""
    try:
        monos = canonicalize(H)
    except CanonicalizationError:
        return None
    if not monos or len(layout.eta_axes) != 1:
        return None
    axes = set()
    for t in monos:
        if t.paulis or t.focks or sum(e for _, e in t.etas) != 1:
            return None
        dax = [a for a, k in t.derivs if k > 0]
        if len(dax) > 1:
            return None
        if dax:
            if dict(t.derivs)[dax[0]] != 2 or not t.poly.is_constant():
                return None
            axes.add(dax[0])
        else:
            if t.poly.degree() > 1:
                return None
    return 2 * len(axes) if axes else None


# ---------------------------------------------------------------------------
# inverse map: Hamiltonian -> PDE
# ---------------------------------------------------------------------------

def hamiltonian_to_pde(H: OperatorSum, layout: AncillaLayout,
                       name: str = "recovered") -> PdeSpec:
    """Read a PdeSpec back off H = A2 (x) eta + A1 (x) I.

    Terms must be polynomial, on a recognizable layout (at most one eta power,
    single-axis derivatives, no qubit/Fock factors).
    """
    try:
        monos = canonicalize(H)
    except CanonicalizationError as e:
        raise ValueError(f"no PDE form found: {e}") from None
    eta_name = layout.eta_axes[0] if layout.eta_axes else None
    A2_parts: dict[tuple, Poly] = {}
    A1_parts: dict[tuple, Poly] = {}
    for t in monos:
        if t.paulis or t.focks:
            raise ValueError("no PDE form found: qubit/Fock factors present")
        epow = sum(e for _, e in t.etas)
        if epow > 1:
            raise ValueError("no PDE form found: eta power > 1")
        if epow == 1:
            if eta_name is None or t.etas[0][0] != eta_name:
                raise ValueError("no PDE form found: unexpected eta axis")
            A2_parts[t.derivs] = A2_parts.get(t.derivs, Poly({})) + t.poly
        else:
            A1_parts[t.derivs] = A1_parts.get(t.derivs, Poly({})) + t.poly
    # A = A1 - i A2, in normal-ordered monomials
    A_parts: dict[tuple, Poly] = {}
    for src, fac in ((A1_parts, 1.0), (A2_parts, -1j)):
        for k, p in src.items():
            A_parts[k] = A_parts.get(k, Poly({})) + p.scale(fac)
    terms: list[DerivTerm] = []
    b_poly = Poly({})
    for derivs, poly in A_parts.items():
        if poly.is_zero():
            continue
        active = [(a, k) for a, k in derivs if k > 0]
        if len(active) > 1:
            raise ValueError("no PDE form found: mixed-axis derivative")
        if not active:
            b_poly = b_poly + poly.scale(1 / (-1j))
            continue
        ax, k = active[0]
        if not ax.startswith("x"):
            raise ValueError(f"no PDE form found: derivative on axis {ax}")
        j = int(ax[1:])
        a_poly = poly.scale(1 / (1j ** (k + 3)))
        terms.append(DerivTerm(PLAIN, j, k, CoefficientExpr.polynomial(a_poly)))
    dim = max([t.j for t in terms] + [len(layout.x_axes)] + [1])
    return PdeSpec(name=name, dim=dim, derivative_terms=terms,
                   b=CoefficientExpr.polynomial(b_poly), allow_unstable_sign=True)


# ---------------------------------------------------------------------------
# pretty printer
# ---------------------------------------------------------------------------

def pretty(O: OperatorSum, layout: AncillaLayout | None = None) -> str:
    """Human-readable summary in quadrature notation."""
    rename = _axis_rename(layout)
    try:
        disp = hermitian_display(O)
    except CanonicalizationError:
        return repr(O)
    done = set()
    parts = []
    for t in sorted(disp, key=_display_order, reverse=True):
        if id(t) in done:
            continue
        mate = next((u for u in disp if u is not t and id(u) not in done
                     and u.key() == t.key() and u.rev != t.rev), None)
        if mate is not None and mate.poly.allclose(t.poly.conj(), 1e-10):
            done.add(id(mate))
            base = t if not t.rev else mate
            parts.append("1/2{" + format_display_term(
                DisplayTerm(base.poly.scale(2), *base.key()), True, rename)[1:])
        else:
            parts.append(format_display_term(t, False, rename))
        done.add(id(t))
    return " + ".join(parts) if parts else "0"


def terms_to_json(O: OperatorSum) -> list:
    out = []
    for t in O.terms:
        out.append({
            "coeff": [t.coeff.real, t.coeff.imag],
            "factors": [f.label() for f in t.factors],
        })
    return out
