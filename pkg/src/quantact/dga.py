"""Group cochains valued in truncated symbols, and their graded algebra.

A degree-k cochain assigns to every k-tuple of group elements a FormalSymbol;
degree 0 is a single symbol.  The differential uses only interior face maps,

    (d a)(g_1, ..., g_{k+1}) = sum_{i=1..k} (-1)^i a(g_1, .., g_i g_{i+1}, .., g_{k+1}),

and the graded product twists by the action,

    (a * b)(g_1, .., g_{k+l}) = a(g_1..g_k) star b(g_{k+1}..g_{k+l})

with the star taken over the product diffeomorphisms of the two halves.
Degree-1 cochains a with da + a*a = 0 (Maurer-Cartan) are exactly those whose
quantizations compose like the group, T_{g1} T_{g2} = T_{g1 g2}.

Scalar phase cochains form the companion complex with the left action
(g.S)(x) = S(phi_g^{-1}(x)) included as the outer face maps; a real 1-cocycle
S there exponentiates to a Maurer-Cartan element g -> e^{i S_g}.

The twisted differential d_{P0} a = da + P0*a - (-1)^k a*P0 governs the
order-by-order correction problem: with P^1..P^{n-1} known, the order-n
correction solves d_{P0} P^n = -sum_{i+j=n} P^i * P^j, a finite exact linear
system over a declared coefficient basis.  ``solve_order`` assembles and
solves it, reporting either the canonical solution or the obstruction class.
"""

from __future__ import annotations

import random

from .actions import Diffeo
from .expr import Expr, GaussRat, as_expr, is_zero
from .linalg import SparseMatrix, nullspace, rank, solve
from .opcalc import FormalFunction, apply, star, to_operator
from .report import Report
from .symbols import FormalSymbol, PolyXi, multi_indices


# ---------------------------------------------------------------------------
# cochains


class Cochain:
    """Symbol-valued group cochain; values computed lazily and cached."""

    def __init__(self, action, degree, order, table=None, fn=None):
        self.action = action
        self.degree = degree
        self.order = order
        self._fn = fn
        self._cache = {}
        if table is not None:
            for gs, v in table.items():
                self._cache[tuple(gs)] = v
        if degree > 0 and table is None and fn is None:
            raise ValueError("need a table or a closure")

    @property
    def dim(self):
        return self.action.dim

    @staticmethod
    def zero(action, degree, order):
        z = FormalSymbol.zero(action.dim, order)
        return Cochain(action, degree, order, fn=lambda gs: z)

    @staticmethod
    def unit(action, order):
        """Degree-0 cochain with value 1 (the trivial quantization seed)."""
        return Cochain(action, 0, order,
                       table={(): FormalSymbol.one(action.dim, order)})

    @staticmethod
    def from_function(action, degree, order, fn):
        return Cochain(action, degree, order, fn=fn)

    def value(self, gs=()):
        gs = tuple(gs)
        if len(gs) != self.degree:
            raise ValueError("expected %d group elements" % self.degree)
        if gs in self._cache:
            return self._cache[gs]
        if self._fn is None:
            raise KeyError("no value stored for %r" % (gs,))
        v = self._fn(gs)
        self._cache[gs] = v
        return v

    def map_values(self, fn):
        return Cochain(self.action, self.degree, self.order,
                       fn=lambda gs: fn(self.value(gs)))

    def add(self, other):
        self._check(other)
        return Cochain(self.action, self.degree, self.order,
                       fn=lambda gs: self.value(gs).add(other.value(gs)))

    def sub(self, other):
        self._check(other)
        return Cochain(self.action, self.degree, self.order,
                       fn=lambda gs: self.value(gs).sub(other.value(gs)))

    def neg(self):
        return self.map_values(lambda v: v.neg())

    def scale(self, c):
        return self.map_values(lambda v: v.scale(c))

    def _check(self, other):
        if self.degree != other.degree or self.order != other.order:
            raise ValueError("cochain degree/order mismatch")

    def tuples(self):
        """All argument tuples (finite groups only)."""
        if not self.action.is_finite:
            raise ValueError("enumeration needs a finite group")
        elems = self.action.group.elements()
        out = [()]
        for _ in range(self.degree):
            out = [t + (g,) for t in out for g in elems]
        return out


def test_tuples(action, degree, rng=None, samples=4, symbolic=True):
    """Argument tuples on which to verify identities.

    Finite groups enumerate everything; parameter groups use one fully
    symbolic tuple when the action's dependence is closed-form, plus sampled
    rational tuples.
    """
    if action.is_finite:
        elems = action.group.elements()
        out = [()]
        for _ in range(degree):
            out = [t + (g,) for t in out for g in elems]
        return out
    rng = rng if rng is not None else random.Random(0)
    out = []
    if symbolic and action.supports_symbolic_elements():
        out.append(tuple(action.group.symbolic_element(s + 1) for s in range(degree)))
    pool = action.sample_elements(rng, max(samples + degree, 4))
    for k in range(samples):
        out.append(tuple(pool[(k + j) % len(pool)] for j in range(degree)))
    return out


def cochain_zero_report(c, title="cochain vanishes", rng=None, samples=4):
    rep = Report(title)
    for gs in test_tuples(c.action, c.degree, rng=rng, samples=samples):
        v = c.value(gs)
        ok = True
        kind = "exact"
        for comp in v.comps:
            for alpha, coeff in comp.coeffs.items():
                chk = is_zero(coeff, rng=rng)
                ok = ok and chk.ok
                if chk.kind != "exact":
                    kind = "probabilistic"
        label = _tuple_label(c.action, gs)
        rep.add("zero at %s" % label, ok, kind)
    return rep


def _tuple_label(action, gs):
    names = []
    for g in gs:
        if action.is_finite:
            names.append(action.group.labels[g])
        else:
            names.append("(" + ",".join(str(p) for p in g) + ")")
    return "(" + ", ".join(names) + ")" if names else "()"


# ---------------------------------------------------------------------------
# differential and product


def d(a):
    """Interior-face differential; zero map on degree 0."""
    k = a.degree
    out_degree = k + 1
    if k == 0:
        return Cochain.zero(a.action, 1, a.order)

    def val(gs):
        total = FormalSymbol.zero(a.action.dim, a.order)
        for i in range(1, k + 1):
            merged = gs[:i - 1] + (a.action.mult(gs[i - 1], gs[i]),) + gs[i + 1:]
            term = a.value(merged)
            total = total.sub(term) if i % 2 else total.add(term)
        return total

    return Cochain(a.action, out_degree, a.order, fn=val)


def star_graded(a, b):
    """Graded product twisted by the action."""
    if a.action is not b.action and a.action.coords != b.action.coords:
        raise ValueError("cochains over different actions")
    k, l = a.degree, b.degree

    def val(gs):
        left, right = gs[:k], gs[k:]
        phi1 = a.action.product_diffeo(left)
        phi2 = a.action.product_diffeo(right)
        return star(a.value(left), phi1, b.value(right), phi2, a.action.coords)

    return Cochain(a.action, k + l, a.order, fn=val)


def mc_residual(a):
    """Maurer-Cartan residual da + a*a of a degree-1 cochain."""
    if a.degree != 1:
        raise ValueError("Maurer-Cartan residual needs a degree-1 cochain")
    return d(a).add(star_graded(a, a))


def twisted_d(p0, a, check=True, rng=None):
    """Differential twisted by a Maurer-Cartan element p0 (degree 1)."""
    if p0.degree != 1:
        raise ValueError("twist must be a degree-1 cochain")
    if check:
        rep = cochain_zero_report(mc_residual(p0), "twist is Maurer-Cartan", rng=rng)
        if not rep.all_ok:
            raise ValueError("twist does not satisfy the Maurer-Cartan equation:\n"
                             + rep.render())
    k = a.degree
    sign = -1 if k % 2 else 1
    left = star_graded(p0, a)
    right = star_graded(a, p0).scale(sign)
    return d(a).add(left).sub(right)


def is_normalized(a, rng=None):
    """True when every identity-containing tuple evaluates to the unit symbol.

    This is the G-system normalization; it is a property of candidate
    systems, not a subspace preserved by d or the graded product.
    """
    one = FormalSymbol.one(a.dim, a.order)
    ident = a.action.group.identity
    if a.degree == 0:
        return True
    if a.action.is_finite:
        tuples = [t for t in a.tuples() if ident in t]
    else:
        tuples = []
        pool = test_tuples(a.action, a.degree - 1, rng=rng, symbolic=False) if a.degree > 1 else [()]
        for t in pool:
            for pos in range(a.degree):
                tuples.append(t[:pos] + (ident,) + t[pos:])
    return all(a.value(t).sub(one).is_zero() for t in tuples)


# ---------------------------------------------------------------------------
# phase cochains


class PhaseCochain:
    """Scalar-valued cochain of phase functions."""

    def __init__(self, action, degree, table=None, fn=None):
        self.action = action
        self.degree = degree
        self._fn = fn
        self._cache = {}
        if table is not None:
            for gs, v in table.items():
                self._cache[tuple(gs)] = as_expr(v)
        if degree > 0 and table is None and fn is None:
            raise ValueError("need a table or a closure")

    def value(self, gs=()):
        gs = tuple(gs)
        if len(gs) != self.degree:
            raise ValueError("expected %d group elements" % self.degree)
        if gs in self._cache:
            return self._cache[gs]
        v = as_expr(self._fn(gs))
        self._cache[gs] = v
        return v

    def sub(self, other):
        return PhaseCochain(self.action, self.degree,
                            fn=lambda gs: self.value(gs) - other.value(gs))


def delta_phase(c):
    """Phase-complex differential with the pullback left action.

    (delta c)(g_1..g_{k+1}) = c(g_2..g_{k+1}) o phi_{g_1}^{-1}
        + sum_{i=1..k} (-1)^i c(.., g_i g_{i+1}, ..)
        + (-1)^{k+1} c(g_1..g_k).
    """
    k = c.degree

    def val(gs):
        first = c.value(gs[1:])
        total = c.action.diffeo(gs[0]).pullback(first)
        for i in range(1, k + 1):
            merged = gs[:i - 1] + (c.action.mult(gs[i - 1], gs[i]),) + gs[i + 1:]
            term = c.value(merged)
            total = total - term if i % 2 else total + term
        last = c.value(gs[:k])
        total = total + last if (k + 1) % 2 == 0 else total - last
        return total

    return PhaseCochain(c.action, k + 1, fn=val)


def phase_zero_report(c, title="phase cochain vanishes", rng=None, samples=4):
    rep = Report(title)
    for gs in test_tuples(c.action, c.degree, rng=rng, samples=samples):
        chk = is_zero(c.value(gs), rng=rng)
        rep.add("zero at %s" % _tuple_label(c.action, gs), chk.ok, chk.kind)
    return rep


def exp_system(s, order=0):
    """Exponentiate a degree-1 phase cochain into a symbol-valued cochain."""
    if s.degree != 1:
        raise ValueError("exponentiation needs a degree-1 phase cochain")
    i_unit = Expr.imag_unit()
    dim = s.action.dim

    def val(gs):
        return FormalSymbol.from_scalar(dim, order, Expr.exp(i_unit * s.value(gs)))

    return Cochain(s.action, 1, order, fn=val)


def character_phase(action, invariant, character=None):
    """Degree-1 phase cochain S_g = character(g) * invariant.

    ``invariant`` should satisfy invariant o phi_g^{-1} = invariant and
    ``character`` should be additive, character(g1 g2) = character(g1) +
    character(g2); then delta S = 0.  Default character: the sole group
    parameter itself.
    """
    if character is None:
        def character(g):
            return g[0]

    return PhaseCochain(action, 1, fn=lambda gs: character(gs[0]) * invariant)


# ---------------------------------------------------------------------------
# representations and gauge equivalence


def representation_report(a, psis, rng=None, pairs=None, title="representation property"):
    """Check T_{g1} T_{g2} psi = T_{g1 g2} psi by direct application.

    This route uses only operator application (no star products), so it is
    independent of the residual computation it is compared against.
    """
    action = a.action
    rep = Report(title)
    if pairs is None:
        pairs = test_tuples(action, 2, rng=rng)
    for gs in pairs:
        g1, g2 = gs
        t1 = to_operator(a.value((g1,)), action.diffeo(g1), action.coords)
        t2 = to_operator(a.value((g2,)), action.diffeo(g2), action.coords)
        t12 = to_operator(a.value((action.mult(g1, g2),)),
                          action.product_diffeo((g1, g2)), action.coords)
        ok = True
        kind = "exact"
        for psi in psis:
            f = FormalFunction.from_expr(psi, a.order)
            lhs = apply(t1, apply(t2, f))
            rhs = apply(t12, f)
            for u, v in zip(lhs.terms, rhs.terms):
                chk = is_zero(u - v, rng=rng)
                ok = ok and chk.ok
                if chk.kind != "exact":
                    kind = "probabilistic"
        rep.add("pair %s" % _tuple_label(action, gs), ok, kind)
    return rep


def gauge_residual(a, b, u):
    """Intertwining residual a*u - u*b as a degree-1 cochain.

    ``u`` is a degree-0 cochain (or FormalSymbol); the residual vanishes
    exactly when quantizing u intertwines the two systems.
    """
    action = a.action
    if isinstance(u, FormalSymbol):
        u = Cochain(action, 0, a.order, table={(): u})
    ident = Diffeo.identity(action.coords)

    def val(gs):
        (g,) = gs
        phi = action.diffeo(g)
        left = star(a.value((g,)), phi, u.value(()), ident, action.coords)
        right = star(u.value(()), ident, b.value((g,)), phi, action.coords)
        return left.sub(right)

    return Cochain(action, 1, a.order, fn=val)


def gauge_report(a, b, u, rng=None, title="gauge equivalence"):
    return cochain_zero_report(gauge_residual(a, b, u), title, rng=rng)


# ---------------------------------------------------------------------------
# coefficient bases


class BasisEscapeError(ValueError):
    """A coefficient left the declared span."""


class CoefficientBasis:
    """Finite Expr basis for coefficient functions, with exact decomposition."""

    def __init__(self, coords, exprs):
        self.coords = list(coords)
        self.exprs = [as_expr(e) for e in exprs]
        for e in self.exprs:
            if not e.is_canonical:
                raise ValueError("basis elements must canonicalize")
        self._monomials = sorted({m for e in self.exprs for m in e.poly.terms})
        self._index = {m: i for i, m in enumerate(self._monomials)}
        self._matrix = SparseMatrix(len(self._monomials), len(self.exprs))
        for j, e in enumerate(self.exprs):
            for mono, c in e.poly.terms.items():
                self._matrix.set(self._index[mono], j, c)
        if rank(self._matrix) != len(self.exprs):
            raise ValueError("basis expressions are linearly dependent")

    def __len__(self):
        return len(self.exprs)

    @staticmethod
    def monomials(coords, max_degree):
        out = []
        for alpha in multi_indices(len(coords), max_degree):
            e = Expr.one()
            for c, p in zip(coords, alpha):
                if p:
                    e = e * Expr.var(c) ** p
            out.append(e)
        return CoefficientBasis(coords, out)

    def decompose(self, e):
        """Coordinates of e in the basis; raises BasisEscapeError if outside."""
        e = as_expr(e)
        if not e.is_canonical:
            raise BasisEscapeError("coefficient %s is outside the polynomial class" % e)
        vec = [GaussRat(0)] * len(self._monomials)
        for mono, c in e.poly.terms.items():
            idx = self._index.get(mono)
            if idx is None:
                raise BasisEscapeError("coefficient %s escapes the basis span" % e)
            vec[idx] = c
        x, residual = solve(self._matrix, vec)
        if residual is not None:
            raise BasisEscapeError("coefficient %s escapes the basis span" % e)
        return x

    def closure_report(self, action, rng=None):
        """Check the span is preserved by all (sampled) pullbacks."""
        rep = Report("basis closed under the action")
        elems = (action.group.elements() if action.is_finite
                 else action.sample_elements(rng or random.Random(0), 6))
        for g in elems:
            phi = action.diffeo(g)
            ok = True
            for e in self.exprs:
                try:
                    self.decompose(phi.pullback(e))
                except BasisEscapeError:
                    ok = False
            rep.add("pullback by %s" % _tuple_label(action, (g,)), ok)
        return rep

    def combine(self, coeffs):
        out = Expr.zero()
        for c, e in zip(coeffs, self.exprs):
            if not c.is_zero():
                out = out + as_expr(GaussRat.of(c)) * e
        return out


# ---------------------------------------------------------------------------
# order-by-order solving


class SolveResult:
    def __init__(self, order, solution=None, obstruction=None, cocycle_basis=None,
                 kernel_dim=0, rhs_closed=None, rhs=None):
        self.order = order
        self.solution = solution
        self.obstruction = obstruction
        self.cocycle_basis = cocycle_basis
        self.kernel_dim = kernel_dim
        self.rhs_closed = rhs_closed
        self.rhs = rhs

    @property
    def solved(self):
        return self.solution is not None


def _coords_c1(action, n, basis, include_identity=False):
    elems = action.group.elements()
    ident = action.group.identity
    gs = [g for g in elems if include_identity or g != ident]
    alphas = multi_indices(action.dim, n)
    return [(g, alpha, j) for g in gs for alpha in alphas for j in range(len(basis))]


def _coords_ck(action, k, n, basis):
    elems = action.group.elements()
    tuples = [()]
    for _ in range(k):
        tuples = [t + (g,) for t in tuples for g in elems]
    alphas = multi_indices(action.dim, n)
    return [(t, alpha, j) for t in tuples for alpha in alphas for j in range(len(basis))]


def _pure_symbol(dim, order, n, alpha, expr):
    comps = [PolyXi.zero(dim) for _ in range(order + 1)]
    comps[n] = PolyXi(dim, {alpha: expr})
    return FormalSymbol(dim, order, comps)


def _basis_cochain_c1(action, order, n, g, alpha, expr):
    dim = action.dim
    zero = FormalSymbol.zero(dim, order)
    table = {(h,): (_pure_symbol(dim, order, n, alpha, expr) if h == g else zero)
             for h in action.group.elements()}
    return Cochain(action, 1, order, table=table)


def _decompose_symbol_slot(v, n, basis):
    """Coordinates of the order-n slot of a symbol in (alpha, basis) blocks."""
    out = {}
    comp = v.comps[n]
    for alpha, coeff in comp.coeffs.items():
        coords = basis.decompose(coeff)
        for j, c in enumerate(coords):
            if not c.is_zero():
                out[(alpha, j)] = out.get((alpha, j), GaussRat(0)) + c
    for n2, comp2 in enumerate(v.comps):
        if n2 != n and not comp2.is_zero():
            raise BasisEscapeError("value has support outside the solved order")
    return out


def _assemble_degree1_matrix(action, p0, order, n, basis, unknown_coords, target_index):
    m = SparseMatrix(len(target_index), len(unknown_coords))
    for col, (g, alpha, j) in enumerate(unknown_coords):
        x = _basis_cochain_c1(action, order, n, g, alpha, basis.exprs[j])
        y = twisted_d(p0, x, check=False)
        for pair in _support_pairs_degree1(action, g):
            v = y.value(pair)
            for (alpha2, j2), c in _decompose_symbol_slot(v, n, basis).items():
                row = target_index[(pair, alpha2, j2)]
                m.add(row, col, c)
    return m


def _support_pairs_degree1(action, g):
    """Pairs where d_{P0} of a cochain supported at g can be nonzero."""
    pairs = set()
    for h in action.group.elements():
        pairs.add((g, h))
        pairs.add((h, g))
        # dX term: g1 g2 = g
        pairs.add((h, action.mult(action.inverse(h), g)))
    fixed = set()
    for (g1, g2) in pairs:
        if action.mult(g1, g2) == g or g1 == g or g2 == g:
            fixed.add((g1, g2))
    return sorted(fixed)


def solve_order(action, p0, below, n, basis, order=None, rhs_cochain=None, rng=None):
    """Solve the order-n correction equation d_{P0} P^n = -sum P^i * P^j.

    ``below`` maps orders 1..n-1 to the already-solved degree-1 cochains
    (each supported in its pure order slot).  The closedness of the
    right-hand side is certified exactly on every run.  When the right-hand
    side vanishes the cocycle basis is returned as well.  Finite groups only.

    A nonzero obstruction is reported as the canonical remainder of the
    right-hand side against the image of d_{P0} (free variables pinned to
    zero), together with the exact rank bookkeeping.
    """
    if not action.is_finite:
        raise ValueError("order-by-order solving is implemented for finite groups")
    order = order if order is not None else n
    dim = action.dim

    # right-hand side
    if rhs_cochain is None:
        rhs = Cochain.zero(action, 2, order)
        for i in range(1, n):
            j = n - i
            if i in below and j in below:
                rhs = rhs.sub(star_graded(below[i], below[j]))
    else:
        rhs = rhs_cochain

    closed = cochain_zero_report(twisted_d(p0, rhs, check=False), rng=rng).all_ok

    unknown_coords = _coords_c1(action, n, basis, include_identity=False)
    alphas = multi_indices(dim, n)
    pair_tuples = [(g1, g2) for g1 in action.group.elements()
                   for g2 in action.group.elements()]
    target_coords = [(t, alpha, j) for t in pair_tuples for alpha in alphas
                     for j in range(len(basis))]
    target_index = {c: i for i, c in enumerate(target_coords)}

    m = _assemble_degree1_matrix(action, p0, order, n, basis, unknown_coords,
                                 target_index)

    b = [GaussRat(0)] * len(target_coords)
    for t in pair_tuples:
        v = rhs.value(t)
        for (alpha, j), c in _decompose_symbol_slot(v, n, basis).items():
            b[target_index[(t, alpha, j)]] = c

    x, residual = solve(m, b)
    kernel = nullspace(m)

    def vector_to_cochain(vec):
        dimtab = {g: {} for g in action.group.elements()}
        for col, (g, alpha, j) in enumerate(unknown_coords):
            c = vec[col]
            if not c.is_zero():
                tab = dimtab[g]
                tab[(alpha, j)] = c
        table = {}
        for g in action.group.elements():
            coeffs = {}
            for (alpha, j), c in dimtab[g].items():
                e = as_expr(c) * basis.exprs[j]
                coeffs[alpha] = coeffs.get(alpha, Expr.zero()) + e
            comps = [PolyXi.zero(dim) for _ in range(order + 1)]
            comps[n] = PolyXi(dim, coeffs)
            table[(g,)] = FormalSymbol(dim, order, comps)
        return Cochain(action, 1, order, table=table)

    rhs_is_zero = all(v.is_zero() for v in b)
    cocycle_basis = [vector_to_cochain(v) for v in kernel] if rhs_is_zero else None

    if residual is None:
        return SolveResult(n, solution=vector_to_cochain(x),
                           cocycle_basis=cocycle_basis, kernel_dim=len(kernel),
                           rhs_closed=closed, rhs=rhs)

    # obstruction: canonical remainder (b - A x) repackaged as a 2-cochain
    def residual_to_cochain(vec):
        table = {}
        for t in pair_tuples:
            coeffs = {}
            for alpha in alphas:
                e = Expr.zero()
                for j in range(len(basis)):
                    c = vec[target_index[(t, alpha, j)]]
                    if not c.is_zero():
                        e = e + as_expr(c) * basis.exprs[j]
                if not (e.is_canonical and e.poly.is_zero()):
                    coeffs[alpha] = e
            comps = [PolyXi.zero(dim) for _ in range(order + 1)]
            comps[n] = PolyXi(dim, coeffs)
            table[t] = FormalSymbol(dim, order, comps)
        return Cochain(action, 2, order, table=table)

    return SolveResult(n, obstruction=residual_to_cochain(residual),
                       kernel_dim=len(kernel), rhs_closed=closed, rhs=rhs)


# ---------------------------------------------------------------------------
# cohomology dimensions


def cohomology_dims(action, basis, p0=None, n_max=2, rng=None):
    """Dimensions of H^0, H^1, H^2 of the twisted complex per symbol order.

    Cochain spaces are the full (non-normalized) ones: maps G^k -> order-n
    frequency polynomials with coefficients in the basis span.  Only the
    order-0 part of the twist acts on a fixed symbol order, so that part
    is extracted from ``p0`` (default: the trivial system).  Finite groups
    only; ranks are exact.
    """
    if not action.is_finite:
        raise ValueError("cohomology dimensions need a finite group")
    out = {}
    for n in range(n_max + 1):
        if p0 is None:
            p0n = trivial_system(action, n)
        else:
            p0n = p0.map_values(
                lambda v, k=n: _lift_leading(v, k))
        out[n] = _cohomology_at_order(action, basis, p0n, n, rng=rng)
    return out


def _lift_leading(v, order):
    comps = [PolyXi.zero(v.dim) for _ in range(order + 1)]
    comps[0] = v.comps[0]
    return FormalSymbol(v.dim, order, comps)


def trivial_system(action, order):
    one = FormalSymbol.one(action.dim, order)
    return Cochain(action, 1, order, fn=lambda gs: one)


def _cohomology_at_order(action, basis, p0, n, rng=None):
    dim = action.dim
    order = p0.order
    alphas = multi_indices(dim, n)
    elems = action.group.elements()
    nb = len(basis)

    def coords_k(k):
        tuples = [()]
        for _ in range(k):
            tuples = [t + (g,) for t in tuples for g in elems]
        return [(t, alpha, j) for t in tuples for alpha in alphas for j in range(nb)]

    def basis_cochain(k, t, alpha, j):
        zero = FormalSymbol.zero(dim, order)
        sym = _pure_symbol(dim, order, n, alpha, basis.exprs[j])
        if k == 0:
            return Cochain(action, 0, order, table={(): sym})
        table = {}
        tuples = [()]
        for _ in range(k):
            tuples = [tt + (g,) for tt in tuples for g in elems]
        for tt in tuples:
            table[tt] = sym if tt == t else zero
        return Cochain(action, k, order, table=table)

    def matrix_of_d(k):
        cols = coords_k(k)
        rows = coords_k(k + 1)
        row_index = {c: i for i, c in enumerate(rows)}
        m = SparseMatrix(len(rows), len(cols))
        for col, (t, alpha, j) in enumerate(cols):
            x = basis_cochain(k, t, alpha, j)
            y = twisted_d(p0, x, check=False)
            tuples = [()]
            for _ in range(k + 1):
                tuples = [tt + (g,) for tt in tuples for g in elems]
            for tt in tuples:
                v = y.value(tt)
                for (alpha2, j2), c in _decompose_symbol_slot(v, n, basis).items():
                    m.add(row_index[(tt, alpha2, j2)], col, c)
        return m

    d0 = matrix_of_d(0)
    d1 = matrix_of_d(1)
    d2 = matrix_of_d(2)
    r0, r1, r2 = rank(d0), rank(d1), rank(d2)
    c0 = len(coords_k(0))
    c1 = len(coords_k(1))
    c2 = len(coords_k(2))
    return {
        "H0": c0 - r0,
        "H1": (c1 - r1) - r0,
        "H2": (c2 - r2) - r1,
    }
