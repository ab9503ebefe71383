"""Chains of u-stable subspaces in E_e = (K[u]/(u^e))^2 and their geometry.

A chain is a full flag omega^(1) subset ... subset omega^(e) with
dim omega^(i) = i and u * omega^(i) contained in omega^(i-1): the
combinatorial point of the splitting local model.  This module provides
validation, exhaustive enumeration over small finite fields, the
convolution presentation (successive lattice quotients of codimension one,
obtained by rescaling each level by the appropriate power of u), the
action of the truncated group GL_2(K[u]/(u^e)), orbit computation, and
the fibers of the endpoint map (chain -> omega^(e)).

Truncation note: the group action on lattices containing u^e * Lambda_0
factors through GL_2(K[u]/(u^e)) -- for g congruent to g' mod u^e and any
such lattice L, (g - g') L is contained in u^e * Lambda_0, so g L = g' L.
This is why orbit computations here work with the truncated group.
"""

from __future__ import annotations

import itertools

from .errors import BoundExceeded, InvalidInput
from .scalars import field_elements
from .umod import Subspace, UVec

DEFAULT_CHAIN_BOUND = 10 ** 6


# ----------------------------------------------------------------------
# truncated polynomial helpers (elements of R_e = K[u]/(u^e) as length-e
# tuples of raw coefficients over ctx)
# ----------------------------------------------------------------------
def _rzero(ctx, e):
    return (ctx.zero(),) * e


def _rone(ctx, e):
    return (ctx.one(),) + (ctx.zero(),) * (e - 1)


def _radd(ctx, a, b):
    return tuple(ctx.add(x, y) for x, y in zip(a, b))


def _rmul(ctx, e, a, b):
    out = [ctx.zero()] * e
    for i, x in enumerate(a):
        if ctx.is_zero(x):
            continue
        for j, y in enumerate(b):
            if i + j >= e:
                break
            out[i + j] = ctx.add(out[i + j], ctx.mul(x, y))
    return tuple(out)


def _rneg(ctx, a):
    return tuple(ctx.neg(x) for x in a)


class PRChain:
    """A full flag of u-stable subspaces with one-dimensional steps."""

    __slots__ = ("ctx", "e", "levels")

    def __init__(self, ctx, e, levels):
        self.ctx = ctx
        self.e = e
        self.levels = tuple(levels)
        if len(self.levels) != e:
            raise InvalidInput("chain must have exactly e levels")

    def level(self, i):
        """omega^(i) for 1 <= i <= e; omega^(0) is the zero subspace."""
        if i == 0:
            return Subspace.zero(self.ctx, self.e)
        return self.levels[i - 1]

    @property
    def top(self):
        return self.levels[-1]

    def validate(self):
        """Return a list of violation strings (empty means valid)."""
        report = []
        for i in range(1, self.e + 1):
            w = self.level(i)
            if w.dim != i:
                report.append(f"level {i}: dim {w.dim} != {i}")
                continue
            if i > 1 and not w.contains(self.level(i - 1)):
                report.append(f"level {i}: does not contain level {i - 1}")
            if not self.level(i - 1).contains(w.u_image()):
                report.append(f"level {i}: u*level not inside level {i - 1}")
        return report

    def is_valid(self):
        return not self.validate()

    def sort_key(self):
        return tuple(w.sort_key() for w in self.levels)

    def key(self):
        """Hashable canonical identity of the chain."""
        return tuple(w.rows for w in self.levels)

    def serialize(self):
        out = dict(self.ctx.serialize_ctx())
        out["e"] = self.e
        out["levels"] = [w.serialize() for w in self.levels]
        return out

    @classmethod
    def deserialize(cls, ctx, obj):
        e = obj["e"]
        levels = [Subspace.deserialize(ctx, w) for w in obj["levels"]]
        return cls(ctx, e, levels)

    def __eq__(self, other):
        return (
            isinstance(other, PRChain)
            and self.ctx == other.ctx
            and self.e == other.e
            and self.key() == other.key()
        )

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"PRChain(e={self.e}, dims={[w.dim for w in self.levels]})"


def standard_free_chain(ctx, e):
    """The chain omega^(i) = <u^(e-i) e1, ..., u^(e-1) e1> (free endpoint)."""
    levels = []
    for i in range(1, e + 1):
        vecs = [UVec.monomial(ctx, e, 1, d) for d in range(e - i, e)]
        levels.append(Subspace.span(ctx, e, vecs))
    return PRChain(ctx, e, levels)


def validate(chain):
    return chain.validate()


def _complement_basis(big, small):
    """Vectors of big spanning a complement of small, canonically."""
    reduced = [small.reduce(v) for v in big.basis()]
    comp = Subspace.span(big.ctx, big.N, [v for v in reduced if not v.is_zero()])
    return comp.basis()


def _lines_through(ctx, comp, elements):
    """All lines in the span of the (independent) complement basis.

    Yields one representative vector per line, in a deterministic order:
    leading coefficient normalized to 1, earlier coordinates zero.
    """
    d = len(comp)
    for k in range(d):
        tail = itertools.product(elements, repeat=d - k - 1)
        for rest in tail:
            v = comp[k]
            for c, w in zip(rest, comp[k + 1 :]):
                if not ctx.is_zero(c):
                    v = v.add(w.scale(c))
            yield v


def enumerate_chains(e, ctx, bound=DEFAULT_CHAIN_BOUND):
    """All valid chains over a finite field, sorted canonically.

    The count is (q+1)^e: each level adds one line's worth of choices in a
    two-dimensional quotient.
    """
    q = ctx.order
    if (q + 1) ** e > bound:
        raise BoundExceeded(f"(q+1)^e = {(q + 1) ** e} exceeds bound {bound}")
    elements = field_elements(ctx)
    zero = Subspace.zero(ctx, e)
    partial = [[]]
    for i in range(1, e + 1):
        nxt = []
        for levels in partial:
            prev = levels[-1] if levels else zero
            pre = prev.u_preimage()
            comp = _complement_basis(pre, prev)
            for v in _lines_through(ctx, comp, elements):
                w = Subspace.span(ctx, e, (prev.basis() + [v]))
                nxt.append(levels + [w])
        partial = nxt
    chains = [PRChain(ctx, e, levels) for levels in partial]
    chains.sort(key=PRChain.sort_key)
    return chains


# ----------------------------------------------------------------------
# convolution presentation
# ----------------------------------------------------------------------
class ConvChain:
    """The same flag in lattice-quotient form.

    Level i stores the rescaled lattice L_i = u^-(e-i)(omega^(i)), a
    u-stable subspace of dimension 2e - i; L_1 contains L_2 contains ...
    contains L_e, each step of codimension one, and the endpoint L_e
    equals omega^(e).
    """

    __slots__ = ("ctx", "e", "levels")

    def __init__(self, ctx, e, levels):
        self.ctx = ctx
        self.e = e
        self.levels = tuple(levels)

    @property
    def endpoint(self):
        return self.levels[-1]

    def key(self):
        return tuple(w.rows for w in self.levels)

    def __eq__(self, other):
        return isinstance(other, ConvChain) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def conv_normalize(chain):
    """PRChain -> ConvChain (rescale level i by u^-(e-i))."""
    if not chain.is_valid():
        raise InvalidInput("cannot normalize an invalid chain")
    levels = []
    for i in range(1, chain.e + 1):
        L = chain.level(i)
        for _ in range(chain.e - i):
            L = L.u_preimage()
        levels.append(L)
    return ConvChain(chain.ctx, chain.e, levels)


def conv_denormalize(cc):
    """ConvChain -> PRChain (rescale level i by u^(e-i))."""
    levels = []
    for i in range(1, cc.e + 1):
        L = cc.levels[i - 1]
        for _ in range(cc.e - i):
            L = L.u_image()
        levels.append(L)
    chain = PRChain(cc.ctx, cc.e, levels)
    if not chain.is_valid():
        raise InvalidInput("denormalization produced an invalid chain")
    return chain


# ----------------------------------------------------------------------
# truncated group action
# ----------------------------------------------------------------------
class TruncatedGroupElement:
    """A 2x2 matrix over K[u]/(u^e) with unit determinant at u = 0."""

    __slots__ = ("ctx", "e", "entries")

    def __init__(self, ctx, e, entries):
        self.ctx = ctx
        self.e = e
        self.entries = tuple(tuple(row) for row in entries)
        det0 = ctx.sub(
            ctx.mul(self.entries[0][0][0], self.entries[1][1][0]),
            ctx.mul(self.entries[0][1][0], self.entries[1][0][0]),
        )
        if not ctx.is_unit(det0):
            raise InvalidInput("matrix is not invertible over K[u]/(u^e)")

    @classmethod
    def from_ints(cls, ctx, e, rows):
        """Build from 2x2 nested lists of u-coefficient int lists."""
        ent = []
        for r in rows:
            row = []
            for poly in r:
                cs = [ctx.from_int(c) for c in poly]
                cs += [ctx.zero()] * (e - len(cs))
                row.append(tuple(cs[:e]))
            ent.append(row)
        return cls(ctx, e, ent)

    @classmethod
    def identity(cls, ctx, e):
        return cls.from_ints(ctx, e, [[[1], [0]], [[0], [1]]])

    def compose(self, other):
        """Matrix product self * other."""
        ctx, e = self.ctx, self.e
        a, b = self.entries, other.entries
        ent = []
        for i in range(2):
            row = []
            for j in range(2):
                acc = _rzero(ctx, e)
                for k in range(2):
                    acc = _radd(ctx, acc, _rmul(ctx, e, a[i][k], b[k][j]))
                row.append(acc)
            ent.append(row)
        return TruncatedGroupElement(ctx, e, ent)

    def inverse(self):
        """Adjugate over determinant (a unit power series in u)."""
        ctx, e = self.ctx, self.e
        (a, b), (c, d) = self.entries
        det = _radd(
            ctx,
            _rmul(ctx, e, a, d),
            tuple(ctx.neg(x) for x in _rmul(ctx, e, b, c)),
        )
        # power-series inverse of the unit det
        inv0 = ctx.inv(det[0])
        inv = [ctx.zero()] * e
        inv[0] = inv0
        for n in range(1, e):
            acc = ctx.zero()
            for i in range(1, n + 1):
                acc = ctx.add(acc, ctx.mul(det[i], inv[n - i]))
            inv[n] = ctx.neg(ctx.mul(inv0, acc))
        inv = tuple(inv)
        neg = lambda poly: tuple(ctx.neg(x) for x in poly)
        ent = [
            [_rmul(ctx, e, inv, d), _rmul(ctx, e, inv, neg(b))],
            [_rmul(ctx, e, inv, neg(c)), _rmul(ctx, e, inv, a)],
        ]
        return TruncatedGroupElement(ctx, e, ent)

    def apply_vec(self, vec):
        ctx, e = self.ctx, self.e
        a = vec.coeffs[:e]
        b = vec.coeffs[e:]
        na = _radd(
            ctx,
            _rmul(ctx, e, self.entries[0][0], a),
            _rmul(ctx, e, self.entries[0][1], b),
        )
        nb = _radd(
            ctx,
            _rmul(ctx, e, self.entries[1][0], a),
            _rmul(ctx, e, self.entries[1][1], b),
        )
        return UVec(ctx, e, na + nb)


def act(g, chain):
    """Levelwise image g * omega^(i); preserves validity."""
    if g.ctx != chain.ctx or g.e != chain.e:
        raise InvalidInput("context mismatch")
    levels = [
        Subspace.span(chain.ctx, chain.e, [g.apply_vec(v) for v in w.basis()])
        for w in chain.levels
    ]
    return PRChain(chain.ctx, chain.e, levels)


def group_order(e, q):
    """|GL_2(K[u]/(u^e))| = |GL_2(F_q)| * q^(4(e-1))."""
    return (q * q - 1) * (q * q - q) * q ** (4 * (e - 1))


def group_generators(ctx, e):
    """Elementary matrices plus diagonal units: a generating set."""
    elements = field_elements(ctx)
    gens = []
    # all elements of R_e for the elementary shears (includes u-shears)
    for coeffs in itertools.product(elements, repeat=e):
        if all(ctx.is_zero(c) for c in coeffs):
            continue
        poly = list(coeffs)
        gens.append(
            TruncatedGroupElement(
                ctx, e, [[_rone(ctx, e), tuple(poly)], [_rzero(ctx, e), _rone(ctx, e)]]
            )
        )
        gens.append(
            TruncatedGroupElement(
                ctx, e, [[_rone(ctx, e), _rzero(ctx, e)], [tuple(poly), _rone(ctx, e)]]
            )
        )
    # diagonal units (unit constant term)
    for coeffs in itertools.product(elements, repeat=e):
        if ctx.is_zero(coeffs[0]):
            continue
        d = tuple(coeffs)
        if d == _rone(ctx, e):
            continue
        gens.append(
            TruncatedGroupElement(
                ctx, e, [[d, _rzero(ctx, e)], [_rzero(ctx, e), _rone(ctx, e)]]
            )
        )
        gens.append(
            TruncatedGroupElement(
                ctx, e, [[_rone(ctx, e), _rzero(ctx, e)], [_rzero(ctx, e), d]]
            )
        )
    return gens


def orbits(e, ctx, bound=DEFAULT_CHAIN_BOUND):
    """Partition of all chains into truncated-group orbits.

    Returns a list of (representative chain, orbit size), sorted by the
    representative's canonical key.  Sizes sum to (q+1)^e and divide the
    group order.
    """
    chains = enumerate_chains(e, ctx, bound=bound)
    gens = group_generators(ctx, e)
    by_key = {c.key(): c for c in chains}
    unseen = set(by_key)
    out = []
    for c in chains:
        if c.key() not in unseen:
            continue
        frontier = [c]
        orbit = {c.key()}
        unseen.discard(c.key())
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = act(g, x)
                    k = y.key()
                    if k not in orbit:
                        orbit.add(k)
                        unseen.discard(k)
                        nxt.append(y)
            frontier = nxt
        out.append((c, len(orbit)))
    return out


def orbit_transports(e, ctx, bound=DEFAULT_CHAIN_BOUND):
    """BFS orbit decomposition tracking group elements.

    Returns dict chain.key() -> (representative chain, g) with
    chain = act(g, representative).
    """
    chains = enumerate_chains(e, ctx, bound=bound)
    gens = group_generators(ctx, e)
    out = {}
    for c in chains:
        if c.key() in out:
            continue
        ident = TruncatedGroupElement.identity(ctx, e)
        out[c.key()] = (c, ident)
        frontier = [(c, ident)]
        while frontier:
            nxt = []
            for x, gx in frontier:
                for g in gens:
                    y = act(g, x)
                    k = y.key()
                    if k not in out:
                        gy = g.compose(gx)
                        out[k] = (c, gy)
                        nxt.append((y, gy))
            frontier = nxt
    return out


# ----------------------------------------------------------------------
# fibers of the endpoint map
# ----------------------------------------------------------------------
def fiber_chains(W, e):
    """All valid chains with omega^(e) = W, by downward recursion.

    At each step omega^(i-1) ranges over the hyperplanes of omega^(i)
    containing u * omega^(i) (there are 1 or q+1 of them).
    """
    if W.N != e:
        raise InvalidInput("W must live in E_e")
    if W.dim != e or not W.is_u_stable():
        raise InvalidInput("W must be u-stable of dimension e")
    ctx = W.ctx
    elements = field_elements(ctx)

    def descend(levels):
        i = len(levels)  # levels = [omega^(i), ..., omega^(e)] top-down
        w = levels[0]
        idx = e - i + 1  # dimension of w
        if idx == 1:
            if w.u_image().dim == 0:
                return [levels]
            return []
        S = w.u_image()
        if S.dim == idx - 1:
            candidates = [S]
        elif S.dim == idx - 2:
            comp = _complement_basis(w, S)
            candidates = [
                Subspace.span(ctx, e, S.basis() + [v])
                for v in _lines_through(ctx, comp, elements)
            ]
        else:
            return []
        out = []
        for cand in candidates:
            out.extend(descend([cand] + levels))
        return out

    results = [
        PRChain(ctx, e, levels) for levels in descend([W])
    ]
    results.sort(key=PRChain.sort_key)
    return results


def pel_lattices(e, ctx, bound=DEFAULT_CHAIN_BOUND):
    """The endpoint lattices: distinct omega^(e) over all chains, sorted."""
    tops = {}
    for c in enumerate_chains(e, ctx, bound=bound):
        tops[c.top.rows] = c.top
    return sorted(tops.values(), key=Subspace.sort_key)
