"""Command-line front end: tower mini-language, element expressions, and
machine-readable JSON output.

Tower descriptors: `Fq q` | `Qp p` | `L(<inner>)` | `C(<inner>)`; series
variables are named t (one level) or t1..tn (innermost first).  Precision
flags: --prec-t for Laurent windows, --prec-p for the p-adic base,
--window lo:hi for curly levels.

Exit codes: 0 success, 1 usage error, 2 domain error.  Every run prints a
single JSON object; errors appear under the "error" key.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import adeles, chains, expr, milnor, structure, towers
from .coeffs import fq_make
from .errors import HlfError
from .towers import BaseFq, BasePadic, Curly, Laurent


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# tower mini-language


def parse_tower(src: str):
    toks = src.replace("(", " ( ").replace(")", " ) ").split()

    def parse(pos):
        if pos >= len(toks):
            raise UsageError("truncated tower descriptor")
        t = toks[pos]
        if t == "Fq":
            q = _int_tok(toks, pos + 1)
            p, k = adeles._prime_power(q)
            return BaseFq(fq_make(p, k)), pos + 2
        if t == "Qp":
            p = _int_tok(toks, pos + 1)
            return BasePadic(p), pos + 2
        if t in ("L", "C"):
            if pos + 1 >= len(toks) or toks[pos + 1] != "(":
                raise UsageError(f"expected '(' after {t}")
            inner, nxt = parse(pos + 2)
            if nxt >= len(toks) or toks[nxt] != ")":
                raise UsageError("expected ')'")
            marker = "__L__" if t == "L" else "__C__"
            cls = Laurent if t == "L" else Curly
            return cls(inner, marker + str(nxt)), nxt + 1
        raise UsageError(f"unknown tower constructor {t!r}")

    shape, nxt = parse(0)
    if nxt != len(toks):
        raise UsageError("trailing input in tower descriptor")
    return _rename_vars(shape)


def _int_tok(toks, pos):
    if pos >= len(toks):
        raise UsageError("expected a number")
    try:
        return int(toks[pos])
    except ValueError:
        raise UsageError(f"expected a number, got {toks[pos]!r}")


def _rename_vars(t, names=None):
    """Assign canonical names t1..tn (or t for a single level), inner first."""
    levels = []
    probe = t
    while isinstance(probe, (Laurent, Curly)):
        levels.append(probe)
        probe = probe.inner
    n = len(levels)
    names = ["t"] if n == 1 else [f"t{i+1}" for i in range(n)]

    def rebuild(node, depth):
        if isinstance(node, (BaseFq, BasePadic)):
            return node
        cls = Laurent if isinstance(node, Laurent) else Curly
        return cls(rebuild(node.inner, depth - 1), names[depth - 1])

    return rebuild(t, n)


def build_prec(tower, prec_t, prec_p, window):
    if isinstance(tower, BaseFq):
        return None
    if isinstance(tower, BasePadic):
        return prec_p
    inner = build_prec(tower.inner, prec_t, prec_p, window)
    if isinstance(tower, Laurent):
        return (prec_t, inner)
    return (window[0], window[1], inner)


def eval_element(tower, src, prec):
    ast = expr.parse(src)
    varnames = set(towers.variables(tower))
    has_p = towers.field_char(tower) == 0

    def var(name, pos):
        if name in varnames:
            return towers.var_element(tower, name, prec)
        if name == "p" and has_p:
            return towers.from_fraction(tower, Fraction(towers.bottom_prime(tower)), prec)
        raise expr.ExprError(f"unknown identifier {name!r}", pos)

    alg = {
        "int": lambda n: towers.from_fraction(tower, Fraction(n), prec),
        "var": var,
        "add": towers.add,
        "sub": lambda a, b: towers.add(a, towers.neg(b)),
        "mul": towers.mul,
        "div": lambda a, b: towers.mul(a, towers.inv(b)),
        "pow": towers.power,
        "neg": towers.neg,
    }
    return expr.evaluate(ast, alg)


def pretty_tower(t):
    return str(t)


# ---------------------------------------------------------------------------
# parsers for divisors, rings, flags


def parse_ring_and_flag(ring_src: str, flag_src: str):
    parts = ring_src.split()
    if not parts:
        raise UsageError("empty ring descriptor")
    if parts[0] == "Zt":
        if len(parts) != 2:
            raise UsageError("Zt takes one prime")
        ring = chains.zt_local(int(parts[1]))
    elif parts[0] == "Poly":
        if len(parts) != 3:
            raise UsageError("Poly takes q and n")
        ring = chains.poly_local(int(parts[1]), int(parts[2]))
    else:
        raise UsageError(f"unknown ring {parts[0]!r}")
    flag = tuple(s.strip() for s in flag_src.split(","))
    # the flag lists generators from p_1 upward; the regular sequence is
    # the reverse
    order = tuple(reversed(flag))
    return chains.chain(ring, order)


def parse_rational_function(F, src):
    ast = expr.parse(src)

    def var(name, pos):
        if name != "u":
            raise expr.ExprError(f"unknown identifier {name!r}", pos)
        return adeles.RatFunc.of(F, [0, 1])

    alg = {
        "int": lambda n: adeles.RatFunc(F, (F.elem(n % F.p),))
        if n % F.p else adeles.RatFunc(F, ()),
        "var": var,
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
        "div": lambda a, b: a * b.inv(),
        "pow": lambda a, n: _rat_pow(a, n),
        "neg": lambda a: -a,
    }
    return expr.evaluate(ast, alg)


def _rat_pow(a, n):
    if n < 0:
        return _rat_pow(a.inv(), -n)
    out = adeles.RatFunc(a.F, (a.F.one(),))
    for _ in range(n):
        out = out * a
    return out


def parse_divisor(q: int, src: str) -> adeles.DivisorP1:
    p, k = adeles._prime_power(q)
    F = fq_make(p, k)
    coeffs = {}
    if src.strip():
        for term in src.split(","):
            term = term.strip()
            if "*" not in term:
                raise UsageError(f"divisor term {term!r} needs coef*point")
            cs, ps = term.split("*", 1)
            coef = int(cs.strip())
            ps = ps.strip()
            if ps == "inf":
                x = adeles.infinity(F)
            else:
                r = parse_rational_function(F, ps)
                if r.den != (F.one(),):
                    raise UsageError("divisor points must be polynomials")
                x = adeles.affine_point(F, r.num)
            coeffs[x] = coeffs.get(x, 0) + coef
    return adeles.DivisorP1(coeffs)


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_eval(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    return {"tower": towers.descriptor(tower), "pretty": pretty_tower(tower),
            "element": towers.render(e)}


def cmd_val(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    return {"valuation": towers.valuation(e)}


def cmd_residue(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    r = towers.residue(e)
    return {"tower": towers.descriptor(r.tower), "element": towers.render(r)}


def cmd_expand(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    exp = structure.additive_expand(e)
    digits = [{"index": list(idx), "digit": exp.digits[idx].code}
              for idx in exp.support()]
    return {"digits": digits, "complete": exp.complete}


def cmd_mexpand(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    exp = structure.multiplicative_expand(e)
    factors = [{"index": list(idx), "digit": exp.factors[idx].code}
               for idx in exp.support()]
    return {"exponents": list(exp.exponents), "theta": exp.theta.code,
            "factors": factors, "complete": exp.complete}


def cmd_decompose(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    e = eval_element(tower, args.expr, prec)
    exps, unit = structure.unit_decompose(e)
    return {"exponents": list(exps), "element": towers.render(unit)}


def cmd_classify(args):
    tower = parse_tower(args.tower)
    got = structure.classify(tower)
    if isinstance(got, structure.EqualCharFq):
        return {"case": "equal-char-finite", "q": got.q, "n": got.n}
    if isinstance(got, structure.EqualCharZero):
        return {"case": "equal-char-zero",
                "residue_field": towers.descriptor(got.residue_field),
                "laurent_layers": got.laurent_layers}
    return {"case": "mixed", "p": got.p, "r": got.r, "n": got.n}


def cmd_tame(args):
    tower = parse_tower(args.tower)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    x = eval_element(tower, args.x, prec)
    y = eval_element(tower, args.y, prec)
    val = milnor.tame_symbol(x, y)
    return {"tower": towers.descriptor(val.tower), "element": towers.render(val)}


def cmd_k2q(args):
    terms = []
    for part in args.symbols.split(";"):
        entries = [Fraction(s.strip()) for s in part.split(",")]
        if len(entries) != 2:
            raise UsageError("each symbol needs exactly two entries")
        terms.append((1, milnor.Symbol(tuple(entries))))
    img = milnor.k2q_decompose(milnor.SymbolSum(terms))
    return {"sign": img.sign,
            "components": {str(p): c.code for p, c in sorted(img.components.items())}}


def cmd_hl(args):
    c = parse_ring_and_flag(args.ring, args.flag)
    tower = chains.hl(c)
    return {"tower": towers.descriptor(tower), "pretty": pretty_tower(tower)}


def cmd_embed(args):
    c = parse_ring_and_flag(args.ring, args.flag)
    tower = chains.hl(c)
    prec = build_prec(tower, args.prec_t, args.prec_p, args.window)
    varnames = set(c.ring.vars)
    has_p = c.ring.coeff[0] == "Z"

    def var(name, pos):
        if name in varnames:
            return towers.var_element(tower, name, prec)
        if name == "p" and has_p:
            return towers.from_fraction(tower, Fraction(c.ring.coeff[1]), prec)
        raise expr.ExprError(f"unknown identifier {name!r}", pos)

    alg = {
        "int": lambda n: towers.from_fraction(tower, Fraction(n), prec),
        "var": var,
        "add": towers.add,
        "sub": lambda a, b: towers.add(a, towers.neg(b)),
        "mul": towers.mul,
        "div": lambda a, b: towers.mul(a, towers.inv(b)),
        "pow": towers.power,
        "neg": towers.neg,
    }
    e = expr.evaluate(expr.parse(args.expr), alg)
    return {"tower": towers.descriptor(tower), "element": towers.render(e)}


def cmd_adele_h(args):
    D = parse_divisor(args.q, args.divisor)
    out = adeles.cohomology_P1(D, q=args.q)
    return {"h0": out.h0, "h1": out.h1, "stable": out.stable,
            "window": out.window}


def cmd_adele_approx(args):
    p, k = adeles._prime_power(args.q)
    F = fq_make(p, k)
    targets = []
    if args.targets.strip():
        for part in args.targets.split(";"):
            ps, vs = part.split("=", 1)
            ps = ps.strip()
            if ps == "inf":
                x = adeles.infinity(F)
            else:
                r = parse_rational_function(F, ps)
                x = adeles.affine_point(F, r.num)
            targets.append((x, parse_rational_function(F, vs.strip())))
    f = adeles.weak_approx(targets, args.c, F=F)
    return {"element": repr(f)}


def cmd_adele_dim2(args):
    p, k = adeles._prime_power(args.q)
    F = fq_make(p, k)
    cvar, cval = args.curve.split("=")
    cvar = cvar.strip()
    a, b = (int(s) for s in args.point.split(","))
    flag = adeles.flag_on(F, cvar, int(cval), a, b)
    tower, embed2 = adeles.local_factor_dim2(flag)
    out = {"tower": towers.descriptor(tower), "pretty": pretty_tower(tower)}
    if args.expr:
        num, den = _parse_surface_function(F, args.expr)
        out["element"] = towers.render(embed2(num, den))
    return out


def _parse_surface_function(F, src):
    if "/" in src and src.count("/") == 1 and src.startswith("("):
        # allow "(num)/(den)" splitting at the top level
        depth = 0
        for i, ch in enumerate(src):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "/" and depth == 0:
                return (_parse_poly2(F, src[:i]), _parse_poly2(F, src[i + 1:]))
    return _parse_poly2(F, src), None


def _parse_poly2(F, src):
    ast = expr.parse(src)

    def var(name, pos):
        if name == "s":
            return {(1, 0): F.one()}
        if name == "u":
            return {(0, 1): F.one()}
        raise expr.ExprError(f"unknown identifier {name!r}", pos)

    def p2add(a, b):
        out = dict(a)
        for e, c in b.items():
            out[e] = out.get(e, F.zero()) + c
        return {e: c for e, c in out.items() if not c.is_zero()}

    def p2pow(a, n):
        if n < 0:
            raise UsageError("negative powers are not polynomial")
        out = {(0, 0): F.one()}
        for _ in range(n):
            out = adeles.poly2_mul(F, out, a)
        return out

    alg = {
        "int": lambda n: {(0, 0): F.elem(n)} if F.elem(n).code else {},
        "var": var,
        "add": p2add,
        "sub": lambda a, b: p2add(a, {e: -c for e, c in b.items()}),
        "mul": lambda a, b: adeles.poly2_mul(F, a, b),
        "div": lambda a, b: (_ for _ in ()).throw(
            UsageError("use (num)/(den) at the top level only")),
        "pow": p2pow,
        "neg": lambda a: {e: -c for e, c in a.items()},
    }
    return expr.evaluate(ast, alg)


def cmd_verify(args):
    seed = args.seed if args.seed is not None else int(os.environ.get("HLF_SEED", "0"))
    if args.hom in ("sign", "k2q"):
        rep = milnor.verify_relations(args.hom, args.trials, seed)
    else:
        tower = parse_tower(args.tower or "L(Fq 5)")

        def sampler(rng, t):
            acc = towers.zero(t)
            for _ in range(3):
                e = rng.randrange(-3, 4)
                c = towers.from_fraction(t.inner, Fraction(rng.randrange(1, towers.bottom_prime(t))))
                acc = towers.add(acc, towers.monomial(t, e, c))
            return acc

        rep = milnor.verify_relations(args.hom, args.trials, seed,
                                      tower=tower, sampler=sampler)
    return {"hom": rep.hom, "trials": rep.trials, "checks": rep.checks,
            "ok": rep.ok, "failures": rep.failures[:10]}


# ---------------------------------------------------------------------------
# dispatch


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_tower_flags(sp):
    sp.add_argument("--tower", required=True)
    _add_prec_flags(sp)


def _add_prec_flags(sp):
    sp.add_argument("--prec-t", type=int, default=towers.DEFAULT_LAURENT_N)
    sp.add_argument("--prec-p", type=int, default=towers.DEFAULT_PADIC_PREC)
    sp.add_argument("--window", type=_window, default=towers.DEFAULT_CURLY_WINDOW)


def _window(src):
    lo, hi = src.split(":")
    return (int(lo), int(hi))


def build_parser():
    ap = _Parser(prog="hlf", description="higher-dimensional local field calculator")
    sub = ap.add_subparsers(dest="cmd", required=True)

    for name, fn, with_expr in [("eval", cmd_eval, True), ("val", cmd_val, True),
                                ("residue", cmd_residue, True),
                                ("expand", cmd_expand, True),
                                ("mexpand", cmd_mexpand, True),
                                ("decompose", cmd_decompose, True)]:
        sp = sub.add_parser(name)
        _add_tower_flags(sp)
        sp.add_argument("--expr", required=True)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("classify")
    sp.add_argument("--tower", required=True)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("tame")
    _add_tower_flags(sp)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.set_defaults(fn=cmd_tame)

    sp = sub.add_parser("k2q")
    sp.add_argument("--symbols", required=True)
    sp.set_defaults(fn=cmd_k2q)

    sp = sub.add_parser("hl")
    sp.add_argument("--ring", required=True)
    sp.add_argument("--flag", required=True)
    sp.set_defaults(fn=cmd_hl)

    sp = sub.add_parser("embed")
    sp.add_argument("--ring", required=True)
    sp.add_argument("--flag", required=True)
    sp.add_argument("--expr", required=True)
    _add_prec_flags(sp)
    sp.set_defaults(fn=cmd_embed)

    ad = sub.add_parser("adele")
    adsub = ad.add_subparsers(dest="adele_cmd", required=True)
    sp = adsub.add_parser("h")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--divisor", required=True)
    sp.set_defaults(fn=cmd_adele_h)
    sp = adsub.add_parser("approx")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--targets", required=True)
    sp.add_argument("--c", type=int, required=True)
    sp.set_defaults(fn=cmd_adele_approx)
    sp = adsub.add_parser("dim2-factor")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--curve", required=True, help="s=a or u=b")
    sp.add_argument("--point", required=True, help="a,b")
    sp.add_argument("--expr", default=None)
    sp.set_defaults(fn=cmd_adele_dim2)

    sp = sub.add_parser("verify")
    sp.add_argument("--hom", required=True,
                    choices=["tame", "border", "sign", "k2q"])
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--tower", default=None)
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    try:
        args = build_parser().parse_args(argv)
        out = args.fn(args)
    except UsageError as ex:
        print(json.dumps({"error": str(ex)}, sort_keys=True))
        return 1
    except (HlfError, ZeroDivisionError, ValueError) as ex:
        print(json.dumps({"error": str(ex)}, sort_keys=True))
        return 2
    print(json.dumps(out, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
