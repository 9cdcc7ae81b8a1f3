"""Plain-text certificates and their independent replay.

Every construction can be written out as a certificate: a header naming its
kind, the system, and the exact numbers it claims.  :func:`verify_text`
re-checks those claims from scratch.  It deliberately uses nothing from the
construction modules; only the point and system primitives of
:mod:`shadowdyn.systems` (plus sympy and mpmath for the entropy claim).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InputError
from .systems import (
    SFT,
    Product,
    UPPoint,
    apply_map,
    distance_interval,
    dyadic_exponent,
    format_fraction,
    format_word,
    parse_point,
    parse_system,
    parse_word,
    pow2,
    system_to_text,
    validate_point,
)

HEADER = "shadowdyn-certificate"


@dataclass
class Certificate:
    kind: str
    system: object
    fields: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)  # (tag, rest) in order

    def get(self, key, default=None):
        return self.fields.get(key, default)

    def tagged(self, tag):
        return [rest for t, rest in self.lines if t == tag]


@dataclass
class VerifyResult:
    kind: str
    ok: bool
    checks: int
    failures: list

    def __bool__(self):
        return self.ok

    def to_text(self) -> str:
        head = f"verify kind={self.kind} ok={str(self.ok).lower()} checks={self.checks}"
        return "\n".join([head] + [f"failure {f}" for f in self.failures[:20]]) + "\n"


# -- writing --------------------------------------------------------------------------


def _render(kind: str, system, fields: dict, lines=()) -> str:
    out = [f"{HEADER} kind={kind}", "begin system"]
    out += system_to_text(system).strip().splitlines()
    out.append("end system")
    for key, val in fields.items():
        if isinstance(val, bool):
            val = str(val).lower()
        elif isinstance(val, Fraction):
            val = format_fraction(val)
        out.append(f"{key}={val}")
    out += [f"{tag} {rest}" for tag, rest in lines]
    return "\n".join(out) + "\n"


def trace_certificate(system, points, delta, eps, z, periodic=False) -> str:
    lines = [("z", str(z))] + [("x", str(x)) for x in points]
    return _render("trace", system, {"eps": Fraction(eps), "delta": Fraction(delta),
                                     "periodic": periodic}, lines)


def spec_certificate(system, request, z, horizon, exact, rr_stages=()) -> str:
    """``rr_stages`` holds ``(m_r, bound)`` pairs: ``d(f^(j m_r) z, z) <= bound``."""
    lines = [("z", str(z))]
    for w in request.windows:
        lines.append(("window", f"a={w.a} b={w.b} origin={w.origin} point={w.point}"))
    for m, bound in rr_stages:
        lines.append(("rr", f"m={m} bound={format_fraction(bound)}"))
    return _render("spec", system, {"eps": Fraction(request.eps), "p": request.p,
                                    "horizon": horizon, "exact": exact}, lines)


def embed_certificate(data, targets, depth: int = 8) -> str:
    lines = [("target", format_word(t)) for t in targets]
    lines += [("anchor", format_word(a)) for a in data.anchors]
    lines += [("probe", format_word(w)) for w in data.probes]
    return _render("embed", data.sft, {"eps": data.eps, "m": data.m, "r": data.r,
                                       "depth": depth}, lines)


def distance_certificate(system, mu, nu, tail, interval, eps=None, z=None) -> str:
    fields = {"tail": Fraction(tail), "lo": interval.lo, "hi": interval.hi, "terms": interval.terms}
    if eps is not None:
        fields["eps"] = Fraction(eps)
    lines = [("mu", mu.to_text()), ("nu", nu.to_text())]
    if z is not None:
        lines.append(("z", str(z)))
    return _render("distance", system, fields, lines)


def entropy_certificate(sft, value) -> str:
    fields = {"exact_zero": value.exact_zero}
    if not value.exact_zero:
        fields.update(root_lo=value.root_lo, root_hi=value.root_hi,
                      lo=_exact(value.lo), hi=_exact(value.hi))
    return _render("entropy", sft, fields)


def _exact(x) -> Fraction:
    man, exp = x.man_exp
    return Fraction(man) * Fraction(2) ** exp


def _raw_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    return (-1) ** sign * Fraction(man) * Fraction(2) ** exp


def classify_certificate(system, point, report) -> str:
    lines = [("point", str(point))]
    lines += [("claim", ln) for ln in report.to_text().strip().splitlines()[1:]]
    return _render("classify", system, {"horizon": report.horizon, "depth": report.depth,
                                        "exact": report.exact}, lines)


# -- reading --------------------------------------------------------------------------


def parse_certificate(text: str) -> Certificate:
    raw = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not raw or not raw[0].startswith(HEADER + " kind="):
        raise InputError("not a certificate")
    kind = raw[0].split("=", 1)[1].strip()
    try:
        start, end = raw.index("begin system"), raw.index("end system")
    except ValueError as exc:
        raise InputError("certificate has no system block") from exc
    system = parse_system("\n".join(raw[start + 1:end]))
    cert = Certificate(kind, system)
    for ln in raw[end + 1:]:
        tag, _, rest = ln.partition(" ")
        if "=" in tag and not rest:
            key, val = tag.split("=", 1)
            cert.fields[key] = val
        else:
            cert.lines.append((tag, rest))
    return cert


def _frac(cert, key):
    try:
        return Fraction(cert.fields[key])
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"certificate field {key!r} missing or malformed") from exc


def _int(cert, key):
    try:
        return int(cert.fields[key])
    except (KeyError, ValueError) as exc:
        raise InputError(f"certificate field {key!r} missing or malformed") from exc


def _flag(cert, key):
    return cert.fields.get(key, "false") == "true"


def _kv_line(rest: str, last: str):
    """Split ``k=v ... last=<rest of line>``."""
    head, sep, tail = rest.partition(f" {last}=")
    if not sep:
        raise InputError(f"expected {last}= in {rest!r}")
    out = dict(tok.split("=", 1) for tok in head.split())
    out[last] = tail
    return out


class _Checker:
    def __init__(self, kind):
        self.kind = kind
        self.checks = 0
        self.failures = []

    def check(self, ok, what):
        self.checks += 1
        if not ok and len(self.failures) < 1000:
            self.failures.append(what)
        return ok

    def result(self):
        return VerifyResult(self.kind, not self.failures, self.checks, self.failures)


def _shift(system, x, n):
    return apply_map(system, x, n) if n else x


def _dist(system, x, y):
    lo, hi = distance_interval(system, x, y)
    if lo != hi:
        raise InputError("certificate points must be exact")
    return lo


def _close(system, x, y, eps, xo=0, yo=0):
    """``d(f^xo x, f^yo y) < eps``; on SFTs this is agreement on a window."""
    if isinstance(system, SFT) and isinstance(x, UPPoint) and isinstance(y, UPPoint):
        if eps > 1:
            return True
        k = dyadic_exponent(eps)
        return x.window(xo, k + 1) == y.window(yo, k + 1)
    return _dist(system, _shift(system, x, xo), _shift(system, y, yo)) < eps


# -- replay per kind -------------------------------------------------------------------


def _verify_trace(cert, c):
    system = cert.system
    eps, delta = _frac(cert, "eps"), _frac(cert, "delta")
    periodic = _flag(cert, "periodic")
    z = parse_point(cert.tagged("z")[0])
    xs = [parse_point(t) for t in cert.tagged("x")]
    c.check(validate_point(system, z), "z is not a point of the system")
    for x in xs:
        c.check(validate_point(system, x), f"pseudo-orbit point {x} is not in the system")
    steps = list(zip(xs, xs[1:])) + ([(xs[-1], xs[0])] if periodic else [])
    for i, (a, b) in enumerate(steps):
        c.check(_dist(system, apply_map(system, a, 1), b) < delta, f"jump {i} is not below delta")
    for i, x in enumerate(xs):
        c.check(_close(system, z, x, eps, i, 0), f"d(f^{i} z, x_{i}) >= eps")
    if periodic:
        c.check(apply_map(system, z, len(xs)) == z, "z does not return after one period")


def _windows(cert):
    out = []
    for rest in cert.tagged("window"):
        kv = _kv_line(rest, "point")
        out.append((int(kv["a"]), int(kv["b"]), int(kv.get("origin", 0)), parse_point(kv["point"])))
    return out


def _verify_spec(cert, c):
    system = cert.system
    eps, p, horizon = _frac(cert, "eps"), _int(cert, "p"), _int(cert, "horizon")
    z = parse_point(cert.tagged("z")[0])
    windows = _windows(cert)
    c.check(validate_point(system, z), "z is not a point of the system")
    for i, (a, b, origin, x) in enumerate(windows):
        c.check(validate_point(system, x), f"window {i} point is not in the system")
        c.check(a <= b and (i == 0 or windows[i - 1][1] < a), f"window {i} out of order")
        c.check(a >= origin, f"window {i} starts before its origin")
    if windows:
        c.check(windows[-1][1] - windows[0][0] < p, "windows do not fit in one period")
    if _flag(cert, "exact"):
        # f^p z = z makes the n = 0 checks cover every n
        c.check(apply_map(system, z, p) == z, "z is not p-periodic")
        for i, (a, b, origin, x) in enumerate(windows):
            for j in range(a, b + 1):
                c.check(_close(system, z, x, eps, j, j - origin), f"window {i} fails at j={j}")
        for rest in cert.tagged("rr"):
            kv = dict(tok.split("=", 1) for tok in rest.split())
            m, bound = int(kv["m"]), Fraction(kv["bound"])
            c.check(bound >= 0 and (apply_map(system, z, m) == z or _dist(system, _shift(system, z, m), z) <= bound),
                    f"stage m={m} does not return within its bound")
        return
    for i, (a, b, origin, x) in enumerate(windows):
        n = 0
        while n * p + b <= horizon:
            for j in range(a, b + 1):
                c.check(_close(system, z, x, eps, n * p + j, j - origin), f"window {i} fails at n={n} j={j}")
            n += 1
    orbit = [_shift(system, z, 0)]
    for _ in range(horizon):
        orbit.append(apply_map(system, orbit[-1], 1))
    for j in range(min(p, horizon + 1)):
        for n in range(1, (horizon - j) // p + 1):
            c.check(_dist(system, orbit[j], orbit[n * p + j]) < eps, f"return fails at n={n} j={j}")
    for rest in cert.tagged("rr"):
        kv = dict(tok.split("=", 1) for tok in rest.split())
        m, bound = int(kv["m"]), Fraction(kv["bound"])
        for j in range(1, horizon // m + 1):
            c.check(_dist(system, orbit[j * m], z) <= bound, f"stage m={m} fails at j={j}")


def _verify_embed(cert, c):
    sft = cert.system
    m, r, depth = _int(cert, "m"), _int(cert, "r"), _int(cert, "depth")
    k = dyadic_exponent(_frac(cert, "eps"))
    targets = [parse_word(t) for t in cert.tagged("target")]
    anchors = [parse_word(a) for a in cert.tagged("anchor")]
    probes = [parse_word(w) for w in cert.tagged("probe")]
    d = len(anchors)
    c.check(len(targets) == d == len(probes) >= 1, "target, anchor and probe counts differ")
    c.check(all(len(a) == m for a in anchors), "anchor lengths differ from m")
    for i, a in enumerate(anchors):
        for j, b in enumerate(anchors):
            c.check(sft.is_legal_word(a + b[:1]), f"anchor {i} cannot precede anchor {j}")
    c.check(len({w[:k] for w in probes}) == d and all(len(w) >= k for w in probes),
            "probe cylinders are not eps-separated")
    lookup = {w: i for i, w in enumerate(probes)}
    length = len(probes[0])

    def decode(word, count):
        out = []
        for i in range(count):
            out.append(lookup.get(word[m * i + r:m * i + r + length]))
        return tuple(out)

    for n in range(1, depth + 1):
        for alpha in itertools.product(range(d), repeat=n):
            # one spare anchor so probes near the end are fully readable
            y = tuple(s for a in alpha + (0,) for s in anchors[a])
            c.check(decode(y, n) == alpha, f"decode(encode({format_word(alpha)})) differs")
            c.check(y[r:r + len(targets[alpha[0]])] == targets[alpha[0]],
                    f"encoding of {format_word(alpha)} misses target {alpha[0]}")
            if n > 1:
                c.check(decode(y[m:], n - 1) == alpha[1:], f"shift equivariance fails on {format_word(alpha)}")


# independent measure arithmetic for the distance replay

def _parse_measure(text: str):
    kind, _, body = text.partition(" ")
    if kind == "markov":
        kv = dict(tok.split("=", 1) for tok in body.split())
        P = [[Fraction(v) for v in row.split(",")] for row in kv["P"].split(";")]
        pi = [Fraction(v) for v in kv["pi"].split(",")]
        return ("markov", P, pi)
    if kind == "periodic":
        point = parse_point(body.partition("=")[2])
        if not isinstance(point, UPPoint) or point.preperiod:
            raise InputError("periodic measure needs a purely periodic point")
        return ("periodic", point.period)
    if kind == "empirical":
        body, _, n = body.partition("=")[2].rpartition(" n=")
        try:
            return ("empirical", parse_point(body), int(n))
        except ValueError as exc:
            raise InputError(f"bad empirical length {n!r}") from exc
    raise InputError(f"cannot replay measure kind {kind!r}")


def _mass(measure, word) -> Fraction:
    if measure[0] == "markov":
        _, P, pi = measure
        if any(a >= len(pi) for a in word):
            return Fraction(0)
        q = pi[word[0]]
        for a, b in zip(word, word[1:]):
            q *= P[a][b]
        return q
    if measure[0] == "empirical":
        _, point, n = measure
        return Fraction(sum(1 for i in range(n) if point.window(i, len(word)) == word), n)
    per = measure[1]
    p = len(per)
    hits = sum(1 for i in range(p) if all(per[(i + t) % p] == word[t] for t in range(len(word))))
    return Fraction(hits, p)


def _masses(measure, words):
    if measure[0] == "periodic":
        # count each needed window of the cyclic word once
        per = measure[1]
        p = len(per)
        longest = max(len(w) for w in words)
        ext = per * (longest // p + 2)
        counts = {}
        for t in {len(w) for w in words}:
            for i in range(p):
                key = ext[i:i + t]
                counts[key] = counts.get(key, 0) + 1
        return [Fraction(counts.get(w, 0), p) for w in words]
    return [_mass(measure, w) for w in words]


def _enumerated_words(alphabet: int, count: int):
    out = []
    n = 1
    while len(out) < count:
        out.extend(itertools.product(range(alphabet), repeat=n))
        n += 1
    return out[:count]


def _verify_distance(cert, c):
    system = cert.system
    alphabet = system.size
    tail = _frac(cert, "tail")
    lo, hi, terms = _frac(cert, "lo"), _frac(cert, "hi"), _int(cert, "terms")
    mu = _parse_measure(cert.tagged("mu")[0])
    nu = _parse_measure(cert.tagged("nu")[0])
    for label, meas in (("mu", mu), ("nu", nu)):
        if meas[0] == "markov":
            _, P, pi = meas
            n = len(P)
            c.check(all(sum(row) == 1 and min(row) >= 0 for row in P), f"{label}: P not stochastic")
            c.check(sum(pi) == 1 and all(sum(pi[a] * P[a][b] for a in range(n)) == pi[b] for b in range(n)),
                    f"{label}: pi not stationary")
            c.check(all(P[a][b] == 0 or system.allowed[a][b] for a in range(n) for b in range(n)),
                    f"{label}: charges a forbidden transition")
        elif meas[0] == "empirical":
            c.check(meas[2] >= 1 and validate_point(system, meas[1]), f"{label}: orbit is not legal")
        else:
            per = meas[1]
            c.check(system.is_legal_word(per + per[:1]), f"{label}: orbit is not legal")
    c.check(pow2(terms + 1) < tail and (terms == 0 or pow2(terms) >= tail), "truncation index is wrong")
    words = _enumerated_words(alphabet, terms)
    a, b = _masses(mu, words), _masses(nu, words)
    partial = sum((abs(x - y) * pow2(i + 1) for i, (x, y) in enumerate(zip(a, b), start=1)), Fraction(0))
    c.check(partial == lo, "partial sum differs from lo")
    c.check(hi == lo + pow2(terms + 1), "hi is not lo plus the tail bound")
    if "eps" in cert.fields:
        c.check(hi < _frac(cert, "eps"), "certified distance is not below eps")
    zs = cert.tagged("z")
    if zs:
        z = parse_point(zs[0])
        c.check(validate_point(system, z), "z is not a point of the system")
        c.check(nu[0] == "periodic" and isinstance(z, UPPoint) and z.period == nu[1] and not z.preperiod,
                "nu is not the orbit measure of z")


def _verify_entropy(cert, c):
    import mpmath
    import sympy

    sft = cert.system
    x = sympy.Symbol("x")
    poly = sympy.Matrix(sft.matrix.tolist()).charpoly(x).as_expr()
    if _flag(cert, "exact_zero"):
        c.check(sympy.Poly(poly, x).count_roots(1, None) - (1 if poly.subs(x, 1) == 0 else 0) == 0,
                "an eigenvalue above 1 exists")
        return
    rlo, rhi = _frac(cert, "root_lo"), _frac(cert, "root_hi")
    p = sympy.Poly(poly, x)
    above = p.count_roots(sympy.Rational(rhi.numerator, rhi.denominator), None)
    c.check(above == 0 or (above == 1 and p.eval(sympy.Rational(rhi.numerator, rhi.denominator)) == 0),
            "a real eigenvalue exceeds root_hi")
    c.check(p.count_roots(sympy.Rational(rlo.numerator, rlo.denominator),
                          sympy.Rational(rhi.numerator, rhi.denominator)) >= 1,
            "no eigenvalue in [root_lo, root_hi]")
    c.check(rlo > 1, "root_lo must exceed 1 for positive entropy")
    with mpmath.workdps(40):
        lo_log = mpmath.iv.log(mpmath.iv.mpf([rlo.numerator, rlo.numerator]) / rlo.denominator)
        hi_log = mpmath.iv.log(mpmath.iv.mpf([rhi.numerator, rhi.numerator]) / rhi.denominator)
        c.check(_frac(cert, "lo") <= _raw_fraction(lo_log._mpi_[0]), "lo exceeds log(root_lo)")
        c.check(_frac(cert, "hi") >= _raw_fraction(hi_log._mpi_[1]), "hi is below log(root_hi)")


def _verify_classify(cert, c):
    system = cert.system
    point = parse_point(cert.tagged("point")[0])
    horizon, depth = _int(cert, "horizon"), _int(cert, "depth")
    c.check(validate_point(system, point), "point is not in the system")
    comps = point.components if isinstance(system, Product) else (point,)

    def hit(n):
        return all(q.window(n, depth) == q.prefix(depth) for q in comps)

    claims = {}
    numbers = []
    for rest in cert.tagged("claim"):
        if ": " in rest:
            name, val = rest.split(": ", 1)
            claims[name] = val
        else:
            tag, _, body = rest.partition(" ")
            numbers.append((tag, dict(tok.split("=", 1) for tok in body.split())))
    order = ["periodic", "regularly_recurrent", "minimal", "recurrent", "nonwandering"]
    chain = [claims.get(name) == "true" for name in order]
    c.check(all(not a or b for a, b in zip(chain, chain[1:])), "flags violate the recurrence hierarchy")
    if _flag(cert, "exact"):
        is_periodic = all(isinstance(q, UPPoint) and not q.preperiod for q in comps)
        c.check((claims.get("periodic") == "true") == is_periodic, "periodicity claim is wrong")
    for tag, kv in numbers:
        if tag == "first_return":
            n = int(kv["n"])
            c.check(hit(n) and not any(hit(i) for i in range(1, n)), f"first return is not {n}")
        elif tag == "rr_refuted":
            k, n = int(kv["k"]), int(kv["n"])
            c.check(k * n <= horizon and not hit(k * n), f"f^({k}*{n}) does return")
        elif tag == "rr_witness":
            k = int(kv["k"])
            c.check(all(hit(k * n) for n in range(1, horizon // k + 1)), f"k={k} misses a multiple")
        elif tag == "gap_violation":
            start, length = int(kv["start"]), int(kv["length"])
            gap = next((int(v["G"]) for t, v in numbers if t == "gap_bound"), None)
            c.check(hit(start) and not any(hit(start + i) for i in range(1, length)),
                    "claimed gap contains a return")
            c.check(gap is not None and length > gap, "claimed gap does not exceed the bound")
    if claims.get("recurrent") == "false" and not _flag(cert, "exact"):
        c.check(not any(hit(n) for n in range(1, horizon + 1)), "point returns before the horizon")
    if claims.get("minimal") == "true" and not _flag(cert, "exact"):
        gap = next((int(v["G"]) for t, v in numbers if t == "gap_bound"), None)
        if c.check(gap is not None, "minimality claimed without a gap bound"):
            last = 0
            for n in range(1, horizon + 2):
                if hit(n):
                    c.check(n - last <= gap, f"gap ending at {n} exceeds {gap}")
                    last = n
            c.check(horizon + 1 - last <= gap, "trailing gap exceeds the bound")


_REPLAY = {
    "trace": _verify_trace,
    "spec": _verify_spec,
    "embed": _verify_embed,
    "distance": _verify_distance,
    "entropy": _verify_entropy,
    "classify": _verify_classify,
}


def verify_text(text: str) -> VerifyResult:
    cert = parse_certificate(text)
    replay = _REPLAY.get(cert.kind)
    if replay is None:
        raise InputError(f"unknown certificate kind {cert.kind!r}")
    c = _Checker(cert.kind)
    try:
        replay(cert, c)
    except (KeyError, IndexError, ValueError) as exc:
        raise InputError(f"malformed {cert.kind} certificate: {exc}") from exc
    return c.result()


def verify_file(path: str) -> VerifyResult:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read certificate {path}") from exc
    return verify_text(text)


__all__ = [
    "Certificate", "VerifyResult", "classify_certificate", "distance_certificate",
    "embed_certificate", "entropy_certificate", "parse_certificate", "spec_certificate",
    "trace_certificate", "verify_file", "verify_text",
]
