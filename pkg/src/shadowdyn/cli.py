"""Command-line front end.

Every construction prints a short report and writes a certificate (to
``--out`` or, failing that, to standard output after the report).  The
certificate is replayed before exit; the exit status is 0 only when the
replay accepts it.  Malformed input exits with 2, failed constructions
and rejected certificates with 1.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import certificates as certs
from .errors import InputError, ShadowdynError
from .systems import (
    SFT,
    ApproxPoint,
    ProductPoint,
    UPPoint,
    format_fraction,
    load_system,
    no_periodic_product,
    parse_dyadic,
    parse_point,
    parse_word,
)


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}") from exc


def _system(args):
    if not args.system:
        raise InputError("--system is required for this command")
    return load_system(args.system)


def _sft(args) -> SFT:
    system = _system(args)
    if not isinstance(system, SFT):
        raise InputError("this command needs an SFT system file")
    return system


class _Run:
    """Collects report lines and certificates for one invocation."""

    def __init__(self, args, out):
        self.args = args
        self.out = out
        self.ok = True

    def say(self, text: str):
        self.out.write(text if text.endswith("\n") else text + "\n")

    def certify(self, text: str, suffix: str = ""):
        result = certs.verify_text(text)
        self.ok &= result.ok
        path = self.args.out + suffix if self.args.out else None
        if path:
            with open(path, "w") as fh:
                fh.write(text)
            self.say(f"certificate written to {path}")
        else:
            self.say(text)
        self.say(result.to_text())


# -- commands ---------------------------------------------------------------------


def cmd_trace(run, args):
    from .shadowing import parse_pseudo_orbit, trace

    system = _system(args)
    po = parse_pseudo_orbit(_read(args.pseudo))
    eps = _eps(args)
    z, cert = trace(system, po, eps)
    run.say(f"z {z}")
    run.say(f"max distance={format_fraction(cert.max_distance)} eps={format_fraction(eps)}")
    run.certify(certs.trace_certificate(system, po.points, po.delta, eps, z, po.periodic))


def cmd_chains(run, args):
    from .chains import chain_mixing_constant, connect

    sft = _sft(args)
    eps = _eps(args)
    run.say(f"chain_mixing_constant eps={format_fraction(eps)} M={chain_mixing_constant(sft, eps)}")
    if args.source is not None:
        if args.target is None or args.length is None:
            raise InputError("--source needs --target and --length")
        plan = connect(sft, parse_word(args.source), parse_word(args.target), args.length, eps)
        for i, x in enumerate(plan.points):
            run.say(f"x{i} {x}")


def cmd_decompose(run, args):
    from .chains import decompose

    run.say(decompose(_sft(args)).to_text() or "no basic sets\n")


def cmd_embed(run, args):
    from .embedding import build_embedding

    sft = _sft(args)
    targets = [parse_word(t) for t in args.targets.split(",")]
    data = build_embedding(sft, targets, _eps(args))
    run.say(data.to_text())
    run.certify(certs.embed_certificate(data, targets, args.depth or 8))


def _rr_stages(cert):
    return [(m, bound) for _, m, _, bound in cert.rr_bounds]


def cmd_spec(run, args):
    from .specification import SpecRequest, periodic_spec_point, rr_spec_point

    system = _system(args)
    request = SpecRequest.from_text(_read(args.request))
    if args.mode == "periodic":
        z, cert = periodic_spec_point(system, request)
        stages = ()
    else:
        z, cert, history = rr_spec_point(system, request, stages=args.stages, horizon=args.horizon)
        for st in history:
            run.say(f"stage {st.stage} m={st.m} lambda={format_fraction(st.lam)}")
        stages = _rr_stages(cert)
    run.say(f"z {z}")
    run.say(f"exact={str(cert.exact).lower()} horizon={cert.horizon} holds={str(cert.holds()).lower()}")
    run.certify(certs.spec_certificate(system, request, z, cert.horizon, cert.exact, stages))


def _measure(text: str):
    from .measures import parse_measure

    return parse_measure(text)


def cmd_measure(run, args):
    from .measures import approximate_measure, sigmund_candidates, weak_star_distance

    sft = _sft(args)
    if args.mode == "approx":
        if args.seed is None:
            raise InputError("measure approx needs --seed")
        mu = _measure(args.mu)
        eps = _eps(args)
        res = approximate_measure(sft, mu, eps, args.seed)
        run.say(f"period={len(res.z.period)} {res.interval.to_text()}")
        run.certify(certs.distance_certificate(sft, mu, res.nu, eps / 2, res.interval, eps=eps, z=res.z))
    elif args.mode == "distance":
        mu, nu = _measure(args.mu), _measure(args.nu)
        tail = parse_dyadic(args.tail) if args.tail else _eps(args) / 2
        interval = weak_star_distance(mu, nu, tail, sft.size)
        run.say(interval.to_text())
        run.certify(certs.distance_certificate(sft, mu, nu, tail, interval))
    else:
        stream = sigmund_candidates(sft, args.ell)
        for _ in range(args.count):
            run.say(next(stream).to_text())


def cmd_classify(run, args):
    from .analysis import point_classifier

    system = _system(args)
    point = parse_point(args.point)
    report = point_classifier(system, point, horizon=args.horizon or 4096, depth=args.depth or 3, max_k=args.max_k)
    run.say(report.to_text())
    run.certify(certs.classify_certificate(system, point, report))


def cmd_entropy(run, args):
    from .analysis import sft_entropy

    sft = _sft(args)
    value = sft_entropy(sft, args.tol)
    run.say(str(value))
    run.certify(certs.entropy_certificate(sft, value))


def _product_demo_request(system, eps):
    """Two windows of length 8: the short cycles of every factor, then the long ones."""
    from .specification import SpecRequest, SpecWindow, spec_constant

    big_m = spec_constant(system, eps)
    first = ProductPoint(tuple(UPPoint((), (0,) + tuple(range(1, n + 1)))
                               for n in range(1, system.count + 1)))
    second = ProductPoint(tuple(UPPoint((), (0,) + tuple(range(n + 1, 2 * n + 2)))
                                for n in range(1, system.count + 1)))
    windows = (SpecWindow.starting_at(0, 7, first), SpecWindow.starting_at(8 + big_m, 15 + big_m, second))
    return SpecRequest(eps, windows, 2 * big_m + 16)


def cmd_demo(run, args):
    if args.which == "chacon":
        from .analysis import point_classifier
        from .embedding import chacon_word

        sft = SFT.full_shift(2)
        horizon = args.horizon or 10**4
        depth = args.depth or 3
        point = ApproxPoint(chacon_word(horizon + depth + 1))
        report = point_classifier(sft, point, horizon=horizon, depth=depth, max_k=args.max_k)
        run.say(report.to_text())
        run.certify(certs.classify_certificate(sft, point, report))
    elif args.which == "no-periodic-product":
        from .specification import rr_spec_point

        system = no_periodic_product(args.factors)
        request = _product_demo_request(system, _eps(args))
        horizon = args.horizon or 512
        z, cert, history = rr_spec_point(system, request, stages=args.stages, horizon=horizon)
        run.say(request.to_text())
        for st in history:
            run.say(f"stage {st.stage} m={st.m} lambda={format_fraction(st.lam)}")
        run.say(f"z {z}")
        run.say(f"horizon={horizon} holds={str(cert.holds()).lower()}")
        run.certify(certs.spec_certificate(system, request, z, horizon, cert.exact, _rr_stages(cert)))
    else:
        from .analysis import classify_dichotomy
        from .embedding import witness_points

        sft = _sft(args) if args.system else SFT.full_shift(2)
        data = classify_dichotomy(sft).witness
        if data is None:
            raise ShadowdynError("zero entropy: there is no embedded full shift to carry witnesses")
        for w in witness_points(data):
            run.say(f"witness {w.label} horizon={w.horizon}")
            run.say(w.report.to_text())
            run.certify(certs.classify_certificate(sft, w.point, w.report), suffix=f".{w.label}")


def cmd_verify(run, args):
    result = certs.verify_file(args.certificate)
    run.ok &= result.ok
    run.say(result.to_text())


# -- parser -----------------------------------------------------------------------


def _eps(args) -> Fraction:
    if args.eps is None:
        raise InputError("--eps is required for this command")
    return parse_dyadic(args.eps)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system definition file")
    common.add_argument("--eps", help="dyadic tolerance, e.g. 1/4")
    common.add_argument("--horizon", type=int, help="check horizon (command-specific default)")
    common.add_argument("--depth", type=int, help="cylinder depth (command-specific default)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="certificate output path")

    parser = _Parser(prog="shadowdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trace", parents=[common], help="trace a pseudo-orbit")
    p.add_argument("--pseudo", required=True, help="pseudo-orbit file")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("chains", parents=[common], help="chain-mixing constant and chains")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--length", type=int)
    p.set_defaults(func=cmd_chains)

    p = sub.add_parser("decompose", parents=[common], help="basic and elementary sets")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("embed", parents=[common], help="embed a full shift")
    p.add_argument("--targets", required=True, help="comma-separated target words")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("spec", parents=[common], help="specification points")
    p.add_argument("mode", choices=["periodic", "rr"])
    p.add_argument("--request", required=True)
    p.add_argument("--stages", type=int, default=1)
    p.set_defaults(func=cmd_spec)

    p = sub.add_parser("measure", parents=[common], help="invariant measures")
    p.add_argument("mode", choices=["approx", "distance", "sigmund"])
    p.add_argument("--mu")
    p.add_argument("--nu")
    p.add_argument("--tail")
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("classify", parents=[common], help="recurrence classification of a point")
    p.add_argument("--point", required=True)
    p.add_argument("--max-k", type=int, default=32)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("entropy", parents=[common], help="topological entropy")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("demo", parents=[common], help="worked examples")
    p.add_argument("which", choices=["chacon", "no-periodic-product", "witnesses"])
    p.add_argument("--factors", type=int, default=4)
    p.add_argument("--stages", type=int, default=1)
    p.add_argument("--max-k", type=int, default=32)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("verify", help="replay a certificate")
    p.add_argument("certificate")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        state = _Run(args, out)
        args.func(state, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ShadowdynError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0 if state.ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
