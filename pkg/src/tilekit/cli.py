"""tilekit command line.

Every subcommand prints a short ``key: value`` report, or one JSON document
with ``--json``. Exit status is 0 when a verdict was computed (REJECT and NO
included), 2 for bad arguments and 3 when the computation itself failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .errors import (
    BudgetExceeded,
    CardinalityMismatch,
    ChainFormatError,
    CollisionInSum,
    LayerNotAFactorization,
    ModulusMismatch,
    NotAFactorization,
    NotAnchored,
    OffsetCollision,
    ParameterOutOfRange,
    TilekitError,
    UnsupportedBase,
)
from .integer_tile import is_integer_tile
from .phitree import is_tile_digit_set, walk
from .polyring import DigitSet
from .productform import KINDS, ProductFormChain, classify, kernel_build, kernel_p2q
from .spectra import compute_spectrum
from .tilecheck import DigitSystem, counting_check

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 2, 3


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


# argument parsing ----------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.strip().strip("{}[]").split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _digits(text: str) -> DigitSet:
    try:
        return DigitSet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad digit set {text!r}: {exc}") from None


def _matrix(text: str) -> list[list[int]]:
    rows = [_int_list(r) for r in text.split(";")]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise argparse.ArgumentTypeError(f"matrix {text!r} is not square")
    return rows


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # keep argparse's wording, force our exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tilekit", description="Self-affine tile digit sets in one dimension.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.add_argument("--json", action="store_true", help="print one JSON document")
        return p

    p = add("spectrum", "cyclotomic spectrum of a mask polynomial")
    p.add_argument("--digits", type=_digits, required=True)

    p = add("tile-digit", "decide whether D is a tile digit set for base b")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--digits", type=_digits, required=True)

    p = add("integer-tile", "decide whether A tiles the integers")
    p.add_argument("--digits", type=_digits, required=True)

    p = add("classify", "match a kernel type and extract a product-form chain")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--digits", type=_digits, required=True)

    p = add("construct", "replay a product-form chain from a file (text or JSON)")
    p.add_argument("--chain-file", required=True, help="path, or - for stdin")

    p = add("kernel", "build a kernel polynomial and its canonical digit set")
    p.add_argument("--type", dest="kind", choices=KINDS, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=_int_list, default=[])
    p.add_argument("--ell", type=_int_list)
    p.add_argument("--notation", choices=("general", "p2q"), default="general")

    p = add("phi-tree", "print the base-b cyclotomic tree down to a depth")
    p.add_argument("--base", type=int, required=True)
    p.add_argument("--depth", type=int, default=2)

    p = add("count", "counting oracle #(D + AD + ... + A^(k-1) D) for k = 1..K")
    p.add_argument("--base", type=int)
    p.add_argument("--matrix", type=_matrix, help='rows separated by ";", e.g. "2,1;0,2"')
    p.add_argument("--digits", required=True, help='integers, or vectors separated by ";" with --matrix')
    p.add_argument("--K", type=int, default=4)
    return parser


# subcommands -----------------------------------------------------------------
# each returns (inputs, verdict, certificate)


def _need_base(b: int) -> None:
    if b < 2:
        raise UsageError("--base", "base must be at least 2")


def cmd_spectrum(args):
    d = args.digits
    if not d.cardinality:
        raise UsageError("--digits", "empty digit set")
    spec = compute_spectrum(d)
    return {"digits": list(d.elements)}, "COMPUTED", spec.to_dict()


def cmd_tile_digit(args):
    _need_base(args.base)
    dec = is_tile_digit_set(args.digits, args.base)
    cert = {"spectrum": list(dec.candidates)}
    if dec.accepted:
        cert["blocking"] = list(dec.blocking.nodes)
    else:
        cert["uncovered_path"] = list(dec.uncovered or ())
        cert["reason"] = "some root path of the tree avoids the spectrum"
    return {"base": args.base, "digits": list(args.digits.elements)}, dec.verdict, cert


def cmd_integer_tile(args):
    a = args.digits
    if not a.cardinality:
        raise UsageError("--digits", "empty digit set")
    dec = is_integer_tile(a)
    cert: dict = {"t1": dec.t1, "t2": dec.t2} | dec.detail
    if dec.certificate is not None:
        c = dec.certificate
        cert |= c.to_dict()
        if "complement" not in cert and c.period <= 1 << 16:
            cert["complement"] = list(c.explicit().elements)
        cert["verified"] = c.verify(a)
    elif dec.verdict == "NO":
        cert["reason"] = "T1 fails" if not dec.t1 else "T2 fails"
    else:
        cert["reason"] = "no complement found within the search budget"
    return {"digits": list(a.elements)}, dec.verdict, cert


def cmd_classify(args):
    _need_base(args.base)
    res = classify(args.digits, args.base)
    return {"base": args.base, "digits": list(args.digits.elements)}, res.verdict, res.to_dict()


def _load_chain(path: str) -> ProductFormChain:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError("--chain-file", str(exc)) from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError("--chain-file", f"invalid JSON: {exc}") from None
        # accept a full report from classify/construct as well as a bare chain
        if "certificate" in data:
            data = data["certificate"]
        if "chain" in data and "layers" not in data:
            data = data["chain"]
        if not isinstance(data, dict):
            raise UsageError("--chain-file", "no chain found in the JSON document")
        return ProductFormChain.from_dict(data)
    return ProductFormChain.from_text(text)


def cmd_construct(args):
    chain = _load_chain(args.chain_file)
    d = chain.resulting_set
    if chain.order > 1:
        form = "order-k"
    elif any(s.offsets and any(s.offsets) for s in chain.stages):
        form = "modulo"
    else:
        form = "product-form"
    cert = {"form": form, "digits": list(d.elements), "chain": chain.to_dict()}
    verdict = "BUILT"
    if d.is_anchored:
        dec = is_tile_digit_set(d, chain.base)
        verdict = dec.verdict
        if dec.accepted:
            cert["blocking"] = list(dec.blocking.nodes)
    else:
        cert["reason"] = "result is not anchored, tile decision skipped"
    return {"chain_file": args.chain_file}, verdict, cert


def cmd_kernel(args):
    inputs = {k: getattr(args, k) for k in ("kind", "p", "q", "alpha", "n", "m", "ell", "notation")}
    if args.notation == "p2q":
        if args.kind not in ("I", "II", "III") or len(args.m) != 1:
            raise UsageError("--notation", "p2q takes --type I/II/III and a single --m")
        ell = None
        if args.ell is not None:
            if len(args.ell) != 1:
                raise UsageError("--ell", "p2q takes a single ell")
            ell = args.ell[0]
        if args.q is None or args.n is None:
            raise UsageError("--q" if args.q is None else "--n", "required with --notation p2q")
        spec = kernel_p2q(args.kind, args.p, args.q, m=args.m[0], n=args.n, ell=ell)
    else:
        spec = kernel_build(args.kind, args.p, args.q, alpha=args.alpha, n=args.n, m=args.m, ell=args.ell)
    cert = spec.to_dict() | {
        "polynomial": spec.describe(),
        "canonical": list(spec.canonical.elements),
        "value_at_one": spec.value_at_one(),
    }
    return inputs, "BUILT", cert


def cmd_phi_tree(args):
    _need_base(args.base)
    if args.depth < 1:
        raise UsageError("--depth", "depth must be at least 1")
    nodes = [{"level": lvl, "index": s} for lvl, s in walk(args.base, args.depth)]
    return {"base": args.base, "depth": args.depth}, "COMPUTED", {"nodes": nodes}


def cmd_count(args):
    if args.K < 1:
        raise UsageError("--K", "K must be at least 1")
    if args.matrix is not None:
        try:
            vecs = [_int_list(v) for v in args.digits.split(";") if v.strip()]
        except argparse.ArgumentTypeError as exc:
            raise UsageError("--digits", str(exc)) from None
        try:
            system = DigitSystem.from_matrix(args.matrix, vecs)
        except CardinalityMismatch:
            raise
        except ValueError as exc:
            raise UsageError("--matrix", str(exc)) from None
        inputs = {"matrix": args.matrix, "digits": vecs}
    else:
        if args.base is None:
            raise UsageError("--base", "give --base or --matrix")
        _need_base(args.base)
        try:
            digits = _int_list(args.digits)
            system = DigitSystem.scalar(args.base, digits)
        except argparse.ArgumentTypeError as exc:
            raise UsageError("--digits", str(exc)) from None
        except CardinalityMismatch:
            raise
        except ValueError as exc:
            raise UsageError("--digits", str(exc)) from None
        inputs = {"base": args.base, "digits": digits}
    inputs["K"] = args.K
    rep = counting_check(system, args.K)
    cert = {"counts": list(rep.counts), "expected": [system.b**k for k in range(1, len(rep.counts) + 1)]}
    if rep.collision:
        cert["failing_k"] = rep.failing_k
        cert["collision"] = rep.collision
    return inputs, rep.verdict, cert


COMMANDS = {
    "spectrum": cmd_spectrum,
    "tile-digit": cmd_tile_digit,
    "integer-tile": cmd_integer_tile,
    "classify": cmd_classify,
    "construct": cmd_construct,
    "kernel": cmd_kernel,
    "phi-tree": cmd_phi_tree,
    "count": cmd_count,
}

# input errors that belong to a particular flag
_FLAG_OF = {
    CardinalityMismatch: "--digits",
    NotAnchored: "--digits",
    UnsupportedBase: "--base",
    ChainFormatError: "--chain-file",
}

# a chain file that parses but does not describe a valid chain
_BAD_CHAIN = (NotAFactorization, CollisionInSum, OffsetCollision, ModulusMismatch, LayerNotAFactorization)


def _flag_for(exc: Exception, command: str) -> str | None:
    for cls, flag in _FLAG_OF.items():
        if isinstance(exc, cls):
            return flag
    if command == "construct" and isinstance(exc, _BAD_CHAIN):
        return "--chain-file"
    if isinstance(exc, ParameterOutOfRange) and command == "kernel":
        msg = str(exc)
        for word, flag in (("ell", "--ell"), ("m_", "--m"), ("t_2", "--m"), ("n must", "--n"),
                           ("alpha", "--alpha"), ("q must", "--q"), ("takes no q", "--q"), ("p must", "--p")):
            if word in msg:
                return flag
        return "--type"
    return None


# output --------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, list) and all(isinstance(v, int) for v in value):
        return "[" + ",".join(map(str, value)) + "]"
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def render_text(command: str, verdict: str, cert: dict) -> str:
    lines = [f"verdict: {verdict}"]
    if command == "phi-tree":
        lines += [f"{'  ' * (n['level'] - 1)}{n['index']}" for n in cert["nodes"]]
    elif command == "construct":
        lines += [f"form: {cert['form']}", f"digits: {_fmt(cert['digits'])}"]
        lines += [f"{k}: {_fmt(cert[k])}" for k in ("blocking", "reason") if k in cert]
        lines.append(ProductFormChain.from_dict(cert["chain"]).to_text().rstrip("\n"))
    elif command == "classify" and cert.get("chain"):
        rest = {k: v for k, v in cert.items() if k != "chain"}
        lines += [f"{k}: {_fmt(rest[k])}" for k in sorted(rest)]
        lines.append(ProductFormChain.from_dict(cert["chain"]).to_text().rstrip("\n"))
    else:
        lines += [f"{k}: {_fmt(cert[k])}" for k in sorted(cert)]
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        inputs, verdict, cert = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tilekit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"tilekit {args.command}: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except TilekitError as exc:
        flag = _flag_for(exc, args.command)
        if flag is not None:
            print(f"tilekit {args.command}: error: {flag}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"tilekit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (ValueError, ArithmeticError, RecursionError, MemoryError) as exc:
        print(f"tilekit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    elapsed = round((time.perf_counter() - start) * 1000, 3)
    if args.json:
        doc = {"command": args.command, "inputs": inputs, "verdict": verdict, "certificate": cert, "elapsed_ms": elapsed}
        print(json.dumps(doc, sort_keys=True))
    else:
        print(render_text(args.command, verdict, cert))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
