"""Command-line front end.

Every subcommand prints one compact JSON document on stdout.  Failures print
a single JSON line ``{"error": kind, "message": ...}`` on stderr and exit
with 2 (bad input), 3 (budget), 4 (``UNKNOWN`` under ``--require-certain``)
or 1 (internal cross-check failure).

Inputs are file paths or ``corpus:NAME`` for the bundled examples.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import signal
import sys
from fractions import Fraction
from importlib import resources

from .classify import (
    FOUND,
    PROVEN_NONE,
    UNKNOWN,
    Budget,
    aut_orbits,
    classify_diag_distinct,
    classify_general,
    find_separator,
)
from .errors import BudgetExceeded, DeadlineExceeded, HomkitError, ParseError, PreconditionError
from .gadgets import (
    FAMILIES,
    gadget_from_json,
    graph_from_json,
    graph_to_json,
    random_gadget,
    replace_edges,
    ring_transform,
    signature,
)
from .interpolation import bridge_reduce, loop_reduce, stretch_reduce, thicken_reduce, verify_transcript
from .matrix import matrix_from_json, predicates, to_fraction
from .partition import DEFAULT_CAP, count_enumerate, count_via_vandermonde, eval_auto

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_UNCERTAIN = 4


class Uncertain(Exception):
    def __init__(self, doc: dict):
        super().__init__("result is UNKNOWN")
        self.doc = doc


# ---------------------------------------------------------------- input


def _read_text(ref: str) -> tuple[str, str]:
    if ref.startswith("corpus:"):
        name = ref[len("corpus:"):]
        if not name.endswith(".json"):
            name += ".json"
        node = resources.files("homkit").joinpath("data", name)
        if not node.is_file():
            raise PreconditionError(f"no bundled example named {ref!r}")
        return node.read_text(encoding="utf-8"), ref
    try:
        with open(ref, encoding="utf-8") as fh:
            return fh.read(), ref
    except OSError as exc:
        raise PreconditionError(f"cannot read {ref}: {exc.strerror}") from None


def load_json(ref: str):
    text, name = _read_text(ref)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"{name}: {exc.msg}", offset) from None


def _matrix(ref):
    return matrix_from_json(load_json(ref))


def _graph(ref):
    return graph_from_json(load_json(ref))


def _rationals(text: str) -> list[Fraction]:
    try:
        return [to_fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"cannot parse rational list {text!r}") from exc


# ---------------------------------------------------------------- subcommands


def cmd_eval(args) -> dict:
    return eval_auto(_matrix(args.matrix), _graph(args.graph), args.cap).to_json()


def cmd_count(args) -> dict:
    m, g = _matrix(args.matrix), _graph(args.graph)
    direct = count_enumerate(m, g, args.cap)
    via = count_via_vandermonde(m, g)
    return {
        "profile": {str(x): str(c) for x, c in direct.counts},
        "total": str(direct.total),
        "methods_agree": direct == via,
    }


def _gadget(args):
    if getattr(args, "family_pos", None):
        if args.family_pos not in FAMILIES:
            raise PreconditionError(f"unknown family {args.family_pos!r}; choose from {sorted(FAMILIES)}")
        args.family = args.family_pos
        args.n = args.n_pos if args.n_pos is not None else args.n
    if args.random:
        return random_gadget(random.Random(args.seed), args.max_vertices)
    if args.family:
        if args.n is None:
            raise PreconditionError("--family needs -n")
        return FAMILIES[args.family](args.n)
    if args.file:
        return gadget_from_json(load_json(args.file))
    raise PreconditionError("give one of --family, --file or --random")


def cmd_gadget(args) -> dict:
    k = _gadget(args)
    out = {"gadget": k.to_json(), "planar": k.planar_certified}
    if args.matrix:
        out["signature"] = signature(k, _matrix(args.matrix), args.cap).to_json()
    return out


def cmd_transform(args) -> dict:
    g = _graph(args.graph)
    if args.ring:
        m_param, n_param = args.ring
        out = ring_transform(g, m_param, n_param)
    else:
        k = _gadget(args)
        edges = None if args.edges is None else [int(x) for x in args.edges.split(",") if x.strip()]
        out = replace_edges(g, k, edges)
    return {"graph": graph_to_json(out)}


def cmd_reduce(args) -> dict:
    m, g = _matrix(args.matrix), _graph(args.graph)
    if args.kind in ("thicken", "loop"):
        if args.z is None:
            raise PreconditionError(f"{args.kind} reduction needs --z")
        red = (thicken_reduce if args.kind == "thicken" else loop_reduce)(m, g, _rationals(args.z))
        check = verify_transcript(red.transcript)
        return {"value": str(red.value), "verified": check.ok, "transcript": red.transcript.to_json()}
    if args.theta is None:
        raise PreconditionError(f"{args.kind} reduction needs --theta")
    theta = _rationals(args.theta)[0]
    fn = stretch_reduce if args.kind == "stretch" else bridge_reduce
    res = fn(m, g, theta=theta, allow_float=args.float)
    if isinstance(res, Fraction):
        return {"value": str(res), "exact": True}
    return {"value": float(res.value), "nodes": res.nodes, "exact": False}


def _budget(args) -> Budget:
    return Budget(depth=args.budget_depth, bits=args.budget_bits, states=args.budget_states, cap=args.cap)


def cmd_classify(args) -> dict:
    m = _matrix(args.matrix)
    verdict = classify_diag_distinct(m) if args.diag_distinct else classify_general(m, _budget(args))
    doc = verdict.to_json()
    if args.require_certain and verdict.outcome == UNKNOWN:
        raise Uncertain(doc)
    return doc


def cmd_orbits(args) -> dict:
    return aut_orbits(_matrix(args.matrix)).to_json()


def cmd_separate(args) -> dict:
    res = find_separator(_matrix(args.matrix), args.i, args.j, _budget(args))
    doc = res.to_json()
    if args.require_certain and res.status not in (FOUND, PROVEN_NONE):
        raise Uncertain(doc)
    return doc


def cmd_predicates(args) -> dict:
    return predicates(_matrix(args.matrix), require_aleph=args.aleph).to_json()


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    # usage errors go through the same one-line diagnostic as everything else
    def error(self, message):
        raise PreconditionError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="homkit", description="Exact planar graph homomorphism toolkit.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized helpers")
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="brute-force work cap")
    sub = p.add_subparsers(dest="command", required=True)

    def with_matrix(sp, required=True):
        sp.add_argument("-m", "--matrix", required=required, help="matrix JSON path or corpus:NAME")

    def with_graph(sp):
        sp.add_argument("-g", "--graph", required=True, help="graph JSON path or corpus:NAME")

    def with_gadget(sp):
        sp.add_argument("--family", choices=sorted(FAMILIES))
        sp.add_argument("-n", type=int)
        sp.add_argument("--file", help="gadget JSON")
        sp.add_argument("--random", action="store_true", help="random planar gadget from --seed")
        sp.add_argument("--max-vertices", type=int, default=4)

    def with_budget(sp):
        sp.add_argument("--budget-depth", type=int, default=6)
        sp.add_argument("--budget-bits", type=int, default=4096)
        sp.add_argument("--budget-states", type=int, default=4000)
        sp.add_argument("--require-certain", action="store_true", help="exit 4 on UNKNOWN")

    sp = sub.add_parser("eval", help="partition function with strategy tag")
    with_matrix(sp)
    with_graph(sp)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("count", help="value histogram by enumeration and interpolation")
    with_matrix(sp)
    with_graph(sp)
    sp.set_defaults(fn=cmd_count)

    sp = sub.add_parser("gadget", help="construct a gadget and optionally its signature")
    sp.add_argument("family_pos", nargs="?", metavar="FAMILY")
    sp.add_argument("n_pos", nargs="?", type=int, metavar="N")
    with_gadget(sp)
    with_matrix(sp, required=False)
    sp.set_defaults(fn=cmd_gadget)

    sp = sub.add_parser("transform", help="edge replacement or ring transform")
    with_graph(sp)
    with_gadget(sp)
    sp.add_argument("--edges", help="comma-separated edge ids to replace (default all)")
    sp.add_argument("--ring", type=int, nargs=2, metavar=("M", "N"))
    sp.set_defaults(fn=cmd_transform)

    sp = sub.add_parser("reduce", help="interpolation reductions")
    sp.add_argument("kind", choices=["thicken", "loop", "stretch", "bridge"])
    with_matrix(sp)
    with_graph(sp)
    sp.add_argument("--z", help="comma-separated rationals")
    sp.add_argument("--theta", help="exponent; non-integers need --float")
    sp.add_argument("--float", action="store_true", help="allow approximate output")
    sp.set_defaults(fn=cmd_reduce)

    sp = sub.add_parser("classify", help="tractable / hard verdict")
    with_matrix(sp)
    with_budget(sp)
    sp.add_argument("--diag-distinct", action="store_true", help="use the distinct-diagonal criterion only")
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("orbits", help="automorphism orbits")
    with_matrix(sp)
    sp.set_defaults(fn=cmd_orbits)

    sp = sub.add_parser("separate", help="search a planar gadget separating two indices")
    with_matrix(sp)
    sp.add_argument("-i", type=int, required=True)
    sp.add_argument("-j", type=int, required=True)
    with_budget(sp)
    sp.set_defaults(fn=cmd_separate)

    sp = sub.add_parser("predicates", help="distinctness predicates")
    with_matrix(sp)
    sp.add_argument("--aleph", action="store_true", help="fail if aleph is undefined")
    sp.set_defaults(fn=cmd_predicates)
    return p


def _dumps(doc) -> str:
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def _diagnose(kind: str, message: str) -> None:
    sys.stderr.write(_dumps({"error": kind, "message": message}) + "\n")


def _arm_timer() -> None:
    raw = os.environ.get("HOMKIT_BUDGET_MS")
    if not raw or not hasattr(signal, "setitimer"):
        return
    try:
        ms = int(raw)
    except ValueError:
        raise PreconditionError(f"HOMKIT_BUDGET_MS must be an integer, got {raw!r}") from None

    def expire(signum, frame):
        raise DeadlineExceeded(f"wall-clock budget of {ms} ms exhausted")

    signal.signal(signal.SIGALRM, expire)
    signal.setitimer(signal.ITIMER_REAL, ms / 1000)


def _disarm_timer() -> None:
    if os.environ.get("HOMKIT_BUDGET_MS") and hasattr(signal, "setitimer"):
        signal.setitimer(signal.ITIMER_REAL, 0)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except PreconditionError as exc:
        _diagnose(exc.kind, str(exc))
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    code = EXIT_OK
    try:
        _arm_timer()
        try:
            doc = args.fn(args)
        finally:
            _disarm_timer()
    except Uncertain as exc:
        doc, code = exc.doc, EXIT_UNCERTAIN
        _diagnose("uncertain", "result is UNKNOWN and --require-certain was given")
    except (PreconditionError, ParseError) as exc:
        _diagnose(exc.kind, str(exc))
        return EXIT_INPUT
    except BudgetExceeded as exc:
        _diagnose(exc.kind, str(exc))
        return EXIT_BUDGET
    except HomkitError as exc:
        _diagnose(exc.kind, str(exc))
        return EXIT_INTERNAL
    text = _dumps(doc) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
