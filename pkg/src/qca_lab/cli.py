"""``qca-lab`` command-line front end.

Every verb prints one JSON report (sorted keys, floats at 12 significant
digits) on stdout. Failures print a one-line message on stderr and exit with
the code attached to the error family: 2 bad input, 3 resource cap, 4 empty
result, 5 request ruled out by the rule's structure (e.g. falsifying a
reversible rule).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .core import Rule, iterate, parse_config, parse_rule
from .debruijn import build_pair_graph, classify, export_dot
from .errors import InputError, QCAError, WindowTooLarge, ZeroVector
from .library import NAMED
from .locality import falsify_uniform_locality, signalling_experiment, verify_locality
from .oracle import brute_injective, brute_local_inverse
from .quantum import apply_F, apply_F_dagger, dump_state, load_state


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def render(report: dict) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2) + "\n"


def load_rule(name: str) -> Rule:
    """Read a rule file, or fall back to a built-in rule name."""
    path = Path(name)
    if path.is_file():
        try:
            return parse_rule(path.read_text(encoding="utf-8"))
        except UnicodeDecodeError as exc:
            raise InputError(f"{name}: {exc}") from None
    if name in NAMED:
        return NAMED[name]()
    raise InputError(f"no rule file {name!r} (built-in names: {', '.join(sorted(NAMED))})")


def parse_cells(text: str) -> list[int]:
    """``"0,2,5"``, ``"-3..3"`` or a mix such as ``"-1..1,4"``."""
    cells = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if ".." in part:
                a, b = part.split("..")
                cells.extend(range(int(a), int(b) + 1))
            else:
                cells.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cell list {text!r}") from None
    return sorted(set(cells))


def _oracle_agreement(rule: Rule, report) -> bool:
    if brute_injective(rule).injective != report.injective_finite:
        return False
    max_r = 4 if len(rule.alphabet) == 2 else 2
    found = any(brute_local_inverse(rule, r) is not None for r in range(max_r + 1))
    return found == report.reversible


def cmd_analyze(args, rule: Rule) -> dict:
    report = classify(rule)
    out = report.as_dict()
    out["quantization_uniformly_local"] = report.reversible
    out["quantization_everywhere_local"] = report.open
    if args.oracle:
        out["oracle_agreement"] = _oracle_agreement(rule, report)
    return out


def cmd_graph(args, rule: Rule) -> dict:
    g = build_pair_graph(rule)
    if args.dot:
        Path(args.dot).write_text(export_dot(g), encoding="utf-8")
    return {
        "vertices": g.vertex_count,
        "edges": g.edge_count,
        "sccs": g.scc_count,
        "overlap": g.overlap,
        "dot": args.dot,
    }


def cmd_step(args, rule: Rule) -> dict:
    a = rule.alphabet
    if args.quantum:
        try:
            data = json.loads(Path(args.quantum).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"state file is not valid JSON: {exc}") from None
        state = load_state(data, a)
        if args.adjoint:
            out = apply_F_dagger(rule, state)
            if out.is_zero:
                raise ZeroVector("the adjoint annihilates this state (no preimages)")
        else:
            out = apply_F(rule, state)
        return {"adjoint": args.adjoint, "state": dump_state(out, a), "non_isometric": out.non_isometric}
    if args.config is None:
        raise InputError("step needs a configuration literal or --quantum")
    if args.steps < 0:
        raise InputError("--steps must be nonnegative")
    orbit = iterate(rule, parse_config(args.config, a), args.steps)
    return {"steps": args.steps, "orbit": [str(c) for c in orbit], "final": str(orbit[-1])}


def cmd_locality(args, rule: Rule) -> dict:
    report = verify_locality(rule, args.region, args.neighborhood, args.window)
    if report.verdict == "inconclusive":
        raise WindowTooLarge(f"window {report.window} exceeds the enumeration cap; verdict inconclusive")
    return report.as_dict()


def cmd_falsify(args, rule: Rule) -> dict:
    k = args.radius
    if k < 0:
        raise InputError("--radius must be nonnegative")
    return falsify_uniform_locality(rule, range(-k, k + 1)).as_dict()


def cmd_signal(args, rule: Rule) -> dict:
    a = rule.alphabet
    if args.auto:
        w = falsify_uniform_locality(rule, [0])
        x, y, bob, alice = w.x, w.y, w.bob_cell, w.image_diff
    else:
        missing = [n for n in ("x", "y", "bob", "alice") if getattr(args, n) is None]
        if missing:
            raise InputError(f"signal needs --auto or all of --x --y --bob --alice (missing {missing})")
        x, y = parse_config(args.x, a), parse_config(args.y, a)
        bob, alice = args.bob, args.alice
    return signalling_experiment(rule, x, y, bob, alice).as_dict()


COMMANDS = {
    "analyze": cmd_analyze,
    "graph": cmd_graph,
    "step": cmd_step,
    "locality": cmd_locality,
    "falsify": cmd_falsify,
    "signal": cmd_signal,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qca-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def verb(name, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("rule", help="rule JSON file or built-in name")
        return s

    s = verb("analyze", "classify the rule via its pair diagram")
    s.add_argument("--oracle", action="store_true", help="cross-check by brute force")
    s = verb("graph", "build the pair diagram")
    s.add_argument("--dot", metavar="PATH", help="write Graphviz output here")
    s = verb("step", "evolve a configuration or a state file")
    s.add_argument("config", nargs="?", help='configuration literal such as "0|111"')
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--quantum", metavar="STATE", help="JSON state file; one linearized step")
    s.add_argument("--adjoint", action="store_true", help="apply the adjoint instead")
    s = verb("locality", "test locality of the quantized rule at a region")
    s.add_argument("--region", type=parse_cells, required=True)
    s.add_argument("--neighborhood", type=parse_cells, required=True)
    s.add_argument("--window", type=parse_cells)
    s = verb("falsify", "build a witness against uniform locality")
    s.add_argument("--radius", type=int, default=1, help="neighborhood [-k, k]")
    s = verb("signal", "two-party signalling experiment")
    s.add_argument("--auto", action="store_true", help="use the falsifier's witness")
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--bob", type=int)
    s.add_argument("--alice", type=parse_cells)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rule = load_rule(args.rule)
        result = COMMANDS[args.command](args, rule)
    except QCAError as exc:
        print(f"qca-lab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"qca-lab {args.command}: {exc}", file=sys.stderr)
        return InputError.exit_code
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "rule")}
    report = {
        "command": args.command,
        "rule": rule.name,
        "version": __version__,
        "flags": flags,
        "result": result,
    }
    sys.stdout.write(render(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
