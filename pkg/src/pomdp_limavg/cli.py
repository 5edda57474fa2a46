"""Command-line interface.

Exit codes: 0 = YES / winning, 1 = NO / not winning / unknown,
2 = input error, 3 = capacity error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chain import certify_limavg1, certify_limavg_gt
from .collapse import collapsed_graph, memory_bound, strategy_from_graph
from .errors import CapacityError, ModelError
from .formats import parse_model, parse_strategy, serialize_model, serialize_strategy, transition_table
from .model import Pomdp
from .oracle import bounded_oracle
from .reductions import Pfa, reduce_strict_emptiness, reduce_value1
from .simulate import simulate
from .solver import DEFAULT_NODE_CAP, solve_limavg1

EXIT_YES, EXIT_NO, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None


def _load_model(path, kind=Pomdp):
    model = parse_model(_read(path))
    if not isinstance(model, kind):
        raise ModelError(f"{path}: expected a {'pfa' if kind is Pfa else 'pomdp'} document")
    return model


def _write(path, text):
    Path(path).write_text(text)


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(text)


def cmd_solve(args):
    model = _load_model(args.model)
    res = solve_limavg1(model, mode=args.mode, node_cap=args.node_cap)
    if res.strategy is not None and args.output:
        _write(args.output, serialize_strategy(res.strategy))
        _write(args.output + ".cert", res.certificate.to_text())
    text = [f"decision: {res.decision}",
            f"nodes: {res.stats['nodes']}  iterations: {res.stats['iterations']}"]
    if res.strategy is not None:
        text.append(f"memory_size: {res.strategy.size}")
        if not args.output:
            text.append(serialize_strategy(res.strategy).rstrip())
    _emit(args, res.to_dict(), "\n".join(text) + "\n")
    return EXIT_YES if res.winning else EXIT_NO


def cmd_verify(args):
    model = _load_model(args.model)
    sigma = parse_strategy(_read(args.strategy), model)
    if args.lam is None:
        cert = certify_limavg1(model, sigma)
    else:
        cert = certify_limavg_gt(model, sigma, args.lam)
    _emit(args, cert.to_dict(), cert.to_text())
    return EXIT_YES if cert.winning else EXIT_NO


def cmd_collapse(args):
    model = _load_model(args.model)
    sigma = parse_strategy(_read(args.strategy), model)
    graph = collapsed_graph(model, sigma)
    collapsed = strategy_from_graph(model, graph, name=f"{sigma.name}-collapsed")
    cert = certify_limavg1(model, collapsed)
    if args.output:
        _write(args.output, serialize_strategy(collapsed))
    if args.dot:
        _write(args.dot, graph.to_dot(model))
    payload = {"memory_size": collapsed.size, "input_memory_size": sigma.size,
               "memory_bound": memory_bound(model), "edges": len(graph.edges),
               "certificate": cert.to_dict()}
    text = (f"input memory: {sigma.size}\ncollapsed memory: {collapsed.size} "
            f"(bound {memory_bound(model)})\n" + cert.to_text())
    if not args.output:
        text += serialize_strategy(collapsed)
    _emit(args, payload, text)
    return EXIT_YES if cert.winning else EXIT_NO


def cmd_reduce(args):
    pfa = _load_model(args.pfa, kind=Pfa)
    model = reduce_strict_emptiness(pfa) if args.which == "strict-emptiness" else reduce_value1(pfa)
    doc = serialize_model(model)
    if args.output:
        _write(args.output, doc)
    if args.table:
        sys.stdout.write(transition_table(model))
    elif not args.output:
        sys.stdout.write(doc)
    return EXIT_YES


def cmd_oracle(args):
    model = _load_model(args.model)
    res = bounded_oracle(model, args.memory, support_only=not args.pure, budget=args.budget)
    payload = {"decision": res.answer, "explored": res.explored, "exhausted": res.exhausted,
               "memory_size": res.strategy.size if res.strategy else 0}
    text = f"decision: {res.answer}\nexplored: {res.explored}\nexhausted: {res.exhausted}\n"
    if res.strategy is not None:
        text += serialize_strategy(res.strategy)
    _emit(args, payload, text)
    return EXIT_YES if res.found else EXIT_NO


def cmd_simulate(args):
    model = _load_model(args.model)
    sigma = parse_strategy(_read(args.strategy), model)
    res = simulate(model, sigma, args.steps, args.seed)
    text = f"steps: {res.steps}\nseed: {res.seed}\nempirical_average: {res.empirical_average:.6f}\n"
    for (s, m), c in sorted(res.visit_counts.items()):
        text += f"visits {s} {m} {c}\n"
    _emit(args, res.to_dict(), text)
    return EXIT_YES


def build_parser():
    p = argparse.ArgumentParser(prog="pomdp-limavg",
                                description="Almost-sure limit-average analysis of POMDPs")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="decide and synthesize a LimAvg=1 strategy")
    s.add_argument("model")
    s.add_argument("-o", "--output", help="write strategy here (certificate to <output>.cert)")
    s.add_argument("--mode", choices=["reduced", "exact"], default="reduced")
    s.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="certify a strategy")
    s.add_argument("model")
    s.add_argument("strategy")
    s.add_argument("--lambda", dest="lam", type=float, help="check LimAvg > lambda instead of = 1")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("collapse", help="collapse a strategy to its annotation quotient")
    s.add_argument("model")
    s.add_argument("strategy")
    s.add_argument("-o", "--output")
    s.add_argument("--dot", help="write the collapsed graph in DOT format")
    s.set_defaults(func=cmd_collapse)

    s = sub.add_parser("reduce", help="build a PFA reduction gadget")
    s.add_argument("which", choices=["strict-emptiness", "value1"])
    s.add_argument("pfa")
    s.add_argument("-o", "--output")
    s.add_argument("--table", action="store_true", help="print a transition table")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("oracle", help="bounded brute-force strategy search")
    s.add_argument("model")
    s.add_argument("--memory", "-k", type=int, default=2)
    s.add_argument("--pure", action="store_true", help="pure strategies only")
    s.add_argument("--budget", type=int, default=200_000)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("simulate", help="Monte Carlo run of a strategy")
    s.add_argument("model")
    s.add_argument("strategy")
    s.add_argument("--steps", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    # allow --json after the subcommand too
    argv = list(sys.argv[1:] if argv is None else argv)
    json_flag = "--json" in argv
    argv = [a for a in argv if a != "--json"]
    args = parser.parse_args(argv)
    args.json = json_flag
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics[5:]:
            print(f"  {d}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
