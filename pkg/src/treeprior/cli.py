"""Command-line front end.

Exit codes: 0 success, 1 failed ``--oracle`` cross-check, 2 parse or
validation error, 3 numeric error (zero evidence, overflow), 4 enumeration
cap exceeded.

``--format=machine`` prints one ``key<TAB>value`` line per field, floats as
``%.17g`` (round-trip exact, locale independent).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter

from . import oracle
from .bayes import LikelihoodSpec, PathLikelihoodSpec, posterior_general, posterior_path
from .distribution import node_event_probs, prob, sample, total_mass
from .errors import CapExceededError, NumericError, TreePriorError
from .mode import mode
from .modelfile import (
    ModelFileError,
    dump_model,
    format_path,
    format_tree,
    load_json,
    load_model,
    parse_path,
    parse_table,
    parse_tree,
)
from .recursions import entropy
from .seqmodel import ContextTreeModel, evaluate_sequence, markov_source, mixture_log_prob
from .tree_core import DEFAULT_CAP, FullSubtree, count_subtrees, enumerate_subtrees

EXIT_ORACLE_FAIL = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_CAP = 4

ORACLE_TOL = 1e-10


class Report:
    def __init__(self, fmt: str, out=None):
        self.fmt = fmt
        self.out = out or sys.stdout

    def field(self, key: str, value):
        if isinstance(value, float):
            text = format(value, ".17g") if self.fmt == "machine" else format(value, ".12g")
        else:
            text = str(value)
        if self.fmt == "machine":
            print(f"{key}\t{text}", file=self.out)
        else:
            print(f"{key.replace('_', ' ')}: {text}", file=self.out)

    def line(self, text: str):
        print(text, file=self.out)


def _read_table(path: str, shape, field: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = load_json(fh.read(), field)
    return parse_table(doc, shape, field)


def _oracle_verdict(report: Report, errors: list[float]) -> int:
    worst = max(errors) if errors else 0.0
    report.field("oracle_max_error", worst)
    if worst < ORACLE_TOL:
        report.line("oracle check: PASS (rel err < 1e-10)")
        return 0
    report.line(f"oracle check: FAIL (rel err {worst:.3g} >= 1e-10)")
    return EXIT_ORACLE_FAIL


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def cmd_info(args, report: Report) -> int:
    model = load_model(args.model)
    d = model.dist
    shape = d.shape
    unit = 2.0 if args.bits else math.e
    report.field("k", shape.k)
    report.field("d_max", shape.d_max)
    report.field("nodes", shape.num_nodes)
    too_many = None
    try:
        report.field("subtrees", count_subtrees(shape, args.cap))
    except CapExceededError as e:
        too_many = e
        rel = "=" if e.exact else ">="
        report.field("subtrees", f"{rel} {e.count} (exceeds cap {args.cap})")
    report.field("total_mass", total_mass(d))
    report.field("entropy", entropy(d, unit))
    report.field("entropy_unit", "bits" if args.bits else "nats")
    best = mode(d)
    report.field("mode_tree", format_tree(best.tree.inner, shape.k))
    report.field("mode_prob", best.value)
    if not args.oracle:
        return 0
    if too_many is not None:
        raise too_many
    summary = oracle.oracle_summary(d, args.cap)
    report.field("oracle_total_mass", summary.total)
    report.field("oracle_entropy", summary.entropy / math.log(unit))
    report.field("oracle_mode_prob", summary.max)
    errors = [
        _rel(total_mass(d), summary.total),
        _rel(entropy(d), summary.entropy),
        _rel(best.value, summary.max),
    ]
    return _oracle_verdict(report, errors)


def cmd_query(args, report: Report) -> int:
    d = load_model(args.model).dist
    shape = d.shape
    if args.node is not None:
        v = parse_path(args.node, shape, "node")
        ev = node_event_probs(d, v)
        report.field("node", json.dumps(args.node))
        report.field("p_in_tree", ev.in_tree)
        report.field("p_inner", ev.inner)
        report.field("p_leaf", ev.leaf)
        if args.oracle:
            truth = oracle.oracle_node_events(d, v, args.cap)
            return _oracle_verdict(report, [_rel(a, b) for a, b in zip(ev, truth)])
        return 0
    t = FullSubtree(shape, parse_tree(args.tree, shape))
    p = prob(d, t)
    report.field("tree", format_tree(t.inner, shape.k))
    report.field("prob", p)
    if args.oracle:
        return _oracle_verdict(report, [_rel(p, oracle.literal_prob(d, t))])
    return 0


def cmd_sample(args, report: Report) -> int:
    d = load_model(args.model).dist
    if args.n < 1:
        raise ModelFileError("-n must be >= 1")
    trees = sample(d, args.seed, size=args.n)
    if not args.table:
        for t in trees:
            report.line(format_tree(t.inner, d.shape.k))
        return 0
    counts = Counter(trees)
    for t in enumerate_subtrees(d.shape, args.cap):
        c = counts.get(t, 0)
        tree = format_tree(t.inner, d.shape.k)
        freq, exact = c / args.n, prob(d, t)
        if report.fmt == "machine":
            report.line(f"{tree}\t{c}\t{freq:.17g}\t{exact:.17g}")
        else:
            report.line(f"{tree:<40} count={c:<8d} freq={freq:.6f} prob={exact:.6f}")
    return 0


def cmd_posterior(args, report: Report) -> int:
    model = load_model(args.model)
    d = model.dist
    shape = d.shape
    if args.v_end is not None:
        if args.h_prime is None:
            raise ModelFileError("--v-end requires --h-prime")
        v_end = parse_path(args.v_end, shape, "v_end")
        if not shape.is_leaf(v_end):
            raise ModelFileError(f"v_end: {args.v_end!r} must have depth d_max={shape.d_max}")
        table = _read_table(args.h_prime, shape, "h_prime")
        off_path = [v for v in table if v != v_end[: len(v)]]
        if off_path:
            raise ModelFileError(
                f"h_prime: node {format_path(off_path[0], shape.k)!r} is not on the path to v_end"
            )
        like = PathLikelihoodSpec(v_end, table)
        post = posterior_path(d, like)
    else:
        if args.g is None and args.h is None:
            raise ModelFileError("posterior needs --g/--h tables or --v-end with --h-prime")
        g = _read_table(args.g, shape, "g") if args.g else {}
        h = _read_table(args.h, shape, "h") if args.h else {}
        gv = {v: g.get(v, 1.0) for v in shape.nodes()}
        hv = {v: h.get(v, 1.0) for v in shape.nodes()}
        like = LikelihoodSpec(gv, hv)
        post = posterior_general(d, like)
    report.field("marginal", post.marginal)
    report.field("log_marginal", post.log_marginal)
    report.field("nodes_touched", post.nodes_touched)
    text = dump_model(post.dist)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        report.field("posterior_model", args.out)
    elif report.fmt == "machine":
        report.field("posterior_model", json.dumps(json.loads(text)))
    else:
        report.line(text)
    if not args.oracle:
        return 0
    general = like if isinstance(like, LikelihoodSpec) else like.as_general()
    gtab, htab = general.evaluate(shape, None)
    nodes = list(shape.nodes())
    gd = dict(zip(nodes, gtab))
    hd = dict(zip(nodes, htab))
    likelihood = oracle.factorized_likelihood(lambda x, v: gd[v], lambda x, v: hd[v])
    truth = oracle.oracle_posterior(d, likelihood, None, args.cap)
    errors = [_rel(post.marginal, truth.marginal)]
    errors += [abs(prob(post.dist, r.tree) - r.posterior) for r in truth.rows]
    return _oracle_verdict(report, errors)


def _read_bits(path: str, raw: bool) -> list[int]:
    if raw:
        with open(path, "rb") as fh:
            data = fh.read()
        return [(byte >> (7 - i)) & 1 for byte in data for i in range(8)]
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    bits = []
    for lineno, line in enumerate(text.splitlines(), 1):
        for col, ch in enumerate(line, 1):
            if ch in "01":
                bits.append(ord(ch) - 48)
            elif not ch.isspace():
                raise ModelFileError(f"input line {lineno} column {col}: non-binary symbol {ch!r}")
    return bits


def cmd_ctw(args, report: Report) -> int:
    xs = _read_bits(args.input, args.raw)
    model = ContextTreeModel(args.d_max, 2, args.alpha)
    prior = model.dist
    result = evaluate_sequence(model, xs)
    n = len(xs)
    report.field("symbols", n)
    report.field("code_length_bits", result.bits)
    report.field("bits_per_symbol", result.bits / n if n else 0.0)
    report.field("map_tree", format_tree(result.map_tree.inner, 2))
    report.field("map_prob", result.map_prob)
    if not args.oracle:
        return 0
    if n > 10 or args.d_max > 2:
        report.line("oracle check: SKIPPED (needs N <= 10 and d_max <= 2)")
        return 0
    batch = mixture_log_prob(xs, prior)
    seq = -result.bits * math.log(2)
    return _oracle_verdict(report, [_rel(math.exp(seq), math.exp(batch))])


def cmd_gen_markov(args, report: Report) -> int:
    xs = markov_source(args.n, args.flip, args.seed)
    text = "".join(map(str, xs))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        report.line(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--oracle", action="store_true", help="cross-check against brute-force enumeration")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max number of enumerated trees")
    unit = common.add_mutually_exclusive_group()
    unit.add_argument("--bits", dest="bits", action="store_true", default=True, help="report entropy in bits (default)")
    unit.add_argument("--nats", dest="bits", action="store_false", help="report entropy in nats")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--format", choices=("human", "machine"), default="human")

    parser = argparse.ArgumentParser(
        prog="treeprior", description="Distribution on full rooted subtrees: queries, posteriors, CTW demo."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", parents=[common], help="summary of a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("query", parents=[common], help="node-event or tree probability")
    p.add_argument("model")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--node", help='node path, e.g. "01" ("" is the root)')
    q.add_argument("--tree", help='JSON list of inner-node paths, e.g. \'["", "1"]\'')
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sample", parents=[common], help="draw trees")
    p.add_argument("model")
    p.add_argument("-n", type=int, default=1)
    p.add_argument("--table", action="store_true", help="print a frequency table instead of trees")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("posterior", parents=[common], help="condition on an observation")
    p.add_argument("model")
    p.add_argument("--g", help="JSON table of g(x, v) at inner nodes (missing = 1)")
    p.add_argument("--h", help="JSON table of h(x, v) (missing = 1)")
    p.add_argument("--v-end", dest="v_end", help="base-tree leaf ending the likelihood path")
    p.add_argument("--h-prime", dest="h_prime", help="JSON table of h'(x, v) on the path (missing = 1)")
    p.add_argument("-o", "--out", help="write the posterior model file here")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("ctw", parents=[common], help="context-tree code length of a binary sequence")
    p.add_argument("input", help="0/1 text file (whitespace ignored), or raw bytes with --raw")
    p.add_argument("--d-max", dest="d_max", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.5, help="prior alpha at every inner node")
    p.add_argument("--raw", action="store_true", help="read input as raw bytes, MSB first")
    p.set_defaults(func=cmd_ctw)

    p = sub.add_parser("gen-markov", parents=[common], help="write a binary Markov source sample")
    p.add_argument("-n", type=int, default=4096)
    p.add_argument("--flip", type=float, default=0.1)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen_markov)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report = Report(args.format)
    try:
        return args.func(args, report)
    except CapExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TreePriorError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
