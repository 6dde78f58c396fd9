"""Batch driver: certify tables, search gadgets, evaluate extractors, run
protocol simulations, reproduce theorem arithmetic.

Exit codes are stable API: 0 ok, 2 target unreachable, 3 budget exceeded,
4 config invariant violated, 5 theorem constraint violated.  Every run
writes a ``manifest.json`` (schema ``manifest-v1``) capturing the
arguments, seeds, package version, and the cache digests it consumed;
re-running from a manifest reproduces the outputs bit-identically apart
from wall-clock fields, which live under ``volatile`` keys.

Reports are JSON for machines plus CSV for tables; bit strings are hex,
most significant bit first.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BudgetExceededError, ConstraintViolatedError,
                     InvalidInputError, TargetUnreachableError)

EXIT_OK = 0
EXIT_UNREACHABLE = 2
EXIT_BUDGET = 3
EXIT_CONFIG = 4
EXIT_CONSTRAINT = 5


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TargetUnreachableError as exc:
        print(f"target unreachable: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConstraintViolatedError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONSTRAINT
    except InvalidInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="extractomat",
        description="extractor certification, evaluation and simulation")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify a random-table extractor")
    c.add_argument("--arity", type=int, default=2)
    c.add_argument("--n", type=int, nargs="+", required=True,
                   help="input widths (one value is broadcast to all inputs)")
    c.add_argument("--k", type=float, nargs="+", required=True)
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--kind", choices=["2-source", "t-source", "seeded"])
    c.add_argument("--eps", type=float, help="target error; retries up to 32 draws")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mode", choices=["auto", "exhaustive", "sampled"],
                   default="auto")
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--leak-bits", type=int, default=0)
    c.add_argument("--strong", type=int, nargs="*", default=[])
    c.add_argument("--cache", type=Path, default=None)
    c.add_argument("--out-dir", type=Path, default=Path("."))
    c.add_argument("--threads", "--workers", dest="threads", type=int, default=1)
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("eval", help="run an oracle entry point or lemma check")
    e.add_argument("--extractor", help="ip | deor | toeplitz | path to .xtab")
    e.add_argument("--lemma", help="L2.2 | L2.5 (checker over random joints)")
    e.add_argument("--n", type=int)
    e.add_argument("--m", type=int, default=1)
    e.add_argument("--k", type=float)
    e.add_argument("--k1", type=float)
    e.add_argument("--k2", type=float)
    e.add_argument("--strong", type=int, default=None,
                   help="input index for a strong two-source evaluation")
    e.add_argument("--strong-seed", action="store_true",
                   help="seeded: evaluate jointly with the seed (default)")
    e.add_argument("--marginal", action="store_true",
                   help="seeded: evaluate the output marginal only")
    e.add_argument("--leak-bits", type=int, default=0)
    e.add_argument("--mode", choices=["auto", "exhaustive", "sampled"],
                   default="auto")
    e.add_argument("--samples", type=int, default=200)
    e.add_argument("--trials", type=int, default=1000)
    e.add_argument("--eps", type=float, default=0.25)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--threads", "--workers", dest="threads", type=int, default=1)
    e.add_argument("--out-dir", type=Path, default=Path("."))
    e.set_defaults(func=cmd_eval)

    n = sub.add_parser("netsim", help="run a protocol ensemble and evaluate it")
    n.add_argument("--config", type=Path, required=True)
    n.add_argument("--protocol", choices=["extpub", "geqr"])
    n.add_argument("--adv", choices=["none", "ir", "qr-analog"], default="none")
    n.add_argument("--runs", type=int, default=1000)
    n.add_argument("--exact", action="store_true",
                   help="exact micro-scale evaluation instead of sampling")
    n.add_argument("--cache", type=Path, default=None)
    n.add_argument("--out-dir", type=Path, default=Path("."))
    n.add_argument("--threads", "--workers", dest="threads", type=int, default=1)
    n.set_defaults(func=cmd_netsim)

    l = sub.add_parser("ledger", help="reproduce a theorem's parameter arithmetic")
    l.add_argument("--theorem", required=True)
    for flag, typ in [("n", float), ("n1", float), ("n2", float),
                      ("k", float), ("k1", float), ("k2", float),
                      ("m", float), ("delta", float), ("alpha", float),
                      ("beta", float), ("eps", float), ("eps1", float),
                      ("eps2", float), ("eps3", float), ("k3", float),
                      ("d", float), ("t", int), ("l", int),
                      ("rush-bits", float), ("D", int), ("M", int),
                      ("C", float)]:
        l.add_argument(f"--{flag}", type=typ, default=None)
    l.add_argument("--out-dir", type=Path, default=Path("."))
    l.set_defaults(func=cmd_ledger)
    return p


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_default) + "\n")


def _default(obj):
    from fractions import Fraction
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, frozenset):
        return sorted(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _manifest(args, out_dir: Path, digests, outputs):
    payload = {
        "schema": "manifest-v1",
        "command": args.command,
        "args": {k: (str(v) if isinstance(v, Path) else v)
                 for k, v in vars(args).items() if k != "func"},
        "version": __version__,
        "cache_digests": sorted(set(digests)),
        "outputs": [str(o) for o in outputs],
    }
    _write_json(out_dir / "manifest.json", payload)


# ----------------------------------------------------------------------
# certify
# ----------------------------------------------------------------------

def cmd_certify(args) -> int:
    from . import certify as cert
    widths = args.n if len(args.n) > 1 else args.n * args.arity
    ks = args.k if len(args.k) > 1 else args.k * len(widths)
    handle, record = cert.certify_random_table(
        widths, ks, args.m, kind=args.kind, mode=args.mode, seed=args.seed,
        target_eps=args.eps, strong=args.strong, leak_bits=args.leak_bits,
        samples=args.samples, workers=args.threads, cache_dir=args.cache)
    out_dir = args.out_dir
    report_path = out_dir / f"certify-{record.record_id}.json"
    _write_json(report_path, record.to_json_dict())
    cache = args.cache if args.cache else cert.default_cache_dir()
    print(json.dumps({"digest": record.digest, "error": record.error,
                      "mode": record.mode, "attempts": record.attempts,
                      "xtab": str(cache / f"{record.digest}.xtab")}))
    _manifest(args, out_dir, [record.digest], [report_path])
    return EXIT_OK


# ----------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------

def cmd_eval(args) -> int:
    from . import oracle
    out_dir = args.out_dir
    digests = []
    if args.lemma:
        payload = _eval_lemma(args)
        out = out_dir / f"eval-lemma-{args.lemma}.json"
    else:
        handle, digests = _load_extractor(args)
        payload, out = _eval_extractor(args, handle, oracle, out_dir)
    _write_json(out, payload)
    print(json.dumps(payload, default=_default))
    _manifest(args, out_dir, digests, [out])
    return EXIT_OK


def _load_extractor(args):
    from . import certify as cert
    from .extractors import deor_handle, ip_handle, toeplitz_handle
    name = args.extractor
    if name == "ip":
        return ip_handle(args.n, args.k1, args.k2), []
    if name == "deor":
        return deor_handle(args.n, args.m, args.k1, args.k2), []
    if name == "toeplitz":
        return toeplitz_handle(args.n, args.m, args.k), []
    path = Path(name)
    if path.suffix == ".xtab" and path.exists():
        handle, record = cert.load_xtab(path)
        return handle, [record.digest]
    raise InvalidInputError(f"unknown extractor {name!r}")


def _eval_extractor(args, handle, oracle, out_dir):
    if handle.kind == "seeded":
        k = args.k if args.k is not None else handle.k_profile[0]
        if args.leak_bits > 0:
            rep = oracle.worst_case_error_leaked(
                handle, (k, handle.k_profile[1]), args.leak_bits,
                strong=not args.marginal, mode=args.mode,
                samples=args.samples, seed=args.seed)
        else:
            rep = oracle.worst_case_error_seeded(
                handle, k, strong=not args.marginal, mode=args.mode,
                samples=args.samples, seed=args.seed)
    else:
        k1 = args.k1 if args.k1 is not None else handle.k_profile[0]
        k2 = args.k2 if args.k2 is not None else handle.k_profile[1]
        if args.leak_bits > 0:
            rep = oracle.worst_case_error_leaked(
                handle, (k1, k2), args.leak_bits, strong=args.strong,
                mode=args.mode, samples=args.samples, seed=args.seed)
        else:
            rep = oracle.worst_case_error_2source(
                handle, k1, k2, args.strong, mode=args.mode,
                samples=args.samples, seed=args.seed, workers=args.threads)
    payload = {"extractor": handle.name, **rep.to_json_dict()}
    return payload, out_dir / "eval-report.json"


def _eval_lemma(args) -> dict:
    from fractions import Fraction
    from . import oracle
    from .dist import JointDistribution
    rng = np.random.default_rng(np.random.Philox(key=args.seed))
    passed = 0
    slacks = []
    for _ in range(args.trials):
        if args.lemma == "L2.2":
            joint = _random_joint(rng, [("X", 4), ("Y", 2)])
            verdict = oracle.check_lemma("L2.2", joint=joint, eps=args.eps)
        elif args.lemma == "L2.5":
            m = int(rng.integers(1, 4))
            joint = _random_joint(rng, [("Z", m), ("E", 2)])
            verdict = oracle.check_lemma("L2.5", joint=joint)
        else:
            raise InvalidInputError(
                f"lemma {args.lemma!r} has no randomized-trial driver")
        passed += bool(verdict.ok)
        slacks.append(float(verdict.slack))
    return {"lemma": args.lemma, "trials": args.trials, "eps": args.eps,
            "pass_rate": passed / args.trials,
            "min_slack": min(slacks), "seed": args.seed}


def _random_joint(rng, parts):
    """Random exact joint: integer counts over a power-of-two denominator."""
    from fractions import Fraction
    from .dist import JointDistribution
    total = sum(w for _, w in parts)
    denom = 1 << 12
    counts = rng.multinomial(denom, np.full(1 << total, 1.0 / (1 << total)))
    mass = [Fraction(int(c), denom) for c in counts]
    return JointDistribution(parts, mass)


# ----------------------------------------------------------------------
# netsim
# ----------------------------------------------------------------------

def cmd_netsim(args) -> int:
    from . import netsim as ns
    from .sources import FlatSource
    from .leakage import LeakageScenario
    params = ns.parse_config_text(args.config.read_text())
    protocol = args.protocol or params.get("protocol", "extpub")
    runs = args.runs if args.runs else params.get("runs", 1000)
    seed = params.get("seed", 0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg, digests = build_toy_network(params, cache_dir=args.cache,
                                         protocol=protocol)
    for w in caught:
        print(f"config warning: {w.message}", file=sys.stderr)

    rng = np.random.default_rng(np.random.Philox(key=seed))
    sources = [FlatSource.random(cfg.n, cfg.k, rng) for _ in range(cfg.p)]
    adv = _builtin_adversary(args.adv, cfg, protocol)
    if args.adv == "qr-analog":
        # leak one bit of the first outer player's source for the
        # QR-analog strategy to act on
        target = (cfg.geqr_outer()[0] if protocol == "geqr"
                  else cfg.players_c[0]) - 1
        scenario = LeakageScenario.oa([cfg.n] * cfg.p, target,
                                      lambda x, a: x & 1, 1)
    else:
        scenario = LeakageScenario.trivial([cfg.n] * cfg.p)
    if args.exact:
        # Faulty players' private sources never enter the security
        # statement (the adversary controls their messages); pinning them
        # shrinks the exact enumeration without changing the distance.
        sources = [FlatSource(cfg.n, [0])
                   if (pid in adv.initial_faulty) else src
                   for pid, src in enumerate(sources, start=1)]

    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {"protocol": protocol, "adversary": args.adv,
                    "p": cfg.p, "t": cfg.t, "n": cfg.n, "k": cfg.k,
                    "seed": seed}
    log_path = out_dir / "runs.jsonl"
    csv_path = out_dir / "summary.csv"
    report_path = out_dir / "report.json"

    if protocol == "extpub":
        run0, y0 = ns.run_ext_pub(cfg, sources, scenario, adv, seed)
        ns.run_ext_pri(cfg, run0, y0)
        log_path.write_text(run0.to_jsonl() + "\n")
        report["y_width"] = cfg.y_width
        report["rushing_order_ok"] = run0.rushing_order_ok()
        target_set = list(cfg.players_b + cfg.players_c)
        proto_key = "ext_pub"
    else:
        run0 = ns.run_geqr(cfg, sources, scenario, adv, seed)
        log_path.write_text(run0.to_jsonl() + "\n")
        report["y_width"] = run0.y_width
        report["rushing_width"] = run0.rushing_width
        report["rushing_order_ok"] = run0.rushing_order_ok()
        target_set = list(cfg.geqr_outer())
        proto_key = "geqr"

    rows = []
    if args.exact:
        rep = ns.evaluate_security(proto_key, cfg, sources, scenario, adv,
                                   target_set, mode="exact")
        report["exact_distance"] = float(rep.distance)
        report["effective_set"] = list(rep.effective_set)
        if protocol == "geqr" and args.adv == "qr-analog":
            report["ir_to_qr"] = _geqr_ir_baseline(ns, cfg, sources, scenario,
                                                   adv, target_set, rep)
        rows.append({"player": " ".join(map(str, rep.effective_set)),
                     "distance": float(rep.distance), "mode": "exact"})
    elif protocol == "extpub":
        tol = max(0.02, 1.001 * (100 * (1 << (2 * cfg.slice_width)) / runs) ** 0.5)
        quality = ns.mc_public_block_quality(cfg, sources, scenario, adv,
                                             n_runs=runs, tol=tol, seed=seed)
        report["public_block_quality"] = {
            str(pid): rep.to_json_dict() for pid, rep in quality.items()}
        for pid, rep in sorted(quality.items()):
            rows.append({"player": pid, "distance": rep.estimate,
                         "mode": "sampled"})
    else:
        m_out = ns.output_width(cfg, proto_key)
        tol = max(0.02, 1.001 * (100 * (1 << m_out) / runs) ** 0.5)
        pairs = {pid: [] for pid in target_set}
        from extractomat.netsim import _sample_world  # ensemble driver
        for i in range(runs):
            xv, sd = _sample_world(cfg, sources, scenario, None, seed + i)
            run = ns.exec_geqr(cfg, xv, adv, sd)
            for pid in target_set:
                if run.outputs.get(pid) is not None:
                    pairs[pid].append((run.outputs[pid], run.y))
        from extractomat.oracle import mc_distance_pairs
        mcs = {pid: mc_distance_pairs(v, m_out, tol=tol, seed=seed + pid)
               for pid, v in pairs.items() if v}
        report["output_vs_public"] = {str(pid): rep.to_json_dict()
                                      for pid, rep in mcs.items()}
        for pid, rep in sorted(mcs.items()):
            rows.append({"player": pid, "distance": rep.estimate,
                         "mode": "sampled"})

    with csv_path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=["player", "distance", "mode"])
        writer.writeheader()
        writer.writerows(rows)
    _write_json(report_path, report)
    print(json.dumps(report, default=_default))
    _manifest(args, out_dir, digests, [log_path, csv_path, report_path])
    return EXIT_OK


def _builtin_adversary(kind: str, cfg, protocol: str):
    from .netsim import AdversaryStrategy
    if kind == "none" or cfg.t == 0:
        return AdversaryStrategy.passive()
    faulty = {1}
    if kind == "ir":
        return AdversaryStrategy.ir(
            faulty, lambda pid, rnd, view: sum(
                v for _, _, v in view["round_honest"]))
    return AdversaryStrategy.qr_analog(
        faulty, lambda pid, rnd, view, side: sum(side.values()) * 0x55)


def _geqr_ir_baseline(ns, cfg, sources, scenario, adv, target_set, qr_rep):
    """Exact QR distance against the best constant-slice IR attack."""
    from fractions import Fraction
    faulty_groups = [gi for gi, grp in enumerate(cfg.geqr_groups(), start=1)
                     if any(p in adv.initial_faulty for p in grp)]
    width = cfg.geqr_slice * len(faulty_groups)
    best = Fraction(0)
    for r in range(1 << width):
        slices = {}
        v = r
        for gi in reversed(faulty_groups):
            slices[gi] = v & ((1 << cfg.geqr_slice) - 1)
            v >>= cfg.geqr_slice
        ir = ns.AdversaryStrategy.forced_slice(adv.initial_faulty, slices)
        rep = ns.evaluate_security("geqr", cfg, sources, scenario, ir,
                                   target_set, mode="exact")
        best = max(best, Fraction(rep.distance))
    factor = 1 << width
    return {"rushing_bits": width,
            "ir_distance": float(best),
            "qr_distance": float(qr_rep.distance),
            "bound": float(best) * factor,
            "holds": Fraction(qr_rep.distance) <= factor * best}


def build_toy_network(params: dict, cache_dir=None, protocol: str = "extpub"):
    """Certify the gadget slots a toy config needs and wire the graphs.

    Desk-scale policy: the multi-source, somewhere-random and final
    extraction slots are certified tables (sampled certification once
    exhaustive enumeration exceeds the budget), graphs are fixed verified
    wirings at toy sizes.
    """
    from . import certify as cert
    from .graphs import BipartiteGraph
    from .netsim import GadgetSet, NetworkConfig
    p = params.get("p", 7)
    t = params.get("t", 1)
    n = params.get("n", 6)
    k = params.get("k", 4)
    alpha = params.get("alpha", 2.0)
    delta = params.get("delta", 0.25)
    seed = params.get("seed", 0)
    cert_samples = params.get("cert_samples", 400)
    digests = []

    def table(tag, widths, ks, m, **kw):
        handle, record = cert.certify_random_table(
            widths, ks, m, seed=seed + tag, cache_dir=cache_dir,
            mode="auto", samples=cert_samples, **kw)
        digests.append(record.digest)
        return handle

    if protocol == "geqr":
        group = params.get("geqr_group", 2)
        s = params.get("geqr_s", max(1, 2 * t))
        slice_w = max(1, k // s)
        iext = table(11, (n,) * group, (k,) * group, max(slice_w, 2),
                     kind="t-source" if group > 2 else "2-source")
        qtext = table(12, (n, s * slice_w), (k, min(k, s * slice_w)),
                      min(2, n), kind="2-source", strong=(1,))
        gadgets = GadgetSet(iext=iext, qtext=qtext)
        cfg = NetworkConfig(p=p, t=t, n=n, k=k, alpha=alpha, delta=delta,
                            gadgets=gadgets, geqr_group=group, geqr_s=s,
                            seed=seed,
                            a_size=params.get("a_size"),
                            b_size=params.get("b_size"))
        cfg.validate_geqr()
        return cfg, digests

    cfg = NetworkConfig(p=p, t=t, n=n, k=k, alpha=alpha, delta=delta,
                        gamma=params.get("gamma", 0.75), seed=seed,
                        a_size=params.get("a_size"),
                        b_size=params.get("b_size"))
    sw = cfg.slice_width
    m1 = 4
    a = cfg.a_size
    # Degree-2 ring wiring over A; verified before use.
    G = BipartiteGraph(a, a, 2, tuple(
        tuple(sorted(((i) % a, (i + 1) % a))) for i in range(a)))
    H = BipartiteGraph(cfg.b_size, a, 2, tuple(
        tuple(sorted(((j) % a, (j + 1) % a))) for j in range(cfg.b_size)))
    from .graphs import verify_and_disperser, verify_expander
    if t > 0:
        ok = verify_and_disperser(G, (a - t) / a, 1.0 / G.l)
        if not ok:
            raise InvalidInputError(
                "toy wiring fails the AND-disperser property at "
                f"delta={(a - t) / a}, gamma={1.0 / G.l}")
    ok = verify_expander(H, 0.5)
    if not ok:
        raise InvalidInputError("toy wiring fails the expander property at "
                                "beta=0.5")
    iext = table(1, (n, n), (k, k), m1)
    srext = table(2, (n, H.d * m1), (k, m1), 2 * sw, kind="2-source",
                  strong=(1,))
    oaext = table(3, (n, cfg.y_width), (k, min(k, cfg.y_width)),
                  min(3, n), kind="2-source", strong=(1,))
    oaext_b = table(4, (n, 2 * (cfg.b_size - 1) * sw),
                    (k, min(k, 2 * (cfg.b_size - 1) * sw)), min(3, n),
                    kind="2-source", strong=(1,))
    cfg.gadgets = GadgetSet(iext=iext, srext=srext, oaext=oaext,
                            oaext_b=oaext_b, and_disperser=G, expander=H)
    cfg.validate_ext_pub()
    return cfg, digests


# ----------------------------------------------------------------------
# ledger
# ----------------------------------------------------------------------

def cmd_ledger(args) -> int:
    from . import ledger
    kwargs = {}
    for key in ["n", "n1", "n2", "k", "k1", "k2", "m", "delta", "alpha",
                "beta", "eps", "eps1", "eps2", "eps3", "k3", "d", "t", "l",
                "D", "M", "C"]:
        val = getattr(args, key, None)
        if val is not None:
            kwargs[key] = val
    if getattr(args, "rush_bits", None) is not None:
        kwargs["rush_bits"] = args.rush_bits
    entry = ledger.ledger_theorem(args.theorem, **kwargs)
    out = args.out_dir / f"ledger-{args.theorem}.json"
    _write_json(out, entry.to_json_dict())
    print(entry.to_json())
    _manifest(args, args.out_dir, [], [out])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
