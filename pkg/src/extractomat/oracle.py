"""Ground truth: exact worst-case extractor error by flat-source enumeration.

Worst cases over min-entropy-k source classes are attained at flat
sources: the distance to uniform is convex in each source's probability
vector (total variation is convex and the source-to-joint map is linear),
and the min-entropy-k class is the convex hull of the flat k-sources, so
the maximum over the class is reached at an extreme point.  This standard
fact is used without re-proof throughout this module.

All exhaustive paths work in integer arithmetic: with flat supports of
sizes ``K_i`` every probability is an integer count over a common
denominator, so distances reduce to exact integer sums and the final
error is a ``Fraction``.  Reports are therefore invariant under
enumeration order and worker count.

Sampled mode draws random flat supports and keeps the per-draw exact
distances; the reported error is their maximum, a certified lower bound
on the true worst case, with a bootstrap confidence interval over the
draws.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .dist import (Distribution, JointDistribution, cond_min_entropy,
                   distance_from_uniform_on, min_entropy,
                   smooth_cond_min_entropy, xor_project)
from .errors import BudgetExceededError, InvalidInputError
from .extractors import ExtractorHandle
from .leakage import LeakageScenario, leakage_apply

DEFAULT_BUDGET = 20_000_000_000
EXHAUSTIVE_MAP_BITS_CAP = 2  # leakage maps enumerated exhaustively up to e-width 2
DEFAULT_SAMPLES = 200
BOOTSTRAP_RESAMPLES = 200
CI_LEVEL = 0.99


@dataclass
class OracleReport:
    """Result of one oracle run.

    ``error`` is a Fraction in exhaustive mode (exact) and a float in
    sampled mode.  ``strong_errors`` maps each additionally measured
    strong index to its error.  ``wall_time`` is volatile and excluded
    from replay comparisons.
    """

    mode: str
    error: object
    witness: dict = field(default_factory=dict)
    strong_errors: dict = field(default_factory=dict)
    enumerated: int = 0
    wall_time: float = 0.0
    ci: tuple | None = None
    notes: str = ""

    @property
    def error_float(self) -> float:
        return float(self.error)

    def to_json_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "error": float(self.error),
            "witness": _jsonable(self.witness),
            "strong_errors": {str(k): float(v)
                              for k, v in self.strong_errors.items()},
            "enumerated": self.enumerated,
            "notes": self.notes,
        }
        if isinstance(self.error, Fraction):
            d["error_exact"] = f"{self.error.numerator}/{self.error.denominator}"
        if self.ci is not None:
            d["ci_99"] = [float(self.ci[0]), float(self.ci[1])]
        d["volatile"] = {"wall_time": self.wall_time}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# ----------------------------------------------------------------------
# Support enumeration helpers
# ----------------------------------------------------------------------

def _check_k(k) -> int:
    if k != int(k):
        raise InvalidInputError("oracle entropy levels must be integral")
    return int(k)


def _combo_onehot(space: int, size: int):
    combos = list(itertools.combinations(range(space), size))
    onehot = np.zeros((len(combos), space), dtype=np.float64)
    for i, c in enumerate(combos):
        onehot[i, list(c)] = 1.0
    return combos, onehot


def _sample_supports(space: int, size: int, samples: int,
                     rng: np.random.Generator):
    out = []
    for _ in range(samples):
        pick = rng.choice(space, size=size, replace=False)
        out.append(tuple(sorted(int(v) for v in pick)))
    return out


def _charge_budget(required: int, budget: int, what: str):
    if required > budget:
        raise BudgetExceededError(required, budget, what)


def _all_leak_maps(n_in: int, b: int):
    """Every deterministic map {0,1}^n_in -> {0,1}^b, as uint8 tables."""
    if b > EXHAUSTIVE_MAP_BITS_CAP:
        raise InvalidInputError(
            f"exhaustive leakage families cap e-width at "
            f"{EXHAUSTIVE_MAP_BITS_CAP}; pass an explicit map list instead")
    space = 1 << n_in
    for combo in itertools.product(range(1 << b), repeat=space):
        yield np.array(combo, dtype=np.uint8)


# ----------------------------------------------------------------------
# Two-source worst case
# ----------------------------------------------------------------------

def worst_case_error_2source(h: ExtractorHandle, k1, k2,
                             strong: int | None = None, *,
                             mode: str = "exhaustive",
                             samples: int = DEFAULT_SAMPLES,
                             seed: int = 0,
                             workers: int = 1,
                             budget: int = DEFAULT_BUDGET) -> OracleReport:
    """Worst-case (optionally strong) error over independent flat sources.

    Parameters
    ----------
    strong : int or None
        0 or 1 to measure the error jointly with that input revealed,
        None for the marginal error.
    mode : str
        ``"exhaustive"``, ``"sampled"``, or ``"auto"`` (exhaustive when
        the enumeration fits the budget).
    """
    if h.arity != 2:
        raise InvalidInputError("worst_case_error_2source needs a 2-input handle")
    n1, n2 = h.input_widths
    k1, k2 = _check_k(k1), _check_k(k2)
    K1, K2 = 1 << k1, 1 << k2
    t0 = time.perf_counter()
    required = math.comb(1 << n1, K1) * math.comb(1 << n2, K2)
    mode = _resolve_mode(mode, required, budget)
    if mode == "exhaustive":
        _charge_budget(required, budget, "two-source enumeration")
        num, den, witness, enumerated = _two_source_exhaustive(
            h.table(), n1, n2, K1, K2, h.m, strong, workers)
        err = Fraction(num, den)
        rep = OracleReport("exhaustive", err, witness=witness,
                           enumerated=enumerated)
    else:
        rep = _two_source_sampled(h, n1, n2, K1, K2, strong, samples, seed)
    rep.wall_time = time.perf_counter() - t0
    return rep


def _resolve_mode(mode: str, required: int, budget: int) -> str:
    if mode == "auto":
        return "exhaustive" if required <= budget else "sampled"
    if mode not in ("exhaustive", "sampled"):
        raise InvalidInputError("mode must be exhaustive, sampled or auto")
    return mode


def _pair_counts(table2d: np.ndarray, s2, m: int) -> np.ndarray:
    """Counts N[x, z] = #{y in S2 : T[x, y] = z}, as float64 integers."""
    vals = table2d[:, list(s2)]
    cnt = np.zeros((table2d.shape[0], 1 << m), dtype=np.float64)
    for z in range(1 << m):
        cnt[:, z] = (vals == z).sum(axis=1)
    return cnt


def _two_source_exhaustive(table: np.ndarray, n1, n2, K1, K2, m,
                           strong, workers):
    """Exact max over all flat source pairs; integer arithmetic in float64."""
    table2d = np.asarray(table, dtype=np.int64).reshape(1 << n1, 1 << n2)
    if strong == 1:
        # Symmetric: swap the roles of the inputs.
        num, den, wit, cnt = _two_source_exhaustive(
            table2d.T.reshape(-1), n2, n1, K2, K1, m, 0, workers)
        wit["supports"] = [wit["supports"][1], wit["supports"][0]]
        wit["strong"] = 1
        return num, den, wit, cnt
    combos2 = list(itertools.combinations(range(1 << n2), K2))
    args = (table2d, n1, K1, K2, m, strong)
    if workers > 1 and len(combos2) >= 4 * workers:
        results = _parallel_chunks(_two_source_chunk, combos2, args, workers)
    else:
        results = [_two_source_chunk(combos2, 0, args)]
    best = max(results)
    num, s2_rank_neg, s2, s1 = best
    den = K1 * K2 * (1 << m)
    witness = {"supports": [list(s1), list(s2)], "strong": strong}
    return int(num), den, witness, len(combos2)


def _two_source_chunk(combos2, rank0, args):
    table2d, n1, K1, K2, m, strong = args
    onehot1 = None
    if strong is None:
        _, onehot1 = _combo_onehot(table2d.shape[0], K1)
        combos1 = list(itertools.combinations(range(table2d.shape[0]), K1))
    best = (-1, 0, (), ())
    for off, s2 in enumerate(combos2):
        cnt = _pair_counts(table2d, s2, m)
        if strong == 0:
            c_num = np.maximum(cnt * (1 << m) - K2, 0.0).sum(axis=1)
            order = np.argsort(-c_num, kind="stable")
            s1 = tuple(sorted(int(i) for i in order[:K1]))
            num = int(round(c_num[order[:K1]].sum()))
        else:
            ns = onehot1 @ cnt  # (nC1, 2^m) integer-valued
            nums = np.maximum(ns * (1 << m) - K1 * K2, 0.0).sum(axis=1)
            idx = int(np.argmax(nums))
            num = int(round(nums[idx]))
            s1 = combos1[idx]
        cand = (num, -(rank0 + off), s2, s1)
        if cand > best:
            best = cand
    return best


def _parallel_chunks(fn, items, args, workers):
    from concurrent.futures import ProcessPoolExecutor
    chunks = []
    step = (len(items) + workers - 1) // workers
    for w in range(workers):
        part = items[w * step:(w + 1) * step]
        if part:
            chunks.append((part, w * step))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, part, rank0, args) for part, rank0 in chunks]
        return [f.result() for f in futs]


def _two_source_sampled(h, n1, n2, K1, K2, strong, samples, seed):
    rng = np.random.default_rng(np.random.Philox(key=seed))
    table2d = np.asarray(h.table(), dtype=np.int64).reshape(1 << n1, 1 << n2)
    m = h.m
    den = K1 * K2 * (1 << m)
    nums = []
    wit = None
    for _ in range(samples):
        s1 = tuple(sorted(int(v) for v in rng.choice(1 << n1, K1, replace=False)))
        s2 = tuple(sorted(int(v) for v in rng.choice(1 << n2, K2, replace=False)))
        cnt = _pair_counts(table2d, s2, m)
        if strong is None:
            ns = cnt[list(s1)].sum(axis=0)
            num = int(round(np.maximum(ns * (1 << m) - K1 * K2, 0.0).sum()))
        elif strong == 0:
            c_num = np.maximum(cnt * (1 << m) - K2, 0.0).sum(axis=1)
            num = int(round(c_num[list(s1)].sum()))
        else:
            cntT = _pair_counts(table2d.T, s1, m)
            c_num = np.maximum(cntT * (1 << m) - K1, 0.0).sum(axis=1)
            num = int(round(c_num[list(s2)].sum()))
        nums.append(num)
        if num == max(nums):
            wit = {"supports": [list(s1), list(s2)], "strong": strong}
    err, ci = _max_with_bootstrap(nums, den, seed)
    return OracleReport("sampled", err, witness=wit, enumerated=samples,
                        ci=ci, notes="sampled max: lower bound on worst case")


def _max_with_bootstrap(nums, den, seed):
    arr = np.asarray(nums, dtype=np.float64) / den
    rng = np.random.default_rng(np.random.Philox(key=seed ^ 0x5EED))
    maxes = np.empty(BOOTSTRAP_RESAMPLES)
    for i in range(BOOTSTRAP_RESAMPLES):
        pick = rng.integers(0, len(arr), size=len(arr))
        maxes[i] = arr[pick].max()
    lo, hi = np.percentile(maxes, [50 * (1 - CI_LEVEL), 100 - 50 * (1 - CI_LEVEL)])
    return float(arr.max()), (float(lo), float(hi))


# ----------------------------------------------------------------------
# Seeded worst case
# ----------------------------------------------------------------------

def worst_case_error_seeded(h: ExtractorHandle, k, strong: bool = True, *,
                            mode: str = "exhaustive",
                            samples: int = DEFAULT_SAMPLES,
                            seed: int = 0,
                            budget: int = DEFAULT_BUDGET) -> OracleReport:
    """Worst-case seeded-extractor error over flat k-sources.

    Strong mode averages the per-seed distance (equivalently: joint with
    the seed revealed); non-strong measures the output marginal alone.
    """
    if h.kind != "seeded":
        raise InvalidInputError("worst_case_error_seeded needs a seeded handle")
    n, d = h.input_widths
    k = _check_k(k)
    K = 1 << k
    t0 = time.perf_counter()
    required = math.comb(1 << n, K) * (1 << d)
    mode = _resolve_mode(mode, required, budget)
    table2d = np.asarray(h.table(), dtype=np.int64).reshape(1 << n, 1 << d)
    m = h.m
    den = K * (1 << d) * (1 << m) if strong else K * (1 << d) * (1 << m)
    if mode == "exhaustive":
        _charge_budget(required, budget, "seeded enumeration")
        combos, onehot = _combo_onehot(1 << n, K)
        nums = _seeded_nums(table2d, onehot, K, d, m, strong)
        idx = int(np.argmax(nums))
        rep = OracleReport("exhaustive", Fraction(int(round(nums[idx])), den),
                           witness={"support": list(combos[idx])},
                           enumerated=len(combos))
    else:
        rng = np.random.default_rng(np.random.Philox(key=seed))
        supports = _sample_supports(1 << n, K, samples, rng)
        onehot = np.zeros((len(supports), 1 << n))
        for i, s in enumerate(supports):
            onehot[i, list(s)] = 1.0
        nums = _seeded_nums(table2d, onehot, K, d, m, strong)
        idx = int(np.argmax(nums))
        err, ci = _max_with_bootstrap([int(round(v)) for v in nums], den, seed)
        rep = OracleReport("sampled", err,
                           witness={"support": list(supports[idx])},
                           enumerated=samples, ci=ci,
                           notes="sampled max: lower bound on worst case")
    rep.wall_time = time.perf_counter() - t0
    return rep


def _seeded_nums(table2d, onehot, K, d, m, strong):
    nC = onehot.shape[0]
    nums = np.zeros(nC)
    if strong:
        for z in range(1 << m):
            ind = (table2d == z).astype(np.float64)
            cnt = onehot @ ind  # (nC, 2^d)
            nums += np.maximum(cnt * (1 << m) - K, 0.0).sum(axis=1)
    else:
        for z in range(1 << m):
            ind = (table2d == z).astype(np.float64)
            nz = (onehot @ ind).sum(axis=1)  # (nC,)
            nums += np.maximum(nz * (1 << m) - K * (1 << d), 0.0)
    return nums


# ----------------------------------------------------------------------
# One-sided leakage families
# ----------------------------------------------------------------------

def worst_case_error_leaked(h: ExtractorHandle, k_profile,
                            b: int = 1, strong=None, *,
                            maps: Sequence[np.ndarray] | None = None,
                            leak_sources: Iterable[int] | None = None,
                            mode: str = "exhaustive",
                            samples: int = DEFAULT_SAMPLES,
                            seed: int = 0,
                            budget: int = DEFAULT_BUDGET) -> OracleReport:
    """Worst case over flat sources AND one-sided deterministic leaks.

    The family ranges over a choice of leaking source and every
    deterministic map from that source to ``b`` bits (or an explicit
    ``maps`` list).  ``b=0`` degenerates to the leak-free oracle.

    For a seeded handle the leak is taken from the source; ``strong``
    then means jointly with the seed.  For a 2-source handle ``strong``
    is an input index as in :func:`worst_case_error_2source`.
    """
    if b == 0 and maps is None:
        if h.kind == "seeded":
            return worst_case_error_seeded(
                h, k_profile[0], strong=bool(strong), mode=mode,
                samples=samples, seed=seed, budget=budget)
        return worst_case_error_2source(
            h, k_profile[0], k_profile[1], strong, mode=mode,
            samples=samples, seed=seed, budget=budget)
    t0 = time.perf_counter()
    if h.kind == "seeded":
        rep = _leaked_seeded(h, _check_k(k_profile[0]), b, bool(strong), maps,
                             mode, samples, seed, budget)
    elif h.arity == 2:
        rep = _leaked_2source(h, k_profile, b, strong, maps, leak_sources,
                              mode, samples, seed, budget)
    else:
        raise InvalidInputError(
            "leaked worst case supports seeded and 2-source handles; "
            "use worst_case_error_multi for composites")
    rep.wall_time = time.perf_counter() - t0
    return rep


def _leaked_seeded(h, k, b, strong, maps, mode, samples, seed, budget):
    n, d = h.input_widths
    K = 1 << k
    m = h.m
    table2d = np.asarray(h.table(), dtype=np.int64).reshape(1 << n, 1 << d)
    maps = list(maps) if maps is not None else list(_all_leak_maps(n, b))
    required = math.comb(1 << n, K) * len(maps)
    mode = _resolve_mode(mode, required, budget)
    if mode == "exhaustive":
        _charge_budget(required, budget, "leaked seeded enumeration")
        supports = list(itertools.combinations(range(1 << n), K))
    else:
        rng = np.random.default_rng(np.random.Philox(key=seed))
        supports = _sample_supports(1 << n, K, samples, rng)
    onehot = np.zeros((len(supports), 1 << n))
    for i, s in enumerate(supports):
        onehot[i, list(s)] = 1.0
    den = K * (1 << d) * (1 << m)
    best = (-1, None, None)
    nums_all = []
    for fi, f in enumerate(maps):
        nums = np.zeros(len(supports))
        for e in range(1 << b):
            sel = (f == e)
            me = onehot[:, sel].sum(axis=1)  # (nC,) counts of f==e in S
            for z in range(1 << m):
                ind = ((table2d == z) & sel[:, None]).astype(np.float64)
                cnt = onehot @ ind  # (nC, 2^d): N_{s,z,e}
                nums += np.maximum(cnt * (1 << m) - me[:, None], 0.0).sum(axis=1)
        idx = int(np.argmax(nums))
        nums_all.extend(int(round(v)) for v in nums)
        if nums[idx] > best[0]:
            best = (nums[idx], supports[idx], f)
    witness = {"support": list(best[1]), "leak_map": best[2].tolist(),
               "leak_source": 0, "e_width": b}
    if mode == "exhaustive":
        return OracleReport("exhaustive", Fraction(int(round(best[0])), den),
                            witness=witness,
                            enumerated=len(supports) * len(maps))
    err, ci = _max_with_bootstrap(nums_all, den, seed)
    return OracleReport("sampled", err, witness=witness,
                        enumerated=len(supports) * len(maps), ci=ci,
                        notes="sampled max: lower bound on worst case")


def _leaked_2source(h, k_profile, b, strong, maps, leak_sources,
                    mode, samples, seed, budget):
    n1, n2 = h.input_widths
    k1, k2 = _check_k(k_profile[0]), _check_k(k_profile[1])
    K1, K2 = 1 << k1, 1 << k2
    m = h.m
    leak_sources = list(leak_sources) if leak_sources is not None else [0, 1]
    den = K1 * K2 * (1 << m)
    best_err = Fraction(-1)
    best_wit: dict = {}
    total = 0
    baseline = worst_case_error_2source(
        h, k1, k2, strong, mode=mode, samples=samples, seed=seed, budget=budget)
    best_err = Fraction(baseline.error)
    best_wit = dict(baseline.witness)
    best_wit["leak_map"] = None
    total += baseline.enumerated
    for i_star in leak_sources:
        if strong is not None and i_star == strong:
            # E is a function of the conditioned input: identical to b=0.
            continue
        n_leak = h.input_widths[i_star]
        the_maps = list(maps) if maps is not None \
            else list(_all_leak_maps(n_leak, b))
        num, wit, cnt = _leaked_2source_one_side(
            h, K1, K2, m, strong, i_star, the_maps, mode, samples, seed, budget)
        total += cnt
        err = Fraction(num, den)
        if err > best_err:
            best_err, best_wit = err, wit
    mode_label = "exhaustive" if mode == "exhaustive" else "sampled"
    rep = OracleReport(mode_label,
                       best_err if mode == "exhaustive" else float(best_err),
                       witness=best_wit, enumerated=total)
    if mode != "exhaustive":
        rep.notes = "sampled max: lower bound on worst case"
    return rep


def _leaked_2source_one_side(h, K1, K2, m, strong, i_star, maps,
                             mode, samples, seed, budget):
    """Leak from input ``i_star``; exact inner enumeration per map."""
    n1, n2 = h.input_widths
    table2d = np.asarray(h.table(), dtype=np.int64).reshape(1 << n1, 1 << n2)
    if i_star == 0:
        # Reduce to the i_star == 1 case on the transposed table.
        hT = _transpose_handle(h)
        num, wit, cnt = _leaked_2source_one_side(
            hT, K2, K1, m, (1 - strong) if strong is not None else None,
            1, maps, mode, samples, seed, budget)
        wit["supports"] = [wit["supports"][1], wit["supports"][0]]
        wit["leak_source"] = 0
        return num, wit, cnt
    required = math.comb(1 << n2, K2) * len(maps) * (
        1 if strong == 0 else math.comb(1 << n1, K1))
    mode = _resolve_mode(mode, required, budget)
    if mode == "exhaustive":
        _charge_budget(required, budget, "leaked two-source enumeration")
        supports2 = list(itertools.combinations(range(1 << n2), K2))
    else:
        rng = np.random.default_rng(np.random.Philox(key=seed ^ 0xA1))
        supports2 = _sample_supports(1 << n2, K2, samples, rng)
    if strong is None:
        combos1, onehot1 = _combo_onehot(1 << n1, K1) if mode == "exhaustive" \
            else (None, None)
        if combos1 is None:
            rng = np.random.default_rng(np.random.Philox(key=seed ^ 0xB2))
            combos1 = _sample_supports(1 << n1, K1, samples, rng)
            onehot1 = np.zeros((len(combos1), 1 << n1))
            for i, s in enumerate(combos1):
                onehot1[i, list(s)] = 1.0
    best = (-1, None, None, None)
    for f in maps:
        nb = 1 << (int(f.max()).bit_length() or 1)
        for s2 in supports2:
            sel = np.asarray(f)[list(s2)]
            cols = table2d[:, list(s2)]
            # N[x, z, e] over y in S2
            cnt = np.zeros((1 << n1, 1 << m, nb))
            me = np.zeros(nb)
            for e in range(nb):
                ys = sel == e
                me[e] = ys.sum()
                sub = cols[:, ys]
                for z in range(1 << m):
                    cnt[:, z, e] = (sub == z).sum(axis=1)
            if strong == 0:
                c_num = np.maximum(cnt * (1 << m) - me[None, None, :], 0.0) \
                    .sum(axis=(1, 2))
                order = np.argsort(-c_num, kind="stable")
                s1 = tuple(sorted(int(i) for i in order[:K1]))
                num = int(round(c_num[order[:K1]].sum()))
            else:
                flat = cnt.reshape(1 << n1, -1)
                ns = onehot1 @ flat  # (nC1, 2^m * nb)
                thresh = (K1 * me)[None, :].repeat(1 << m, axis=0).reshape(1, -1)
                nums = np.maximum(ns * (1 << m) - thresh, 0.0).sum(axis=1)
                idx = int(np.argmax(nums))
                num = int(round(nums[idx]))
                s1 = tuple(combos1[idx])
            if num > best[0]:
                best = (num, s1, s2, f)
    wit = {"supports": [list(best[1]), list(best[2])],
           "leak_map": best[3].tolist(), "leak_source": 1,
           "strong": strong}
    return best[0], wit, len(supports2) * len(maps)


def _transpose_handle(h: ExtractorHandle) -> ExtractorHandle:
    n1, n2 = h.input_widths
    t2 = np.asarray(h.table(), dtype=np.uint32).reshape(1 << n1, 1 << n2)
    from .extractors import table_handle
    return table_handle(h.name + "[T]", "2-source", (n2, n1), h.m,
                        t2.T.reshape(-1), k_profile=h.k_profile[::-1],
                        eps=h.eps)


# ----------------------------------------------------------------------
# Multi-source composites, strong on all but the last input
# ----------------------------------------------------------------------

def worst_case_error_multi(h: ExtractorHandle, k_profile, *,
                           strong_set=None, b: int = 0,
                           mode: str = "exhaustive",
                           samples: int = DEFAULT_SAMPLES,
                           seed: int = 0,
                           budget: int = DEFAULT_BUDGET) -> OracleReport:
    """Worst-case strong error of a 3-input handle, strong on inputs {0,1}.

    Covers composed multi-source extractors at desk scale: the error is
    measured jointly with the two strong inputs (and the leak register
    when ``b > 0``, enumerating one-sided leaks from every source).  The
    strong part being everything except the last input makes the
    objective additive over the strong supports, so the inner
    maximization is exact and cheap.
    """
    if h.arity != 3:
        raise InvalidInputError("worst_case_error_multi handles 3 inputs")
    strong_set = frozenset(strong_set) if strong_set is not None else frozenset({0, 1})
    if strong_set != frozenset({0, 1}):
        raise InvalidInputError(
            "desk-scale multi oracle requires strong on all but the last input")
    n1, n2, n3 = h.input_widths
    ks = [_check_k(k) for k in k_profile]
    K1, K2, K3 = (1 << k for k in ks)
    m = h.m
    t0 = time.perf_counter()
    tbl = np.asarray(h.table(), dtype=np.int64).reshape(1 << n1, 1 << n2, 1 << n3)
    combos3 = list(itertools.combinations(range(1 << n3), K3))
    required = (math.comb(1 << n1, K1) * math.comb(1 << n2, K2)
                * len(combos3))
    if b > 0:
        required *= (1 << b) ** (1 << max(n1, n2, n3))
    mode = _resolve_mode(mode, required, budget)
    if mode != "exhaustive":
        raise InvalidInputError(
            "the multi-source oracle is exhaustive-only; shrink the instance")
    _charge_budget(required, budget, "multi-source enumeration")
    _, onehot1 = _combo_onehot(1 << n1, K1)
    combos1 = list(itertools.combinations(range(1 << n1), K1))
    combos2 = list(itertools.combinations(range(1 << n2), K2))
    _, onehot2 = _combo_onehot(1 << n2, K2)
    den = K1 * K2 * K3 * (1 << m)
    best = (-1, None)
    enumerated = 0

    def consider(gmat, tag):
        nonlocal best, enumerated
        box = onehot1 @ gmat @ onehot2.T  # (nC1, nC2)
        idx = int(np.argmax(box))
        i1, i2 = divmod(idx, box.shape[1])
        num = int(round(box[i1, i2]))
        enumerated += box.size
        if num > best[0]:
            best = (num, {"supports": [list(combos1[i1]), list(combos2[i2]),
                                       list(s3)], **tag})

    for s3 in combos3:
        sub = tbl[:, :, list(s3)]  # (2^n1, 2^n2, K3)
        # Leak-free / leak-from-strong-input case: E adds nothing once the
        # strong inputs are conditioned on.
        g = np.zeros((1 << n1, 1 << n2))
        for z in range(1 << m):
            nz = (sub == z).sum(axis=2)
            g += np.maximum(nz * (1 << m) - K3, 0.0)
        consider(g, {"leak_map": None})
        if b > 0:
            for f in _all_leak_maps(n3, b):
                sel = np.asarray(f)[list(s3)]
                g = np.zeros((1 << n1, 1 << n2))
                for e in range(1 << b):
                    ys = sel == e
                    me = int(ys.sum())
                    if me == 0:
                        continue
                    part = sub[:, :, ys]
                    for z in range(1 << m):
                        nz = (part == z).sum(axis=2)
                        g += np.maximum(nz * (1 << m) - me, 0.0)
                consider(g, {"leak_map": f.tolist(), "leak_source": 2})
    rep = OracleReport("exhaustive", Fraction(best[0], den),
                       witness=best[1], enumerated=enumerated)
    rep.wall_time = time.perf_counter() - t0
    return rep


# ----------------------------------------------------------------------
# Block + general source worst case (strong on the block)
# ----------------------------------------------------------------------

def worst_case_error_block_general(h: ExtractorHandle, k_profile, *,
                                   mode: str = "exhaustive",
                                   samples: int = DEFAULT_SAMPLES,
                                   seed: int = 0,
                                   budget: int = DEFAULT_BUDGET) -> OracleReport:
    """Worst-case strong error over (block source (X1,X2)) x (flat X3).

    The block source class is: X1 flat with min-entropy k1, and for every
    prefix x1 an arbitrary flat k2 conditional support for X2.  Because
    the strong distance is an average of per-(x1,x2) values, the worst
    block source picks, per x1, the K2 conditional values with the
    largest contribution, then the K1 prefixes with the largest row
    scores; both selections are exact.  Only X3's support is enumerated
    (or sampled).
    """
    if h.arity != 3:
        raise InvalidInputError("block+general oracle handles 3 inputs")
    n1, n2, n3 = h.input_widths
    k1, k2, k3 = (_check_k(k) for k in k_profile)
    K1, K2, K3 = 1 << k1, 1 << k2, 1 << k3
    m = h.m
    t0 = time.perf_counter()
    tbl = np.asarray(h.table(), dtype=np.int64).reshape(1 << n1, 1 << n2, 1 << n3)
    required = math.comb(1 << n3, K3)
    mode = _resolve_mode(mode, required, budget)
    if mode == "exhaustive":
        _charge_budget(required, budget, "block+general enumeration")
        supports3 = list(itertools.combinations(range(1 << n3), K3))
    else:
        rng = np.random.default_rng(np.random.Philox(key=seed))
        supports3 = _sample_supports(1 << n3, K3, samples, rng)
    den = K1 * K2 * K3 * (1 << m)
    nums = []
    best = (-1, None)
    for s3 in supports3:
        sub = tbl[:, :, list(s3)]
        g = np.zeros((1 << n1, 1 << n2))
        for z in range(1 << m):
            nz = (sub == z).sum(axis=2)
            g += np.maximum(nz * (1 << m) - K3, 0.0)
        g_sorted = -np.sort(-g, axis=1)
        rows = g_sorted[:, :K2].sum(axis=1)
        order = np.argsort(-rows, kind="stable")
        num = int(round(rows[order[:K1]].sum()))
        nums.append(num)
        if num > best[0]:
            cond = {int(x1): [int(v) for v in np.argsort(-g[x1], kind="stable")[:K2]]
                    for x1 in order[:K1]}
            best = (num, {"x1_support": [int(v) for v in sorted(order[:K1])],
                          "x2_conditional_supports": cond,
                          "x3_support": list(s3)})
    if mode == "exhaustive":
        rep = OracleReport("exhaustive", Fraction(best[0], den),
                           witness=best[1], enumerated=len(supports3))
    else:
        err, ci = _max_with_bootstrap(nums, den, seed)
        rep = OracleReport("sampled", err, witness=best[1],
                           enumerated=len(supports3), ci=ci,
                           notes="sampled max: lower bound on worst case")
    rep.wall_time = time.perf_counter() - t0
    return rep


# ----------------------------------------------------------------------
# Exact distance of a fixed instance (with optional leakage)
# ----------------------------------------------------------------------

def exact_distance(h: ExtractorHandle, sources: Sequence, *,
                   strong: Iterable[int] = (),
                   scenario: LeakageScenario | None = None,
                   shared: Distribution | None = None) -> Fraction:
    """Exact distance of (output, strong inputs, leak register) from
    uniform x rest, for one fixed tuple of source distributions.

    ``sources`` may hold Distributions or FlatSources.  All masses must
    be exact; the result is a Fraction.
    """
    dists = [s.to_distribution(exact=True) if hasattr(s, "to_distribution")
             else s for s in sources]
    for d in dists:
        if not d.exact:
            raise InvalidInputError("exact_distance needs exact sources")
    if len(dists) != h.arity:
        raise InvalidInputError(f"{h.name} takes {h.arity} inputs")
    strong = sorted(set(strong))
    sc = scenario
    shared_items = [(0, Fraction(1))]
    if sc is not None and sc.shared_width > 0:
        if shared is None or not shared.exact:
            raise InvalidInputError("scenario uses a shared register; pass "
                                    "an exact distribution for it")
        shared_items = [(v, shared.mass[v]) for v in shared.support()]
    groups: dict = {}
    supports = [d.support() for d in dists]
    for xs in itertools.product(*supports):
        px = Fraction(1)
        for d, x in zip(dists, xs):
            px *= d.mass[x]
        for a, pa in shared_items:
            p = px * pa
            if sc is not None:
                es = tuple(sc.leak_value(i, xs[i], a) for i in range(sc.t)
                           if sc.e_widths[i] > 0)
            else:
                es = ()
            z = h.eval_int(*xs)
            key = (tuple(xs[i] for i in strong), es)
            cell = groups.setdefault(key, {})
            cell[z] = cell.get(z, Fraction(0)) + p
    u = Fraction(1, 1 << h.m)
    total = Fraction(0)
    for cell in groups.values():
        mass = sum(cell.values())
        ref = u * mass
        total += sum((p - ref for p in cell.values() if p > ref), Fraction(0))
    return total


# ----------------------------------------------------------------------
# Monte-Carlo distance estimation
# ----------------------------------------------------------------------

@dataclass
class MCReport:
    estimate: float
    ci: tuple
    n: int
    m: int
    tol: float

    @property
    def half_width(self) -> float:
        return (self.ci[1] - self.ci[0]) / 2.0

    def to_json_dict(self):
        return {"estimate": self.estimate, "ci_99": list(self.ci),
                "half_width": self.half_width, "samples": self.n,
                "part_width": self.m, "tolerance": self.tol}


def mc_distance(sample_fn: Callable, m: int, n_samples: int, *,
                tol: float, seed: int = 0) -> MCReport:
    """Plug-in total-variation estimate against uniform-on-part.

    ``sample_fn(rng)`` must return one ``(part_value, rest_key)`` pair
    per call, with ``part_value`` in ``range(2**m)``.  The estimator is
    the empirical-joint TV against (uniform on the part) x (empirical
    rest marginal); a 99% bootstrap interval over 200 resamples is
    attached.  Requires ``n_samples >= 100 * 2**m / tol**2``.
    """
    rng = np.random.default_rng(np.random.Philox(key=seed))
    pairs = [sample_fn(rng) for _ in range(n_samples)]
    return mc_distance_pairs(pairs, m, tol=tol, seed=seed)


def mc_distance_pairs(pairs: Sequence, m: int, *, tol: float,
                      seed: int = 0) -> MCReport:
    """The plug-in estimator over an already-collected list of
    ``(part_value, rest_key)`` pairs; same sizing rule and bootstrap as
    :func:`mc_distance`."""
    n_samples = len(pairs)
    needed = 100.0 * (1 << m) / (tol * tol)
    if n_samples < needed:
        raise InvalidInputError(
            f"N={n_samples} below the sizing rule ceil(100*2^m/tol^2)="
            f"{math.ceil(needed)}")
    counts: dict = {}
    for z, rest in pairs:
        key = (int(z), rest)
        counts[key] = counts.get(key, 0) + 1
    atoms = list(counts.items())
    cvec = np.array([c for _, c in atoms], dtype=np.float64)
    estimate = _plugin_tv(atoms, cvec, m, n_samples)
    rng = np.random.default_rng(np.random.Philox(key=seed ^ 0xB00))
    boot = np.empty(BOOTSTRAP_RESAMPLES)
    probs = cvec / n_samples
    for i in range(BOOTSTRAP_RESAMPLES):
        res = rng.multinomial(n_samples, probs).astype(np.float64)
        boot[i] = _plugin_tv(atoms, res, m, n_samples)
    lo, hi = np.percentile(boot, [50 * (1 - CI_LEVEL),
                                  100 - 50 * (1 - CI_LEVEL)])
    return MCReport(estimate=float(estimate), ci=(float(lo), float(hi)),
                    n=n_samples, m=m, tol=tol)


def _plugin_tv(atoms, cvec, m, n):
    keys = [k for k, _ in atoms]
    rest_tot: dict = {}
    for (_, rest), c in zip(keys, cvec):
        rest_tot[rest] = rest_tot.get(rest, 0.0) + c
    total = 0.0
    inv = 1.0 / (1 << m)
    for (_, rest), c in zip(keys, cvec):
        diff = c - inv * rest_tot[rest]
        if diff > 0:
            total += diff
    # unobserved cells contribute nothing positive to the plug-in sum
    return total / n


# ----------------------------------------------------------------------
# Lemma checkers
# ----------------------------------------------------------------------

@dataclass
class LemmaVerdict:
    lemma: str
    ok: bool
    slack: object
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def check_lemma(lemma_id: str, **instance) -> LemmaVerdict:
    """Evaluate both sides of a named inequality exactly on an instance.

    Supported ids: ``L2.2`` (min-entropy conditioning), ``L2.5``
    (classical XOR lemma), ``P3.2`` (entropy additivity up to the smooth
    slack), ``L8.1`` (per-player strong errors union to set error).
    """
    fn = _LEMMAS.get(lemma_id)
    if fn is None:
        raise InvalidInputError(f"unknown lemma id {lemma_id!r}; "
                                f"known: {sorted(_LEMMAS)}")
    return fn(**instance)


def _lemma_condition(joint: JointDistribution, eps: float,
                     target: str = "X", given: str = "Y") -> LemmaVerdict:
    """Pr_y[H(X|Y=y) >= H(X) - log|Y| - log(1/eps)] >= 1 - eps."""
    hx = min_entropy(joint.marginal_dist(target))
    wy = joint.part_width(given)
    bound = hx - wy - math.log2(1.0 / eps)
    ymarg = joint.marginal_dist(given)
    good = Fraction(0) if joint.exact else 0.0
    per_y = {}
    for y in ymarg.support():
        cond = joint.condition(given, y)
        hy = min_entropy(cond.marginal_dist(target))
        per_y[y] = hy
        if hy >= bound - 1e-9:
            good += ymarg.mass[y]
    ok = float(good) >= 1 - eps - 1e-12
    return LemmaVerdict("L2.2", ok, float(good) - (1 - eps),
                        {"threshold_bits": bound, "per_y_entropy": per_y})


def _lemma_xor(joint: JointDistribution, z_label: str = "Z",
               e_label: str = "E") -> LemmaVerdict:
    """Classical XOR lemma: dist(ZE, UxE)^2 <= 2^min(d,m) sum_S dist^2."""
    if not joint.exact:
        raise InvalidInputError("XOR lemma check requires exact masses")
    m = joint.part_width(z_label)
    d = joint.part_width(e_label)
    lhs = distance_from_uniform_on(joint, z_label) ** 2
    rhs = Fraction(0)
    for r in range(1, 1 << m):
        subset = [i + 1 for i in range(m) if (r >> (m - 1 - i)) & 1]
        proj = xor_project(joint, z_label, subset)
        rhs += distance_from_uniform_on(proj, z_label) ** 2
    rhs *= 1 << min(d, m)
    slack = rhs - lhs
    return LemmaVerdict("L2.5", slack >= 0, slack,
                        {"lhs_sq": lhs, "rhs": rhs})


def _lemma_additivity(sources, scenario: LeakageScenario,
                      shared: Distribution | None = None,
                      eps: float = 0.25, subset=None) -> LemmaVerdict:
    """Smooth min-entropy of X_S given the leaks >= sum k_i - slack."""
    res = leakage_apply(sources, scenario, shared)
    t = scenario.t
    subset = list(range(t)) if subset is None else sorted(subset)
    s = len(subset)
    slack_term = (s - 1) * math.log2(2.0 / (eps * eps))
    rhs = sum(res.k[i] for i in subset) - slack_term
    targets = [f"X{i + 1}" for i in subset]
    given = [lbl for lbl in res.joint.labels() if lbl.startswith("E")]
    plain = cond_min_entropy(res.joint, targets, given)
    if plain >= rhs - 1e-9:
        lhs = plain
    else:
        lhs = smooth_cond_min_entropy(res.joint, targets, given,
                                      (s - 1) * eps)
    return LemmaVerdict("P3.2", lhs >= rhs - 1e-9, lhs - rhs,
                        {"k": res.k, "smooth_entropy": lhs, "rhs": rhs})


def _lemma_hybrid_union(set_error: Fraction, individual_errors) -> LemmaVerdict:
    """Set error is at most the sum of individual strong errors."""
    total = sum(individual_errors, Fraction(0))
    slack = total - set_error
    return LemmaVerdict("L8.1", slack >= 0, slack,
                        {"set_error": set_error,
                         "individual": list(individual_errors)})


_LEMMAS = {
    "L2.2": _lemma_condition,
    "L2.5": _lemma_xor,
    "P3.2": _lemma_additivity,
    "L8.1": _lemma_hybrid_union,
}
