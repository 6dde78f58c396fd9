"""Composition constructions: seed-lifting, alternating extraction, and
the three-source pipeline, together with their error budgets.

Every combinator exists in two views: a pointwise function on inputs and
a composite :class:`~extractomat.extractors.ExtractorHandle` whose truth
table the oracle can certify end to end (the table, not a union bound,
is the canonical certified object).

Asymptotic residuals such as ``2^-Omega(k)`` are carried as named budget
terms with configurable constants; the defaults (Omega constant 1/20,
O constant 8) are labelled as defaults in every report, because the
source constructions never fix them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bits import BitString
from .errors import InvalidInputError
from .extractors import ExtractorHandle, table_handle


@dataclass(frozen=True)
class CompositionConfig:
    """Constants the compositions need but the theory leaves free."""

    omega_const: float = 1.0 / 20.0   # 2^-Omega(x) is read as 2^-(omega_const*x)
    big_o_const: int = 8              # O(d) is read as big_o_const * d
    weak_seed_entropy_factor: float = 1.2
    weak_seed_C: float = 64.0         # d <= k/C gate for the weak-seed transform


DEFAULT_CONFIG = CompositionConfig()


@dataclass
class ErrorBudget:
    """Sum of weighted component errors plus named asymptotic residuals.

    ``terms`` holds ``(coefficient, symbol, value)`` triples; ``residuals``
    holds ``(name, parameter, constant)`` triples evaluated as
    ``2^-(constant * parameter)``.  Totals are capped at 1.
    """

    terms: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def add(self, coefficient: float, symbol: str, value: float) -> "ErrorBudget":
        self.terms.append((float(coefficient), symbol, float(value)))
        return self

    def add_residual(self, name: str, parameter: float,
                     constant: float) -> "ErrorBudget":
        self.residuals.append((name, float(parameter), float(constant)))
        return self

    def total(self) -> float:
        t = sum(c * v for c, _, v in self.terms)
        t += sum(2.0 ** (-(const * param)) for _, param, const in self.residuals)
        return min(1.0, t)

    def describe(self) -> dict:
        return {
            "terms": [{"coefficient": c, "symbol": s, "value": v}
                      for c, s, v in self.terms],
            "residuals": [{"name": n, "parameter": p, "constant": c,
                           "value": 2.0 ** (-(c * p)),
                           "constant_is_default": True}
                          for n, p, c in self.residuals],
            "total_capped_at_1": self.total(),
        }


class CondenserHandle:
    """A somewhere-condenser slot: maps one input to D rows.

    Desk-scale stand-ins: the identity condenser (one row, the input
    itself), the split condenser (two half-width rows), or an arbitrary
    row function.  The rate-improvement claim stays in the ledger; the
    pipeline only consumes the row structure.
    """

    def __init__(self, name: str, in_width: int, rows: int, row_width: int,
                 fn: Callable[[int], tuple]):
        self.name = name
        self.in_width = in_width
        self.rows = rows
        self.row_width = row_width
        self._fn = fn

    def row_values(self, x: int) -> tuple:
        out = tuple(int(v) for v in self._fn(x))
        if len(out) != self.rows:
            raise InvalidInputError(f"{self.name} must emit {self.rows} rows")
        for v in out:
            if not 0 <= v < (1 << self.row_width):
                raise InvalidInputError(f"{self.name} row exceeds row width")
        return out

    @classmethod
    def identity(cls, width: int) -> "CondenserHandle":
        return cls(f"cond-id[{width}]", width, 1, width, lambda x: (x,))

    @classmethod
    def split(cls, width: int) -> "CondenserHandle":
        if width % 2:
            raise InvalidInputError("split condenser needs an even width")
        half = width // 2
        mask = (1 << half) - 1
        return cls(f"cond-split[{width}]", width, 2, half,
                   lambda x: (x >> half, x & mask))


# ----------------------------------------------------------------------
# One extra independent source
# ----------------------------------------------------------------------

def qmext(iext: ExtractorHandle, extq: ExtractorHandle,
          inputs: Sequence[BitString]) -> BitString:
    """Seed a strong seeded extractor with a multi-source output.

    ``inputs`` holds the t sources feeding ``iext`` followed by one extra
    source; the result is ``extq(x_last, iext(x_1..x_t))``.  The
    composition is one-sided secure with error eps1 + eps2 and strong on
    the first t inputs.
    """
    _check_qmext(iext, extq)
    if len(inputs) != iext.arity + 1:
        raise InvalidInputError(f"need {iext.arity + 1} inputs")
    z = iext.evaluate(*inputs[:-1])
    return extq.evaluate(inputs[-1], z)


def qmext_budget(iext: ExtractorHandle, extq: ExtractorHandle) -> ErrorBudget:
    return (ErrorBudget()
            .add(1, "eps1", iext.eps)
            .add(1, "eps2", extq.eps))


def build_qmext_handle(iext: ExtractorHandle, extq: ExtractorHandle,
                       name: str = "qmext") -> ExtractorHandle:
    _check_qmext(iext, extq)
    widths = iext.input_widths + (extq.input_widths[0],)
    t = iext.arity

    def fn(*xs: int) -> int:
        z = iext.eval_int(*xs[:t])
        return extq.eval_int(xs[t], z)

    budget = qmext_budget(iext, extq)
    h = ExtractorHandle(
        name, "t-source" if len(widths) > 2 else "2-source", widths, extq.m,
        iext.k_profile + (extq.k_profile[0],), min(1.0, budget.total()),
        strong=range(t), provenance="composite", fn=fn)
    h.budget = budget
    return h


def _check_qmext(iext, extq):
    if extq.kind != "seeded":
        raise InvalidInputError("the lifting stage must be a seeded handle")
    if iext.m != extq.input_widths[1]:
        raise InvalidInputError(
            f"inner output width {iext.m} must equal the seed width "
            f"{extq.input_widths[1]}")


# ----------------------------------------------------------------------
# One extra block: alternating extraction
# ----------------------------------------------------------------------

def qbext(bext: ExtractorHandle, extc: ExtractorHandle,
          extq: ExtractorHandle, x1: BitString, x2: BitString,
          x3: BitString, r_width: int) -> BitString:
    """Alternating extraction over a block source plus one general source.

    R is the first ``r_width`` bits of ``bext(x1, x3)``; T = extc(x2, R)
    re-extracts from the extra block using R as seed; the final output is
    extq(x3, T).  Strong on the block source (x1, x2).
    """
    _check_qbext(bext, extc, extq, r_width)
    r = bext.evaluate(x1, x3).take(r_width)
    t = extc.evaluate(x2, r)
    return extq.evaluate(x3, t)


def qbext_budget(bext, extc, extq, k3: float,
                 config: CompositionConfig = DEFAULT_CONFIG) -> ErrorBudget:
    return (ErrorBudget()
            .add(4, "eps1", bext.eps)
            .add(2, "eps2", extc.eps)
            .add(1, "eps3", extq.eps)
            .add_residual("2^-Omega(k3)", k3, config.omega_const))


def build_qbext_handle(bext: ExtractorHandle, extc: ExtractorHandle,
                       extq: ExtractorHandle, k3: float,
                       config: CompositionConfig = DEFAULT_CONFIG,
                       name: str = "qbext") -> ExtractorHandle:
    r_width = seed_slice_width(k3)
    _check_qbext(bext, extc, extq, r_width)
    n1, n3 = bext.input_widths
    n2 = extc.input_widths[0]
    if extq.input_widths[0] != n3:
        raise InvalidInputError("the final stage must read the general source")
    shift_r = bext.m - r_width

    def fn(a: int, b: int, c: int) -> int:
        r = bext.eval_int(a, c) >> shift_r
        t = extc.eval_int(b, r)
        return extq.eval_int(c, t)

    budget = qbext_budget(bext, extc, extq, k3, config)
    h = ExtractorHandle(
        name, "t-source", (n1, n2, n3), extq.m,
        (bext.k_profile[0], extc.k_profile[0], k3),
        min(1.0, budget.total()), strong=(0, 1), provenance="composite",
        fn=fn)
    h.budget = budget
    return h


def seed_slice_width(k3: float) -> int:
    """0.05*k3 floored, clamped to at least one bit (tiny-k convention)."""
    return max(1, math.floor(0.05 * k3))


def _check_qbext(bext, extc, extq, r_width):
    for h, nm in ((extc, "extc"), (extq, "extq")):
        if h.kind != "seeded":
            raise InvalidInputError(f"{nm} must be a seeded handle")
    if r_width < 1 or r_width > bext.m:
        raise InvalidInputError("seed slice exceeds the first stage output")
    if extc.input_widths[1] != r_width:
        raise InvalidInputError(
            f"extc seed width {extc.input_widths[1]} must equal the slice "
            f"width {r_width}")
    if extc.m != extq.input_widths[1]:
        raise InvalidInputError("extc output must seed extq")


# ----------------------------------------------------------------------
# The three-source pipeline (condense, somewhere-random, finish)
# ----------------------------------------------------------------------

def bext_three_source(cond: CondenserHandle, raz_slot: ExtractorHandle,
                      srext_slot: ExtractorHandle, ext_last: ExtractorHandle,
                      x1: BitString, x2: BitString, x3: BitString, *,
                      k3: float, ell: int | None = None) -> BitString:
    """Block+general pipeline: condense x1, extract a somewhere-random
    string from x3 row by row, use it to extract a seed from x2, finish
    on x3.
    """
    params = _check_bext(cond, raz_slot, srext_slot, ext_last, k3, ell)
    return _bext_eval(cond, raz_slot, srext_slot, ext_last, params,
                      x1.value, x2.value, x3.value, as_bits=True)


def bext_budget(raz_slot, srext_slot, ext_last, k: float,
                config: CompositionConfig = DEFAULT_CONFIG) -> ErrorBudget:
    return (ErrorBudget()
            .add(1, "eps_rows", raz_slot.eps)
            .add(1, "eps_sr", srext_slot.eps)
            .add(1, "eps_last", ext_last.eps)
            .add_residual("2^-Omega(k)", k, config.omega_const))


def build_bext_handle(cond: CondenserHandle, raz_slot: ExtractorHandle,
                      srext_slot: ExtractorHandle, ext_last: ExtractorHandle,
                      *, k_profile, ell: int | None = None,
                      config: CompositionConfig = DEFAULT_CONFIG,
                      name: str = "bext3") -> ExtractorHandle:
    k1, k2, k3 = k_profile
    params = _check_bext(cond, raz_slot, srext_slot, ext_last, k3, ell)
    n1 = cond.in_width
    n2 = srext_slot.input_widths[0]
    n3 = raz_slot.input_widths[1]

    def fn(a: int, b: int, c: int) -> int:
        return _bext_eval(cond, raz_slot, srext_slot, ext_last, params,
                          a, b, c)

    budget = bext_budget(raz_slot, srext_slot, ext_last,
                         min(k1, k2, k3), config)
    h = ExtractorHandle(
        name, "t-source", (n1, n2, n3), ext_last.m,
        (float(k1), float(k2), float(k3)), min(1.0, budget.total()),
        strong=(0, 1), provenance="composite", fn=fn)
    h.budget = budget
    return h


def _check_bext(cond, raz_slot, srext_slot, ext_last, k3, ell):
    d = cond.rows
    if raz_slot.input_widths[0] != cond.row_width:
        raise InvalidInputError(
            "constraint violated: row extractor input 1 must read condenser rows")
    ell = ell if ell is not None else max(1, seed_slice_width(k3) // d)
    # the D*ell <= 0.05*k3 cap, floored with a minimum of one bit per row
    # (tiny-k convention: every length keeps at least one bit)
    cap = max(d, math.floor(0.05 * k3))
    if d * ell > cap:
        raise InvalidInputError(
            f"constraint violated: D*ell = {d * ell} exceeds 0.05*k3 = {cap}")
    if ell > raz_slot.m:
        raise InvalidInputError(
            "constraint violated: per-row slice exceeds row extractor output")
    if srext_slot.input_widths[1] != d * ell:
        raise InvalidInputError(
            f"constraint violated: somewhere-random input width "
            f"{srext_slot.input_widths[1]} must be D*ell = {d * ell}")
    if ext_last.kind != "seeded" or ext_last.input_widths[1] != srext_slot.m:
        raise InvalidInputError(
            "constraint violated: final stage must be seeded by the "
            "somewhere-random extraction")
    if ext_last.input_widths[0] != raz_slot.input_widths[1]:
        raise InvalidInputError(
            "constraint violated: final stage must read the general source")
    return {"ell": ell, "shift": raz_slot.m - ell}


def _bext_eval(cond, raz_slot, srext_slot, ext_last, params, a, b, c,
               as_bits=False):
    ell, shift = params["ell"], params["shift"]
    w3 = 0
    for row in cond.row_values(a):
        w3 = (w3 << ell) | (raz_slot.eval_int(row, c) >> shift)
    v = srext_slot.eval_int(b, w3)
    out = ext_last.eval_int(c, v)
    return BitString(ext_last.m, out) if as_bits else out


# ----------------------------------------------------------------------
# Weak seeds and the three-short-seed extractor
# ----------------------------------------------------------------------

def weak_seed_transform(base: ExtractorHandle, delta: float, *,
                        d_prime: int,
                        cond: CondenserHandle | None = None,
                        raz_slot: ExtractorHandle,
                        srext_slot: ExtractorHandle,
                        config: CompositionConfig = DEFAULT_CONFIG,
                        enforce_gate: bool = True,
                        name: str = "weakseed") -> ExtractorHandle:
    """Make a strong seeded extractor tolerate a rate-(1/2+delta) seed.

    The weak seed of width ``d_prime`` (even) is split into halves, which
    form a block source up to a 2^-Omega(d') error; the three-source
    pipeline turns them plus the main input into a good seed for
    ``base``.  Ledger arithmetic for the entropy/seed-length claims lives
    in the theorem ledger; this builder wires the desk-scale instance.

    ``enforce_gate`` applies the d <= k/C precondition with the
    configured C; desk instances may disable it and record the override.
    """
    if base.kind != "seeded":
        raise InvalidInputError("weak-seed transform wraps seeded handles")
    if d_prime % 2:
        raise InvalidInputError("weak seed width must be even for halving")
    n, d = base.input_widths
    k = base.k_profile[0]
    if enforce_gate and d > k / config.weak_seed_C:
        raise InvalidInputError(
            f"constraint violated: seed width d={d} exceeds k/C = "
            f"{k / config.weak_seed_C}")
    half = d_prime // 2
    cond = cond if cond is not None else CondenserHandle.identity(half)
    if srext_slot.input_widths[0] != half:
        raise InvalidInputError(
            "somewhere-random stage must read the second seed half")
    if srext_slot.m != d:
        raise InvalidInputError(
            f"pipeline must emit a {d}-bit seed for the base handle")
    k3 = k
    params = _check_bext(cond, raz_slot, srext_slot, base, k3, None)
    mask = (1 << half) - 1

    def fn(x: int, r: int) -> int:
        r1, r2 = r >> half, r & mask
        return _bext_eval(cond, raz_slot, srext_slot, base, params, r1, r2, x)

    budget = (ErrorBudget()
              .add(1, "eps_base", base.eps)
              .add(1, "eps_rows", raz_slot.eps)
              .add(1, "eps_sr", srext_slot.eps)
              .add_residual("2^-Omega(d)", d, config.omega_const)
              .add_residual("2^-Omega(d')", d_prime, config.omega_const))
    h = ExtractorHandle(
        name, "seeded", (n, d_prime), base.m,
        (config.weak_seed_entropy_factor * k, (0.5 + delta) * d_prime),
        min(1.0, budget.total()), strong=(1,), provenance="composite", fn=fn)
    h.budget = budget
    return h


def three_source_short_seeds(x1: BitString, x2: BitString, x3: BitString,
                             handle: ExtractorHandle) -> BitString:
    """Two short rate-delta seeds plus one long source, via the pipeline.

    ``handle`` comes from :func:`build_three_source_handle`; the two
    seeds form the block source and the output is strong in them.
    """
    return handle.evaluate(x1, x2, x3)


def build_three_source_handle(cond: CondenserHandle,
                              raz_slot: ExtractorHandle,
                              srext_slot: ExtractorHandle,
                              ext_last: ExtractorHandle, *,
                              delta: float, d: int, k: float,
                              config: CompositionConfig = DEFAULT_CONFIG,
                              name: str = "threesource") -> ExtractorHandle:
    if cond.in_width != d or srext_slot.input_widths[0] != d:
        raise InvalidInputError("both seeds must have width d")
    h = build_bext_handle(cond, raz_slot, srext_slot, ext_last,
                          k_profile=(delta * d, delta * d, k),
                          config=config, name=name)
    return h


# ----------------------------------------------------------------------
# Truth-table export
# ----------------------------------------------------------------------

def export_truth_table(h: ExtractorHandle) -> np.ndarray:
    """Materialize the composite truth table (the certified object)."""
    return np.array(h.table(), dtype=np.uint32)


def exported_handle(h: ExtractorHandle, name: str | None = None) -> ExtractorHandle:
    """A table-backed copy of ``h``; composition then export commutes
    with exporting the parts first (tested at tiny widths)."""
    out = table_handle(name or f"{h.name}[table]", h.kind, h.input_widths,
                       h.m, export_truth_table(h), k_profile=h.k_profile,
                       eps=h.eps, strong=h.strong, provenance=h.provenance,
                       record=h.record)
    if hasattr(h, "budget"):
        out.budget = h.budget
    return out
