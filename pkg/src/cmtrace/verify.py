"""Self-check suites run by ``cmtrace verify``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath

from .classnum import hurwitz, hurwitz_bruteforce
from .etafun import DEFAULT_POLICY, PrecisionPolicy
from .funcdsl import FunctionSpec, eta_corpus, parse, residue_identity
from .traces import beta_function, beta_quadrature, generating_series

ZAGIER_J = {-1: -1, 0: 2, 3: -248, 4: 492, 7: -4119, 8: 7256}
FRICKE_MINUS = "eta(1)^24*eta(2)^-24 - 4096*eta(2)^24*eta(1)^-24"


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    delta: str = "0"

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "delta": self.delta}


def _fmt(x) -> str:
    return mpmath.nstr(x, 6) if not isinstance(x, (int, Fraction)) else str(x)


def suite_zagier(policy: PrecisionPolicy = DEFAULT_POLICY, **_) -> list[Check]:
    gs = generating_series(parse("J", 1), 1, 8, "G", policy)
    checks = []
    for n in range(-1, 9):
        rec = gs.table.get(Fraction(n))
        got = Fraction(0) if rec is None else rec.value
        want = Fraction(ZAGIER_J.get(n, 0))
        ok = got == want
        delta = got - want
        if rec is not None and rec.kind == "positive":
            ok = ok and rec.certified and rec.error < 1e-6
            delta = abs(rec.value_numeric - want)
        checks.append(Check(f"coefficient q^{n}", ok, _fmt(delta)))
    return checks


def suite_plus_space(spec: FunctionSpec | None = None, dmax: int = 100,
                     policy: PrecisionPolicy = DEFAULT_POLICY, normalization: str = "G",
                     jobs: int = 1, **_) -> list[Check]:
    spec = spec or parse("J", 1)
    gs = generating_series(spec, spec.level, dmax, normalization, policy, jobs)
    bad = gs.violations
    return [Check(f"plus space ({spec}, level {spec.level}, dmax {dmax})", not bad,
                  ",".join(str(n) for n in bad) or "0")]


def suite_fricke_minus(dmax: int = 40, policy: PrecisionPolicy = DEFAULT_POLICY, jobs: int = 1,
                       **_) -> list[Check]:
    gs = generating_series(parse(FRICKE_MINUS, 2), 2, dmax, "I0", policy, jobs)
    checks = []
    for n, rec in sorted(gs.table.items()):
        if rec.kind == "positive":
            size = abs(rec.value_numeric)
            checks.append(Check(f"index {n}", bool(size < 1e-6), _fmt(size)))
        else:
            checks.append(Check(f"index {n}", rec.value == 0, str(rec.value)))
    checks.append(Check("no non-holomorphic terms", not gs.nonholo, str(len(gs.nonholo))))
    return checks


def suite_hurwitz(dmax: int = 500, **_) -> list[Check]:
    checks = [Check("H(0)", hurwitz(0) == Fraction(-1, 12), str(hurwitz(0) + Fraction(1, 12)))]
    bad = [D for D in range(1, dmax + 1) if hurwitz(D) != hurwitz_bruteforce(D)]
    checks.append(Check(f"class reps vs brute force, D <= {dmax}", not bad, ",".join(map(str, bad)) or "0"))
    return checks


def suite_beta(**_) -> list[Check]:
    checks = [Check("beta(0) = 2", beta_function(0) == 2, _fmt(beta_function(0) - 2))]
    with mpmath.workdps(30):
        for label, s in (("0.1", mpmath.mpf("0.1")), ("1", mpmath.mpf(1)), ("4pi", 4 * mpmath.pi),
                         ("10", mpmath.mpf(10))):
            closed = beta_function(s)
            quad = beta_quadrature(s)
            rel = abs(closed - quad) / abs(quad)
            checks.append(Check(f"beta({label})", bool(rel < 1e-12), _fmt(rel)))
    return checks


def suite_residue(levels=(2, 3, 5, 7), **_) -> list[Check]:
    checks = []
    for p in levels:
        for spec in eta_corpus(p):
            lhs, rhs = residue_identity(spec)
            checks.append(Check(f"level {p}: {spec}", lhs == rhs, str(lhs - rhs)))
    return checks


SUITES: dict[str, Callable[..., list[Check]]] = {
    "zagier": suite_zagier,
    "plus-space": suite_plus_space,
    "fricke-minus": suite_fricke_minus,
    "hurwitz": suite_hurwitz,
    "beta": suite_beta,
    "residue": suite_residue,
}


def run_suite(name: str, **kwargs) -> list[Check]:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](**kwargs)
