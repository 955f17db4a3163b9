"""Mamdani fuzzy inference for the WiFi-selection score.

Every membership function is a trapezoid ``(a, b, c, d)``: zero outside
``[a, d]``, one on ``[b, c]``, linear in between.  Shoulders are
trapezoids with a repeated end point.
"""

from dataclasses import dataclass, field

import numpy as np

INPUTS = ("req", "wifi_snr", "lifi_snr", "wifi_ava", "lifi_ava")
TERMS = ("low", "medium", "high")

SNR_UNIVERSE = (10.0, 70.0)  # dB
REQ_UNIVERSE = (0.0, 1e10)  # bits/s
AVA_UNIVERSE = (0.0, 1.0)


def trapezoid(x, a, b, c, d):
    x = np.asarray(x, dtype=float)
    mu = np.ones_like(x)
    if b > a:
        mu = np.minimum(mu, (x - a) / (b - a))
    if d > c:
        mu = np.minimum(mu, (d - x) / (d - c))
    mu = np.where((x < a) | (x > d), 0.0, mu)
    return np.clip(mu, 0.0, 1.0)


@dataclass
class FuzzyVariable:
    name: str
    universe: tuple
    terms: dict  # term name -> (a, b, c, d)

    def __post_init__(self):
        lo, hi = self.universe
        if not lo < hi:
            raise ValueError("empty universe")
        for t, (a, b, c, d) in self.terms.items():
            if not a <= b <= c <= d:
                raise ValueError(f"{self.name}.{t}: breakpoints out of order")

    def membership(self, x, term):
        x = np.clip(x, *self.universe)
        return trapezoid(x, *self.terms[term])

    def covers_universe(self, n=2001):
        xs = np.linspace(*self.universe, n)
        total = sum(self.membership(xs, t) for t in self.terms)
        return bool(np.all(total > 0))


@dataclass(frozen=True)
class Rule:
    antecedents: tuple  # ((input, term, negated), ...); missing inputs are wildcards
    consequent: str


@dataclass
class FuzzyRuleTable:
    inputs: list
    rules: list
    output: FuzzyVariable
    resolution: int = 1001
    _encoded: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        names = [v.name for v in self.inputs]
        for r in self.rules:
            if r.consequent not in self.output.terms:
                raise ValueError(f"unknown consequent {r.consequent!r}")
            for var, term, _ in r.antecedents:
                if var not in names:
                    raise ValueError(f"unknown input {var!r}")
                if term not in self.inputs[names.index(var)].terms:
                    raise ValueError(f"unknown term {var}.{term}")

    def encode(self):
        """Flat arrays consumed by the inference kernels (cached)."""
        if self._encoded is not None:
            return self._encoded
        names = [v.name for v in self.inputs]
        terms = list(self.output.terms)
        n_terms = max(len(v.terms) for v in self.inputs)
        bounds = np.array([v.universe for v in self.inputs], dtype=float)
        mf = np.zeros((len(self.inputs), n_terms, 4))
        term_index = []
        for k, v in enumerate(self.inputs):
            term_index.append({t: i for i, t in enumerate(v.terms)})
            for i, t in enumerate(v.terms):
                mf[k, i] = v.terms[t]
        ante = np.full((len(self.rules), len(self.inputs)), -1, dtype=np.int64)
        neg = np.zeros_like(ante)
        cons = np.empty(len(self.rules), dtype=np.int64)
        for r_i, r in enumerate(self.rules):
            for var, term, negated in r.antecedents:
                k = names.index(var)
                ante[r_i, k] = term_index[k][term]
                neg[r_i, k] = int(negated)
            cons[r_i] = terms.index(r.consequent)
        grid = np.linspace(*self.output.universe, self.resolution)
        out_mu = np.array([self.output.membership(grid, t) for t in terms])
        self._encoded = (bounds, mf, ante, neg, cons, out_mu, grid)
        return self._encoded


def default_rule_table(mean_rate=100e6, snr_breakpoints=(25.0, 40.0, 44.0),
                       ava_breakpoints=(0.0, 0.3, 0.6), resolution=1001):
    """The nine-rule WiFi-selection table with shoulder/triangle terms."""
    s0, s1, s2 = snr_breakpoints
    lo, hi = SNR_UNIVERSE
    snr_terms = {"low": (lo, lo, s0, s1), "medium": (s0, s1, s1, s2), "high": (s1, s2, hi, hi)}
    r_lo, r_hi = REQ_UNIVERSE
    rb = mean_rate
    req_terms = {"low": (r_lo, r_lo, r_lo, rb), "medium": (r_lo, rb, rb, 2 * rb),
                 "high": (rb, 2 * rb, r_hi, r_hi)}
    a0, a1, a2 = ava_breakpoints
    ava_terms = {"low": (a0, a0, a0, a1), "medium": (a0, a1, a1, a2), "high": (a1, a2, 1.0, 1.0)}
    inputs = [
        FuzzyVariable("req", REQ_UNIVERSE, req_terms),
        FuzzyVariable("wifi_snr", SNR_UNIVERSE, snr_terms),
        FuzzyVariable("lifi_snr", SNR_UNIVERSE, dict(snr_terms)),
        FuzzyVariable("wifi_ava", AVA_UNIVERSE, ava_terms),
        FuzzyVariable("lifi_ava", AVA_UNIVERSE, dict(ava_terms)),
    ]
    out = FuzzyVariable("wifi_sel", (0.0, 1.0),
                        {"low": (0.0, 0.0, 0.0, 0.5), "medium": (0.0, 0.5, 0.5, 1.0),
                         "high": (0.5, 1.0, 1.0, 1.0)})
    L, NL, H, NH = ("low", False), ("low", True), ("high", False), ("high", True)

    def rule(cons, **ante):
        return Rule(tuple((k, t, n) for k, (t, n) in ante.items()), cons)

    rules = [
        rule("high", req=L, wifi_ava=NL),
        rule("medium", req=NL, wifi_ava=NL),
        rule("low", wifi_ava=L, lifi_ava=NL),
        rule("low", wifi_snr=L, lifi_snr=NL, wifi_ava=L, lifi_ava=L),
        rule("medium", wifi_snr=L, lifi_snr=L, wifi_ava=L, lifi_ava=L),
        rule("high", wifi_snr=NL, lifi_snr=L, wifi_ava=L, lifi_ava=L),
        rule("medium", wifi_snr=NL, lifi_snr=NL, wifi_ava=L, lifi_ava=L),
        rule("low", req=H, lifi_snr=H),
        rule("high", req=NH, wifi_snr=H, wifi_ava=NL),
    ]
    return FuzzyRuleTable(inputs, rules, out, resolution)


def firing_strengths(table, crisp):
    """Per-rule firing strength; ``crisp`` is a mapping or a sequence in ``INPUTS`` order."""
    x = _crisp_vector(table, crisp)
    out = np.empty(len(table.rules))
    for r_i, r in enumerate(table.rules):
        s = 1.0
        for var, term, negated in r.antecedents:
            k = [v.name for v in table.inputs].index(var)
            mu = float(table.inputs[k].membership(x[k], term))
            s = min(s, 1.0 - mu if negated else mu)
        out[r_i] = s
    return out


def _crisp_vector(table, crisp):
    if isinstance(crisp, dict):
        return np.array([crisp[v.name] for v in table.inputs], dtype=float)
    return np.asarray(crisp, dtype=float)


def fuzzy_infer(table, crisp):
    """Defuzzified (centroid) WiFi-selection score in [0, 1]."""
    from . import kernels

    return kernels.fuzzy_score(_crisp_vector(table, crisp), *table.encode())
