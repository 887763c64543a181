"""Learning value ranges from literal populations.

Numeric and temporal populations get Gaussian mixtures fitted by EM over
a grid of mode counts and restarts, selected by BIC; textual populations
get generalized regular expressions built from per-value expressions that
are clustered by character-class signature and merged.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

NOISE_SIGMA = 1e-3  # standardized units
VARIANCE_FLOOR = 1e-9  # standardized units
EM_TOL = 1e-6
EM_MAX_ITER = 200


def population_seed(global_seed: int, *key: str) -> int:
    """Stable per-population seed: identical regardless of worker scheduling."""
    digest = hashlib.sha256("|".join((str(global_seed),) + key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class NumericSample:
    """A standardized, shuffled, noise-augmented sample ready for fitting."""

    values: np.ndarray
    normalization: tuple[float, float]  # (shift, scale); scale > 0
    temporal: bool = False

    @property
    def size(self) -> int:
        return int(self.values.size)


def prepare_sample(values, seed: int, temporal: bool = False) -> NumericSample:
    raw = np.asarray(values, dtype=float)
    shift = float(raw.mean())
    scale = float(raw.std())
    if scale <= 0.0:
        scale = 1.0
    rng = np.random.default_rng(seed)
    x = (raw - shift) / scale
    x = rng.permutation(x)
    x = x + rng.normal(0.0, NOISE_SIGMA, size=x.shape)
    return NumericSample(values=x, normalization=(shift, scale), temporal=temporal)


@dataclass(frozen=True)
class MixtureFit:
    """Best mixture for one population, with components in original units."""

    components: tuple[tuple[float, float, float], ...]  # (weight, mean, variance)
    bic: float
    seed: int
    modes: int
    normalization: tuple[float, float] = (0.0, 1.0)
    loglik_trace: tuple[float, ...] = ()


def _log_densities(x: np.ndarray, weights, means, variances) -> np.ndarray:
    diff = x[:, None] - means[None, :]
    return (
        -0.5 * (diff * diff / variances[None, :] + np.log(2.0 * np.pi * variances[None, :]))
        + np.log(weights[None, :])
    )


def _loglik(x: np.ndarray, weights, means, variances) -> float:
    log_p = _log_densities(x, weights, means, variances)
    m = log_p.max(axis=1)
    return float((m + np.log(np.exp(log_p - m[:, None]).sum(axis=1))).sum())


def _init_means(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ style seeding: spread initial means over the data."""
    means = [x[rng.integers(x.size)]]
    while len(means) < k:
        d2 = np.min((x[:, None] - np.asarray(means)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total <= 0:
            means.append(x[rng.integers(x.size)])
            continue
        means.append(x[rng.choice(x.size, p=d2 / total)])
    return np.asarray(means, dtype=float)


def run_em(
    x: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, list[float]]:
    """EM for a one-dimensional k-component mixture.

    Returns (weights, means, variances, final log-likelihood, trace).
    Convergence: absolute log-likelihood gain below EM_TOL, or EM_MAX_ITER.
    """
    n = x.size
    means = _init_means(x, k, rng)
    variances = np.full(k, max(float(x.var()), VARIANCE_FLOOR))
    weights = np.full(k, 1.0 / k)

    trace: list[float] = []
    prev = -np.inf
    for _ in range(EM_MAX_ITER):
        log_p = _log_densities(x, weights, means, variances)
        m = log_p.max(axis=1)
        log_norm = m + np.log(np.exp(log_p - m[:, None]).sum(axis=1))
        ll = float(log_norm.sum())
        trace.append(ll)
        resp = np.exp(log_p - log_norm[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp * x[:, None]).sum(axis=0) / nk
        variances = (resp * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / nk
        variances = np.maximum(variances, VARIANCE_FLOOR)
        if ll - prev < EM_TOL:
            break
        prev = ll
    final = _loglik(x, weights, means, variances)
    return weights, means, variances, final, trace


def bic_score(loglik: float, modes: int, n: int) -> float:
    """k ln(n) - 2 ln(L) with k = 3*modes - 1 free parameters."""
    return (3 * modes - 1) * np.log(n) - 2.0 * loglik


def fit_gmm(
    values,
    modes_max: int = 5,
    restarts: int = 3,
    seed: int = 0,
    temporal: bool = False,
) -> MixtureFit:
    """Fit mixtures for every mode count and restart; return the BIC minimum.

    The sample is standardized, shuffled, and perturbed with Gaussian noise
    before fitting; reported components are denormalized back to original
    units. An all-identical sample short-circuits to a single component at
    the exact value with the variance floor.
    """
    raw = np.asarray(values, dtype=float)
    if raw.size == 0:
        raise ValueError("cannot fit a mixture to an empty sample")

    if raw.size == 1 or float(raw.max() - raw.min()) == 0.0:
        sample = prepare_sample(raw, seed=seed, temporal=temporal)
        x = sample.values
        w = np.array([1.0])
        mu = np.array([float(x.mean())])
        var = np.array([max(float(x.var()), VARIANCE_FLOOR)])
        ll = _loglik(x, w, mu, var)
        return MixtureFit(
            components=((1.0, float(raw[0]), VARIANCE_FLOOR),),
            bic=float(bic_score(ll, 1, x.size)),
            seed=seed,
            modes=1,
            normalization=sample.normalization,
            loglik_trace=(ll,),
        )

    sample = prepare_sample(raw, seed=seed, temporal=temporal)
    x = sample.values
    shift, scale = sample.normalization

    best: tuple[float, int, int] | None = None
    best_fit: MixtureFit | None = None
    for modes in range(1, modes_max + 1):
        if modes > x.size:
            break
        for restart in range(restarts):
            rng = np.random.default_rng([seed, modes, restart])
            weights, means, variances, ll, trace = run_em(x, modes, rng)
            bic = float(bic_score(ll, modes, x.size))
            key = (bic, modes, restart)
            if best is None or key < best:
                best = key
                components = tuple(
                    sorted(
                        (
                            (float(w), float(m * scale + shift), float(v * scale * scale))
                            for w, m, v in zip(weights, means, variances)
                        ),
                        key=lambda c: (c[1], c[2], c[0]),
                    )
                )
                best_fit = MixtureFit(
                    components=components,
                    bic=bic,
                    seed=seed,
                    modes=modes,
                    normalization=(shift, scale),
                    loglik_trace=tuple(trace),
                )
    assert best_fit is not None
    return best_fit


# --- textual ranges ---------------------------------------------------------

LOWER = "L"
UPPER = "U"
DIGIT = "D"
SPACE = "S"

_CLASS_REGEX = {LOWER: "[a-z]", UPPER: "[A-Z]", DIGIT: "[0-9]", SPACE: r"\s"}


def _char_class(ch: str) -> tuple[str, str | None]:
    if "a" <= ch <= "z":
        return LOWER, None
    if "A" <= ch <= "Z":
        return UPPER, None
    if "0" <= ch <= "9":
        return DIGIT, None
    if ch.isspace():
        return SPACE, None
    return "LIT", ch


def _class_token(cls: str, lit: str | None) -> str:
    return _CLASS_REGEX[cls] if lit is None else re.escape(lit)


def value_regex_tokens(value: str) -> tuple[tuple[str, str | None, int], ...]:
    """Run-length encode a string into (class, literal-or-None, count) runs."""
    runs: list[tuple[str, str | None, int]] = []
    for ch in value:
        cls, lit = _char_class(ch)
        if runs and runs[-1][0] == cls and runs[-1][1] == lit:
            runs[-1] = (cls, lit, runs[-1][2] + 1)
        else:
            runs.append((cls, lit, 1))
    return tuple(runs)


def _render(tokens, spans: dict[tuple[str, str | None], tuple[int, int]] | None = None) -> str:
    parts = []
    for cls, lit, count in tokens:
        lo, hi = (count, count) if spans is None else spans[(cls, lit)]
        token = _class_token(cls, lit)
        if lo == hi:
            parts.append(token if lo == 1 else f"{token}{{{lo}}}")
        else:
            parts.append(f"{token}{{{lo},{hi}}}")
    return "".join(parts)


def value_regex(value: str) -> str:
    """Anchored-by-convention regular expression for a single value.

    Each character maps to a class (lowercase, uppercase, digit,
    whitespace, or the literal character) and consecutive equal classes are
    run-length compressed, e.g. "mary ann" -> [a-z]{4}\\s[a-z]{3}.
    """
    return _render(value_regex_tokens(value))


@dataclass(frozen=True)
class RegexCluster:
    """A group of values sharing a class signature, with its generalization.

    ``exact`` clusters group identical per-value expressions; merged
    clusters pool quantifier spans per character class over all members,
    so every exact cluster's expression specializes its parent's.
    """

    members: tuple[str, ...]
    signature: str
    pattern: str
    exact: bool

    def matches(self, value: str) -> bool:
        return re.fullmatch(self.pattern, value) is not None


def cluster_and_generalize(values, coverage: float = 1.0) -> list[RegexCluster]:
    """Cluster values by character-class signature and generalize quantifiers.

    Returns exact clusters (identical per-value expressions) plus one
    merged parent per signature that spans at least two distinct exact
    forms. Quantifier spans are pooled per character class across all
    positions and members. With signature clustering every member matches
    its cluster's expression, satisfying any requested coverage.
    """
    if not values:
        return []
    by_exact: dict[tuple, list[str]] = {}
    for value in values:
        by_exact.setdefault(value_regex_tokens(value), []).append(value)

    by_signature: dict[tuple, list[tuple]] = {}
    for tokens in by_exact:
        sig = tuple((cls, lit) for cls, lit, _ in tokens)
        by_signature.setdefault(sig, []).append(tokens)

    clusters: list[RegexCluster] = []
    for sig, token_seqs in by_signature.items():
        sig_str = "".join(_class_token(cls, lit) for cls, lit in sig)
        for tokens in token_seqs:
            members = tuple(sorted(set(by_exact[tokens])))
            clusters.append(
                RegexCluster(
                    members=members,
                    signature=sig_str,
                    pattern=_render(tokens),
                    exact=True,
                )
            )
        if len(token_seqs) >= 2:
            spans: dict[tuple[str, str | None], tuple[int, int]] = {}
            members_all: set[str] = set()
            for tokens in token_seqs:
                members_all.update(by_exact[tokens])
                for cls, lit, count in tokens:
                    lo, hi = spans.get((cls, lit), (count, count))
                    spans[(cls, lit)] = (min(lo, count), max(hi, count))
            merged = _render(token_seqs[0], spans)
            clusters.append(
                RegexCluster(
                    members=tuple(sorted(members_all)),
                    signature=sig_str,
                    pattern=merged,
                    exact=False,
                )
            )

    clusters.sort(key=lambda c: (c.signature, c.exact, c.pattern))
    for cluster in clusters:
        assert all(cluster.matches(m) for m in cluster.members)
    return clusters
