"""Synthetic survey populations with planted, known ground truth.

Rows are sampled independently given ethnicity: categorical features uniform
over their declared levels (documented simplification), numeric features
standard normal. The binary target follows a logistic law over standardized
feature contributions::

    z = intercept + cohort_intercept[ethnicity] + sum_f contrib_f + noise
    y ~ Bernoulli(sigmoid(z))

where contrib_f is weight * standardized code for ordinal/numeric features
and a centered per-level effect for nominal features. Cohort coefficient
maps replace the base map for rows of that ethnicity, which plants
cohort-specific mechanisms with a known answer key.

Because feature draws are independent given ethnicity, the Bayes-optimal
accuracy E[max(p, 1-p)] is estimable by direct Monte-Carlo on the
generative law; that estimate is the oracle ceiling used by learner checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._rng import STREAM_BAYES, STREAM_GEN, generator
from .dataset import Dataset
from .errors import ConfigError
from .schema import FeatureSchema, FeatureSpec, Group, Kind

CoefMap = Mapping[str, "float | tuple[float, ...]"]

ETHNICITY = "ethnicity"
ETHNICITY_LEVELS = ("Hispanic", "African American", "Asian", "Other")
#: recent US census shares for the three minority groups; the remainder is "Other"
CENSUS_MIX = (("Hispanic", 0.181), ("African American", 0.134), ("Asian", 0.059))

LIKERT = ("1", "2", "3", "4", "5")


def _likert(name: str, group: Group) -> FeatureSpec:
    return FeatureSpec(name, Kind.ORDINAL, LIKERT, group)


def default_schema() -> FeatureSchema:
    """The shipped 125-feature survey schema.

    Headline items carry their survey names; the remainder are generated
    filler questions cycled across the A/C/D groups.
    """
    f: list[FeatureSpec] = []
    # demographic (B)
    f.append(FeatureSpec(ETHNICITY, Kind.NOMINAL, ETHNICITY_LEVELS, Group.B))
    f.append(FeatureSpec("gender", Kind.NOMINAL, ("male", "female"), Group.B))
    f.append(FeatureSpec("age_bracket", Kind.ORDINAL, ("18-29", "30-44", "45-59", "60+"), Group.B))
    f.append(FeatureSpec("education", Kind.ORDINAL,
                         ("no_hs", "high_school", "some_college", "bachelors", "graduate"), Group.B))
    f.append(FeatureSpec("income_bracket", Kind.ORDINAL,
                         ("<25k", "25-50k", "50-75k", "75-100k", ">100k"), Group.B))
    f.append(FeatureSpec("employment", Kind.NOMINAL,
                         ("employed", "unemployed", "student", "retired"), Group.B))
    f.append(FeatureSpec("marital_status", Kind.NOMINAL,
                         ("single", "married", "divorced", "widowed"), Group.B))
    f.append(FeatureSpec("region", Kind.NOMINAL,
                         ("northeast", "midwest", "south", "west"), Group.B))
    f.append(FeatureSpec("urbanicity", Kind.ORDINAL, ("rural", "suburban", "urban"), Group.B))
    f.append(FeatureSpec("household_size", Kind.NUMERIC, (), Group.B))
    f.append(FeatureSpec("children_in_home", Kind.ORDINAL, ("0", "1", "2", "3+"), Group.B))
    f.append(FeatureSpec("insurance_status", Kind.NOMINAL, ("insured", "uninsured"), Group.B))
    # culture (A)
    for name in ("ethnic_affiliation", "cultural_identity", "religiosity", "social_identity",
                 "community_trust", "family_influence", "tradition_adherence", "collectivism",
                 "political_trust"):
        f.append(_likert(name, Group.A))
    f.append(FeatureSpec("religious_service_attendance", Kind.ORDINAL,
                         ("never", "rarely", "monthly", "weekly"), Group.A))
    f.append(FeatureSpec("language_at_home", Kind.NOMINAL,
                         ("english", "spanish", "bilingual", "other"), Group.A))
    # vaccine and health perception (C)
    for name in ("vaccine_trust", "vaccine_approval", "vaccine_side_effects",
                 "vaccine_needs_healthy_people", "vaccine_long_term_effects", "fertility_concern",
                 "cdc_trust", "fda_trust", "doctor_trust", "healthcare_system_trust",
                 "covid_fear", "covid_concern", "vaccine_effectiveness_belief"):
        f.append(_likert(name, Group.C))
    f.append(FeatureSpec("flu_vaccine_history", Kind.NOMINAL, ("yes", "no"), Group.C))
    f.append(FeatureSpec("prior_covid_infection", Kind.NOMINAL, ("yes", "no"), Group.C))
    # covid information exposure (D)
    for name in ("conspiracy_theory", "social_media_posts", "covid_info_seeking",
                 "misinformation_exposure", "rumor_belief", "news_media_trust", "info_value"):
        f.append(_likert(name, Group.D))
    f.append(FeatureSpec("covid_news_hours", Kind.NUMERIC, (), Group.D))
    f.append(FeatureSpec("info_sharing_frequency", Kind.ORDINAL,
                         ("never", "rarely", "sometimes", "often", "daily"), Group.D))

    pad_groups = (Group.A, Group.C, Group.D)
    i = len(f)
    while len(f) < 125:
        f.append(_likert(f"survey_item_{len(f) + 1:03d}", pad_groups[(len(f) - i) % 3]))
    f.append(FeatureSpec("vaccine_decision", Kind.NOMINAL, ("refuse", "accept"), Group.NONE))
    return FeatureSchema(tuple(f), target_name="vaccine_decision", positive_level="accept")


@dataclass(frozen=True)
class GeneratorSpec:
    """Planted generative law over a schema."""

    schema: FeatureSchema
    ethnic_mix: tuple[tuple[str, float], ...] = CENSUS_MIX
    coefficients: CoefMap = field(default_factory=dict)
    cohort_coefficients: Mapping[str, CoefMap] = field(default_factory=dict)
    cohort_intercepts: Mapping[str, float] = field(default_factory=dict)
    intercept: float = 0.0
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        schema = self.schema
        if ETHNICITY not in schema:
            raise ConfigError(f"generator schema needs an {ETHNICITY!r} feature")
        eth = schema[ETHNICITY]
        declared = set(eth.levels)
        total = 0.0
        for level, frac in self.ethnic_mix:
            if level not in declared:
                raise ConfigError(f"ethnic mix level {level!r} is not declared")
            if frac < 0:
                raise ConfigError(f"ethnic mix fraction for {level!r} is negative")
            total += frac
        if total > 1.0 + 1e-12:
            raise ConfigError(f"ethnic mix fractions sum to {total} > 1")
        if len(self.ethnic_mix) >= len(eth.levels):
            raise ConfigError("ethnic mix must leave at least one remainder level")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")
        for where, cmap in [("base", self.coefficients),
                            *((f"cohort {k!r}", v) for k, v in self.cohort_coefficients.items())]:
            for fname, eff in cmap.items():
                if fname not in schema or fname == schema.target_name:
                    raise ConfigError(f"{where}: unknown coefficient feature {fname!r}")
                spec = schema[fname]
                if spec.kind is Kind.NOMINAL:
                    if np.isscalar(eff):
                        raise ConfigError(f"{where}: nominal {fname!r} needs per-level effects")
                    if len(eff) != len(spec.levels):
                        raise ConfigError(
                            f"{where}: {fname!r} has {len(spec.levels)} levels but {len(eff)} effects"
                        )
                elif not np.isscalar(eff):
                    raise ConfigError(f"{where}: {fname!r} takes a scalar weight")
        for level in list(self.cohort_coefficients) + list(self.cohort_intercepts):
            if level not in declared:
                raise ConfigError(f"cohort override on undeclared ethnicity {level!r}")

    # -- derived ---------------------------------------------------------

    def mix_probabilities(self) -> np.ndarray:
        eth = self.schema[ETHNICITY]
        named = dict(self.ethnic_mix)
        remainder_levels = [lv for lv in eth.levels if lv not in named]
        rem = (1.0 - sum(named.values())) / len(remainder_levels)
        return np.array([named.get(lv, rem) for lv in eth.levels])

    def effective_coefficients(self, ethnicity_level: str) -> CoefMap:
        return self.cohort_coefficients.get(ethnicity_level, self.coefficients)


def _centered_effects(spec: FeatureSpec, eff) -> np.ndarray:
    """Per-code contribution vector for a categorical feature."""
    if spec.kind is Kind.NOMINAL:
        e = np.asarray(eff, dtype=np.float64)
        return e - e.mean()
    k = len(spec.levels)
    half = (k - 1) / 2.0
    codes = np.arange(k, dtype=np.float64)
    return float(eff) * (codes - half) / half


def _coef_mass(spec: FeatureSpec, eff) -> float:
    if spec.kind is Kind.NOMINAL:
        e = np.asarray(eff, dtype=np.float64)
        return float(np.abs(e - e.mean()).mean())
    return abs(float(eff))


@dataclass(frozen=True)
class GroundTruth:
    """Answer key recorded alongside a generated dataset."""

    causal_features: tuple[str, ...]
    cohort_causal_features: dict[str, tuple[str, ...]]
    coefficients: dict
    group_rankings: dict[str, tuple[str, ...]]  # per ethnicity level, best group first
    bayes_rate: float
    bayes_stderr: float

    def to_dict(self) -> dict:
        return {
            "causal_features": list(self.causal_features),
            "cohort_causal_features": {k: list(v) for k, v in self.cohort_causal_features.items()},
            "coefficients": self.coefficients,
            "cohort_rankings": {k: list(v) for k, v in self.group_rankings.items()},
            "bayes_rate": self.bayes_rate,
            "bayes_stderr": self.bayes_stderr,
        }


def _coef_json(schema: FeatureSchema, cmap: CoefMap) -> dict:
    out = {}
    for fname in sorted(cmap):
        eff = cmap[fname]
        out[fname] = list(map(float, eff)) if not np.isscalar(eff) else float(eff)
    return out


def _group_ranking(spec: GeneratorSpec, level: str) -> tuple[str, ...]:
    cmap = spec.effective_coefficients(level)
    mass: dict[str, float] = {}
    for fname, eff in cmap.items():
        fs = spec.schema[fname]
        if fs.group is Group.NONE:
            continue
        mass[fs.group.value] = mass.get(fs.group.value, 0.0) + _coef_mass(fs, eff)
    return tuple(sorted((g for g in mass if mass[g] > 0), key=lambda g: (-mass[g], g)))


def _sample_features(spec: GeneratorSpec, n: int, rng: np.random.Generator,
                     only: set[str] | None = None) -> dict[str, np.ndarray]:
    """Draw raw columns (codes / floats) in schema order; ethnicity first."""
    cols: dict[str, np.ndarray] = {ETHNICITY: rng.choice(
        len(spec.schema[ETHNICITY].levels), size=n, p=spec.mix_probabilities())}
    for fs in spec.schema.predictors:
        if fs.name == ETHNICITY or (only is not None and fs.name not in only):
            continue
        if fs.is_categorical:
            cols[fs.name] = rng.integers(0, len(fs.levels), n)
        else:
            cols[fs.name] = rng.standard_normal(n)
    return cols


def _latent_z(spec: GeneratorSpec, cols: Mapping[str, np.ndarray], n: int) -> np.ndarray:
    schema = spec.schema
    eth_codes = np.asarray(cols[ETHNICITY], dtype=np.intp)
    eth_levels = schema[ETHNICITY].levels
    z = np.full(n, spec.intercept, dtype=np.float64)
    if spec.cohort_intercepts:
        shift = np.array([spec.cohort_intercepts.get(lv, 0.0) for lv in eth_levels])
        z += shift[eth_codes]
    involved = sorted(set(spec.coefficients) | {f for m in spec.cohort_coefficients.values() for f in m})
    n_eth = len(eth_levels)
    for fname in involved:
        fs = schema[fname]
        if fs.is_categorical:
            table = np.zeros((n_eth, len(fs.levels)))
            for e, lv in enumerate(eth_levels):
                eff = spec.effective_coefficients(lv).get(fname)
                if eff is not None:
                    table[e] = _centered_effects(fs, eff)
            z += table[eth_codes, np.asarray(cols[fname], dtype=np.intp)]
        else:
            w = np.array([float(spec.effective_coefficients(lv).get(fname, 0.0)) for lv in eth_levels])
            z += w[eth_codes] * cols[fname]
    return z


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def generate(spec: GeneratorSpec, n: int, bayes_mc: int = 50_000) -> tuple[Dataset, GroundTruth]:
    """Sample a dataset of ``n`` rows plus its ground-truth answer key."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = generator(spec.seed, STREAM_GEN)
    cols = _sample_features(spec, n, rng)
    z = _latent_z(spec, cols, n)
    if spec.noise_scale > 0:
        z = z + spec.noise_scale * rng.standard_normal(n)
    target = (rng.random(n) < _sigmoid(z)).astype(np.uint8)

    store = {}
    for fs in spec.schema.predictors:
        raw = cols[fs.name]
        store[fs.name] = raw.astype(np.int16) if fs.is_categorical else raw
    dataset = Dataset(spec.schema, store, target)

    rate, stderr = bayes_rate(spec, n_mc=bayes_mc)
    causal = tuple(f for f, e in sorted(spec.coefficients.items()) if _coef_mass(spec.schema[f], e) > 0)
    cohort_causal = {
        lv: tuple(f for f, e in sorted(m.items()) if _coef_mass(spec.schema[f], e) > 0)
        for lv, m in spec.cohort_coefficients.items()
    }
    eth_levels = spec.schema[ETHNICITY].levels
    truth = GroundTruth(
        causal_features=causal,
        cohort_causal_features=cohort_causal,
        coefficients={
            "base": _coef_json(spec.schema, spec.coefficients),
            "cohorts": {lv: _coef_json(spec.schema, m) for lv, m in sorted(spec.cohort_coefficients.items())},
            "intercept": spec.intercept,
            "cohort_intercepts": {lv: float(v) for lv, v in sorted(spec.cohort_intercepts.items())},
            "noise_scale": spec.noise_scale,
        },
        group_rankings={lv: _group_ranking(spec, lv) for lv in eth_levels},
        bayes_rate=rate,
        bayes_stderr=stderr,
    )
    return dataset, truth


def bayes_rate(spec: GeneratorSpec, n_mc: int = 100_000, noise_draws: int = 128) -> tuple[float, float]:
    """Monte-Carlo estimate of E[max(p, 1-p)] under the generative law.

    Only causal features are simulated (the rest cannot move p). With noise,
    the per-row label probability is itself an expectation over the noise,
    estimated with antithetic normal draws.
    """
    rng = generator(spec.seed, STREAM_BAYES)
    involved = set(spec.coefficients) | {f for m in spec.cohort_coefficients.values() for f in m}
    cols = _sample_features(spec, n_mc, rng, only=involved)
    z = _latent_z(spec, cols, n_mc)
    if spec.noise_scale > 0:
        half = noise_draws // 2
        eps = rng.standard_normal(half)
        eps = np.concatenate([eps, -eps]) * spec.noise_scale
        p = _sigmoid(z[:, None] + eps[None, :]).mean(axis=1)
    else:
        p = _sigmoid(z)
    best = np.maximum(p, 1.0 - p)
    return float(best.mean()), float(best.std(ddof=1) / math.sqrt(n_mc))


# -- shipped presets ----------------------------------------------------------


def default_spec(seed: int = 0, noise_scale: float = 0.0) -> GeneratorSpec:
    """10 causal / 115 noise features on the default schema, census mix.

    Weights are equal in magnitude so no planted factor is crowded out of
    the learned model by a stronger sibling.
    """
    coefficients = {
        "vaccine_trust": 2.0,
        "vaccine_approval": 2.0,
        "vaccine_side_effects": -2.0,
        "vaccine_needs_healthy_people": 2.0,
        "fda_trust": 2.0,
        "cdc_trust": 2.0,
        "covid_fear": 2.0,
        "conspiracy_theory": -2.0,
        "misinformation_exposure": -2.0,
        "religiosity": -2.0,
    }
    return GeneratorSpec(schema=default_schema(), coefficients=coefficients,
                         noise_scale=noise_scale, seed=seed)


def cohort_spec(seed: int = 0) -> GeneratorSpec:
    """Cohort-specific mechanisms with a known answer key per ethnicity:
    Asian decisions ride on vaccine factors (C), African American on culture
    (A), Hispanic on covid information (D), the remainder on demographics (B).
    A balanced mix gives every cohort enough rows to learn from."""
    schema = default_schema()
    return GeneratorSpec(
        schema=schema,
        ethnic_mix=(("Hispanic", 0.25), ("African American", 0.25), ("Asian", 0.25)),
        coefficients={
            "age_bracket": 1.8, "education": -1.6, "income_bracket": 1.6, "urbanicity": -1.4,
        },
        cohort_coefficients={
            "Asian": {
                "vaccine_trust": 2.2, "vaccine_approval": 2.0,
                "vaccine_side_effects": -2.0, "fda_trust": 1.8,
            },
            "African American": {
                "ethnic_affiliation": 2.2, "cultural_identity": 2.0,
                "religiosity": -2.0, "social_identity": 1.8,
            },
            "Hispanic": {
                "social_media_posts": 2.2, "misinformation_exposure": -2.0,
                "conspiracy_theory": -2.0, "rumor_belief": 1.8,
            },
        },
        cohort_intercepts={"Asian": 0.35, "African American": -0.35, "Hispanic": 0.2},
        seed=seed,
    )


def nominal_schema() -> FeatureSchema:
    """A compact nominal-heavy schema for encoder comparisons."""
    f: list[FeatureSpec] = [FeatureSpec(ETHNICITY, Kind.NOMINAL, ETHNICITY_LEVELS, Group.B)]
    for i in range(1, 25):
        k = 4 + (i % 3)  # 4..6 levels
        levels = tuple(f"opt{j}" for j in range(1, k + 1))
        f.append(FeatureSpec(f"choice_item_{i:02d}", Kind.NOMINAL, levels,
                             (Group.A, Group.C, Group.D)[i % 3]))
    for i in range(1, 5):
        f.append(_likert(f"scale_item_{i:02d}", Group.C))
    f.append(FeatureSpec("media_hours", Kind.NUMERIC, (), Group.D))
    f.append(FeatureSpec("household_size", Kind.NUMERIC, (), Group.B))
    f.append(FeatureSpec("vaccine_decision", Kind.NOMINAL, ("refuse", "accept"), Group.NONE))
    return FeatureSchema(tuple(f), target_name="vaccine_decision", positive_level="accept")


def nominal_spec(seed: int = 0) -> GeneratorSpec:
    """Nominal-heavy population whose level effects are deliberately
    non-monotone in declared level order, so integer codes are uninformative
    axes while one-hot splits are direct."""
    schema = nominal_schema()
    coefficients: dict[str, object] = {}
    pattern = [1.4, -1.2, 0.8, -1.0, 1.1, -0.7]
    for i in (1, 3, 5, 7, 9, 11, 13, 15):
        name = f"choice_item_{i:02d}"
        k = len(schema[name].levels)
        shifted = pattern[i % 3 :] + pattern[: i % 3]
        coefficients[name] = tuple(shifted[:k])
    coefficients["scale_item_01"] = 0.9
    return GeneratorSpec(schema=schema, coefficients=coefficients, seed=seed)
