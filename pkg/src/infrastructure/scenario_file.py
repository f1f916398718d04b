"""
Scenario files: one `key = value` per line, dotted section keys, `#` comments.

    model.timescale = calendar          # calendar | gap
    model.baseline.kind = weibull       # constant | weibull
    model.baseline.lambda = 1.0
    model.baseline.nu = 2.0
    model.beta = 0.693, -0.5            # comma separated
    covariates = bernoulli(0.5); normal(0, 1)
    frailty.kind = gamma                # none | gamma | lognormal | binary
    frailty.variance = 0.5              # binary uses frailty.low/high/prob
    dependence.kind = capped_count      # none | gap_multiplier | count | capped_count
                                        # decayed_count | windowed_rate | general
    dependence.phi = 0.405
    dependence.cap = 4                  # also dependence.alpha, .window, .g0/.g1/.g2
    censoring.kind = fixed              # fixed | exponential | uniform
    censoring.value = 5                 # or censoring.rate / censoring.low, .high
    n_subjects = 1000
    seed = 42
    engine = inversion                  # inversion | thinning | gap-rejection | discrete
    dt = 0.001                          # discrete engine only

g functions are written constant(a), linear(a, b) or log(a, b). Unknown keys
are errors.
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple
import logging
import re

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..domain.exceptions import ScenarioError
from ..domain.hazards import BaselineHazard, BaselineKind
from ..domain.value_objects import (
    CensoringKind,
    CensoringSpec,
    CovariateKind,
    CovariateSpec,
    DependenceKind,
    EngineKind,
    EventDependenceSpec,
    FrailtyKind,
    FrailtySpec,
    GForm,
    GFunction,
    IntensityModel,
    ScenarioConfig,
    Timescale,
)


logger = logging.getLogger(__name__)

_CALL = re.compile(r"^\s*([a-z_]+)\s*\(([^()]*)\)\s*$")


def _parse_call(text: str, key: str) -> Tuple[str, List[float]]:
    match = _CALL.match(text)
    if not match:
        raise ScenarioError(f"expected name(arguments), got {text!r}", key=key)
    name, raw_args = match.groups()
    try:
        args = [float(a) for a in raw_args.split(",") if a.strip()]
    except ValueError:
        raise ScenarioError(f"non-numeric argument in {text!r}", key=key)
    return name, args


def parse_g_function(text: str, key: str = "") -> GFunction:
    name, args = _parse_call(text, key)
    try:
        form = GForm(name)
    except ValueError:
        raise ScenarioError(f"unknown function {name!r}", key=key)
    expected = 1 if form is GForm.CONSTANT else 2
    if len(args) != expected:
        raise ScenarioError(f"{name} takes {expected} argument(s)", key=key)
    return GFunction(form, *args)


def parse_covariates(text: str, key: str = "covariates") -> Tuple[CovariateSpec, ...]:
    specs = []
    for item in (part for part in text.split(";") if part.strip()):
        name, args = _parse_call(item, key)
        if name == CovariateKind.BERNOULLI.value and len(args) == 1:
            specs.append(CovariateSpec.bernoulli(args[0]))
        elif name == CovariateKind.NORMAL.value and len(args) == 2:
            specs.append(CovariateSpec.normal(args[0], args[1]))
        else:
            raise ScenarioError(
                f"expected bernoulli(p) or normal(mean, sd), got {item.strip()!r}",
                key=key,
            )
    return tuple(specs)


def render_g_function(g: GFunction) -> str:
    if g.form is GForm.CONSTANT:
        return f"constant({g.a!r})"
    return f"{g.form.value}({g.a!r}, {g.b!r})"


def render_covariate(spec: CovariateSpec) -> str:
    if spec.kind is CovariateKind.BERNOULLI:
        return f"bernoulli({spec.prob!r})"
    return f"normal({spec.mean!r}, {spec.sd!r})"


class ScenarioDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    timescale: Timescale = Field(default=Timescale.CALENDAR, alias="model.timescale")
    baseline_kind: BaselineKind = Field(alias="model.baseline.kind")
    baseline_lambda: float = Field(alias="model.baseline.lambda", gt=0, allow_inf_nan=False)
    baseline_nu: float = Field(
        default=1.0, alias="model.baseline.nu", gt=0, allow_inf_nan=False
    )
    beta: Tuple[float, ...] = Field(default=(), alias="model.beta")
    covariates: str = Field(default="", alias="covariates")

    frailty_kind: FrailtyKind = Field(default=FrailtyKind.NONE, alias="frailty.kind")
    frailty_variance: float = Field(
        default=0.0, alias="frailty.variance", ge=0, allow_inf_nan=False
    )
    frailty_low: float = Field(default=0.0, alias="frailty.low", ge=0)
    frailty_high: float = Field(default=0.0, alias="frailty.high", gt=0)
    frailty_prob: float = Field(default=0.0, alias="frailty.prob", gt=0, lt=1)

    dependence_kind: DependenceKind = Field(
        default=DependenceKind.NONE, alias="dependence.kind"
    )
    dependence_alpha: float = Field(default=1.0, alias="dependence.alpha", gt=0)
    dependence_cap: Optional[int] = Field(default=None, alias="dependence.cap", ge=1)
    dependence_phi: float = Field(default=0.0, alias="dependence.phi")
    dependence_window: Optional[float] = Field(
        default=None, alias="dependence.window", gt=0
    )
    dependence_g0: str = Field(default="constant(0)", alias="dependence.g0")
    dependence_g1: str = Field(default="constant(0)", alias="dependence.g1")
    dependence_g2: str = Field(default="constant(0)", alias="dependence.g2")

    censoring_kind: CensoringKind = Field(alias="censoring.kind")
    censoring_value: float = Field(default=0.0, alias="censoring.value", gt=0)
    censoring_rate: float = Field(default=0.0, alias="censoring.rate", gt=0)
    censoring_low: float = Field(default=0.0, alias="censoring.low", ge=0)
    censoring_high: float = Field(default=0.0, alias="censoring.high", gt=0)

    n_subjects: int = Field(alias="n_subjects", ge=1)
    seed: int = Field(default=0, alias="seed", ge=0, lt=2 ** 64)
    engine: EngineKind = Field(default=EngineKind.INVERSION, alias="engine")
    dt: Optional[float] = Field(default=None, alias="dt", gt=0)

    @field_validator("beta", mode="before")
    @classmethod
    def split_beta(cls, value):
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    def to_config(self) -> ScenarioConfig:
        """Cross-field rules of each section are reported against that section's key."""
        with _section("model.baseline.nu"):
            baseline = BaselineHazard(
                kind=self.baseline_kind, lam=self.baseline_lambda, nu=self.baseline_nu
            )
        binary = self.frailty_kind is FrailtyKind.BINARY
        with _section("frailty.high" if binary else "frailty.kind"):
            frailty = FrailtySpec(
                kind=self.frailty_kind,
                variance=self.frailty_variance,
                low_value=self.frailty_low,
                high_value=self.frailty_high,
                high_prob=self.frailty_prob,
            )
        with _section("dependence.kind"):
            dependence = EventDependenceSpec(
                kind=self.dependence_kind,
                alpha=self.dependence_alpha,
                cap=self.dependence_cap,
                phi=self.dependence_phi,
                window=self.dependence_window,
                g0=parse_g_function(self.dependence_g0, "dependence.g0"),
                g1=parse_g_function(self.dependence_g1, "dependence.g1"),
                g2=parse_g_function(self.dependence_g2, "dependence.g2"),
            )
            model = IntensityModel(
                timescale=self.timescale,
                baseline=baseline,
                beta=self.beta,
                frailty=frailty,
                dependence=dependence,
            )
        with _section(_CENSORING_KEYS[self.censoring_kind]):
            censoring = CensoringSpec(
                kind=self.censoring_kind,
                value=self.censoring_value,
                rate=self.censoring_rate,
                low=self.censoring_low,
                high=self.censoring_high,
            )
        with _section("covariates"):
            covariates = parse_covariates(self.covariates)
        if len(covariates) != len(self.beta):
            raise ScenarioError(
                f"{len(covariates)} covariate generators but "
                f"{len(self.beta)} coefficients in model.beta",
                key="covariates",
            )
        with _section("engine"):
            return ScenarioConfig(
                model=model,
                censoring=censoring,
                n_subjects=self.n_subjects,
                covariates=covariates,
                seed=self.seed,
                engine=self.engine,
                dt=self.dt,
            )


_CENSORING_KEYS = {
    CensoringKind.FIXED: "censoring.value",
    CensoringKind.EXPONENTIAL: "censoring.rate",
    CensoringKind.UNIFORM: "censoring.high",
}


@contextmanager
def _section(key: str) -> Iterator[None]:
    try:
        yield
    except ScenarioError:
        raise
    except ValueError as e:
        raise ScenarioError(str(e), key=key)


def _read_pairs(text: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError("expected 'key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError("missing key before '='", line=number)
        if key in values:
            raise ScenarioError(
                f"duplicate key (first set on line {lines[key]})", key=key, line=number
            )
        values[key] = value
        lines[key] = number
    return values, lines


def parse_scenario(text: str) -> ScenarioConfig:
    values, lines = _read_pairs(text)
    try:
        document = ScenarioDocument.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else None
        message = "unknown key" if error["type"] == "extra_forbidden" else error["msg"]
        raise ScenarioError(message, key=key, line=lines.get(key))

    try:
        return document.to_config()
    except ScenarioError as e:
        raise ScenarioError(e.message, key=e.key, line=lines.get(e.key or ""))


def load_scenario(path: Path) -> ScenarioConfig:
    config = parse_scenario(Path(path).read_text(encoding="utf-8"))
    logger.info(f"Loaded scenario {path}: {config.n_subjects} subjects, seed {config.seed}")
    return config


def render_scenario(config: ScenarioConfig) -> str:
    model = config.model
    dependence = model.dependence
    frailty = model.frailty
    censoring = config.censoring
    pairs = [
        ("model.timescale", model.timescale.value),
        ("model.baseline.kind", model.baseline.kind.value),
        ("model.baseline.lambda", repr(model.baseline.lam)),
        ("model.baseline.nu", repr(model.baseline.nu)),
    ]
    if model.beta:
        pairs.append(("model.beta", ", ".join(repr(b) for b in model.beta)))
        pairs.append(
            ("covariates", "; ".join(render_covariate(c) for c in config.covariates))
        )

    pairs.append(("frailty.kind", frailty.kind.value))
    if frailty.kind is FrailtyKind.BINARY:
        pairs += [
            ("frailty.low", repr(frailty.low_value)),
            ("frailty.high", repr(frailty.high_value)),
            ("frailty.prob", repr(frailty.high_prob)),
        ]
    elif frailty.kind is not FrailtyKind.NONE:
        pairs.append(("frailty.variance", repr(frailty.variance)))

    pairs.append(("dependence.kind", dependence.kind.value))
    if dependence.kind is DependenceKind.GAP_MULTIPLIER:
        pairs.append(("dependence.alpha", repr(dependence.alpha)))
    if dependence.kind.uses_covariate:
        pairs.append(("dependence.phi", repr(dependence.phi)))
    if dependence.cap is not None:
        pairs.append(("dependence.cap", str(dependence.cap)))
    if dependence.window is not None:
        pairs.append(("dependence.window", repr(dependence.window)))
    if dependence.kind is DependenceKind.GENERAL:
        pairs += [
            ("dependence.g0", render_g_function(dependence.g0)),
            ("dependence.g1", render_g_function(dependence.g1)),
            ("dependence.g2", render_g_function(dependence.g2)),
        ]

    pairs.append(("censoring.kind", censoring.kind.value))
    if censoring.kind is CensoringKind.FIXED:
        pairs.append(("censoring.value", repr(censoring.value)))
    elif censoring.kind is CensoringKind.EXPONENTIAL:
        pairs.append(("censoring.rate", repr(censoring.rate)))
    else:
        pairs += [
            ("censoring.low", repr(censoring.low)),
            ("censoring.high", repr(censoring.high)),
        ]

    pairs += [
        ("n_subjects", str(config.n_subjects)),
        ("seed", str(config.seed)),
        ("engine", config.engine.value),
    ]
    if config.dt is not None:
        pairs.append(("dt", repr(config.dt)))
    return "".join(f"{key} = {value}\n" for key, value in pairs)
