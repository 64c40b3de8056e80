"""Trade-off detection, cause identification, and cross-method aggregation.

A method trades off two metrics when toggling it improves one and downgrades
the other under their sign semantics.  Causes are searched among the two
metrics themselves (when one causes the other on the graph) and their common
ancestors: a candidate is a cause when its own estimated effects on the two
metrics carry strictly opposite signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .core import (
    AteQuery,
    CausalGraph,
    Direction,
    ObservationMatrix,
    SignSpec,
    VariableKind,
    VariableSpec,
    common_ancestors,
    graph_to_dot,
    is_cause,
)
from .errors import DegenerateTreatmentError, MixedPairError, SchemaError
from .inference import DmlConfig, ate, conditional_mean


class Sign(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    NEUTRAL = "neutral"


class CauseRole(str, Enum):
    SELF_X = "self_x"
    SELF_Y = "self_y"
    COMMON_ANCESTOR = "common_ancestor"


def sign(spec: SignSpec, value: float, delta: float) -> Sign:
    """Classify a change ``delta`` of a metric currently at ``value``.

    Changes within the neutral band count as neither improvement nor
    downgrade; for target metrics the comparison is between distances to the
    target before and after the change.
    """
    band = spec.neutral_band
    if spec.direction is Direction.MAXIMIZE:
        if delta > band:
            return Sign.PLUS
        if delta < -band:
            return Sign.MINUS
        return Sign.NEUTRAL
    if spec.direction is Direction.MINIMIZE:
        if delta < -band:
            return Sign.PLUS
        if delta > band:
            return Sign.MINUS
        return Sign.NEUTRAL
    d0 = abs(value - spec.target)
    d1 = abs(value + delta - spec.target)
    if d1 < d0 - band:
        return Sign.PLUS
    if d1 > d0 + band:
        return Sign.MINUS
    return Sign.NEUTRAL


def _opposed(a: Sign, b: Sign) -> bool:
    return {a, b} == {Sign.PLUS, Sign.MINUS}


@dataclass(frozen=True)
class TradeoffQuery:
    """One method against one ordered metric pair, toggled t_off -> t_on."""

    method: str
    x: str
    y: str
    t_on: float = 1.0
    t_off: float = 0.0

    def __post_init__(self) -> None:
        if self.x == self.y:
            raise SchemaError("the two metrics must differ")
        if self.method in (self.x, self.y):
            raise SchemaError("the method cannot be one of the metrics")
        if self.t_on == self.t_off:
            raise SchemaError("t_on and t_off must differ")
        for v in (self.t_on, self.t_off):
            if not 0.0 <= v <= 1.0:
                raise SchemaError("method settings must lie in [0, 1]")


@dataclass(frozen=True)
class TradeoffDetection:
    """Quantities of the detection step: method effects and baseline values."""

    ate_x: float
    ate_y: float
    sign_x: Sign
    sign_y: Sign
    x_base: float
    y_base: float


@dataclass(frozen=True)
class CauseEvidence:
    node: str
    role: CauseRole
    ate_on_x: float
    ate_on_y: float
    sign_x: Sign
    sign_y: Sign


@dataclass(frozen=True)
class AnalysisResult:
    """Outcome of one (method, metric pair) analysis."""

    query: TradeoffQuery
    tradeoff: bool
    ate_x: float
    ate_y: float
    sign_x: Sign
    sign_y: Sign
    causes: tuple[CauseEvidence, ...]
    inconclusive: tuple[str, ...]


def _signs_of(specs: Sequence[VariableSpec]) -> dict[str, SignSpec]:
    return {s.name: s.sign for s in specs}


def _require_interventional(specs: Sequence[VariableSpec], method: str) -> None:
    kind = {s.name: s.kind for s in specs}.get(method)
    if kind is not VariableKind.INTERVENTIONAL:
        raise SchemaError(f"method {method!r} must be an interventional variable")


def _detection(
    data: ObservationMatrix,
    q: TradeoffQuery,
    specs: Sequence[VariableSpec],
    cfg: DmlConfig,
) -> TradeoffDetection:
    # the method is exogenous, so its effect on each metric is a plain
    # conditional-mean contrast between the on and off settings
    signs = _signs_of(specs)
    x_on = conditional_mean(data, q.x, q.method, q.t_on, cfg)
    x_off = conditional_mean(data, q.x, q.method, q.t_off, cfg)
    y_on = conditional_mean(data, q.y, q.method, q.t_on, cfg)
    y_off = conditional_mean(data, q.y, q.method, q.t_off, cfg)
    ate_x = x_on - x_off
    ate_y = y_on - y_off
    return TradeoffDetection(
        ate_x=ate_x,
        ate_y=ate_y,
        sign_x=sign(signs[q.x], x_off, ate_x),
        sign_y=sign(signs[q.y], y_off, ate_y),
        x_base=x_off,
        y_base=y_off,
    )


def detect_tradeoff(
    data: ObservationMatrix,
    g: CausalGraph,
    q: TradeoffQuery,
    specs: Sequence[VariableSpec] | None = None,
    cfg: DmlConfig | None = None,
) -> TradeoffDetection | None:
    """Return the detection record when the method's effects on the two
    metrics strictly oppose, or None when there is no trade-off."""
    specs = tuple(specs) if specs is not None else data.variables
    cfg = cfg or DmlConfig()
    _require_interventional(specs, q.method)
    det = _detection(data, q, specs, cfg)
    return det if _opposed(det.sign_x, det.sign_y) else None


def analyze(
    data: ObservationMatrix,
    g: CausalGraph,
    q: TradeoffQuery,
    specs: Sequence[VariableSpec] | None = None,
    cfg: DmlConfig | None = None,
) -> AnalysisResult:
    """Identify the causes of a detected trade-off.

    Candidates are the metric that causes the other (if either does) and
    every common ancestor of the pair.  Each candidate's effects on both
    metrics are estimated between its method-on and method-off conditional
    means; strictly opposed signs confirm it as a cause.  Candidates whose
    effect estimation degenerates are reported as inconclusive.
    """
    specs = tuple(specs) if specs is not None else data.variables
    cfg = cfg or DmlConfig()
    _require_interventional(specs, q.method)
    signs = _signs_of(specs)
    kinds = {s.name: s.kind for s in specs}
    det = _detection(data, q, specs, cfg)
    if not _opposed(det.sign_x, det.sign_y):
        return AnalysisResult(
            query=q,
            tradeoff=False,
            ate_x=det.ate_x,
            ate_y=det.ate_y,
            sign_x=det.sign_x,
            sign_y=det.sign_y,
            causes=(),
            inconclusive=(),
        )

    causes: list[CauseEvidence] = []
    inconclusive: list[str] = []

    def contrast(node: str) -> tuple[float, float]:
        on = conditional_mean(data, node, q.method, q.t_on, cfg)
        off = conditional_mean(data, node, q.method, q.t_off, cfg)
        return on, off

    if is_cause(g, q.x, q.y):
        x_on, x_off = contrast(q.x)
        try:
            ate_y_from_x = ate(data, g, AteQuery(q.x, q.y, x_on, x_off), cfg)
            s_y = sign(signs[q.y], det.y_base, ate_y_from_x)
            if _opposed(det.sign_x, s_y):
                causes.append(
                    CauseEvidence(
                        node=q.x,
                        role=CauseRole.SELF_X,
                        ate_on_x=det.ate_x,
                        ate_on_y=ate_y_from_x,
                        sign_x=det.sign_x,
                        sign_y=s_y,
                    )
                )
        except DegenerateTreatmentError:
            inconclusive.append(q.x)
    elif is_cause(g, q.y, q.x):
        y_on, y_off = contrast(q.y)
        try:
            ate_x_from_y = ate(data, g, AteQuery(q.y, q.x, y_on, y_off), cfg)
            s_x = sign(signs[q.x], det.x_base, ate_x_from_y)
            if _opposed(s_x, det.sign_y):
                causes.append(
                    CauseEvidence(
                        node=q.y,
                        role=CauseRole.SELF_Y,
                        ate_on_x=ate_x_from_y,
                        ate_on_y=det.ate_y,
                        sign_x=s_x,
                        sign_y=det.sign_y,
                    )
                )
        except DegenerateTreatmentError:
            inconclusive.append(q.y)

    for p in common_ancestors(g, q.x, q.y):
        # methods are excluded from causes: they trivially trade off the
        # metrics they themselves toggle
        if kinds.get(p) is VariableKind.INTERVENTIONAL:
            continue
        p_on, p_off = contrast(p)
        try:
            ate_x_from_p = ate(data, g, AteQuery(p, q.x, p_on, p_off), cfg)
            ate_y_from_p = ate(data, g, AteQuery(p, q.y, p_on, p_off), cfg)
        except DegenerateTreatmentError:
            inconclusive.append(p)
            continue
        s_x = sign(signs[q.x], det.x_base, ate_x_from_p)
        s_y = sign(signs[q.y], det.y_base, ate_y_from_p)
        if _opposed(s_x, s_y):
            causes.append(
                CauseEvidence(
                    node=p,
                    role=CauseRole.COMMON_ANCESTOR,
                    ate_on_x=ate_x_from_p,
                    ate_on_y=ate_y_from_p,
                    sign_x=s_x,
                    sign_y=s_y,
                )
            )

    return AnalysisResult(
        query=q,
        tradeoff=True,
        ate_x=det.ate_x,
        ate_y=det.ate_y,
        sign_x=det.sign_x,
        sign_y=det.sign_y,
        causes=tuple(causes),
        inconclusive=tuple(inconclusive),
    )


# ---------------------------------------------------------------------------
# aggregation and reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfidenceTable:
    """Per metric pair: how many methods trigger the trade-off and, for each
    identified cause, the fraction of triggering methods that confirm it."""

    x: str
    y: str
    count: int
    n_methods: int
    confidence: Mapping[str, float]


def confidence_bucket(value: float) -> str:
    if value >= 1.0:
        return "full"
    if value >= 0.70:
        return "high"
    if value >= 0.30:
        return "medium"
    return "low"


def aggregate(analyses: Sequence[tuple[str, AnalysisResult]]) -> ConfidenceTable:
    """Fold per-method analyses of one metric pair into a confidence table."""
    if not analyses:
        raise MixedPairError("nothing to aggregate")
    pairs = {(res.query.x, res.query.y) for _, res in analyses}
    if len(pairs) != 1:
        raise MixedPairError(f"analyses mix metric pairs: {sorted(pairs)}")
    x, y = next(iter(pairs))
    triggered = [res for _, res in analyses if res.tradeoff]
    count = len(triggered)
    confidence: dict[str, float] = {}
    if count:
        tally: dict[str, int] = {}
        for res in triggered:
            for ev in res.causes:
                tally[ev.node] = tally.get(ev.node, 0) + 1
        confidence = {node: hits / count for node, hits in sorted(tally.items())}
    return ConfidenceTable(
        x=x, y=y, count=count, n_methods=len(analyses), confidence=confidence
    )


def _result_to_dict(method: str, res: AnalysisResult) -> dict:
    return {
        "method": method,
        "tradeoff": res.tradeoff,
        "ate_x": res.ate_x,
        "ate_y": res.ate_y,
        "sign_x": res.sign_x.value,
        "sign_y": res.sign_y.value,
        "causes": [
            {
                "node": ev.node,
                "role": ev.role.value,
                "ate_on_x": ev.ate_on_x,
                "ate_on_y": ev.ate_on_y,
                "sign_x": ev.sign_x.value,
                "sign_y": ev.sign_y.value,
            }
            for ev in res.causes
        ],
        "inconclusive": list(res.inconclusive),
    }


def pair_report(
    table: ConfidenceTable, analyses: Sequence[tuple[str, AnalysisResult]]
) -> dict:
    return {
        "x": table.x,
        "y": table.y,
        "count": table.count,
        "methods": [_result_to_dict(m, res) for m, res in analyses],
        "confidence": dict(table.confidence),
    }


def export_report(
    table: ConfidenceTable, analyses: Sequence[tuple[str, AnalysisResult]]
) -> dict:
    """Build the report document for a single metric pair."""
    return build_report([(table, analyses)])


def build_report(
    pairs: Sequence[tuple[ConfidenceTable, Sequence[tuple[str, AnalysisResult]]]],
) -> dict:
    """Deterministic report over one or more metric pairs."""
    return {"pairs": [pair_report(t, a) for t, a in pairs]}


_ROLE_COLORS = {
    CauseRole.SELF_X: "#fdb863",
    CauseRole.SELF_Y: "#b2abd2",
    CauseRole.COMMON_ANCESTOR: "#80cdc1",
}


def annotated_dot(
    g: CausalGraph,
    specs: Sequence[VariableSpec],
    pairs: Sequence[tuple[ConfidenceTable, Sequence[tuple[str, AnalysisResult]]]],
) -> str:
    """DOT rendering of the graph with identified causes filled by role."""
    roles: dict[str, CauseRole] = {}
    for _, analyses in pairs:
        for _, res in analyses:
            for ev in res.causes:
                roles.setdefault(ev.node, ev.role)
    attrs = {
        node: f', style=filled, fillcolor="{_ROLE_COLORS[role]}"'
        for node, role in roles.items()
    }
    return graph_to_dot(g, specs, attrs)
