"""Conjunctive skip criteria: the rules the encoder checks after the cheap
CU tests to decide whether recursive split RDO can be bypassed.

A criterion is an AND of threshold/equality predicates over the nine CU
features, harvested from one decision-tree node.  Criteria evaluate on raw
feature values; there is no binning stage inside the encoder.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .features import (
    DISPLAY_NAMES,
    FEATURE_NAMES,
    INTEGER_DOMAINS,
    FeatureVector,
    canonical_feature_name,
)

_OPS = ("<", ">=", "==")

# "bits >= 0" holds for every valid feature vector; stands in for the empty
# conjunction when a root node is harvested.
def tautology() -> "Predicate":
    return Predicate("bits", ">=", 0.0)


class CriteriaFormatError(ValueError):
    """Malformed criteria file or rule text (reported at load time)."""


@dataclass(frozen=True)
class Predicate:
    feature: str  # canonical name, one of FEATURE_NAMES
    op: str       # "<", ">=", "=="
    value: float

    def __post_init__(self):
        if self.feature not in FEATURE_NAMES:
            raise CriteriaFormatError(f"unknown feature: {self.feature!r}")
        if self.op not in _OPS:
            raise CriteriaFormatError(f"unknown comparator: {self.op!r}")

    def holds(self, fv: FeatureVector) -> bool:
        v = fv.value(self.feature)
        if self.op == "<":
            return v < self.value
        if self.op == ">=":
            return v >= self.value
        return v == self.value

    def render(self) -> str:
        name = DISPLAY_NAMES[self.feature]
        op = "=" if self.op == "==" else self.op
        value = self.value
        text = str(int(value)) if float(value).is_integer() else repr(value)
        return f"{name} {op} {text}"


def simplify_predicates(predicates: list[Predicate]) -> tuple[Predicate, ...]:
    """Merge redundant same-feature bounds and fold closed integer domains.

    Two upper bounds keep the tighter; likewise lower bounds.  For features
    with a small closed integer domain (SF, CBF, PM, QPO) a bound pair that
    pins a single value becomes an equality, and bounds that do not restrict
    the domain at all are dropped.  Feature order of first appearance is
    preserved.
    """
    order: list[str] = []
    upper: dict[str, float] = {}
    lower: dict[str, float] = {}
    equal: dict[str, float] = {}
    for p in predicates:
        if p.feature not in order:
            order.append(p.feature)
        if p.op == "<":
            if p.feature not in upper or p.value < upper[p.feature]:
                upper[p.feature] = p.value
        elif p.op == ">=":
            if p.feature not in lower or p.value > lower[p.feature]:
                lower[p.feature] = p.value
        else:
            if p.feature in equal and equal[p.feature] != p.value:
                raise ValueError(
                    f"contradictory equalities on {p.feature}")
            equal[p.feature] = p.value

    out: list[Predicate] = []
    for feat in order:
        if feat in equal:
            out.append(Predicate(feat, "==", equal[feat]))
            continue
        lo, hi = lower.get(feat), upper.get(feat)
        if feat in INTEGER_DOMAINS:
            dlo, dhi = INTEGER_DOMAINS[feat]
            admissible = [v for v in range(dlo, dhi + 1)
                          if (lo is None or v >= lo)
                          and (hi is None or v < hi)]
            if not admissible:
                raise ValueError(f"contradictory bounds on {feat}")
            if len(admissible) == 1:
                out.append(Predicate(feat, "==", float(admissible[0])))
                continue
            if len(admissible) == dhi - dlo + 1:
                continue  # bounds do not restrict the domain
        if lo is not None:
            out.append(Predicate(feat, ">=", lo))
        if hi is not None:
            out.append(Predicate(feat, "<", hi))
    return tuple(out)


@dataclass(frozen=True)
class SkipCriterion:
    """One harvested rule: where it applies, what it tests, how it scored."""

    cu_depth: int
    predicates: tuple[Predicate, ...]
    accuracy: float   # fraction of covered training samples labelled not-split
    coverage: float   # fraction of the depth dataset reaching the source node
    source_node: tuple[int, int] = (0, 0)  # (node_depth, breadth-first index)

    def __post_init__(self):
        if self.cu_depth not in (0, 1, 2):
            raise ValueError(f"cu_depth must be 0..2, got {self.cu_depth}")
        if not self.predicates:
            raise ValueError("criterion conjunction must be non-empty")

    def holds(self, fv: FeatureVector) -> bool:
        return all(p.holds(fv) for p in self.predicates)

    def render_rule(self) -> str:
        return " & ".join(p.render() for p in self.predicates)


def evaluate_criterion(criterion: SkipCriterion, fv: FeatureVector) -> bool:
    """True iff every predicate of the conjunction holds on raw values."""
    return criterion.holds(fv)


def apply_skip(depth: int, fv: FeatureVector,
               bundle: "CriteriaBundle | None") -> bool:
    """Decide right after the whole-CU tests: True skips recursive split
    RDO for this CU, False continues.  8x8 CUs are terminal by structure,
    so depths past 2 never consult the bundle."""
    if bundle is None or depth not in (0, 1, 2):
        return False
    criterion = bundle.for_depth(depth)
    return criterion is not None and criterion.holds(fv)


@dataclass
class CriteriaBundle:
    """At most one criterion per CU depth, plus training provenance."""

    by_depth: dict[int, SkipCriterion] = field(default_factory=dict)
    min_accuracy: float | None = None  # percent thresholds used at harvest
    min_coverage: float | None = None
    training_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        for depth, crit in self.by_depth.items():
            if crit.cu_depth != depth:
                raise ValueError(
                    f"criterion for depth {depth} carries cu_depth "
                    f"{crit.cu_depth}")

    def for_depth(self, depth: int) -> SkipCriterion | None:
        return self.by_depth.get(depth)

    def __len__(self) -> int:
        return len(self.by_depth)

    @staticmethod
    def empty() -> "CriteriaBundle":
        return CriteriaBundle()


# ---------------------------------------------------------------------------
# Rule grammar and the criteria file
# ---------------------------------------------------------------------------

_PREDICATE_RE = re.compile(
    r"^\s*([A-Za-z]+)\s*(<|>=|==|=)\s*(-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$")


def parse_rule(text: str) -> tuple[Predicate, ...]:
    """Parse a conjunction like "Bits < 50 & PM = 0".

    Only the expanded form is accepted: every predicate names its feature
    explicitly (no comma-grouped shorthand).
    """
    parts = text.split("&")
    predicates = []
    for part in parts:
        if "," in part:
            raise CriteriaFormatError(
                f"comma-grouped predicates are not supported, write the "
                f"expanded form (got {part.strip()!r})")
        m = _PREDICATE_RE.match(part)
        if not m:
            raise CriteriaFormatError(f"cannot parse predicate {part.strip()!r}")
        name, op, value = m.groups()
        feature = canonical_feature_name(name)
        if op == "=":
            op = "=="
        predicates.append(Predicate(feature, op, float(value)))
    if not predicates:
        raise CriteriaFormatError("empty rule")
    return tuple(predicates)


def write_criteria_file(bundle: CriteriaBundle, path) -> None:
    lines = ["# rdoskip criteria v1"]
    if bundle.min_accuracy is not None:
        lines.append(f"# min-accuracy-pct: {bundle.min_accuracy!r}")
    if bundle.min_coverage is not None:
        lines.append(f"# min-coverage-pct: {bundle.min_coverage!r}")
    if bundle.training_sequences:
        lines.append(
            "# training-sequences: " + ",".join(bundle.training_sequences))
    lines.append("# depth | rule | accuracy | coverage | node")
    for depth in sorted(bundle.by_depth):
        c = bundle.by_depth[depth]
        lines.append(
            f"{depth} | {c.render_rule()} | accuracy={c.accuracy!r} | "
            f"coverage={c.coverage!r} | node=d{c.source_node[0]}"
            f"#{c.source_node[1]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


_NODE_RE = re.compile(r"^d(\d+)#(\d+)$")


def load_criteria_bundle(path) -> CriteriaBundle:
    """Parse a criteria file; any unknown feature or bad syntax fails here."""
    by_depth: dict[int, SkipCriterion] = {}
    min_acc = min_cov = None
    sequences: tuple[str, ...] = ()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("min-accuracy-pct:"):
                    min_acc = float(body.split(":", 1)[1])
                elif body.startswith("min-coverage-pct:"):
                    min_cov = float(body.split(":", 1)[1])
                elif body.startswith("training-sequences:"):
                    names = body.split(":", 1)[1].strip()
                    sequences = tuple(n for n in names.split(",") if n)
                continue
            fields = [f.strip() for f in line.split("|")]
            if len(fields) != 5:
                raise CriteriaFormatError(
                    f"line {lineno}: expected 5 |-separated fields, got "
                    f"{len(fields)}")
            try:
                depth = int(fields[0])
                predicates = parse_rule(fields[1])
                accuracy = _keyed_float(fields[2], "accuracy")
                coverage = _keyed_float(fields[3], "coverage")
                node = _parse_node(fields[4])
                criterion = SkipCriterion(
                    cu_depth=depth, predicates=predicates,
                    accuracy=accuracy, coverage=coverage, source_node=node)
            except (CriteriaFormatError, ValueError) as exc:
                raise CriteriaFormatError(f"line {lineno}: {exc}") from exc
            if depth in by_depth:
                raise CriteriaFormatError(
                    f"line {lineno}: duplicate criterion for depth {depth}")
            by_depth[depth] = criterion
    return CriteriaBundle(by_depth=by_depth, min_accuracy=min_acc,
                          min_coverage=min_cov,
                          training_sequences=sequences)


def _keyed_float(text: str, key: str) -> float:
    prefix = key + "="
    if not text.startswith(prefix):
        raise CriteriaFormatError(f"expected {prefix}..., got {text!r}")
    value = float(text[len(prefix):])
    if math.isnan(value):
        raise CriteriaFormatError(f"{key} must be a number")
    return value


def _parse_node(text: str) -> tuple[int, int]:
    if not text.startswith("node="):
        raise CriteriaFormatError(f"expected node=..., got {text!r}")
    m = _NODE_RE.match(text[len("node="):])
    if not m:
        raise CriteriaFormatError(f"bad node provenance: {text!r}")
    return int(m.group(1)), int(m.group(2))
