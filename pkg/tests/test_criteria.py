"""Skip criteria: rule grammar, evaluation semantics, bundle files."""

import pytest

from rdoskip.codec import EncoderConfig, encode_frame
from rdoskip.criteria import (
    CriteriaBundle,
    CriteriaFormatError,
    Predicate,
    SkipCriterion,
    apply_skip,
    evaluate_criterion,
    load_criteria_bundle,
    parse_rule,
    simplify_predicates,
    write_criteria_file,
)
from rdoskip.sequences import SequenceSpec, generate_sequence

from test_features import make_fv


def criterion(depth, rule, accuracy=0.98, coverage=0.2, node=(2, 5)):
    return SkipCriterion(depth, parse_rule(rule), accuracy, coverage, node)


class TestEvaluate:
    def test_depth2_rule_fires(self):
        c = criterion(2, "Bits < 50 & PM = 0")
        assert evaluate_criterion(c, make_fv(bits=40.0, pm=0)) is True

    def test_strict_less_than_boundary(self):
        c = criterion(2, "Bits < 50 & PM = 0")
        assert evaluate_criterion(c, make_fv(bits=50.0, pm=0)) is False

    def test_depth0_three_term_rule(self):
        c = criterion(0, "Bits < 50 & PM = 0 & RDC < 145")
        assert evaluate_criterion(
            c, make_fv(bits=49.0, pm=0, rdc=100.0)) is True
        assert evaluate_criterion(
            c, make_fv(bits=49.0, pm=1, rdc=100.0)) is False
        assert evaluate_criterion(
            c, make_fv(bits=49.0, pm=0, rdc=145.0)) is False

    def test_boolean_equality(self):
        c = criterion(1, "SF = 1")
        assert evaluate_criterion(c, make_fv(sf=True, cbf=False)) is True
        assert evaluate_criterion(c, make_fv(sf=False)) is False

    def test_ge_comparator(self):
        c = criterion(1, "AND >= 1.5")
        assert evaluate_criterion(c, make_fv(and_depth=1.5)) is True
        assert evaluate_criterion(c, make_fv(and_depth=1.25)) is False


class TestGrammar:
    def test_parse_display_names(self):
        preds = parse_rule("Bits < 50 & PM = 0 & Lambda >= 7.5")
        assert preds == (Predicate("bits", "<", 50.0),
                         Predicate("pm", "==", 0.0),
                         Predicate("lambda", ">=", 7.5))

    def test_comma_shorthand_rejected(self):
        with pytest.raises(CriteriaFormatError, match="expanded"):
            parse_rule("PM, CBF = 0 & AND < 1.75")

    def test_expanded_depth1_rule(self):
        preds = parse_rule("PM = 0 & CBF = 0 & AND < 1.75")
        assert len(preds) == 3

    def test_unknown_feature_rejected(self):
        with pytest.raises((CriteriaFormatError, ValueError)):
            parse_rule("Foo < 3")

    def test_unknown_comparator_rejected(self):
        with pytest.raises(CriteriaFormatError):
            parse_rule("Bits > 3")

    def test_rendering_round_trip(self):
        c = criterion(0, "Bits < 50 & PM = 0 & RDC < 145.5")
        assert c.render_rule() == "Bits < 50 & PM = 0 & RDC < 145.5"
        assert parse_rule(c.render_rule()) == c.predicates


class TestSimplify:
    def test_tighter_upper_bound_wins(self):
        preds = [Predicate("bits", "<", 50.0), Predicate("bits", "<", 30.0)]
        assert simplify_predicates(preds) == (Predicate("bits", "<", 30.0),)

    def test_tighter_lower_bound_wins(self):
        preds = [Predicate("rdc", ">=", 10.0), Predicate("rdc", ">=", 25.0)]
        assert simplify_predicates(preds) == (Predicate("rdc", ">=", 25.0),)

    def test_integer_domain_folds_to_equality(self):
        assert simplify_predicates([Predicate("pm", "<", 1.0)]) == (
            Predicate("pm", "==", 0.0),)
        assert simplify_predicates([Predicate("sf", ">=", 1.0)]) == (
            Predicate("sf", "==", 1.0),)
        assert simplify_predicates(
            [Predicate("pm", ">=", 1.0), Predicate("pm", "<", 2.0)]) == (
            Predicate("pm", "==", 1.0),)

    def test_vacuous_domain_bounds_dropped(self):
        preds = simplify_predicates(
            [Predicate("qpo", ">=", 1.0), Predicate("bits", "<", 9.0)])
        assert preds == (Predicate("bits", "<", 9.0),)

    def test_contradiction_detected(self):
        with pytest.raises(ValueError):
            simplify_predicates(
                [Predicate("pm", ">=", 2.0), Predicate("pm", "<", 1.0)])


class TestApplySkip:
    def test_empty_bundle_always_continues(self):
        fv = make_fv()
        for depth in (0, 1, 2):
            assert apply_skip(depth, fv, CriteriaBundle.empty()) is False
            assert apply_skip(depth, fv, None) is False

    def test_terminal_depth_never_skips(self):
        bundle = CriteriaBundle({d: criterion(d, "Bits >= 0")
                                 for d in (0, 1, 2)})
        assert apply_skip(3, make_fv(), bundle) is False

    def test_firing_criterion_skips(self):
        bundle = CriteriaBundle({1: criterion(1, "Bits < 50 & PM = 0")})
        assert apply_skip(1, make_fv(bits=40.0, pm=0), bundle) is True
        assert apply_skip(1, make_fv(bits=60.0, pm=0), bundle) is False
        assert apply_skip(0, make_fv(bits=40.0, pm=0), bundle) is False


class TestBundle:
    def test_depth_slot_must_match(self):
        with pytest.raises(ValueError):
            CriteriaBundle({0: criterion(1, "SF = 1")})

    def test_empty_bundle(self):
        bundle = CriteriaBundle.empty()
        assert len(bundle) == 0
        assert bundle.for_depth(0) is None

    def test_file_round_trip(self, tmp_path):
        bundle = CriteriaBundle(
            by_depth={
                0: criterion(0, "Bits < 50 & PM = 0 & RDC < 145",
                             accuracy=0.9812, coverage=0.2345, node=(3, 11)),
                2: criterion(2, "Bits < 50 & PM = 0",
                             accuracy=1 / 3, coverage=0.17, node=(2, 4)),
            },
            min_accuracy=97.0, min_coverage=17.0,
            training_sequences=("seqa", "seqb"))
        path = tmp_path / "criteria.txt"
        write_criteria_file(bundle, path)
        loaded = load_criteria_bundle(path)
        assert loaded.by_depth == bundle.by_depth
        assert loaded.min_accuracy == 97.0
        assert loaded.min_coverage == 17.0
        assert loaded.training_sequences == ("seqa", "seqb")

    def test_unknown_feature_rejected_at_load(self, tmp_path):
        path = tmp_path / "criteria.txt"
        path.write_text(
            "0 | Blocked < 3 | accuracy=0.99 | coverage=0.5 | node=d1#1\n")
        with pytest.raises(CriteriaFormatError, match="line 1"):
            load_criteria_bundle(path)

    def test_duplicate_depth_rejected(self, tmp_path):
        path = tmp_path / "criteria.txt"
        line = "1 | SF = 1 | accuracy=0.99 | coverage=0.5 | node=d1#1\n"
        path.write_text(line + line)
        with pytest.raises(CriteriaFormatError, match="duplicate"):
            load_criteria_bundle(path)

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "criteria.txt"
        path.write_text("# header\n2 | SF = 1 | accuracy=0.9\n")
        with pytest.raises(CriteriaFormatError, match="line 2"):
            load_criteria_bundle(path)


class TestFiredCriterionFidelity:
    def test_skipped_cus_satisfy_their_criterion(self):
        spec = SequenceSpec("m", "mixed", 128, 128, 3, seed=31)
        frames = generate_sequence(spec)
        bundle = CriteriaBundle({
            0: criterion(0, "SF = 1", accuracy=1.0, coverage=1.0),
            1: criterion(1, "Bits < 10", accuracy=1.0, coverage=1.0),
        })
        skip_log = []
        _, stats = encode_frame(frames[1], frames[0],
                                EncoderConfig(base_qp=27),
                                criteria=bundle, skip_log=skip_log)
        assert stats.rdo.skip_events == len(skip_log)
        assert skip_log, "expected at least one skip on mixed content"
        for cu, fv in skip_log:
            assert evaluate_criterion(bundle.for_depth(cu.depth), fv)
