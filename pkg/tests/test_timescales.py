import pytest

from rvc.formula import parse, to_text
from rvc.monitor import Monitor
from rvc.oracle import oracle_eval
from rvc.timescales import (
    FAMILY_NAMES,
    Family,
    GenSpec,
    default_trace_name,
    generate_trace,
    list_families,
    make_formula,
)
from rvc.trace import encode_record


class TestFamilies:
    def test_thirty_pairs_in_table_order(self):
        fams = list_families()
        assert len(fams) == 30
        assert fams[0] == Family("AbsentAQ", 10)
        assert fams[-1] == Family("RespondBQR", 1000)
        assert [f.scale for f in fams[:3]] == [10, 100, 1000]

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            Family("Nope", 10)
        with pytest.raises(ValueError):
            Family("AbsentAQ", 50)

    @pytest.mark.parametrize(
        "name,scale,text",
        [
            ("AbsentAQ", 10, "(once[0:10] q) -> !p"),
            ("RecurGLB", 1000, "once[0:1000] p"),
            ("RespondGLB", 100, "!((!p) since[100:*] q)"),
            ("AlwaysBQR", 10, "((!r) since[0:10] (q && !r)) -> p"),
        ],
    )
    def test_formula_bodies(self, name, scale, text):
        assert make_formula(Family(name, scale)) == parse(text)

    def test_all_formulas_parse_and_print(self):
        for fam in list_families():
            f = make_formula(fam)
            assert parse(to_text(f)) == f

    def test_trace_naming_convention(self):
        assert default_trace_name(Family("RecurGLB", 100), 7) == "RecurGLB100-7.jsonl"


class TestGeneration:
    def test_deterministic_in_seed(self):
        spec = GenSpec(Family("AbsentAQ", 10), 100, seed=5)
        assert generate_trace(spec).records == generate_trace(spec).records

    def test_times_and_atoms(self):
        tr = generate_trace(GenSpec(Family("RecurGLB", 10), 50, seed=1, mode="random"))
        assert [r.time for r in tr] == list(range(50))
        assert all(set(r.fields) == {"p", "q", "r"} for r in tr)

    def test_satisfying_recurrence_window(self):
        fam = Family("RecurGLB", 10)
        tr = generate_trace(GenSpec(fam, 50, seed=2))
        assert all(v.value for v in oracle_eval(make_formula(fam), tr))
        # p occurs in every window of time-width 10
        times_p = [r.time for r in tr if r.fields["p"]]
        for t in range(50):
            assert any(t - 10 <= tp <= t for tp in times_p)

    def test_satisfying_absence_example(self):
        fam = Family("AbsentAQ", 10)
        tr = generate_trace(GenSpec(fam, 50, seed=3))
        assert all(v.value for v in oracle_eval(make_formula(fam), tr))
        for i, r in enumerate(tr):
            if r.fields["p"]:
                assert not any(
                    q.fields["q"] and r.time - q.time <= 10 for q in tr.records[: i + 1]
                )

    @pytest.mark.parametrize("name", FAMILY_NAMES)
    def test_satisfying_mode_all_true_and_monitor_agrees(self, name):
        for scale in (10, 100):
            fam = Family(name, scale)
            formula = make_formula(fam)
            tr = generate_trace(GenSpec(fam, 150, seed=11))
            verdicts = oracle_eval(formula, tr)
            assert all(v.value for v in verdicts), fam.label
            m = Monitor(formula)
            assert [m.step(r) for r in tr] == verdicts

    def test_payloads_stay_small(self):
        tr = generate_trace(GenSpec(Family("AlwaysBR", 10), 100, seed=4, mode="random"))
        assert all(len(encode_record(r).encode("utf-8")) <= 32 for r in tr)

    def test_probs_are_configurable(self):
        tr = generate_trace(
            GenSpec(Family("RecurGLB", 10), 200, seed=1, mode="random", probs=(0.0, 1.0, 0.0))
        )
        assert not any(r.fields["p"] for r in tr)
        assert all(r.fields["q"] for r in tr)

    def test_bad_specs_rejected(self):
        with pytest.raises(ValueError):
            GenSpec(Family("AbsentAQ", 10), 0, seed=1)
        with pytest.raises(ValueError):
            GenSpec(Family("AbsentAQ", 10), 10, seed=1, mode="weird")
