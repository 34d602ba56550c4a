"""Campaign behavior: the verdict table, witness soundness, stream
determinism, preservation and context closure."""
import itertools

import pytest

from gsoscheck.checker import (
    CampaignConfig, CoherenceCase, Fail, Pass, check_coherence,
    check_context_closure, check_preservation, closed_cases,
    evaluate_closed_case, evaluate_open_case, open_cases,
)
from gsoscheck.semantics import Distinguished, Equivalent
from gsoscheck.states import LowState, StackState, Store
from gsoscheck.terms import (
    Bin, IllFormed, Lit, Loc, assign, print_term, sandbox, seq, skip, while_,
)
from gsoscheck.spf import OneHoleLayer
from gsoscheck import gen

EXPECTED_VERDICTS = {
    "embed-flag": Fail,
    "sandbox": Pass,
    "unsandbox": Fail,
    "embed-int": Fail,
    "sandbox-int": Pass,
    "flatten-low": Fail,
    "embed-low-sec": Pass,
    "embed-stack": Fail,
    "embed-stack-clear": Pass,
}


@pytest.fixture(scope="module")
def verdicts(comps):
    cfg = CampaignConfig(samples=10_000)
    return {name: check_coherence(cp, cfg) for name, cp in comps.items()}


def test_registry_verdict_table(verdicts):
    for name, expected in EXPECTED_VERDICTS.items():
        assert isinstance(verdicts[name], expected), name


def test_passes_echo_budget_and_are_clean(verdicts):
    for name, verdict in verdicts.items():
        if isinstance(verdict, Pass):
            assert verdict.exhausted
            assert verdict.inconclusive == 0


def test_embed_flag_witness_shape(verdicts):
    fail = verdicts["embed-flag"]
    assert fail.case.subject.tag == "assign"
    assert fail.divergence.field_name == "label"
    assert fail.divergence.upper.label == 0
    assert fail.divergence.lower.label != 0


def test_unsandbox_witness_shape(verdicts):
    fail = verdicts["unsandbox"]
    assert fail.case.subject.tag == "sandbox"
    assert fail.divergence.field_name == "label"
    assert fail.divergence.upper.label == 0
    assert fail.divergence.lower.label != 0


def test_embed_int_witness_has_negative_cell(verdicts):
    fail = verdicts["embed-int"]
    assert any(v < 0 for _, v in fail.case.target_input.cells)


def test_embed_stack_witness_shape(verdicts):
    fail = verdicts["embed-stack"]
    assert fail.case.subject.tag == "frame"
    assert fail.case.target_input.sp == 0
    assert fail.divergence.field_name == "state"


def test_fail_witness_replays_identically(comps):
    cfg = CampaignConfig()
    cp = comps["embed-flag"]
    window = gen.state_window(cp.target, cfg)
    first = check_coherence(cp, cfg)
    again = check_coherence(cp, cfg)
    assert isinstance(first, Fail) and isinstance(again, Fail)
    assert first.case.subject == again.case.subject
    assert first.case.target_input == again.case.target_input
    assert first.divergence.describe() == again.divergence.describe()
    # and the single witness case reproduces its divergence directly
    div, _, _ = evaluate_open_case(cp, first.case, window, cfg)
    assert div is not None
    assert div.describe() == first.divergence.describe()


def test_open_and_closed_agree_on_shipped_counterexamples(comps):
    cfg_closed = CampaignConfig(samples=12_000, mode="closed")
    cfg_open = CampaignConfig(samples=10_000, mode="open")
    for name in ("embed-flag", "unsandbox", "embed-int", "embed-stack"):
        cp = comps[name]
        assert isinstance(check_coherence(cp, cfg_closed), Fail), name
        assert isinstance(check_coherence(cp, cfg_open), Fail), name


def test_open_mode_rejected_for_whole_term(comps):
    with pytest.raises(IllFormed):
        check_coherence(comps["flatten-low"], CampaignConfig(mode="open"))


def test_pinned_flatten_low_case(comps):
    cp = comps["flatten-low"]
    cfg = CampaignConfig(mode="closed")
    window = gen.state_window(cp.target, cfg)
    case = CoherenceCase(while_(Lit(0), assign(0, Lit(0))), LowState(Store.of({0: 3}), 1))
    div, _, _ = evaluate_closed_case(cp, case, window, cfg)
    assert div is not None
    assert div.upper.cont is None
    assert div.upper.state == LowState(Store.of({0: 3}), 1)
    assert div.lower.cont is not None
    assert div.lower.state == LowState(Store.of({}), 2)


def test_pinned_int_case(comps):
    cp = comps["embed-int"]
    cfg = CampaignConfig()
    window = gen.state_window(cp.target, cfg)
    case = CoherenceCase(assign(0, Bin("min", Loc(0), Lit(0))), Store.of({0: -1}))
    div, _, _ = evaluate_open_case(cp, case, window, cfg)
    assert div is not None and div.field_name == "state"
    assert div.upper.state == Store.of({})
    assert div.lower.state == Store.of({0: -1})


def test_pinned_stack_case(comps):
    cp = comps["embed-stack"]
    cfg = CampaignConfig()
    window = gen.state_window(cp.target, cfg)
    case = CoherenceCase(
        __import__("gsoscheck.terms", fromlist=["frame"]).frame(),
        StackState(Store.of({0: 1}), 0))
    div, _, _ = evaluate_open_case(cp, case, window, cfg)
    assert div is not None and div.field_name == "state"
    assert div.upper.state == StackState(Store.of({}), 1)
    assert div.lower.state == StackState(Store.of({0: 1}), 1)


def test_sandbox_passes_only_up_to_continuation_fallback(comps):
    # the nested-sandbox continuations are behaviorally equal but not
    # syntactically so; the campaign reports how many cases needed that
    verdict = check_coherence(comps["sandbox"], CampaignConfig(samples=2000))
    assert isinstance(verdict, Pass)
    assert verdict.fallback_cases > 0


def test_secure_low_needs_no_fallback(comps):
    verdict = check_coherence(comps["embed-low-sec"], CampaignConfig(samples=10_000))
    assert isinstance(verdict, Pass)
    assert verdict.fallback_cases == 0


def test_case_stream_deterministic(comps):
    cfg = CampaignConfig()
    cp = comps["embed-flag"]
    window = gen.state_window(cp.target, cfg)

    def fingerprint():
        out = []
        for case in itertools.islice(open_cases(cp, cfg, window), 200):
            entry = (print_term(case.subject), case.target_input)
            tables = tuple(
                (str(v), tuple(sorted(t.entries.items(), key=repr)))
                for v, t in sorted(case.tables.items(), key=lambda kv: str(kv[0]))
            )
            out.append((entry, tables))
        return out

    assert fingerprint() == fingerprint()


def test_closed_stream_smallest_first(comps):
    cfg = CampaignConfig()
    cp = comps["embed-flag"]
    window = gen.state_window(cp.target, cfg)
    stream = closed_cases(cp, cfg, window)
    first = next(stream)
    assert first.subject == skip()


def test_generated_size_one_terms(langs, cfg):
    got = list(gen.closed_terms(langs["while"], cfg, 1))
    assert skip() in got
    locs = {t.payload[0] for t in got if t.tag == "assign"}
    assert locs == {0, 1}


def test_preservation_section3(comps):
    cfg = CampaignConfig()
    a = while_(Loc(0), assign(0, Lit(0)))
    b = while_(Bin("mul", Loc(0), Lit(2)), assign(0, Lit(0)))
    report = check_preservation(comps["embed-flag"], cfg, pairs=[(a, b)])
    assert len(report.violations) == 1
    violation = report.violations[0]
    assert isinstance(violation.source, Equivalent)
    assert isinstance(violation.target, Distinguished)
    assert violation.target.path == (Store.of({0: 1}),)
    assert {violation.target.left.label, violation.target.right.label} == {1, 2}

    preserved = check_preservation(comps["sandbox"], cfg, pairs=[(a, b)])
    assert not preserved.violations
    assert isinstance(preserved.entries[0].target, Equivalent)

    trivial = check_preservation(comps["embed-flag"], cfg, pairs=[(a, a)])
    assert not trivial.violations


def test_context_closure_closed_pair(langs):
    cfg = CampaignConfig(samples=150)
    a = while_(Loc(0), assign(0, Lit(0)))
    b = while_(Bin("mul", Loc(0), Lit(2)), assign(0, Lit(0)))
    report = check_context_closure(langs["while"], a, b, cfg)
    assert report.status == "closed"
    assert report.contexts_checked == 150
    assert not report.violations


def test_context_closure_trivial_pair(langs):
    report = check_context_closure(langs["while"], skip(), skip(), CampaignConfig(samples=40))
    assert report.status == "closed"


def test_closed_low_cases_cross_out_of_range_pcs(comps):
    cfg = CampaignConfig()
    cp = comps["flatten-low"]
    window = gen.state_window(cp.target, cfg)
    from gsoscheck.terms import instr_flatten
    from gsoscheck.compilers import compile_term

    import itertools as it

    by_term = {}
    last_key = None
    for case in it.islice(closed_cases(cp, cfg, window), 2000):
        last_key = print_term(case.subject)
        by_term.setdefault(last_key, set()).add(case.target_input.pc)
    by_term.pop(last_key, None)  # the final group may be cut by the slice
    assert by_term
    for key, pcs in by_term.items():
        term = __import__("gsoscheck.terms", fromlist=["parse_term"]).parse_term(key)
        length = len(instr_flatten(compile_term(cp, term)))
        assert pcs == set(range(-1, length + 2)), key


def test_context_closure_base_distinguished(langs):
    cfg = CampaignConfig(samples=10)
    a = while_(Loc(0), assign(0, Lit(0)))
    b = while_(Bin("mul", Loc(0), Lit(2)), assign(0, Lit(0)))
    report = check_context_closure(langs["while-flag"], a, b, cfg)
    assert report.status == "base-distinguished"


def test_context_closure_explicit_flag_context(langs):
    # precondition violated for the flag pair, but the explicit section-3
    # context distinguishes the plugged terms outright
    from gsoscheck.semantics import check_bisim

    cfg = CampaignConfig()
    lang = langs["while-flag"]
    a = while_(Loc(0), assign(0, Lit(0)))
    b = while_(Bin("mul", Loc(0), Lit(2)), assign(0, Lit(0)))
    w = while_(Bin("sub", Loc(1), Lit(1)), skip())
    ctx = (OneHoleLayer("seq", (), 0, (w,)), OneHoleLayer("obs", (1,), 0, ()))
    from gsoscheck.spf import plug

    window = gen.store_window(cfg, int_mode=False)
    verdict = check_bisim(lang, plug(ctx, a), plug(ctx, b), window, cfg.depth)
    assert isinstance(verdict, Distinguished)


def test_stack_campaign_flags_totalizations(comps):
    verdict = check_coherence(comps["embed-stack-clear"], CampaignConfig(samples=10_000))
    assert isinstance(verdict, Pass)
    assert verdict.illformed > 0  # var access with no live frame is skipped


def test_passing_compilers_preserve_bisimilarity(comps):
    # coherent pairs must carry bisimilar source pairs to bisimilar targets
    cfg = CampaignConfig()
    for name in ("sandbox", "sandbox-int", "embed-low-sec", "embed-stack-clear"):
        cp = comps[name]
        terms = list(itertools.islice(gen.closed_terms(cp.source, cfg, 4, expr_cap=2), 20))
        pairs = [(a, b) for a, b in itertools.combinations(terms, 2)]
        rep = check_preservation(cp, cfg, pairs)
        eq_pairs = sum(1 for e in rep.entries if isinstance(e.source, Equivalent))
        assert eq_pairs > 0, name
        assert not rep.violations, name


def test_context_closure_other_languages(langs):
    cfg = CampaignConfig(samples=150)
    pairs = {
        "while-b": (while_(Loc(0), assign(0, Lit(0))),
                    while_(Bin("mul", Loc(0), Lit(2)), assign(0, Lit(0)))),
        "while-int": (assign(0, Bin("add", Loc(0), Lit(0))),
                      assign(0, Bin("sub", Loc(0), Lit(0)))),
        "while-flag": (assign(0, Bin("add", Loc(1), Lit(0))),
                       assign(0, Bin("add", Lit(0), Loc(1)))),
    }
    for name, (a, b) in pairs.items():
        rep = check_context_closure(langs[name], a, b, cfg)
        assert isinstance(rep.base, Equivalent), name
        assert rep.status == "closed", name


def test_fan_out_degree_does_not_change_verdicts(comps):
    for name in ("embed-flag", "sandbox"):
        serial = check_coherence(comps[name], CampaignConfig(samples=900, threads=1))
        fanned = check_coherence(comps[name], CampaignConfig(samples=900, threads=4))
        if isinstance(serial, Fail):
            assert isinstance(fanned, Fail)
            assert serial.case.subject == fanned.case.subject
            assert serial.case.target_input == fanned.case.target_input
            assert serial.divergence.describe() == fanned.divergence.describe()
        else:
            assert isinstance(fanned, Pass)
            assert (serial.cases, serial.fallback_cases) == (fanned.cases, fanned.fallback_cases)
