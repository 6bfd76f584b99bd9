import itertools
import json
from fractions import Fraction
from importlib import resources

import jsonschema
import pytest

from blind_distill.algebra import ALL_ANGLES, ALL_LABELS, Angle8, BellLabel
from blind_distill.distill import HashingConfig
from blind_distill.errors import InvalidDistribution, OrderingViolation
from blind_distill.mbqc import chain_pattern
from blind_distill.protocol import Kind, PartyRole, Transcript, run_double_server_distilled
from blind_distill.security import (
    STRATEGIES,
    RunParams,
    blindness_leakage,
    bob1_view_distribution,
    bob2_view_distribution,
    encode_in_all,
    encode_in_first,
    hash_seed_independence_check,
    mutual_information,
    run_security_suite,
    shared_pair_holevo,
    signaling_capacity_test,
    single_pattern,
    two_step_pattern,
)

B1, B2 = PartyRole.BOB1, PartyRole.BOB2


def test_bob1_view_uniform_for_every_hypothesis():
    for lab, phi in itertools.product(ALL_LABELS, ALL_ANGLES):
        assert bob1_view_distribution([phi], [lab]).is_uniform(8)


def test_bob1_view_independent_of_labels_and_program():
    base = bob1_view_distribution([Angle8(0), Angle8(0)], [BellLabel(0, 0), BellLabel(0, 0)])
    assert base.is_uniform(64)
    assert bob1_view_distribution([Angle8(0)] * 2, [BellLabel(1, 1), BellLabel(0, 1)]) == base
    assert bob1_view_distribution([Angle8(3), Angle8(6)], [BellLabel(0, 0)] * 2) == base


def test_bob2_view_uniform_and_independent():
    for phi, b in itertools.product(ALL_ANGLES, (0, 1)):
        assert bob2_view_distribution([phi], [b]).is_uniform(8)
    assert bob2_view_distribution(Angle8(1), 0) == bob2_view_distribution(Angle8(1), 1)
    assert bob2_view_distribution(Angle8(0), 0) == bob2_view_distribution(Angle8(2), 0)
    assert sum(bob2_view_distribution(Angle8(5), 1).table.values()) == 1


def test_bob2_view_joint_over_two_vertices():
    assert bob2_view_distribution([Angle8(1), Angle8(7)], [0, 1]).is_uniform(64)


def test_mutual_information_examples():
    product = {((a,), (b,)): Fraction(1, 4) for a in (0, 1) for b in (0, 1)}
    assert mutual_information(product) == 0.0
    assert mutual_information({(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)}) == pytest.approx(1.0)
    joint = {}
    for b in (0, 1):
        for delta, p in bob2_view_distribution(Angle8(3), b).table.items():
            joint[(b, delta)] = p / 2
    assert mutual_information(joint) == 0.0


def test_mutual_information_rejects_bad_tables():
    with pytest.raises(InvalidDistribution):
        mutual_information({})
    with pytest.raises(InvalidDistribution):
        mutual_information({(0, 0): -1, (1, 1): 2})
    with pytest.raises(InvalidDistribution):
        mutual_information({(0, 0): 0})
    with pytest.raises(InvalidDistribution):
        mutual_information({0: 1})


@pytest.mark.parametrize("pattern", [single_pattern(), two_step_pattern()], ids=["m1", "m2"])
@pytest.mark.parametrize("strategy", [encode_in_first, encode_in_all, STRATEGIES["view_parity"]])
def test_no_signaling_bob1_to_bob2(pattern, strategy):
    labels = (BellLabel(0, 1), BellLabel(1, 1))[: pattern.graph.vertex_count]
    res = signaling_capacity_test(strategy, B1, B2, RunParams(pattern, labels))
    assert res.mutual_information_bits == 0.0
    assert res.cases > 0


@pytest.mark.parametrize("pattern", [single_pattern(), two_step_pattern()], ids=["m1", "m2"])
@pytest.mark.parametrize("strategy", [encode_in_first, encode_in_all, STRATEGIES["view_parity"]])
def test_no_signaling_bob2_to_bob1(pattern, strategy):
    labels = (BellLabel(1, 0), BellLabel(0, 0))[: pattern.graph.vertex_count]
    res = signaling_capacity_test(strategy, B2, B1, RunParams(pattern, labels))
    assert res.mutual_information_bits == 0.0


@pytest.mark.parametrize("sender,receiver", [(B1, B2), (B2, B1)])
def test_broken_variant_leaks(sender, receiver):
    params = RunParams(two_step_pattern(), (BellLabel(1, 1), BellLabel(0, 1)), hash_rounds=0, broken=True)
    res = signaling_capacity_test(encode_in_all, sender, receiver, params)
    assert res.mutual_information_bits > 0.5


def test_signaling_rejects_same_party():
    with pytest.raises(ValueError):
        signaling_capacity_test(encode_in_all, B1, B1, RunParams(single_pattern(), (BellLabel(0, 0),)))


@pytest.mark.parametrize("observer", [B1, B2])
def test_blindness_zero_leakage_m1_with_queries(observer):
    for lab in ALL_LABELS:
        res = blindness_leakage(observer, single_pattern(), (lab,), STRATEGIES["view_parity"], hash_rounds=1)
        assert res.mutual_information_bits == 0.0


@pytest.mark.parametrize("observer", [B1, B2])
def test_blindness_zero_leakage_m2(observer):
    res = blindness_leakage(observer, two_step_pattern(), (BellLabel(1, 1), BellLabel(1, 0)))
    assert res.mutual_information_bits == 0.0
    assert res.cases == 64 * 4 * 64 * 4


def test_shared_pairs_carry_no_signal():
    for lab in ALL_LABELS:
        assert shared_pair_holevo(lab, [Angle8(0), Angle8(2), Angle8(5)]) < 1e-12


def distilled_transcript(seed=12):
    return run_double_server_distilled(chain_pattern([1]), HashingConfig(8, 0.25), 1.0, seed).transcript


def test_audit_accepts_honest_run_and_replay():
    t = distilled_transcript()
    assert hash_seed_independence_check(t)
    assert hash_seed_independence_check(t, seed=12)
    replay = Transcript.from_jsonl(t.to_jsonl())
    assert hash_seed_independence_check(replay, seed=12)


def test_audit_rejects_wrong_seed():
    with pytest.raises(OrderingViolation):
        hash_seed_independence_check(distilled_transcript(), seed=13)


def test_audit_rejects_query_after_reply():
    records = list(distilled_transcript())
    q = next(i for i, r in enumerate(records) if r.message.kind == Kind.HASH_QUERY and r.message.round == 2)
    h = next(i for i, r in enumerate(records) if r.message.kind == Kind.HASH_RESULT and r.message.round == 2)
    records.insert(h, records.pop(q))
    with pytest.raises(OrderingViolation):
        hash_seed_independence_check(Transcript(records))


def test_audit_rejects_skipped_draw():
    records = [r.to_dict() for r in distilled_transcript()]
    for r in records:
        if r["kind"] == "HashQuery" and r["round"] == 1:
            r["payload"]["draw"] = 5
    text = "".join(json.dumps(r) + "\n" for r in records)
    with pytest.raises(OrderingViolation):
        hash_seed_independence_check(Transcript.from_jsonl(text))


def test_audit_rejects_unequal_broadcast():
    records = [r.to_dict() for r in distilled_transcript()]
    first = next(r for r in records if r["kind"] == "HashQuery")
    first["payload"]["s"] = "0" * len(first["payload"]["s"])
    text = "".join(json.dumps(r) + "\n" for r in records)
    with pytest.raises(OrderingViolation):
        hash_seed_independence_check(Transcript.from_jsonl(text))


def schema(name):
    return json.loads(resources.files("blind_distill").joinpath("schemas", name).read_text())


def test_transcript_records_match_schema():
    s = schema("transcript_record.schema.json")
    for line in distilled_transcript().to_jsonl().splitlines():
        jsonschema.validate(json.loads(line), s)


def test_security_suite_report():
    report = run_security_suite(broken_variant=True, audit_transcript=distilled_transcript(), audit_seed=12)
    data = report.to_dict()
    jsonschema.validate(data, schema("blindness_report.schema.json"))
    verdicts = {c["claim"]: c for c in data["claims"]}
    assert data["all_passed"]
    for name, claim in verdicts.items():
        if name.startswith("broken_"):
            assert claim["verdict"] == "expected-fail" and claim["mutual_information_bits"] > 0.5
        elif name == "detector_power_on_broken_variant":
            assert claim["verdict"] == "pass" and claim["mutual_information_bits"] > 0.5
        else:
            assert claim["verdict"] == "pass" and claim["mutual_information_bits"] == 0.0
    assert verdicts["hash_queries_drawn_before_replies"]["verdict"] == "pass"
