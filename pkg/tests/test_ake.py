import json

import pytest

from tpmke import kdf
from tpmke.ake import (BUILTIN_SCENARIOS, AkeError, Backing, Environment, Role, Status,
                       handshake, matching, message_matching, run_scenario)
from tpmke.curves import P256, TOY
from tpmke.group import Point
from tpmke.tpm import Scheme

MQV, SM2, UM = Scheme.ECMQV, Scheme.SM2, Scheme.ECDH
BACKINGS = [Backing.TPM_ORIGINAL, Backing.TPM_REVISED, Backing.SOFTWARE]


def env_with(ba, bb, seed=0, curve=TOY):
    env = Environment(curve, seed)
    env.add_party("A", ba)
    env.add_party("B", bb)
    return env


@pytest.mark.parametrize("scheme", list(Scheme), ids=lambda s: s.short)
@pytest.mark.parametrize("ba", BACKINGS, ids=lambda b: b.value)
@pytest.mark.parametrize("bb", BACKINGS, ids=lambda b: b.value)
def test_matching_sessions_agree(scheme, ba, bb):
    for seed in range(10):
        env = env_with(ba, bb, seed)
        s_a, s_b = handshake(env, scheme, "A", "B")
        assert matching(s_a, s_b) and matching(s_b, s_a)
        assert s_a.key == s_b.key and len(s_a.key) == kdf.KEY_BYTES


def test_two_initiations_give_distinct_out():
    for b in BACKINGS:
        env = env_with(b, b)
        X1, s1 = env.initiate(MQV, "A", "B")
        X2, s2 = env.initiate(MQV, "A", "B")
        assert X1 != X2
        assert s1.status is Status.OPEN and s1.inp is None


def test_tpm_out_matches_trace():
    env = env_with(Backing.TPM_ORIGINAL, Backing.TPM_ORIGINAL)
    X, s = env.initiate(UM, "A", "B")
    rec = env.parties["A"].tpm.trace[-1]
    assert rec.command == "TPM2_EC_Ephemeral" and rec.outputs["X"] == X.hex()
    assert rec.outputs["ctr"] == s.ctr


def test_respond_rejects_off_curve_without_session():
    env = env_with(Backing.SOFTWARE, Backing.TPM_ORIGINAL)
    before = len(env.sessions)
    for bad in (Point(TOY, 1, 1), TOY.identity, P256.g):
        with pytest.raises(AkeError) as e:
            env.respond(UM, "B", "A", bad)
        assert e.value.code == "off-curve"
    assert len(env.sessions) == before
    # the TPM never handed out an ephemeral for the rejected message
    assert not any(r.command == "TPM2_EC_Ephemeral" for r in env.parties["B"].tpm.trace)


def test_software_responder_vs_revised_initiator():
    env = env_with(Backing.TPM_REVISED, Backing.SOFTWARE)
    for sc in Scheme:
        a, b = handshake(env, sc, "A", "B")
        assert a.key == b.key


def test_complete_errors():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    Y = TOY.g ** 3
    with pytest.raises(AkeError) as e:
        env.complete(UM, "A", "B", TOY.g ** 2, Y)
    assert e.value.code == "no-open-session"
    X, s = env.initiate(UM, "A", "B")
    with pytest.raises(AkeError) as e:
        env.complete(UM, "A", "B", X, Point(TOY, 1, 1))
    assert e.value.code == "off-curve"
    env.complete(UM, "A", "B", X, Y)
    with pytest.raises(AkeError) as e:
        env.complete(UM, "A", "B", X, Y)
    assert e.value.code == "no-open-session"


def test_um_key_formula_with_known_scalars():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    a = env.parties["A"].keys[UM].private
    b = env.parties["B"].keys[UM].private
    s_a, s_b = handshake(env, UM, "A", "B")
    x, y = s_a.ephemeral, s_b.ephemeral
    g = TOY.g
    want = kdf.h1(kdf.UMTranscript(g ** (a * b), g ** (x * y), "A", "B", g ** x, g ** y))
    assert s_a.key == want == s_b.key


def test_scheme_mismatch():
    env = Environment(TOY, 0)
    env.add_party("A", Backing.SOFTWARE, [MQV])
    env.add_party("B", Backing.SOFTWARE, [MQV, SM2])
    with pytest.raises(AkeError) as e:
        env.initiate(SM2, "A", "B")
    assert e.value.code == "scheme-mismatch"
    with pytest.raises(AkeError):
        env.respond(SM2, "B", "A", TOY.g)


def test_party_registry_errors():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    with pytest.raises(AkeError):
        env.add_party("A", Backing.SOFTWARE)
    with pytest.raises(AkeError):
        env.add_party("Z", Backing.EXTERNAL)
    with pytest.raises(AkeError):
        env.party("nobody")
    with pytest.raises(AkeError):
        env.register_public_key("A", TOY.g, MQV)
    env.register_public_key("M", TOY.g ** 7, MQV)
    with pytest.raises(AkeError) as e:
        env.initiate(MQV, "M", "A")
    assert e.value.code == "not-honest"
    with pytest.raises(AkeError):
        env.register_public_key("M2", Point(TOY, 1, 1), MQV)


def test_matching_predicates():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    s_a, s_b = handshake(env, MQV, "A", "B")
    assert matching(s_a, s_b)
    assert not matching(s_a, s_a)
    assert not message_matching(s_a, s_b)
    t_a, t_b = handshake(env, SM2, "A", "B")
    assert not matching(s_a, t_b) and not message_matching(s_a, t_b)
    X, open_s = env.initiate(UM, "A", "B")
    assert not matching(open_s, s_b) and not message_matching(open_s, s_b)


@pytest.mark.parametrize("backing", BACKINGS, ids=lambda b: b.value)
def test_message_matching_sessions_have_different_keys(backing):
    for seed in range(10):
        env = env_with(backing, backing, seed)
        X, s_a = env.initiate(MQV, "A", "B")
        Y, s_b = env.respond(SM2, "B", "A", X)
        env.complete(MQV, "A", "B", X, Y)
        assert message_matching(s_a, s_b) and message_matching(s_b, s_a)
        assert not matching(s_a, s_b)
        assert s_a.key != s_b.key


def test_session_identifiers_unique():
    env = env_with(Backing.TPM_ORIGINAL, Backing.SOFTWARE)
    for sc in Scheme:
        for _ in range(5):
            handshake(env, sc, "A", "B")
            handshake(env, sc, "B", "A")
    ids = [s.identifier for s in env.sessions]
    assert len(ids) == len(set(ids))


def test_duplicate_x_creates_distinct_sessions():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    X = TOY.g ** 11
    Y1, s1 = env.respond(UM, "B", "A", X)
    Y2, s2 = env.respond(UM, "B", "A", X)
    assert s1 is not s2 and Y1 != Y2


@pytest.mark.parametrize("scheme", list(Scheme), ids=lambda s: s.short)
def test_revealable_state_rules(scheme):
    expected = {
        Backing.TPM_ORIGINAL: {"key"} if scheme is UM else {"key", "z"},
        Backing.TPM_REVISED: {"key"},
        Backing.SOFTWARE: {"key", "ephemeral"} | ({"z1", "z2"} if scheme is UM else {"z"}),
    }
    for b in BACKINGS:
        env = env_with(b, b)
        s_a, s_b = handshake(env, scheme, "A", "B")
        for s in (s_a, s_b):
            assert set(s.revealable) == expected[b]
            if "z" in s.revealable:
                assert isinstance(s.revealable["z"], Point)
        for s in (s_a, s_b):
            assert s.role in (Role.INITIATOR, Role.RESPONDER)


def test_tpm_parties_hold_only_handles():
    env = env_with(Backing.TPM_ORIGINAL, Backing.SOFTWARE)
    ka = env.parties["A"].keys[MQV]
    kb = env.parties["B"].keys[MQV]
    assert ka.private is None and ka.handle is not None
    assert kb.private is not None and TOY.g ** kb.private == kb.public


def test_primary_keys_are_reproducible():
    e1, e2 = Environment(TOY, 3), Environment(TOY, 3)
    p1 = e1.add_party("A", Backing.TPM_REVISED, primary=True)
    p2 = e2.add_party("A", Backing.TPM_REVISED, primary=True)
    assert p1.keys[MQV].public == p2.keys[MQV].public


def test_transcript_jsonl_and_determinism():
    def run():
        env = env_with(Backing.TPM_REVISED, Backing.SOFTWARE, seed=42)
        for sc in Scheme:
            handshake(env, sc, "A", "B")
        return env.transcript_jsonl()
    t1, t2 = run(), run()
    assert t1 == t2
    events = [json.loads(l) for l in t1.splitlines()]
    assert [e["seq"] for e in events] == list(range(len(events)))
    assert {e["event"] for e in events} == {"add-party", "initiate", "respond", "complete"}


@pytest.mark.parametrize("name", sorted(BUILTIN_SCENARIOS))
def test_builtin_scenarios(name):
    env, pairs = run_scenario(BUILTIN_SCENARIOS[name], seed=1)
    assert pairs and all(a.key == b.key for a, b in pairs)


def test_find_helpers():
    env = env_with(Backing.SOFTWARE, Backing.SOFTWARE)
    s_a, s_b = handshake(env, SM2, "A", "B")
    assert env.find("A", SM2) == [s_a]
    assert env.find("B", role=Role.RESPONDER) == [s_b]
    assert env.matching_session(s_a) is s_b
