"""Framing, serialization, configuration JSON, persisted state."""

import numpy as np
import pytest

from polycommit import PrimeField, gf4, substream
from polycommit.protocol import (
    ConfigError,
    VerificationKey,
    keygen_prover,
    keygen_verifier,
    make_config,
    random_matrix,
)
from polycommit.wire import (
    DecodeError,
    FrameReader,
    Reader,
    Tag,
    Writer,
    config_digest,
    config_from_json,
    config_to_json,
    encode_frame,
    load_prover_state,
    load_verifier_state,
    read_frame_from,
    save_prover_state,
    save_verifier_state,
)

GF11 = PrimeField(11)


def desk_config():
    return make_config(GF11, d=9, r=2, c=3, xi=6)


# -- frames --


def test_frame_round_trip():
    raw = encode_frame(Tag.EVAL_REQ, b"payload")
    (tag, payload), end = read_frame_from(raw, 0)
    assert tag == Tag.EVAL_REQ and payload == b"payload" and end == len(raw)


def test_frame_reader_iterates_multiple():
    raw = encode_frame(Tag.NEGOTIATE, b"a") + encode_frame(Tag.ABORT, b"bc")
    frames = list(FrameReader(raw))
    assert [t for t, _ in frames] == [Tag.NEGOTIATE, Tag.ABORT]
    assert [p for _, p in frames] == [b"a", b"bc"]


def test_corrupt_length_prefix_is_decode_error_not_crash():
    raw = bytearray(encode_frame(Tag.EVAL_REQ, b"xy"))
    raw[0:4] = (999).to_bytes(4, "big")  # claims far more payload than present
    with pytest.raises(DecodeError):
        read_frame_from(bytes(raw), 0)
    with pytest.raises(DecodeError):
        read_frame_from(raw[:3], 0)  # truncated header


def test_unknown_tag_rejected():
    raw = encode_frame(Tag.EVAL_REQ, b"")
    raw = bytes([raw[0], raw[1], raw[2], raw[3], 200]) + raw[5:]
    with pytest.raises(DecodeError):
        read_frame_from(raw, 0)


def test_payload_writer_reader_round_trip():
    w = Writer().u8(7).u32(1234).u64(2**40).blob(b"blob")
    w.elem(GF11, 7).vector(GF11, [1, 2, 3]).matrix(GF11, [[1, 2], [3, 4]])
    r = Reader(w.bytes())
    assert r.u8() == 7
    assert r.u32() == 1234
    assert r.u64() == 2**40
    assert r.blob() == b"blob"
    assert r.elem(GF11) == 7
    assert r.vector(GF11).tolist() == [1, 2, 3]
    assert r.matrix(GF11).tolist() == [[1, 2], [3, 4]]
    r.done()


def test_element_width_example():
    assert Writer().elem(GF11, 7).bytes() == b"\x07" + b"\x00" * 7
    assert Writer().elem(gf4(), 3).bytes() == b"\x03"


def test_reader_flags_trailing_and_truncation():
    data = Writer().u32(5).bytes()
    r = Reader(data + b"x")
    r.u32()
    with pytest.raises(DecodeError):
        r.done()
    with pytest.raises(DecodeError):
        Reader(b"\x00").u32()


# -- config JSON --


def test_config_json_round_trip():
    cfg = desk_config()
    text = config_to_json(cfg, seed=99)
    back, seed = config_from_json(text)
    assert back == cfg and seed == 99
    assert config_digest(back) == config_digest(cfg)


def test_config_json_table_field_round_trip():
    cfg = make_config(gf4(), d=4, r=2, c=1, xi=1)
    back, _ = config_from_json(config_to_json(cfg))
    assert back == cfg


@pytest.mark.parametrize(
    "mutation",
    [
        {"d": 8},  # not a perfect square
        {"d": 4},  # gcd(2, 10) != 1
        {"xi": 8},  # reserved set does not fit
        {"r": 1},
        {"c": 0},
        {"c": 5},  # c > |S|
        {"version": 2},
        {"field": {"kind": "prime", "modulus": 12}},
        {"field": {"kind": "weird"}},
    ],
)
def test_config_json_rejects_invalid(mutation):
    import json

    doc = json.loads(config_to_json(desk_config()))
    doc.update(mutation)
    with pytest.raises(ConfigError):
        config_from_json(json.dumps(doc))


def test_config_json_rejects_garbage():
    with pytest.raises(ConfigError):
        config_from_json("not json")
    with pytest.raises(ConfigError):
        config_from_json("[1,2,3]")


# -- persisted state --


def test_verifier_state_round_trip(tmp_path):
    cfg = desk_config()
    rng = substream(2024, "wire", "state")
    key = keygen_verifier(cfg, rng)
    vk = VerificationKey(
        gamma=random_matrix(GF11, (cfg.c, cfg.s), rng),
        omega=random_matrix(GF11, (cfg.s, cfg.c), rng),
    )
    path = tmp_path / "verifier.state"
    save_verifier_state(path, cfg, key, vk, rounds=4)
    cfg2, key2, vk2, rounds = load_verifier_state(path)
    assert cfg2 == cfg and key2 == key and rounds == 4
    assert np.array_equal(vk2.gamma, vk.gamma)
    assert np.array_equal(vk2.omega, vk.omega)
    # bit-exact: re-serialization reproduces the file
    path2 = tmp_path / "again.state"
    save_verifier_state(path2, cfg2, key2, vk2, rounds)
    assert path.read_bytes() == path2.read_bytes()


def test_prover_state_round_trip(tmp_path):
    cfg = desk_config()
    rng = substream(2024, "wire", "pstate")
    coeffs = [GF11.sample(rng) for _ in range(cfg.d)]
    pk = keygen_prover(cfg, rng)
    path = tmp_path / "prover.state"
    save_prover_state(path, cfg, coeffs, pk, rounds=1)
    cfg2, coeffs2, pk2, rounds = load_prover_state(path)
    assert cfg2 == cfg and coeffs2.tolist() == coeffs and rounds == 1
    assert np.array_equal(pk2.mask, pk.mask)


def test_state_files_reject_wrong_magic(tmp_path):
    cfg = desk_config()
    rng = substream(2024, "wire", "magic")
    pk = keygen_prover(cfg, rng)
    path = tmp_path / "prover.state"
    save_prover_state(path, cfg, [0] * 9, pk, 0)
    with pytest.raises(DecodeError):
        load_verifier_state(path)
    corrupted = bytearray(path.read_bytes())
    corrupted[-1] ^= 0xFF
    path.write_bytes(bytes(corrupted[:-2]))
    with pytest.raises(DecodeError):
        load_prover_state(path)
