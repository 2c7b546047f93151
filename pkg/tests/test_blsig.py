import random

import pytest
from blspy import BasicSchemeMPL, G1Element, PrivateKey
from hypothesis import given, settings
from hypothesis import strategies as st

from fogdetect import blsig, ops
from fogdetect.blsig import Signature, SigningKey, VerifyKey


def _batch(group, n, seed=0):
    rng = random.Random(seed)
    sk, vk = blsig.sig_keygen(group, rng)
    items = [(f"msg-{i}".encode(), None) for i in range(n)]
    items = [(m, blsig.sign(group, sk, m)) for m, _ in items]
    return sk, vk, items


def test_matches_reference_basic_scheme(bls):
    # independent implementation of the same ciphersuite
    for x, msg in [(1, b""), (123456789, b"hello"), (bls.order - 1, bytes(range(200)))]:
        ref_sk = PrivateKey.from_bytes(x.to_bytes(32, "big"))
        ours = blsig.sign(bls, SigningKey(x), msg)
        assert ours.data == bytes(BasicSchemeMPL.sign(ref_sk, msg))
        vk = VerifyKey(bls.encode_key(bls.key_mul(bls.generator(), x)))
        assert vk.data == bytes(ref_sk.get_g1())
        assert blsig.verify(bls, vk, msg, ours)


def test_reference_signature_verifies(bls):
    ref_sk = BasicSchemeMPL.key_gen(bytes(range(32)))
    sig = BasicSchemeMPL.sign(ref_sk, b"fog")
    vk = VerifyKey(bytes(ref_sk.get_g1()))
    assert blsig.verify(bls, vk, b"fog", Signature(bytes(sig)))
    assert not blsig.verify(bls, vk, b"fog!", Signature(bytes(sig)))


def test_sizes(bls, toy):
    assert (bls.key_bytes, bls.sig_bytes) == (48, 96)
    assert (toy.key_bytes, toy.sig_bytes) == (8, 8)
    assert len(bytes(G1Element.generator())) == bls.key_bytes


def test_sign_verify(group):
    sk, vk = blsig.sig_keygen(group, random.Random(3))
    sig = blsig.sign(group, sk, b"reading")
    assert blsig.verify(group, vk, b"reading", sig)
    assert not blsig.verify(group, vk, b"readinG", sig)
    _, other = blsig.sig_keygen(group, random.Random(4))
    assert not blsig.verify(group, other, b"reading", sig)


def test_malformed_inputs_rejected(group):
    sk, vk = blsig.sig_keygen(group, random.Random(5))
    sig = blsig.sign(group, sk, b"m")
    for bad in (b"", sig.data[:-1], sig.data + b"\x00", b"\xff" * len(sig.data)):
        assert not blsig.verify(group, vk, b"m", Signature(bad))
    assert not blsig.verify(group, VerifyKey(b"\x01"), b"m", sig)


def test_every_bit_flip_rejected_toy(toy):
    sk, vk, items = _batch(toy, 1)
    msg, sig = items[0]
    for i in range(8 * len(sig.data)):
        flipped = bytearray(sig.data)
        flipped[i // 8] ^= 1 << (i % 8)
        assert not blsig.verify(toy, vk, msg, Signature(bytes(flipped)))


def test_bit_flips_rejected_bls(bls):
    sk, vk, items = _batch(bls, 1)
    msg, sig = items[0]
    rng = random.Random(0)
    for i in rng.sample(range(8 * len(sig.data)), 40):
        flipped = bytearray(sig.data)
        flipped[i // 8] ^= 1 << (i % 8)
        assert not blsig.verify(bls, vk, msg, Signature(bytes(flipped)))


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_batch_accepts_valid(group, n):
    _, vk, items = _batch(group, n)
    assert blsig.batch_verify(group, vk, items, rng=random.Random(1))
    assert blsig.batch_verify(group, vk, items, weighted=False)


def test_batch_rejects_single_bad(group):
    _, vk, items = _batch(group, 5)
    items[3] = (b"forged", items[3][1])
    assert not blsig.batch_verify(group, vk, items, rng=random.Random(1))
    assert not blsig.batch_verify(group, vk, items, weighted=False)


def test_swap_attack(group):
    _, vk, items = _batch(group, 4)
    (m0, s0), (m1, s1) = items[0], items[1]
    swapped = [(m0, s1), (m1, s0)] + items[2:]
    assert not blsig.verify(group, vk, m0, s1)
    # the plain product check cannot see the exchange
    assert blsig.batch_verify(group, vk, swapped, weighted=False)
    assert not blsig.batch_verify(group, vk, swapped, rng=random.Random(2))


def test_batch_empty(toy):
    _, vk = blsig.sig_keygen(toy, random.Random(0))
    with pytest.raises(ValueError):
        blsig.batch_verify(toy, vk, [])


@pytest.mark.parametrize("n", [1, 5, 10, 25])
def test_batch_pairing_count(toy, n):
    _, vk, items = _batch(toy, n)
    c = ops.OpCounter()
    with ops.counting(c):
        assert blsig.batch_verify(toy, vk, items, rng=random.Random(0))
    assert c[ops.PAIRING] == n + 1
    assert c[ops.G_MUL_SMALL] == 2 * n
    assert c[ops.G_MUL] == 0


def test_verify_and_sign_counts(toy):
    sk, vk = blsig.sig_keygen(toy, random.Random(0))
    c = ops.OpCounter()
    with ops.counting(c):
        sig = blsig.sign(toy, sk, b"x")
        blsig.verify(toy, vk, b"x", sig)
    assert c.snapshot() == {ops.G_MUL: 1, ops.PAIRING: 2, ops.HASH_TO_GROUP: 2}


@settings(max_examples=50, deadline=None)
@given(a=st.integers(1, 2**61), b=st.integers(1, 2**61))
def test_toy_bilinearity(toy, a, b):
    P = toy.generator()
    H = toy.hash_to_point(b"h")
    assert toy.pair(toy.key_mul(P, a), toy.sig_mul(H, b)) == toy.pair(toy.key_mul(P, a * b), H)
    assert toy.pair(P, toy.sig_add(H, H)) == toy.gt_mul(toy.pair(P, H), toy.pair(P, H))


def test_bls_bilinearity(bls):
    P = bls.generator()
    H = bls.hash_to_point(b"h")
    assert bls.pair(bls.key_mul(P, 6), H) == bls.pair(P, bls.sig_mul(H, 6))
    assert bls.pair(P, bls.sig_add(H, H)) == bls.gt_mul(bls.pair(P, H), bls.pair(P, H))


def test_unknown_backend():
    with pytest.raises(ValueError):
        blsig.get_group("bn254")


def test_signature_hex_roundtrip(toy):
    sk, _ = blsig.sig_keygen(toy, random.Random(0))
    s = blsig.sign(toy, sk, b"x")
    assert Signature.fromhex(s.hex()) == s
