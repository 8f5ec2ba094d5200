from functools import reduce

import pytest
from hypothesis import given, settings, strategies as st

from hault.elgamal import (
    Ciphertext, Keypair, ct_add, ct_sub, decrypt, encrypt, encrypt_random, encrypt_transparent,
)
from hault.errors import InvalidEncoding, InvalidKey, OutOfRange
from hault.group import load_profile

import oracles

TOY_3G = (1153700, 3009873)
TOY_7G = (773535, 1598888)
TOY_22G = (4198432, 3980172)


def xy(P):
    return (P.x, P.y)


def test_toy_encrypt_example(toy):
    G = toy.generator
    pk = 5 * G
    ct = encrypt(pk, 7 * G, 3)
    assert xy(ct.C1) == TOY_3G
    assert xy(ct.C2) == TOY_22G
    assert oracles.repeated_add(22) == TOY_22G


def test_toy_decrypt_example(toy):
    ct = Ciphertext(toy.point(*TOY_3G), toy.point(*TOY_22G))
    assert xy(decrypt(5, ct)) == TOY_7G


def test_transparent_encryption(toy, keypair):
    M = 9 * toy.generator
    ct = encrypt(keypair.pk, M, 0)
    assert ct == Ciphertext(toy.identity, M)
    assert encrypt_transparent(keypair.pk, M) == ct
    assert ct.is_transparent
    for sk in (1, 2, 12345):
        assert decrypt(sk, ct) == M


def test_roundtrip(toy, keypair, rng):
    for _ in range(50):
        M = rng.randrange(toy.r) * toy.generator
        assert decrypt(keypair.sk, encrypt(keypair.pk, M, rng.randrange(toy.r))) == M
        assert decrypt(keypair.sk, encrypt_random(keypair.pk, M, rng)) == M


def test_invalid_key_rejected(toy):
    M = toy.generator
    with pytest.raises(InvalidKey):
        encrypt(toy.identity, M, 3)
    T = toy.point(0, toy.q - 1)  # order 2
    with pytest.raises(InvalidKey):
        encrypt(T, M, 3)


def test_randomness_range(toy, keypair):
    with pytest.raises(OutOfRange):
        encrypt(keypair.pk, toy.generator, toy.r)
    with pytest.raises(OutOfRange):
        encrypt(keypair.pk, toy.generator, -1)


def test_sampling_never_zero(toy, keypair):
    class ZeroFirst:
        def randrange(self, lo, hi):
            assert lo == 1
            return lo

    ct = encrypt_random(keypair.pk, toy.generator, ZeroFirst())
    assert not ct.C1.is_identity


def test_ct_add_neutral_and_sub(toy, keypair, rng):
    ct = encrypt_random(keypair.pk, 4 * toy.generator, rng)
    zero = Ciphertext.zero(toy)
    assert ct_add(ct, zero) == ct
    assert ct_sub(ct, zero) == ct
    assert ct_sub(ct, ct) == zero


def test_ct_sub_decrypts_to_difference(toy, rng):
    dlog = oracles.dlog_table()
    kp = Keypair.generate(toy, rng)
    for _ in range(20):
        m1, m2 = rng.randrange(toy.r), rng.randrange(toy.r)
        ct = ct_sub(encrypt_random(kp.pk, m1 * toy.generator, rng), encrypt_random(kp.pk, m2 * toy.generator, rng))
        assert dlog[xy(decrypt(kp.sk, ct))] == (m1 - m2) % toy.r


def test_fold_of_five(toy, rng):
    kp = Keypair.generate(toy, rng)
    ms = [rng.randrange(toy.r) for _ in range(5)]
    ks = [rng.randrange(1, toy.r) for _ in range(5)]
    cts = [encrypt(kp.pk, m * toy.generator, k) for m, k in zip(ms, ks)]
    folded = reduce(ct_add, cts)
    # the fold is exactly the encryption of the sum under the summed randomness
    assert folded == encrypt(kp.pk, sum(ms) * toy.generator, sum(ks) % toy.r)
    assert oracles.dlog_table()[xy(decrypt(kp.sk, folded))] == sum(ms) % toy.r


def test_distinct_randomness_gives_distinct_ciphertexts(toy, keypair):
    M = 11 * toy.generator
    a, b = encrypt(keypair.pk, M, 5), encrypt(keypair.pk, M, 6)
    assert a.C1 != b.C1 and a.C2 != b.C2


def test_keypair(toy, rng):
    kp = Keypair.generate(toy, rng)
    assert kp.pk == kp.sk * toy.generator and 0 < kp.sk < toy.r
    kp.check()
    with pytest.raises(InvalidKey):
        Keypair(kp.sk, 2 * kp.pk).check()
    with pytest.raises(InvalidKey):
        Keypair.from_secret(toy, 0)


def test_ciphertext_encoding(toy, keypair, rng):
    ct = encrypt_random(keypair.pk, toy.generator, rng)
    assert Ciphertext.from_bytes(toy, ct.to_bytes()) == ct
    assert ct.to_bytes() == ct.C1.to_bytes() + ct.C2.to_bytes()
    with pytest.raises(InvalidEncoding):
        Ciphertext.from_bytes(toy, ct.to_bytes()[:-1])


R = oracles.TOY_R


@settings(max_examples=300, deadline=None)
@given(st.integers(1, R - 1), st.integers(0, R - 1), st.integers(0, R - 1), st.integers(0, R - 1), st.integers(0, R - 1))
def test_additive_homomorphism(sk, m1, m2, k1, k2):
    toy = load_profile("toy")
    G = toy.generator
    pk = sk * G
    ct = ct_add(encrypt(pk, m1 * G, k1), encrypt(pk, m2 * G, k2))
    assert decrypt(sk, ct) == m1 * G + m2 * G
