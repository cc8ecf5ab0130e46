# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernel: hot primitives on OpenSSL (AES) and libsodium (Ed25519).

Mirrors the surface of apna._pykernel; see that module for semantics.
Instances hold per-key cipher state and are not thread-safe; use one
instance per actor/thread. Ed25519 calls release the GIL.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy, memset

from apna.errors import AuthenticationFailure

cdef extern from "openssl/evp.h":
    ctypedef struct EVP_CIPHER_CTX:
        pass
    ctypedef struct EVP_CIPHER:
        pass
    EVP_CIPHER_CTX *EVP_CIPHER_CTX_new()
    void EVP_CIPHER_CTX_free(EVP_CIPHER_CTX *ctx)
    const EVP_CIPHER *EVP_aes_128_ecb()
    int EVP_EncryptInit_ex(EVP_CIPHER_CTX *ctx, const EVP_CIPHER *type,
                           void *impl, const unsigned char *key,
                           const unsigned char *iv)
    int EVP_EncryptUpdate(EVP_CIPHER_CTX *ctx, unsigned char *out, int *outl,
                          const unsigned char *in_, int inl)
    int EVP_CIPHER_CTX_set_padding(EVP_CIPHER_CTX *ctx, int pad)

cdef extern from "openssl/crypto.h":
    int CRYPTO_memcmp(const void *a, const void *b, size_t n)

cdef extern from "sodium.h":
    int sodium_init()
    int crypto_sign_seed_keypair(unsigned char *pk, unsigned char *sk,
                                 const unsigned char *seed)
    int crypto_sign_detached(unsigned char *sig, unsigned long long *siglen,
                             const unsigned char *m, unsigned long long mlen,
                             const unsigned char *sk) nogil
    int crypto_sign_verify_detached(const unsigned char *sig,
                                    const unsigned char *m,
                                    unsigned long long mlen,
                                    const unsigned char *pk) nogil

if sodium_init() < 0:
    raise ImportError("libsodium initialization failed")

BACKEND = "compiled"

EPHID_LEN = 16
PACKET_MAC_LEN = 8

DEF _BLOCK = 16
DEF _STACK_BUF = 2048


cdef inline int _encrypt_block(EVP_CIPHER_CTX *ctx, const unsigned char *inp,
                               unsigned char *out) except -1:
    cdef int outl = 0
    if EVP_EncryptUpdate(ctx, out, &outl, inp, _BLOCK) != 1 or outl != _BLOCK:
        raise RuntimeError("AES block encryption failed")
    return 0


cdef EVP_CIPHER_CTX *_new_ecb_ctx(const unsigned char *key) except NULL:
    cdef EVP_CIPHER_CTX *ctx = EVP_CIPHER_CTX_new()
    if ctx is NULL:
        raise MemoryError()
    if (EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), NULL, key, NULL) != 1
            or EVP_CIPHER_CTX_set_padding(ctx, 0) != 1):
        EVP_CIPHER_CTX_free(ctx)
        raise RuntimeError("AES context initialization failed")
    return ctx


cdef class EphidCipher:
    """Token cipher for one AS subkey pair (k_enc, k_mac)."""

    cdef EVP_CIPHER_CTX *_enc
    cdef EVP_CIPHER_CTX *_mac

    def __cinit__(self, bytes k_enc, bytes k_mac):
        if len(k_enc) != 16 or len(k_mac) != 16:
            raise ValueError("subkeys must be 16 bytes each")
        self._enc = _new_ecb_ctx(<const unsigned char *><char *>k_enc)
        self._mac = _new_ecb_ctx(<const unsigned char *><char *>k_mac)

    def __dealloc__(self):
        if self._enc is not NULL:
            EVP_CIPHER_CTX_free(self._enc)
        if self._mac is not NULL:
            EVP_CIPHER_CTX_free(self._mac)

    cdef int _tag(self, const unsigned char *ct, const unsigned char *iv,
                  unsigned char *tag16) except -1:
        # Single-block CBC-MAC (zero IV) over ct8 || iv4 || 0^4.
        cdef unsigned char block[16]
        memcpy(block, ct, 8)
        memcpy(block + 8, iv, 4)
        memset(block + 12, 0, 4)
        return _encrypt_block(self._mac, block, tag16)

    def mint(self, bytes hid, exp_time, bytes iv):
        if len(hid) != 4 or len(iv) != 4:
            raise ValueError("hid and iv must be 4 bytes each")
        cdef unsigned long long exp = exp_time
        if exp >= (<unsigned long long>1 << 32):
            raise ValueError("exp_time must fit in 32 bits")
        cdef unsigned char counter[16]
        cdef unsigned char ks[16]
        cdef unsigned char token[16]
        cdef unsigned char tag16[16]
        cdef const unsigned char *ivp = <const unsigned char *><char *>iv
        cdef const unsigned char *hidp = <const unsigned char *><char *>hid
        cdef int i
        # CTR counter block: iv4 || 0^12, block counter 0 in the last 32 bits.
        memcpy(counter, ivp, 4)
        memset(counter + 4, 0, 12)
        _encrypt_block(self._enc, counter, ks)
        for i in range(4):
            token[i] = hidp[i] ^ ks[i]
            token[4 + i] = (<unsigned char>((exp >> (8 * (3 - i))) & 0xFF)) ^ ks[4 + i]
        memcpy(token + 8, ivp, 4)
        self._tag(token, ivp, tag16)
        memcpy(token + 12, tag16, 4)
        return (<char *>token)[:16]

    def open(self, bytes token):
        if len(token) != 16:
            raise ValueError("token must be 16 bytes")
        cdef const unsigned char *t = <const unsigned char *><char *>token
        cdef unsigned char tag16[16]
        cdef unsigned char counter[16]
        cdef unsigned char ks[16]
        cdef unsigned char pt[8]
        cdef unsigned int exp = 0
        cdef int i
        self._tag(t, t + 8, tag16)
        if CRYPTO_memcmp(tag16, t + 12, 4) != 0:
            raise AuthenticationFailure("ephemeral-identifier tag mismatch")
        memcpy(counter, t + 8, 4)
        memset(counter + 4, 0, 12)
        _encrypt_block(self._enc, counter, ks)
        for i in range(8):
            pt[i] = t[i] ^ ks[i]
        for i in range(4):
            exp = (exp << 8) | pt[4 + i]
        return (<char *>pt)[:4], exp


cdef class PacketMac:
    """Truncated AES-CMAC over packet bytes under one per-host key."""

    cdef EVP_CIPHER_CTX *_ctx
    cdef unsigned char _k1[16]
    cdef unsigned char _k2[16]

    def __cinit__(self, bytes key):
        if len(key) != 16:
            raise ValueError("packet-MAC key must be 16 bytes")
        self._ctx = _new_ecb_ctx(<const unsigned char *><char *>key)
        cdef unsigned char zero[16]
        cdef unsigned char L[16]
        memset(zero, 0, 16)
        _encrypt_block(self._ctx, zero, L)
        _dbl(L, self._k1)
        _dbl(self._k1, self._k2)

    def __dealloc__(self):
        if self._ctx is not NULL:
            EVP_CIPHER_CTX_free(self._ctx)

    cdef int _cmac(self, const unsigned char *msg, Py_ssize_t n,
                   unsigned char *out16) except -1:
        cdef unsigned char x[16]
        cdef unsigned char block[16]
        cdef Py_ssize_t nblocks, i, rem
        cdef int j
        memset(x, 0, 16)
        if n == 0:
            nblocks = 1
            rem = 0
        else:
            nblocks = (n + _BLOCK - 1) // _BLOCK
            rem = n - (nblocks - 1) * _BLOCK
        for i in range(nblocks - 1):
            for j in range(16):
                block[j] = x[j] ^ msg[i * _BLOCK + j]
            _encrypt_block(self._ctx, block, x)
        if n > 0 and rem == _BLOCK:
            for j in range(16):
                block[j] = x[j] ^ msg[(nblocks - 1) * _BLOCK + j] ^ self._k1[j]
        else:
            memset(block, 0, 16)
            if n > 0:
                memcpy(block, msg + (nblocks - 1) * _BLOCK, rem)
            block[rem] = 0x80
            for j in range(16):
                block[j] = x[j] ^ block[j] ^ self._k2[j]
        return _encrypt_block(self._ctx, block, out16)

    cdef int _cmac_zeroed(self, const unsigned char *pkt, Py_ssize_t n,
                          Py_ssize_t zero_off, Py_ssize_t zero_len,
                          unsigned char *out16) except -1:
        cdef unsigned char stack[_STACK_BUF]
        cdef unsigned char *buf = stack
        cdef int rc
        if zero_off < 0 or zero_len < 0 or zero_off + zero_len > n:
            raise ValueError("zeroed window out of range")
        if n > _STACK_BUF:
            buf = <unsigned char *>malloc(n)
            if buf is NULL:
                raise MemoryError()
        try:
            memcpy(buf, pkt, n)
            memset(buf + zero_off, 0, zero_len)
            rc = self._cmac(buf, n, out16)
        finally:
            if buf is not stack:
                free(buf)
        return rc

    def tag(self, bytes data):
        cdef unsigned char out[16]
        self._cmac(<const unsigned char *><char *>data, len(data), out)
        return (<char *>out)[:PACKET_MAC_LEN]

    def tag_packet(self, bytes packet, Py_ssize_t zero_off, Py_ssize_t zero_len):
        """MAC over the packet with [zero_off, zero_off+zero_len) read as zeros."""
        cdef unsigned char out[16]
        self._cmac_zeroed(<const unsigned char *><char *>packet, len(packet),
                          zero_off, zero_len, out)
        return (<char *>out)[:PACKET_MAC_LEN]

    def verify_packet(self, bytes packet, Py_ssize_t zero_off,
                      Py_ssize_t zero_len, bytes mac):
        if len(mac) != PACKET_MAC_LEN:
            return False
        cdef unsigned char out[16]
        self._cmac_zeroed(<const unsigned char *><char *>packet, len(packet),
                          zero_off, zero_len, out)
        return CRYPTO_memcmp(out, <const unsigned char *><char *>mac,
                             PACKET_MAC_LEN) == 0


cdef void _dbl(const unsigned char *inp, unsigned char *out) noexcept:
    # GF(2^128) doubling for CMAC subkey derivation (NIST SP 800-38B).
    cdef int i
    cdef unsigned char carry = 0, c
    for i in range(15, -1, -1):
        c = (inp[i] >> 7) & 1
        out[i] = <unsigned char>((inp[i] << 1) | carry)
        carry = c
    if carry:
        out[15] ^= 0x87


cdef class Ed25519Signer:
    """Signing half of an Ed25519 key, expanded once from a 32-byte seed."""

    cdef unsigned char _sk[64]
    cdef public bytes public

    def __cinit__(self, bytes seed):
        if len(seed) != 32:
            raise ValueError("seed must be 32 bytes")
        cdef unsigned char pk[32]
        if crypto_sign_seed_keypair(pk, self._sk,
                                    <const unsigned char *><char *>seed) != 0:
            raise RuntimeError("ed25519 key expansion failed")
        self.public = (<char *>pk)[:32]

    def sign(self, bytes message):
        cdef unsigned char sig[64]
        cdef const unsigned char *m = <const unsigned char *><char *>message
        cdef unsigned long long mlen = len(message)
        cdef int rc
        with nogil:
            rc = crypto_sign_detached(sig, NULL, m, mlen, self._sk)
        if rc != 0:
            raise RuntimeError("ed25519 signing failed")
        return (<char *>sig)[:64]


def ed25519_public_key(bytes seed):
    return Ed25519Signer(seed).public


def ed25519_verify(bytes public, bytes signature, bytes message):
    if len(public) != 32 or len(signature) != 64:
        return False
    cdef const unsigned char *p = <const unsigned char *><char *>public
    cdef const unsigned char *s = <const unsigned char *><char *>signature
    cdef const unsigned char *m = <const unsigned char *><char *>message
    cdef unsigned long long mlen = len(message)
    cdef int rc
    with nogil:
        rc = crypto_sign_verify_detached(s, m, mlen, p)
    return rc == 0
