# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hash kernels backed by OpenSSL's libcrypto.

Byte-for-byte equivalent to ``dsig._pykernels`` (the reference
implementation documents every construction); this module exists so the
hot sign/verify paths run the hash loops without interpreter overhead.
Entry points take ``bytes`` rather than arbitrary buffers: acquiring a
buffer view costs more than the short hashes these kernels wrap.
"""

from cpython.bytes cimport (PyBytes_FromStringAndSize, PyBytes_AS_STRING,
                            PyBytes_GET_SIZE)
from cpython.mem cimport PyMem_Malloc, PyMem_Free
from libc.string cimport memcpy, memcmp, memset

cdef extern from "openssl/evp.h":
    ctypedef struct EVP_MD
    ctypedef struct EVP_MD_CTX
    ctypedef struct OSSL_LIB_CTX
    EVP_MD *EVP_MD_fetch(OSSL_LIB_CTX *ctx, const char *algorithm, const char *properties)
    EVP_MD_CTX *EVP_MD_CTX_new()
    void EVP_MD_CTX_free(EVP_MD_CTX *ctx)
    int EVP_DigestInit_ex(EVP_MD_CTX *ctx, const EVP_MD *type, void *impl) nogil
    int EVP_DigestUpdate(EVP_MD_CTX *ctx, const void *d, size_t cnt) nogil
    int EVP_DigestFinal_ex(EVP_MD_CTX *ctx, unsigned char *md, unsigned int *s) nogil

IS_COMPILED = True

SHA256, BLAKE2B, BLAKE2S = 0, 1, 2

cdef EVP_MD *_mds[3]
_mds[0] = EVP_MD_fetch(NULL, "SHA2-256", NULL)
_mds[1] = EVP_MD_fetch(NULL, "BLAKE2B-512", NULL)
_mds[2] = EVP_MD_fetch(NULL, "BLAKE2S-256", NULL)
if _mds[0] == NULL or _mds[1] == NULL or _mds[2] == NULL:
    raise ImportError("libcrypto does not provide SHA2-256/BLAKE2B-512/BLAKE2S-256")

DEF MAX_SS = 32          # secret sizes in use are 16 and 18
DEF MAX_CHAINS = 160     # 136 chains at depth 2 is the largest layout

ctypedef unsigned char u8

cdef const char *_TAG_MSG = "MSG"
cdef const char *_TAG_PK = "PK"


cdef inline const u8 *_ptr(bytes b) noexcept:
    return <const u8 *> PyBytes_AS_STRING(b)


cdef inline void _digest(EVP_MD_CTX *ctx, int backend, const u8 *data, size_t n,
                         u8 *out32) noexcept nogil:
    # wide32: sha256 and blake2s256 emit 32 bytes; blake2b512 is truncated.
    cdef u8 buf[64]
    cdef unsigned int outlen
    EVP_DigestInit_ex(ctx, _mds[backend], NULL)
    EVP_DigestUpdate(ctx, data, n)
    EVP_DigestFinal_ex(ctx, buf, &outlen)
    memcpy(out32, buf, 32)


cdef inline void _le32(u8 *p, unsigned int v) noexcept nogil:
    p[0] = v & 0xFF; p[1] = (v >> 8) & 0xFF
    p[2] = (v >> 16) & 0xFF; p[3] = (v >> 24) & 0xFF


cdef inline void _le64(u8 *p, unsigned long long v) noexcept nogil:
    cdef int i
    for i in range(8):
        p[i] = (v >> (8 * i)) & 0xFF


def wide32(int backend, bytes data):
    if backend < 0 or backend > 2:
        raise ValueError(f"unknown hash backend id {backend}")
    out = PyBytes_FromStringAndSize(NULL, 32)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _digest(ctx, backend, _ptr(data), PyBytes_GET_SIZE(data),
            <u8 *> PyBytes_AS_STRING(out))
    EVP_MD_CTX_free(ctx)
    return out


# ---------------------------------------------------------------------------
# chain step / expansion building blocks

cdef inline void _chain_step(EVP_MD_CTX *ctx, int chain_b, u8 *buf,
                             unsigned int chain_i, unsigned int step_i,
                             const u8 *value, int ss, u8 *out) noexcept nogil:
    # buf is a preloaded scratch: "CH" || pub_seed16 || i(4) || j(4) || value
    cdef u8 tmp[32]
    _le32(buf + 18, chain_i)
    _le32(buf + 22, step_i)
    memcpy(buf + 26, value, ss)
    _digest(ctx, chain_b, buf, 26 + ss, tmp)
    memcpy(out, tmp, ss)


cdef inline void _sk_block(EVP_MD_CTX *ctx, int wide_b, const u8 *seed,
                           unsigned long long key_index, unsigned int counter,
                           u8 *out32) noexcept nogil:
    cdef u8 buf[46]
    buf[0] = 83; buf[1] = 75          # "SK"
    memcpy(buf + 2, seed, 32)
    _le64(buf + 34, key_index)
    _le32(buf + 42, counter)
    _digest(ctx, wide_b, buf, 46, out32)


cdef void _expand(EVP_MD_CTX *ctx, int wide_b, const u8 *seed,
                  unsigned long long key_index, u8 *out, size_t nbytes) noexcept nogil:
    cdef u8 block[32]
    cdef size_t off = 0
    cdef unsigned int j = 0
    while off < nbytes:
        _sk_block(ctx, wide_b, seed, key_index, j, block)
        memcpy(out + off, block, 32 if nbytes - off >= 32 else nbytes - off)
        off += 32
        j += 1


def expand_stream(int wide_b, bytes seed, unsigned long long key_index, int nbytes):
    out = PyBytes_FromStringAndSize(NULL, nbytes)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _expand(ctx, wide_b, _ptr(seed), key_index, <u8 *> PyBytes_AS_STRING(out), nbytes)
    EVP_MD_CTX_free(ctx)
    return out


def derive_pub_seed(int wide_b, bytes seed, unsigned long long key_index):
    out = PyBytes_FromStringAndSize(NULL, 16)
    cdef u8 block[32]
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _sk_block(ctx, wide_b, _ptr(seed), key_index, 0xFFFFFFFF, block)
    EVP_MD_CTX_free(ctx)
    memcpy(PyBytes_AS_STRING(out), block, 16)
    return out


def sk_block(int wide_b, bytes seed, unsigned long long key_index, unsigned int counter):
    out = PyBytes_FromStringAndSize(NULL, 32)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _sk_block(ctx, wide_b, _ptr(seed), key_index, counter,
              <u8 *> PyBytes_AS_STRING(out))
    EVP_MD_CTX_free(ctx)
    return out


def chain_step(int chain_b, bytes pub_seed, unsigned int chain_index,
               unsigned int step_index, bytes value, int ss):
    cdef u8 buf[26 + MAX_SS]
    cdef u8 out[MAX_SS]
    buf[0] = 67; buf[1] = 72          # "CH"
    memcpy(buf + 2, _ptr(pub_seed), 16)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _chain_step(ctx, chain_b, buf, chain_index, step_index, _ptr(value), ss, out)
    EVP_MD_CTX_free(ctx)
    return PyBytes_FromStringAndSize(<char *> out, ss)


# ---------------------------------------------------------------------------
# message digests

cdef inline void _message_digest(EVP_MD_CTX *ctx, int wide_b, const u8 *signer,
                                 const u8 *nonce, const u8 *leaf,
                                 const u8 *msg, size_t msg_len,
                                 u8 *out32) noexcept nogil:
    EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
    EVP_DigestUpdate(ctx, _TAG_MSG, 3)
    EVP_DigestUpdate(ctx, signer, 8)
    EVP_DigestUpdate(ctx, nonce, 16)
    EVP_DigestUpdate(ctx, leaf, 32)
    EVP_DigestUpdate(ctx, msg, msg_len)
    cdef u8 buf[64]
    cdef unsigned int outlen
    EVP_DigestFinal_ex(ctx, buf, &outlen)
    memcpy(out32, buf, 32)


def message_digest(int wide_b, bytes signer_id, bytes nonce, bytes leaf, bytes message):
    cdef u8 out32[32]
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _message_digest(ctx, wide_b, _ptr(signer_id), _ptr(nonce), _ptr(leaf),
                    _ptr(message), PyBytes_GET_SIZE(message), out32)
    EVP_MD_CTX_free(ctx)
    return PyBytes_FromStringAndSize(<char *> out32, 16)


cdef void _hors_stream(EVP_MD_CTX *ctx, int wide_b, const u8 *signer,
                       const u8 *nonce, const u8 *leaf, const u8 *msg,
                       size_t msg_len, u8 *out, size_t nbytes) noexcept nogil:
    cdef u8 block[64]
    cdef u8 counter[4]
    cdef unsigned int outlen
    cdef size_t off = 0
    cdef unsigned int j = 0
    while off < nbytes:
        _le32(counter, j)
        EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
        EVP_DigestUpdate(ctx, _TAG_MSG, 3)
        EVP_DigestUpdate(ctx, signer, 8)
        EVP_DigestUpdate(ctx, nonce, 16)
        EVP_DigestUpdate(ctx, leaf, 32)
        EVP_DigestUpdate(ctx, counter, 4)
        EVP_DigestUpdate(ctx, msg, msg_len)
        EVP_DigestFinal_ex(ctx, block, &outlen)
        memcpy(out + off, block, 32 if nbytes - off >= 32 else nbytes - off)
        off += 32
        j += 1


def hors_stream(int wide_b, bytes signer_id, bytes nonce, bytes leaf,
                bytes message, int nbytes):
    out = PyBytes_FromStringAndSize(NULL, nbytes)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _hors_stream(ctx, wide_b, _ptr(signer_id), _ptr(nonce), _ptr(leaf),
                 _ptr(message), PyBytes_GET_SIZE(message),
                 <u8 *> PyBytes_AS_STRING(out), nbytes)
    EVP_MD_CTX_free(ctx)
    return out


# ---------------------------------------------------------------------------
# Winternitz digit arithmetic

cdef void _wots_digits(const u8 *md, int digest_bits, int w, int l1, int l2,
                       int d, u8 *digits) noexcept nogil:
    cdef int pad = l1 * w - digest_bits
    cdef int i, b, bit_index, digit, csum
    for i in range(l1):
        digit = 0
        for b in range(w):
            bit_index = i * w - pad + b
            if bit_index >= 0:
                digit = (digit << 1) | ((md[bit_index >> 3] >> (7 - (bit_index & 7))) & 1)
            else:
                digit = digit << 1
        digits[i] = <u8> digit
    csum = 0
    for i in range(l1):
        csum += d - 1 - digits[i]
    for i in range(l2):
        digits[l1 + i] = <u8> ((csum >> ((l2 - 1 - i) * w)) & (d - 1))


cdef inline int _log2(int v) noexcept nogil:
    cdef int w = 0
    while v > 1:
        v >>= 1
        w += 1
    return w


cdef void _wots_shape(int digest_bits, int d, int *w, int *l1, int *l2) noexcept nogil:
    cdef int x
    w[0] = _log2(d)
    l1[0] = (digest_bits + w[0] - 1) // w[0]
    x = l1[0] * (d - 1)
    l2[0] = 1
    while x >= d:
        x //= d
        l2[0] += 1


cdef inline void _final32(EVP_MD_CTX *ctx, u8 *out32) noexcept nogil:
    cdef u8 buf[64]
    cdef unsigned int outlen
    EVP_DigestFinal_ex(ctx, buf, &outlen)
    memcpy(out32, buf, 32)


cdef void _expand_into_cache(EVP_MD_CTX *ctx, int wide_b, const u8 *seed,
                             unsigned long long key_index, u8 *cache,
                             int chains, int d, int ss) noexcept nogil:
    # The secret stream is contiguous; cache slots for depth 0 are strided.
    cdef u8 block[32]
    cdef unsigned int j = 0
    cdef size_t total = chains * ss
    cdef size_t off = 0, take, boff
    cdef size_t chain_i, in_chain
    while off < total:
        _sk_block(ctx, wide_b, seed, key_index, j, block)
        boff = 0
        while boff < 32 and off < total:
            chain_i = off // ss
            in_chain = off % ss
            take = ss - in_chain
            if take > 32 - boff:
                take = 32 - boff
            memcpy(cache + chain_i * d * ss + in_chain, block + boff, take)
            off += take
            boff += take
        j += 1


def wots_keygen(int chain_b, int wide_b, bytes seed,
                unsigned long long key_index, int digest_bits, int d, int ss):
    """Returns (pub_seed, cache, leaf, n_chain, n_wide); see _pykernels."""
    cdef int w, l1, l2, chains
    _wots_shape(digest_bits, d, &w, &l1, &l2)
    chains = l1 + l2

    pub_seed_obj = PyBytes_FromStringAndSize(NULL, 16)
    cache_obj = PyBytes_FromStringAndSize(NULL, chains * d * ss)
    leaf_obj = PyBytes_FromStringAndSize(NULL, 32)
    cdef u8 *pub_seed = <u8 *> PyBytes_AS_STRING(pub_seed_obj)
    cdef u8 *cache = <u8 *> PyBytes_AS_STRING(cache_obj)
    cdef u8 *leaf = <u8 *> PyBytes_AS_STRING(leaf_obj)

    cdef u8 *tops = <u8 *> PyMem_Malloc(chains * ss)
    cdef u8 block[32]
    cdef u8 buf[26 + MAX_SS]
    cdef const u8 *seedp = _ptr(seed)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    cdef int i, j
    cdef u8 *v
    with nogil:
        _sk_block(ctx, wide_b, seedp, key_index, 0xFFFFFFFF, block)
        memcpy(pub_seed, block, 16)
        # depth-0 slots get the secrets; the stream is written sparsely
        _expand_into_cache(ctx, wide_b, seedp, key_index, cache, chains, d, ss)
        buf[0] = 67; buf[1] = 72
        memcpy(buf + 2, pub_seed, 16)
        for i in range(chains):
            v = cache + i * d * ss
            for j in range(1, d):
                _chain_step(ctx, chain_b, buf, i, j - 1, v, ss, v + ss)
                v += ss
            memcpy(tops + i * ss, v, ss)
        # leaf digest: "PK" || pub_seed || tops
        EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
        EVP_DigestUpdate(ctx, _TAG_PK, 2)
        EVP_DigestUpdate(ctx, pub_seed, 16)
        EVP_DigestUpdate(ctx, tops, chains * ss)
        _final32(ctx, leaf)
    EVP_MD_CTX_free(ctx)
    PyMem_Free(tops)
    n_wide = (chains * ss + 31) // 32 + 2
    return pub_seed_obj, cache_obj, leaf_obj, chains * (d - 1), n_wide


def wots_gather(bytes cache, bytes md, int digest_bits, int d, int ss):
    cdef int w, l1, l2, chains, i
    _wots_shape(digest_bits, d, &w, &l1, &l2)
    chains = l1 + l2
    cdef u8 digits[MAX_CHAINS]
    _wots_digits(_ptr(md), digest_bits, w, l1, l2, d, digits)
    out = PyBytes_FromStringAndSize(NULL, chains * ss)
    cdef u8 *o = <u8 *> PyBytes_AS_STRING(out)
    cdef const u8 *c = _ptr(cache)
    for i in range(chains):
        memcpy(o + i * ss, c + (i * d + digits[i]) * ss, ss)
    return out


def wots_finish(int chain_b, int wide_b, bytes pub_seed, bytes payload,
                bytes md, int digest_bits, int d, int ss):
    """Returns (leaf_candidate, n_chain_steps)."""
    cdef int w, l1, l2, chains, i, j, steps = 0
    _wots_shape(digest_bits, d, &w, &l1, &l2)
    chains = l1 + l2
    if PyBytes_GET_SIZE(payload) != chains * ss:
        raise ValueError("payload length mismatch")
    cdef u8 digits[MAX_CHAINS]
    _wots_digits(_ptr(md), digest_bits, w, l1, l2, d, digits)

    leaf_obj = PyBytes_FromStringAndSize(NULL, 32)
    cdef u8 *leaf = <u8 *> PyBytes_AS_STRING(leaf_obj)
    cdef u8 *tops = <u8 *> PyMem_Malloc(chains * ss)
    cdef u8 buf[26 + MAX_SS]
    cdef u8 v[MAX_SS]
    cdef const u8 *pl = _ptr(payload)
    cdef const u8 *ps = _ptr(pub_seed)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    with nogil:
        buf[0] = 67; buf[1] = 72
        memcpy(buf + 2, ps, 16)
        for i in range(chains):
            memcpy(v, pl + i * ss, ss)
            for j in range(digits[i], d - 1):
                _chain_step(ctx, chain_b, buf, i, j, v, ss, v)
                steps += 1
            memcpy(tops + i * ss, v, ss)
        EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
        EVP_DigestUpdate(ctx, _TAG_PK, 2)
        EVP_DigestUpdate(ctx, ps, 16)
        EVP_DigestUpdate(ctx, tops, chains * ss)
        _final32(ctx, leaf)
    EVP_MD_CTX_free(ctx)
    PyMem_Free(tops)
    return leaf_obj, steps


def wots_sign_assemble(int wide_b, int digest_bits, int d, int ss,
                       bytes scheme, bytes nonce, bytes mid, bytes tail,
                       bytes cache, bytes signer_id, bytes message):
    """Hot path: message digest + copy-only gather + full serialization."""
    cdef int w, l1, l2, chains, i
    _wots_shape(digest_bits, d, &w, &l1, &l2)
    chains = l1 + l2
    cdef Py_ssize_t mid_len = PyBytes_GET_SIZE(mid)
    cdef Py_ssize_t tail_len = PyBytes_GET_SIZE(tail)
    cdef Py_ssize_t total = 1 + 16 + mid_len + chains * ss + tail_len
    out = PyBytes_FromStringAndSize(NULL, total)
    cdef u8 *o = <u8 *> PyBytes_AS_STRING(out)
    cdef u8 md32[32]
    cdef u8 digits[MAX_CHAINS]
    cdef const u8 *tail_p = _ptr(tail)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _message_digest(ctx, wide_b, _ptr(signer_id), _ptr(nonce), tail_p,
                    _ptr(message), PyBytes_GET_SIZE(message), md32)
    EVP_MD_CTX_free(ctx)
    _wots_digits(md32, digest_bits, w, l1, l2, d, digits)

    o[0] = (<const u8 *> PyBytes_AS_STRING(scheme))[0]
    memcpy(o + 1, _ptr(nonce), 16)
    memcpy(o + 17, _ptr(mid), mid_len)
    cdef u8 *pay = o + 17 + mid_len
    cdef const u8 *c = _ptr(cache)
    for i in range(chains):
        memcpy(pay + i * ss, c + (i * d + digits[i]) * ss, ss)
    memcpy(pay + chains * ss, tail_p, tail_len)
    return out


# ---------------------------------------------------------------------------
# Subset-reveal kernels

cdef void _hors_indices(const u8 *stream, int k, int logt,
                        unsigned int *idx) noexcept nogil:
    cdef int j, b, bit_index
    cdef unsigned int v
    for j in range(k):
        v = 0
        for b in range(logt):
            bit_index = j * logt + b
            v = (v << 1) | ((stream[bit_index >> 3] >> (7 - (bit_index & 7))) & 1)
        idx[j] = v


def hors_indices_from_stream(bytes stream, int k, int logt):
    cdef unsigned int *idx = <unsigned int *> PyMem_Malloc(k * sizeof(unsigned int))
    _hors_indices(_ptr(stream), k, logt, idx)
    result = [idx[j] for j in range(k)]
    PyMem_Free(idx)
    return result


cdef inline void _hors_element(EVP_MD_CTX *ctx, int chain_b, unsigned int index,
                               const u8 *secret, u8 *out16) noexcept nogil:
    cdef u8 buf[22]
    cdef u8 tmp[32]
    buf[0] = 67; buf[1] = 72          # "CH"
    _le32(buf + 2, index)
    memcpy(buf + 6, secret, 16)
    _digest(ctx, chain_b, buf, 22, tmp)
    memcpy(out16, tmp, 16)


def hors_element(int chain_b, unsigned int index, bytes secret):
    cdef u8 out16[16]
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _hors_element(ctx, chain_b, index, _ptr(secret), out16)
    EVP_MD_CTX_free(ctx)
    return PyBytes_FromStringAndSize(<char *> out16, 16)


def hors_keygen(int chain_b, int wide_b, bytes seed,
                unsigned long long key_index, int t):
    """Returns (secrets, elements, leaf, n_chain, n_wide)."""
    secrets_obj = PyBytes_FromStringAndSize(NULL, t * 16)
    elements_obj = PyBytes_FromStringAndSize(NULL, t * 16)
    leaf_obj = PyBytes_FromStringAndSize(NULL, 32)
    cdef u8 *secrets = <u8 *> PyBytes_AS_STRING(secrets_obj)
    cdef u8 *elements = <u8 *> PyBytes_AS_STRING(elements_obj)
    cdef u8 *leaf = <u8 *> PyBytes_AS_STRING(leaf_obj)
    cdef const u8 *seedp = _ptr(seed)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    cdef int i
    with nogil:
        _expand(ctx, wide_b, seedp, key_index, secrets, t * 16)
        for i in range(t):
            _hors_element(ctx, chain_b, i, secrets + i * 16, elements + i * 16)
        EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
        EVP_DigestUpdate(ctx, _TAG_PK, 2)
        EVP_DigestUpdate(ctx, elements, t * 16)
        _final32(ctx, leaf)
    EVP_MD_CTX_free(ctx)
    return secrets_obj, elements_obj, leaf_obj, t, (t * 16 + 31) // 32 + 1


def hors_payload(bytes secrets, bytes elements, indices, int t):
    cdef int k = len(indices)
    cdef unsigned int *idx = <unsigned int *> PyMem_Malloc(k * sizeof(unsigned int))
    cdef u8 *hit = <u8 *> PyMem_Malloc(t)
    memset(hit, 0, t)
    cdef int j, unique = 0
    for j in range(k):
        idx[j] = indices[j]
        if not hit[idx[j]]:
            hit[idx[j]] = 1
            unique += 1
    out = PyBytes_FromStringAndSize(NULL, (k + t - unique) * 16)
    cdef u8 *o = <u8 *> PyBytes_AS_STRING(out)
    cdef const u8 *s = _ptr(secrets)
    cdef const u8 *e = _ptr(elements)
    cdef int p, pos
    for j in range(k):
        memcpy(o + j * 16, s + idx[j] * 16, 16)
    pos = k * 16
    for p in range(t):
        if not hit[p]:
            memcpy(o + pos, e + p * 16, 16)
            pos += 16
    PyMem_Free(idx)
    PyMem_Free(hit)
    return out


def hors_sign_assemble(int wide_b, int t, int k, int logt,
                       bytes scheme, bytes nonce, bytes mid, bytes tail,
                       bytes secrets, bytes elements,
                       bytes signer_id, bytes message):
    cdef int nbytes = (k * logt + 7) // 8
    cdef u8 *stream = <u8 *> PyMem_Malloc(nbytes)
    cdef unsigned int *idx = <unsigned int *> PyMem_Malloc(k * sizeof(unsigned int))
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _hors_stream(ctx, wide_b, _ptr(signer_id), _ptr(nonce), _ptr(tail),
                 _ptr(message), PyBytes_GET_SIZE(message), stream, nbytes)
    EVP_MD_CTX_free(ctx)
    _hors_indices(stream, k, logt, idx)
    indices = [idx[j] for j in range(k)]
    PyMem_Free(idx)
    PyMem_Free(stream)
    payload = hors_payload(secrets, elements, indices, t)
    return scheme + nonce + mid + payload + tail


def hors_finish(int chain_b, int wide_b, int t, int k, bytes payload, bytes stream):
    """Returns (leaf_candidate or None, n_chain)."""
    cdef int logt = _log2(t)
    if PyBytes_GET_SIZE(payload) < k * 16:
        return None, 0
    cdef unsigned int *idx = <unsigned int *> PyMem_Malloc(k * sizeof(unsigned int))
    cdef u8 *elements = <u8 *> PyMem_Malloc(t * 16)
    cdef u8 *filled = <u8 *> PyMem_Malloc(t)
    memset(filled, 0, t)
    _hors_indices(_ptr(stream), k, logt, idx)

    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    cdef const u8 *pl = _ptr(payload)
    cdef u8 e[16]
    cdef int j, p, unique = 0, ok = 1, n_chain = 0
    for j in range(k):
        _hors_element(ctx, chain_b, idx[j], pl + j * 16, e)
        n_chain += 1
        if filled[idx[j]]:
            if memcmp(elements + idx[j] * 16, e, 16) != 0:
                ok = 0
                break
        else:
            memcpy(elements + idx[j] * 16, e, 16)
            filled[idx[j]] = 1
            unique += 1
    leaf_obj = None
    cdef u8 leaf[32]
    cdef int pos
    if ok and PyBytes_GET_SIZE(payload) == (k + t - unique) * 16:
        pos = k * 16
        for p in range(t):
            if not filled[p]:
                memcpy(elements + p * 16, pl + pos, 16)
                pos += 16
        EVP_DigestInit_ex(ctx, _mds[wide_b], NULL)
        EVP_DigestUpdate(ctx, _TAG_PK, 2)
        EVP_DigestUpdate(ctx, elements, t * 16)
        _final32(ctx, leaf)
        leaf_obj = PyBytes_FromStringAndSize(<char *> leaf, 32)
    EVP_MD_CTX_free(ctx)
    PyMem_Free(idx)
    PyMem_Free(elements)
    PyMem_Free(filled)
    return leaf_obj, n_chain


# ---------------------------------------------------------------------------
# Merkle folding

def merkle_node(int wide_b, unsigned int level, unsigned int index,
                bytes left, bytes right):
    cdef u8 buf[14 + 64]
    cdef int n = PyBytes_GET_SIZE(left)
    buf[0] = 77; buf[1] = 69; buf[2] = 82; buf[3] = 75; buf[4] = 76; buf[5] = 69
    _le32(buf + 6, level)
    _le32(buf + 10, index)
    memcpy(buf + 14, _ptr(left), n)
    memcpy(buf + 14 + n, _ptr(right), n)
    out = PyBytes_FromStringAndSize(NULL, 32)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    _digest(ctx, wide_b, buf, 14 + 2 * n, <u8 *> PyBytes_AS_STRING(out))
    EVP_MD_CTX_free(ctx)
    return out


def merkle_fold(int wide_b, bytes leaf, unsigned int index, bytes siblings):
    cdef int depth = PyBytes_GET_SIZE(siblings) // 32
    cdef u8 node[32]
    cdef u8 buf[14 + 64]
    cdef unsigned int idx = index
    cdef int lvl
    memcpy(node, _ptr(leaf), 32)
    buf[0] = 77; buf[1] = 69; buf[2] = 82; buf[3] = 75; buf[4] = 76; buf[5] = 69
    cdef const u8 *sib = _ptr(siblings)
    cdef EVP_MD_CTX *ctx = EVP_MD_CTX_new()
    with nogil:
        for lvl in range(depth):
            if idx & 1:
                memcpy(buf + 14, sib + lvl * 32, 32)
                memcpy(buf + 46, node, 32)
            else:
                memcpy(buf + 14, node, 32)
                memcpy(buf + 46, sib + lvl * 32, 32)
            idx >>= 1
            _le32(buf + 6, lvl + 1)
            _le32(buf + 10, idx)
            _digest(ctx, wide_b, buf, 78, node)
    EVP_MD_CTX_free(ctx)
    return PyBytes_FromStringAndSize(<char *> node, 32)
