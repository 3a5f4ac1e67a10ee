#!/usr/bin/env python3
"""Independent reference oracle for the frozen test vectors.

Computes expected values with python's hashlib (sha256) and a local
ripemd160 (hashlib may lack it on OpenSSL 3), entirely separate from the
C++ code under test.  Run it to regenerate the constants embedded in the
C++ test sources; the printed values are what the tests assert.
"""

import hashlib
import struct

# ---------------------------------------------------------------- ripemd160
# Compact RIPEMD-160, written from the published algorithm description.

def _rol(x, n):
    return ((x << n) | (x >> (32 - n))) & 0xFFFFFFFF

def ripemd160(data: bytes) -> bytes:
    K1 = [0x00000000, 0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xA953FD4E]
    K2 = [0x50A28BE6, 0x5C4DD124, 0x6D703EF3, 0x7A6D76E9, 0x00000000]
    R1 = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
          7, 4, 13, 1, 10, 6, 15, 3, 12, 0, 9, 5, 2, 14, 11, 8,
          3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12,
          1, 9, 11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2,
          4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3, 8, 11, 6, 15, 13]
    R2 = [5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12,
          6, 11, 3, 7, 0, 13, 5, 10, 14, 15, 8, 12, 4, 9, 1, 2,
          15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13,
          8, 6, 4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14,
          12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13, 14, 0, 3, 9, 11]
    S1 = [11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8,
          7, 6, 8, 13, 11, 9, 7, 15, 7, 12, 15, 9, 11, 7, 13, 12,
          11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5,
          11, 12, 14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12,
          9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13, 14, 11, 8, 5, 6]
    S2 = [8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6,
          9, 13, 15, 7, 12, 8, 9, 11, 7, 7, 12, 7, 6, 15, 13, 11,
          9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5,
          15, 5, 8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8,
          8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6, 5, 15, 13, 11, 11]

    def f(j, x, y, z):
        if j < 16:
            return x ^ y ^ z
        if j < 32:
            return (x & y) | (~x & z)
        if j < 48:
            return (x | ~y) ^ z
        if j < 64:
            return (x & z) | (y & ~z)
        return x ^ (y | ~z)

    msg = bytearray(data)
    ml = len(data) * 8
    msg.append(0x80)
    while len(msg) % 64 != 56:
        msg.append(0)
    msg += struct.pack('<Q', ml)

    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    for off in range(0, len(msg), 64):
        x = struct.unpack('<16I', msg[off:off + 64])
        a, b, c, d, e = h
        a2, b2, c2, d2, e2 = h
        for j in range(80):
            t = (_rol((a + f(j, b, c, d) + x[R1[j]] + K1[j // 16]) & 0xFFFFFFFF,
                      S1[j]) + e) & 0xFFFFFFFF
            a, e, d, c, b = e, d, _rol(c, 10), b, t
            t = (_rol((a2 + f(79 - j, b2, c2, d2) + x[R2[j]] + K2[j // 16]) & 0xFFFFFFFF,
                      S2[j]) + e2) & 0xFFFFFFFF
            a2, e2, d2, c2, b2 = e2, d2, _rol(c2, 10), b2, t
        t = (h[1] + c + d2) & 0xFFFFFFFF
        h[1] = (h[2] + d + e2) & 0xFFFFFFFF
        h[2] = (h[3] + e + a2) & 0xFFFFFFFF
        h[3] = (h[4] + a + b2) & 0xFFFFFFFF
        h[4] = (h[0] + b + c2) & 0xFFFFFFFF
        h[0] = t
    return struct.pack('<5I', *h)


# Published RIPEMD-160 test vectors, to keep the local copy honest.
assert ripemd160(b'').hex() == '9c1185a5c5e9fc54612808977ee8f548b2258d31'
assert ripemd160(b'abc').hex() == '8eb208f7e05d987a9b044a8e98c6b087f15a0bfc'
assert ripemd160(b'message digest').hex() == '5d0689ef49d2fae572b881b123a85ffa21595f36'


def sha256(b):
    return hashlib.sha256(b).digest()

def dsha(b):
    return sha256(sha256(b))

def hash160(b):
    return ripemd160(sha256(b))

B58 = '123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz'

def base58check(version: int, payload: bytes) -> str:
    raw = bytes([version]) + payload
    raw += dsha(raw)[:4]
    n = int.from_bytes(raw, 'big')
    out = ''
    while n:
        n, r = divmod(n, 58)
        out = B58[r] + out
    pad = 0
    for c in raw:
        if c == 0:
            pad += 1
        else:
            break
    return '1' * pad + out


print('== hash vectors ==')
print('sha256("")          =', sha256(b'').hex())
print('sha256("abc")       =', sha256(b'abc').hex())
print('dsha256("")         =', dsha(b'').hex())
print('dsha256("hello")    =', dsha(b'hello').hex())
print('ripemd160("")       =', ripemd160(b'').hex())
print('ripemd160("abc")    =', ripemd160(b'abc').hex())
print('hash160(0x00)       =', hash160(b'\x00').hex())

print('== base58check ==')
print('addr(0x00, 20x00)   =', base58check(0x00, bytes(20)))
print('addr(0x05, 20x00)   =', base58check(0x05, bytes(20)))
print('addr(0x00, 0x01..14)=', base58check(0x00, bytes(range(1, 21))))

print('== merkle ==')
h1 = dsha(b'tx-one')
h2 = dsha(b'tx-two')
h3 = dsha(b'tx-three')
print('h1 =', h1.hex())
print('h2 =', h2.hex())
print('h3 =', h3.hex())
root2 = dsha(h1 + h2)
print('root(h1,h2)    =', root2.hex())
l1 = dsha(h3 + h3)
root3 = dsha(root2 + l1)
print('root(h1,h2,h3) =', root3.hex())

print('== p2pk/p2pkh over one pubkey ==')
pub = bytes([0x04]) + bytes(range(1, 65))
h160 = hash160(pub)
print('pubkey hash160 =', h160.hex())
print('address        =', base58check(0x00, h160))

print('== genesis block (reference-protocol reconstruction) ==')
coinbase_text = (b'The Times 03/Jan/2009 Chancellor on brink of '
                 b'second bailout for banks')
assert len(coinbase_text) == 69
script_sig = (bytes.fromhex('04ffff001d') + bytes.fromhex('0104') +
              bytes([len(coinbase_text)]) + coinbase_text)
pubkey = bytes.fromhex(
    '04678afdb0fe5548271967f1a67130b7105cd6a828e03909a67962e0ea1f61de'
    'b649f6bc3f4cef38c4f35504e51ec112de5c384df7ba0b8d578a4c702b6bf11d5f')
pk_script = bytes([0x41]) + pubkey + bytes([0xAC])
tx = (struct.pack('<i', 1) +
      b'\x01' +
      bytes(32) + struct.pack('<I', 0xFFFFFFFF) +
      bytes([len(script_sig)]) + script_sig +
      struct.pack('<I', 0xFFFFFFFF) +
      b'\x01' +
      struct.pack('<Q', 50 * 100_000_000) +
      bytes([len(pk_script)]) + pk_script +
      struct.pack('<I', 0))
txid = dsha(tx)
print('genesis txid (display) =', txid[::-1].hex())
header = (struct.pack('<i', 1) + bytes(32) + txid +
          struct.pack('<I', 1231006505) + struct.pack('<I', 0x1D00FFFF) +
          struct.pack('<I', 2083236893))
assert len(header) == 80
bh = dsha(header)
print('genesis hash (display) =', bh[::-1].hex())
assert bh[::-1].hex() == ('000000000019d6689c085ae165831e934ff763ae'
                          '46a2a6c172b3f1b60a8ce26f'), 'reconstruction is wrong'
payload = header + b'\x01' + tx
framed = bytes.fromhex('f9beb4d9') + struct.pack('<I', len(payload)) + payload
print('genesis payload bytes  =', len(payload))
print('genesis framed hex:')
hx = framed.hex()
for i in range(0, len(hx), 96):
    print(' ', hx[i:i + 96])
