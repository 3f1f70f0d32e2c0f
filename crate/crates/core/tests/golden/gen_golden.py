"""Reference generator for the golden certificate and transcript vectors.

Written against the wire format only: checkpoint values are computed directly
as u_k = a^floor(n / 2^k) mod m with Python's pow, not by a left-to-right walk.
Run from this directory: python3 gen_golden.py
"""

import hashlib

TAG = b"MXPC-FS-v1"


def enc(z):
    payload = b"" if z == 0 else z.to_bytes((z.bit_length() + 7) // 8, "big")
    return len(payload).to_bytes(4, "big") + payload


def u(a, n, k, m):
    return pow(a, n >> k, m)


def certificate(lam, m, B, x, a, n):
    r = pow(a, n, m)
    state = hashlib.sha256(
        TAG + enc(lam) + enc(m) + enc(B) + enc(x) + enc(a) + enc(n) + enc(r)
    ).digest()
    b, rr, weights = 1, r, [1]
    mus = []
    for t in range(x, 0, -1):
        h = B << (t - 1)
        mu = 1
        for i, w in enumerate(weights):
            mu = mu * pow(u(a, n, (2 * i + 1) * h, m), w, m) % m
        state = hashlib.sha256(state + enc(t) + enc(b) + enc(rr) + enc(mu)).digest()
        take = (lam + 7) // 8
        q = (int.from_bytes(state[:take], "big") % (1 << lam)) + 1
        b, rr = mu * pow(b, q, m) % m, rr * pow(mu, q, m) % m
        weights = [v for w in weights for v in (w, w * q)]
        mus.append(mu)
    body = b"MXPC" + bytes([1]) + lam.to_bytes(2, "big") + B.to_bytes(4, "big") + bytes([x])
    body += enc(m) + enc(a) + enc(n) + enc(r) + b"".join(enc(mu) for mu in mus) + bytes([0])
    return body + hashlib.sha256(body).digest()


INSTANCES = {
    "tiny": (8, 1000, 1, 2, 3, 11),
    "fermat17": (16, 65537, 4, 2, 5, 40000),
    "deep": (64, 1000003, 2, 4, 3, 65537),
}


def transcript_vectors():
    lam, m, B, x, a, n, r = 8, 1000, 1, 2, 3, 11, 147
    init = hashlib.sha256(
        TAG + enc(lam) + enc(m) + enc(B) + enc(x) + enc(a) + enc(n) + enc(r)
    ).digest()
    nxt = hashlib.sha256(init + enc(2) + enc(1) + enc(147) + enc(9)).digest()
    q = (nxt[0] % (1 << lam)) + 1
    return init.hex(), nxt.hex(), q


if __name__ == "__main__":
    for name, params in INSTANCES.items():
        with open(f"{name}.hex", "w") as f:
            f.write(certificate(*params).hex() + "\n")
    init, nxt, q = transcript_vectors()
    with open("transcript.txt", "w") as f:
        f.write(f"init {init}\nnext {nxt}\nq {q}\n")
