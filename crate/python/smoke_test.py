"""Smoke test for the Python bindings.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import json
import math

import gmac_ldpc_py as g


def main():
    proto = g.Protograph([[3, 3]])
    assert proto.shape == (1, 2)
    assert abs(proto.design_rate - 0.5) < 1e-12
    assert g.Protograph.parse(proto.to_text()).to_rows() == [[3, 3]]

    code = proto.lift(31, seed=1)
    assert code.n == 62 and code.k >= 31
    assert code.four_cycles() == 0
    assert g.LiftedCode.from_alist(code.to_alist()).n == code.n

    info = [i % 2 for i in range(code.k)]
    word = code.encode(info)
    assert code.is_codeword(word)
    llr = [4.0 if b == 0 else -4.0 for b in word]
    decoded, converged, _ = code.bp_decode(llr, 20)
    assert converged and decoded == word

    assert abs(g.check_update([1.0, 1.0]) - 2 * math.atanh(math.tanh(0.5) ** 2)) < 1e-12
    assert g.variable_update([1.0, 2.0], 0.5) == 3.5
    single = g.functional_node_update(0.3, [], power=1.0, n0=1.0)
    assert abs(single - 4 * 0.3) < 1e-12
    assert abs(g.j_inv(g.j_func(1.7)) - 1.7) < 1e-6

    sig = g.generate_signatures(4, 16, 32, seed=2)
    assert len(sig) == 4 and all(len(s) == 16 for s in sig)

    base = g.LiftedCode.baseline(16)
    assert base.n == 64 and base.rate == 0.25
    same = g.build_code(json.dumps({"kind": "baseline", "z": 16}))
    assert same.to_alist() == base.to_alist()

    points = g.simulate(base, 2, [3.0], 50, seed=5)
    again = g.simulate(base, 2, [3.0], 50, seed=5)
    assert points == again and points[0][1] <= 50

    thr = g.pexit_threshold(g.Protograph([[3, 3]]), 1, samples=1000, tabulated=True, resolution_db=0.1)
    assert thr is not None and 0.5 < thr < 2.0
    print("smoke test passed")


if __name__ == "__main__":
    main()
