import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arnn_botnet.errors import InvalidParameterError, ParseError, WindowError
from arnn_botnet.traffic import (
    PacketRecord, SlotFeatures, bucketize, compute_ratios, features_from_packets, ground_truth, parse_packets,
    read_features, select_train_window, slot_of, stack, write_features, write_packets,
)

# ten packets over three 10 s slots; D only ever sends, once, in slot 3
HAND_TRACE = """t,src,dst,label
0.5,A,B,1
1.0,A,C,0
2.0,B,A,0
9.999,C,B,1
10.0,A,B,1
12.0,B,C,0
15.0,C,A,0
21.0,D,C,0
25.0,B,C,1
29.0,C,B,0
"""
# worked by hand, cumulative, node order A B C D
HAND_A = [[0, 1, 0, 0], [0, 1, 0, 0], [0, 0.75, 0.25, 0]]
HAND_K = [[0.5, 0, 1, 0], [2 / 3, 0, 0.5, 0], [2 / 3, 1 / 3, 1 / 3, 0]]
HAND_G_HALF = [[0, 0, 1, 0], [1, 0, 0, 0], [1, 0, 0, 0]]  # theta = 0.5
HAND_G_DEFAULT = [[1, 0, 1, 0], [1, 0, 1, 0], [1, 1, 1, 0]]  # theta = 0.3


def hand_features(tmp_path, theta):
    p = tmp_path / "hand.csv"
    p.write_text(HAND_TRACE)
    records, registry = parse_packets(p)
    return features_from_packets(records, registry, tau=10.0, theta=theta), registry


def test_hand_trace_ratios(tmp_path):
    features, registry = hand_features(tmp_path, 0.5)
    assert registry.ids == ["A", "B", "C", "D"]
    A, K, G = stack(features)
    assert [f.slot for f in features] == [1, 2, 3]
    np.testing.assert_array_equal(A, HAND_A)
    np.testing.assert_array_equal(K, np.array(HAND_K))
    np.testing.assert_array_equal(G, HAND_G_HALF)


def test_hand_trace_default_theta(tmp_path):
    features, _ = hand_features(tmp_path, 0.3)
    np.testing.assert_array_equal(stack(features)[2], HAND_G_DEFAULT)


def test_parse_simple(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("t,src,dst,label\n0.5,A,B,0\n1.5,B,A,1\n")
    records, registry = parse_packets(p)
    assert records == [PacketRecord(0.5, "A", "B", 0), PacketRecord(1.5, "B", "A", 1)]
    assert registry.as_dict() == {"A": 0, "B": 1}


def test_parse_empty(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    records, registry = parse_packets(p)
    assert records == [] and len(registry) == 0


@pytest.mark.parametrize("row, fragment", [
    ("0.5,A,B,2", "label"),
    ("x,A,B,0", "timestamp"),
    ("-1,A,B,0", "non-negative"),
    ("0.5,A,B", "fields"),
    ("0.5,,B,0", "empty"),
])
def test_parse_errors_carry_line(tmp_path, row, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(f"t,src,dst,label\n0.1,A,B,0\n{row}\n")
    with pytest.raises(ParseError) as info:
        parse_packets(p)
    assert info.value.line == 3
    assert fragment in str(info.value)


def test_parse_bad_header(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("time,src,dst,label\n")
    with pytest.raises(ParseError):
        parse_packets(p)


def test_parse_sorts_stably(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("t,src,dst,label\n2,A,B,0\n1,B,A,0\n1,C,A,1\n")
    records, _ = parse_packets(p)
    assert [(r.t, r.src) for r in records] == [(1, "B"), (1, "C"), (2, "A")]


def test_slot_boundaries():
    assert slot_of(9.999, 10) == 1
    assert slot_of(10.0, 10) == 2
    assert slot_of(0.0, 10) == 1


def test_bucketize_empty_and_invalid():
    assert bucketize([], 10) == []
    with pytest.raises(InvalidParameterError):
        bucketize([PacketRecord(0.0, "A", "B", 0)], 0)


def test_half_tau_doubles_slots():
    rng = np.random.default_rng(0)
    recs = [PacketRecord(float(t), "A", "B", 0) for t in np.sort(rng.uniform(0, 1000, 200))]
    n10, n5 = len(bucketize(recs, 10)), len(bucketize(recs, 5))
    assert abs(n5 - 2 * n10) <= 1


records_st = st.lists(
    st.tuples(st.floats(0, 500, allow_nan=False), st.sampled_from("ABCDE"), st.sampled_from("ABCDE"),
              st.integers(0, 1)),
    min_size=1, max_size=60,
).map(lambda rows: sorted((PacketRecord(*r) for r in rows), key=lambda r: r.t))


@settings(max_examples=60, deadline=None)
@given(records_st, st.floats(0.5, 50))
def test_partition_and_bounds(records, tau):
    buckets = bucketize(records, tau)
    assert sum(len(b) for b in buckets) == len(records)
    for l, b in enumerate(buckets, start=1):
        assert all(slot_of(r.t, tau) == l for r in b)
    from arnn_botnet.traffic import NodeRegistry
    reg = NodeRegistry(sorted({r.src for r in records} | {r.dst for r in records}))
    feats = compute_ratios(buckets, reg)
    A, K, _ = stack(feats)
    assert np.all((A >= 0) & (A <= 1)) and np.all((K >= 0) & (K <= 1))
    # cumulative counts never shrink: recompute received counts per prefix
    recv = np.zeros(len(reg))
    prev = recv.copy()
    for b in buckets:
        for r in b:
            recv[reg.index(r.dst)] += 1
        assert np.all(recv >= prev)
        prev = recv.copy()


def test_ground_truth_strict_and_range():
    f = [SlotFeatures(1, np.zeros(3), np.array([0.3, 0.31, 1.0]))]
    assert ground_truth(f, 0.3)[0].ground_truth.tolist() == [0, 1, 1]
    assert ground_truth(f, 1.0)[0].ground_truth.tolist() == [0, 0, 0]
    with pytest.raises(InvalidParameterError):
        ground_truth(f, 1.5)


def _series(first_infected, n_slots=40):
    return [SlotFeatures(l, np.zeros(2), np.zeros(2), np.array([int(l >= first_infected), 0], dtype=np.int8))
            for l in range(1, n_slots + 1)]


def test_window_arithmetic():
    train, test, l_star = select_train_window(_series(20), half_width=2)
    assert l_star == 20
    assert [f.slot for f in train] == [18, 19, 20, 21, 22]
    assert len(test) == 35 and not {f.slot for f in test} & {18, 19, 20, 21, 22}


def test_window_clipped_at_edges():
    train, _, _ = select_train_window(_series(2), half_width=12)
    assert [f.slot for f in train] == list(range(1, 15))


def test_window_error_when_benign():
    with pytest.raises(WindowError):
        select_train_window(_series(10**6), half_width=2)


def test_features_round_trip(tmp_path):
    features, registry = hand_features(tmp_path, 0.3)
    write_features(tmp_path / "f.csv", features, registry)
    back, reg2 = read_features(tmp_path / "f.csv")
    assert reg2 == registry
    for a, b in zip(features, back):
        assert a.slot == b.slot
        np.testing.assert_array_equal(a.attack_ratio, b.attack_ratio)
        np.testing.assert_array_equal(a.compromised_ratio, b.compromised_ratio)
        np.testing.assert_array_equal(a.ground_truth, b.ground_truth)


def test_read_features_requires_every_node(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("slot,node,A,K,G\n1,A,0,0,0\n1,B,0,0,0\n2,A,0,0,0\n")
    with pytest.raises(ParseError):
        read_features(p)


def test_packets_round_trip(tmp_path):
    recs = [PacketRecord(0.1 + 0.2, "x", "y", 1), PacketRecord(7.25, "y", "x", 0)]
    write_packets(tmp_path / "p.csv", recs)
    back, _ = parse_packets(tmp_path / "p.csv")
    assert back == recs
