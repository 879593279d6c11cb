import pytest

from templatepy import streams


def test_splitmix64_reference_outputs():
    stream = streams.SplitMix64(0)
    assert [stream.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@pytest.mark.parametrize("data, expected", [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
])
def test_fnv1a64_reference_outputs(data, expected):
    assert streams.fnv1a64(data) == expected


def test_to_unit_stays_inside_the_open_interval():
    assert streams.to_unit(0) == 2.0 ** -53
    assert streams.to_unit(streams.MASK64) == 1.0 - 2.0 ** -53
    assert 0.0 < streams.to_unit(0) < streams.to_unit(streams.MASK64) < 1.0


def test_hash_unit_reference_value():
    assert streams.hash_unit(0, "bias", 5, 1) == pytest.approx(0.58967523210891482, abs=1e-16)


def test_derived_seeds_separate_purposes():
    seeds = {
        streams.derive_seed(0, "templates"),
        streams.derive_seed(0, "ensemble", 0),
        streams.derive_seed(0, "ensemble", 1),
        streams.derive_seed(1, "templates"),
    }
    assert len(seeds) == 4
    assert streams.derive_seed(7, "demonstrations", "abc") == streams.derive_seed(7, "demonstrations", "abc")


def test_sample_indices_draws_distinct_indices_in_draw_order():
    indices = streams.SplitMix64(42).sample_indices(100, 20)
    assert len(set(indices)) == 20
    assert indices != sorted(indices)
    assert streams.SplitMix64(42).sample_indices(100, 20) == indices
    assert sorted(streams.SplitMix64(1).sample_indices(10, 10)) == list(range(10))
    with pytest.raises(ValueError):
        streams.SplitMix64(0).sample_indices(3, 4)


def test_randbelow_is_roughly_uniform():
    stream = streams.SplitMix64(3)
    counts = [0] * 4
    for _ in range(4000):
        counts[stream.randbelow(4)] += 1
    assert all(900 < count < 1100 for count in counts)


def test_content_digest_is_key_order_independent():
    assert streams.content_digest({"a": 1, "b": [1, 2]}) == streams.content_digest({"b": [1, 2], "a": 1})
    assert streams.content_digest({"a": 1}) != streams.content_digest({"a": 2})
