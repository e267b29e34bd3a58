import numpy as np

from ocsim import rng


def test_same_name_same_stream():
    a = rng.substream(7, rng.LOS, 3).random(5)
    b = rng.substream(7, rng.LOS, 3).random(5)
    assert np.array_equal(a, b)


def test_names_keys_and_seeds_separate_streams():
    base = rng.substream(7, rng.LOS, 3).random(5)
    for other in (rng.substream(7, rng.OC_ATTACH, 3), rng.substream(7, rng.LOS, 4),
                  rng.substream(8, rng.LOS, 3)):
        assert not np.array_equal(base, other.random(5))


def test_adding_a_consumer_leaves_other_streams_alone():
    before = rng.substream(1, rng.LEAD_TIME).random(3)
    rng.substream(1, "some_new_consumer").random(100)
    assert np.array_equal(before, rng.substream(1, rng.LEAD_TIME).random(3))
