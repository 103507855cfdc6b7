from merge import merge


def test_interleaved():
    assert merge([1, 4, 6], [2, 3, 7]) == [1, 2, 3, 4, 6, 7]


def test_left_empty():
    assert merge([], [1, 2]) == [1, 2]


def test_right_empty():
    assert merge([5], []) == [5]


def test_left_smaller():
    assert merge([1, 2], [3, 4]) == [1, 2, 3, 4]


def test_duplicates():
    assert merge([1, 2], [2]) == [1, 2, 2]
