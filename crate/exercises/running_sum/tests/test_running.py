from running import running_sum


def test_example():
    assert running_sum([1, 2, 3, 4]) == [1, 3, 6, 10]


def test_empty():
    assert running_sum([]) == []


def test_negative():
    assert running_sum([5, -5, 2]) == [5, 0, 2]


def test_single():
    assert running_sum([7]) == [7]
