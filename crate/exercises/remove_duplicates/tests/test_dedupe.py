from dedupe import dedupe


def test_example():
    assert dedupe([1, 1, 2, 3, 3]) == [1, 2, 3]


def test_no_duplicates():
    assert dedupe([1, 2, 3]) == [1, 2, 3]


def test_all_same():
    assert dedupe([4, 4, 4]) == [4]


def test_empty():
    assert dedupe([]) == []


def test_single():
    assert dedupe([8]) == [8]
