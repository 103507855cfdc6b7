from fizzbuzz import fizzbuzz


def test_first_two():
    assert fizzbuzz(2) == ["1", "2"]


def test_fizz():
    assert fizzbuzz(3) == ["1", "2", "Fizz"]


def test_buzz():
    assert fizzbuzz(5) == ["1", "2", "Fizz", "4", "Buzz"]


def test_fizzbuzz():
    assert fizzbuzz(15)[-1] == "FizzBuzz"


def test_zero():
    assert fizzbuzz(0) == []
