use super::interp::{Flow, Interpreter};
use super::value::Value;

/// Runs `src` as module `m` and returns `repr(result)`.
fn eval(src: &str) -> Result<String, String> {
    let src = src.to_string();
    std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || eval_here(&src))
        .unwrap()
        .join()
        .unwrap()
}

fn eval_here(src: &str) -> Result<String, String> {
    let mut it = Interpreter::new("/nonexistent");
    it.sources.insert("m.py".into(), src.to_string());
    it.step_limit = 100_000;
    match it.load_file("m.py", "m") {
        Ok(m) => Ok(m.globals.borrow().get("result").map(Value::repr).unwrap_or_default()),
        Err(Flow::Raise(e)) => Err(e.headline()),
        Err(_) => Err("flow".into()),
    }
}

fn ok(src: &str) -> String {
    eval(src).unwrap_or_else(|e| panic!("{src}\nraised {e}"))
}

#[test]
fn arithmetic_follows_python() {
    assert_eq!(ok("result = (-7 // 2, -7 % 2, 7 // -2, 7 % -2, 2 ** 10, 7 / 2)"), "(-4, 1, -4, -1, 1024, 3.5)");
    assert_eq!(ok("result = (1 + 2.5, 0.1 + 0.2, 1e20, 3.0, 2 ** -1)"), "(3.5, 0.30000000000000004, 1e+20, 3.0, 0.5)");
    assert_eq!(ok("result = [True + 1, 'ab' * 2, [0] * 3, 5 & 3, 5 | 3, 5 ^ 3]"), "[2, 'abab', [0, 0, 0], 1, 7, 6]");
    assert_eq!(eval("result = 1 / 0").unwrap_err(), "ZeroDivisionError: division by zero");
    assert_eq!(
        eval("result = 'a' + 1").unwrap_err(),
        "TypeError: can only concatenate str (not \"int\") to str"
    );
}

#[test]
fn comparisons_chain_and_short_circuit() {
    assert_eq!(ok("result = (1 < 2 < 3, 3 > 2 > 2, 'a' in 'cat', 4 not in [1, 2], None is None)"), "(True, False, True, True, True)");
    assert_eq!(ok("result = (0 or 'x', 1 and 0, [1, 2] < [1, 3], (1, 2) == (1, 2))"), "('x', 0, True, True)");
    assert_eq!(
        eval("result = 1 < 'a'").unwrap_err(),
        "TypeError: '<' not supported between instances of 'int' and 'str'"
    );
}

#[test]
fn control_flow() {
    let src = "
total = 0
for i in range(10):
    if i % 2 == 0:
        continue
    elif i > 7:
        break
    total += i
else:
    total = -1
n = 0
while True:
    n += 1
    if n == 5:
        break
result = (total, n)
";
    assert_eq!(ok(src), "(16, 5)");
}

#[test]
fn functions_defaults_kwargs_closures_recursion() {
    let src = "
def fib(n):
    if n < 2:
        return n
    return fib(n - 1) + fib(n - 2)

def make_adder(k):
    def add(x, y=0):
        return x + y + k
    return add

def scale(xs, factor=2):
    return [x * factor for x in xs]

add3 = make_adder(3)
result = (fib(15), add3(1), add3(1, y=10), scale([1, 2]), scale([1], factor=5))
";
    assert_eq!(ok(src), "(610, 4, 14, [2, 4], [5])");
    assert_eq!(
        eval("def f(a, b):\n    return a\nresult = f(1)").unwrap_err(),
        "TypeError: f() missing 1 required positional argument: 'b'"
    );
}

#[test]
fn recursion_limit_is_reported() {
    let e = eval("def f(n):\n    return f(n + 1)\nresult = f(0)").unwrap_err();
    assert_eq!(e, "RecursionError: maximum recursion depth exceeded");
}

#[test]
fn step_limit_stops_infinite_loops_even_under_bare_except() {
    let e = eval("while True:\n    try:\n        pass\n    except:\n        pass\n").unwrap_err();
    assert!(e.starts_with("TimeoutError"), "{e}");
}

#[test]
fn collections_and_methods() {
    let src = "
xs = [3, 1, 2]
xs.append(5)
xs.sort(reverse=True)
ys = sorted(['bb', 'a', 'ccc'], key=len)
d = {'a': 1}
d['b'] = d.get('a', 0) + 1
d.setdefault('c', []).append(9)
s = {1, 2, 2, 3}
s.discard(1)
words = ' Hello  World '.strip().lower().split()
result = (xs, ys, d, len(s), words, '-'.join(words), xs.pop(0), xs[-1], xs[::-1], 'abc'[1:])
";
    assert_eq!(
        ok(src),
        "([3, 2, 1], ['a', 'bb', 'ccc'], {'a': 1, 'b': 2, 'c': [9]}, 2, ['hello', 'world'], 'hello-world', 5, 1, [1, 2, 3], 'bc')"
    );
}

#[test]
fn comprehensions_and_builtins() {
    let src = "
pairs = [(i, j) for i in range(3) for j in range(i) if j != 1]
sq = {x: x * x for x in range(4)}
result = (pairs, sq, sum(x for x in range(5)), max([3, 9, 2]), min('bca'), list(zip('ab', [1, 2, 3])),
          list(enumerate(['x'], start=1)), any([]), all([]), abs(-3), round(2.5), round(3.5), int('42'), str(7),
          list(reversed(range(3))), isinstance(True, int), sorted({3, 1}), divmod(7, 2), ord('a'), chr(98))
";
    assert_eq!(
        ok(src),
        "([(1, 0), (2, 0)], {0: 0, 1: 1, 2: 4, 3: 9}, 10, 9, 'a', [('a', 1), ('b', 2)], [(1, 'x')], False, True, 3, 2, 4, 42, '7', [2, 1, 0], True, [1, 3], (3, 1), 97, 'b')"
    );
}

#[test]
fn list_iteration_is_live() {
    let src = "
xs = [1, 2, 3]
seen = []
for x in xs:
    seen.append(x)
    if x == 1:
        xs.append(4)
result = seen
";
    assert_eq!(ok(src), "[1, 2, 3, 4]");
}

#[test]
fn exceptions_and_handlers() {
    let src = "
def risky(k):
    if k == 0:
        raise ValueError('zero')
    return {}[k]

log = []
for k in [0, 1, 2]:
    try:
        risky(k)
    except ValueError as e:
        log.append('value:' + str(e))
    except LookupError:
        log.append('lookup')
    finally:
        log.append('done')
result = log
";
    assert_eq!(ok(src), "['value:zero', 'done', 'lookup', 'done', 'lookup', 'done']");
    assert_eq!(eval("result = [1][3]").unwrap_err(), "IndexError: list index out of range");
    assert_eq!(eval("result = {}['k']").unwrap_err(), "KeyError: 'k'");
    assert_eq!(eval("result = undefined").unwrap_err(), "NameError: name 'undefined' is not defined");
}

#[test]
fn strings_format() {
    let src = "
name = 'x'
v = 3.14159
result = (f'{name}={v:.2f}', f'{name!r}', f'{7:>3}|', '{} and {}'.format(1, 'b'), '%d%%' % 50, repr('it\\'s'), f'{{}}')
";
    assert_eq!(ok(src), "('x=3.14', \"'x'\", '  7|', '1 and b', '50%', '\"it\\'s\"', '{}')");
}

#[test]
fn assertion_messages_carry_expected_and_actual() {
    let e = eval("result = None\nassert [1, 0] == [0, 1]").unwrap_err();
    assert_eq!(e, "AssertionError: assert [1, 0] == [0, 1]\nexpected: [0, 1]\nactual: [1, 0]");
    let e = eval("assert 3 < 2, 'too big'").unwrap_err();
    assert_eq!(e, "AssertionError: too big\nassert 3 < 2");
}

#[test]
fn print_routes_to_streams() {
    let mut it = Interpreter::new("/nonexistent");
    it.sources.insert(
        "m.py".into(),
        "import sys\nprint('a', 1, sep='-')\nprint('dbg', file=sys.stderr)\nsys.stderr.write('w\\n')\n".into(),
    );
    assert!(it.load_file("m.py", "m").is_ok());
    assert_eq!(it.stdout, "a-1\n");
    assert_eq!(it.stderr, "dbg\nw\n");
}

#[test]
fn tracing_records_executed_subject_lines() {
    let mut it = Interpreter::new("/nonexistent");
    it.sources.insert(
        "sol.py".into(),
        "def f(n):\n    if n > 0:\n        return 1\n    else:\n        return 2\n".into(),
    );
    it.sources.insert("t.py".into(), "from sol import f\n".into());
    let m = it.load_file("t.py", "t").ok().unwrap();
    it.subjects.insert("sol.py".into());
    it.tracing = true;
    let f = m.globals.borrow().get("f").cloned().unwrap();
    it.call_function_value(&f, vec![Value::Int(-1)]).ok().unwrap();
    let lines: Vec<u32> = it.covered.iter().map(|(_, l)| *l).collect();
    assert_eq!(lines, vec![2, 5]);
}
