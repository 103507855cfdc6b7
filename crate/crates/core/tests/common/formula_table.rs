//! Hand-worked suspiciousness values: `(formula, ef, ep, nf, np, expected)`.

use codehinter_core::Formula::{self, Dstar2, Ochiai, Op2, Tarantula};

pub fn cases() -> Vec<(Formula, u32, u32, u32, u32, f64)> {
    vec![
        // fail ratio 1, pass ratio 1/4
        (Tarantula, 2, 1, 0, 3, 0.8),
        (Tarantula, 1, 1, 1, 1, 0.5),
        (Tarantula, 1, 3, 2, 1, 4.0 / 13.0),
        // ef = 0
        (Tarantula, 0, 2, 2, 0, 0.0),
        // no failing tests at all
        (Tarantula, 0, 0, 0, 4, 0.0),
        // no passing tests: pass ratio taken as 0
        (Tarantula, 3, 0, 0, 0, 1.0),
        (Tarantula, 2, 0, 1, 4, 1.0),
        (Ochiai, 2, 1, 0, 3, 2.0 / 6.0_f64.sqrt()),
        (Ochiai, 1, 1, 1, 1, 0.5),
        (Ochiai, 3, 0, 0, 5, 1.0),
        (Ochiai, 1, 4, 3, 0, 1.0 / 20.0_f64.sqrt()),
        // never executed: ef + ep = 0
        (Ochiai, 0, 0, 2, 3, 0.0),
        // no failing tests: ef + nf = 0
        (Ochiai, 0, 3, 0, 2, 0.0),
        (Dstar2, 2, 1, 0, 3, 4.0),
        (Dstar2, 2, 2, 1, 0, 4.0 / 3.0),
        (Dstar2, 1, 0, 2, 7, 0.5),
        (Dstar2, 0, 5, 1, 1, 0.0),
        (Dstar2, 0, 0, 3, 0, 0.0),
        // ep + nf = 0
        (Dstar2, 3, 0, 0, 2, f64::INFINITY),
        (Op2, 2, 1, 0, 3, 1.8),
        (Op2, 0, 3, 1, 1, -0.6),
        (Op2, 1, 0, 1, 0, 1.0),
        (Op2, 3, 2, 0, 2, 2.6),
        (Op2, 0, 0, 2, 0, 0.0),
    ]
}
