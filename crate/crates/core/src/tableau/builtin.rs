use std::f64::consts::SQRT_2;

use super::DoubleButcherTableau;
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 3] = ["imex-rrk-3-2", "imex-rrk-4-3", "imex-rrk-6-4"];

/// `p/q` rounded once to binary64. Both operands are below 2^53, so the
/// conversions are exact and only the division rounds.
fn q(p: i64, d: i64) -> f64 {
    debug_assert!(p.unsigned_abs() < (1 << 53) && d.unsigned_abs() < (1 << 53));
    p as f64 / d as f64
}

pub fn builtin_tableau(name: &str) -> Result<DoubleButcherTableau> {
    match name {
        "imex-rrk-3-2" => Ok(imex_rrk_3_2()),
        "imex-rrk-4-3" => Ok(imex_rrk_4_3()),
        "imex-rrk-6-4" => Ok(imex_rrk_6_4()),
        _ => Err(Error::UnknownTableau {
            name: name.to_string(),
            available: BUILTIN_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

pub fn builtin_tableaux() -> Vec<DoubleButcherTableau> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin_tableau(n).expect("builtin"))
        .collect()
}

fn imex_rrk_3_2() -> DoubleButcherTableau {
    let g = 1.0 - SQRT_2 / 2.0;
    let b = vec![q(1, 6), q(1, 6), q(2, 3)];
    DoubleButcherTableau::new(
        "imex-rrk-3-2",
        2,
        vec![
            vec![g, 0.0, 0.0],
            vec![SQRT_2 - 1.0, g, 0.0],
            vec![SQRT_2 / 2.0 - 0.5, 0.0, g],
        ],
        vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.25, 0.25, 0.0],
        ],
        b.clone(),
        b,
        vec![g, SQRT_2 / 2.0, 0.5],
        vec![0.0, 1.0, 0.5],
    )
    .expect("imex-rrk-3-2 is well formed")
}

pub(crate) const ALPHA_4_3: f64 = 0.24169426078821;
pub(crate) const BETA_4_3: f64 = 0.06042356519705;
pub(crate) const ETA_4_3: f64 = 0.12915286960590;

fn imex_rrk_4_3() -> DoubleButcherTableau {
    let (al, be, et) = (ALPHA_4_3, BETA_4_3, ETA_4_3);
    let b = vec![0.0, q(1, 6), q(1, 6), q(2, 3)];
    DoubleButcherTableau::new(
        "imex-rrk-4-3",
        3,
        vec![
            vec![al, 0.0, 0.0, 0.0],
            vec![-al, al, 0.0, 0.0],
            vec![0.0, 1.0 - al, al, 0.0],
            vec![be, et, 0.5 - al - be - et, al],
        ],
        vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.25, 0.25, 0.0],
        ],
        b.clone(),
        b,
        vec![al, 0.0, 1.0, 0.5],
        vec![0.0, 0.0, 1.0, 0.5],
    )
    .expect("imex-rrk-4-3 is well formed")
}

fn imex_rrk_6_4() -> DoubleButcherTableau {
    let b = vec![
        q(82889, 524892),
        0.0,
        q(15625, 83664),
        q(69875, 102672),
        q(-2260, 8211),
        q(1, 4),
    ];
    let c = vec![0.0, q(1, 2), q(83, 250), q(31, 50), q(17, 20), 1.0];
    let a = vec![
        vec![0.0; 6],
        vec![q(1, 4), q(1, 4), 0.0, 0.0, 0.0, 0.0],
        // a_32 is negative in the original ARK4(3)6L[2]SA scheme; with a
        // positive sign the row no longer sums to c_3.
        vec![q(8611, 62500), q(-1743, 31250), q(1, 4), 0.0, 0.0, 0.0],
        vec![
            q(5012029, 34652500),
            q(-654441, 2922500),
            q(174375, 388108),
            q(1, 4),
            0.0,
            0.0,
        ],
        vec![
            q(15267082809, 155376265600),
            q(-71443401, 120774400),
            q(730878875, 902184768),
            q(2285395, 8070912),
            q(1, 4),
            0.0,
        ],
        b.iter().copied().take(5).chain([q(1, 4)]).collect(),
    ];
    let abar = vec![
        vec![0.0; 6],
        vec![q(1, 2), 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![q(13861, 62500), q(6889, 62500), 0.0, 0.0, 0.0, 0.0],
        vec![
            q(-116923316275, 2393684061468),
            q(-2731218467317, 15368042101831),
            q(9408046702089, 11113171139209),
            0.0,
            0.0,
            0.0,
        ],
        vec![
            q(-451086348788, 2902428689909),
            q(-2682348792572, 7519795681897),
            q(12662868775082, 11960479115383),
            q(3355817975965, 11060851509271),
            0.0,
            0.0,
        ],
        vec![
            q(647845179188, 3216320057751),
            q(73281519250, 8382639484533),
            q(552539513391, 3454668386233),
            q(3354512671639, 8306763924573),
            q(4040, 17871),
            0.0,
        ],
    ];
    DoubleButcherTableau::new("imex-rrk-6-4", 4, a, abar, b.clone(), b, c.clone(), c)
        .expect("imex-rrk-6-4 is well formed")
}
