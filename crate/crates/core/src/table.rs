//! CSV output. Numbers carry 12 significant digits with a '.' decimal point
//! and rows end in '\n'.

use crate::sweep::{RegionMap, SurfaceRow, SweepRow};

pub const SWEEP_HEADER: &str = "axis,g_ab,g_ba,reid_ab,reid_ba,ppt,purity";
pub const REGION_HEADER: &str = "eta,g,regime";
pub const SURFACE_HEADER: &str = "eta,g,g_ab,g_ba";

const SIG_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn push_row(out: &mut String, fields: &[f64]) {
    let line: Vec<String> = fields.iter().map(|&v| fmt_num(v)).collect();
    out.push_str(&line.join(","));
    out.push('\n');
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        push_row(
            &mut out,
            &[
                r.axis, r.g_ab, r.g_ba, r.reid_ab, r.reid_ba, r.ppt, r.purity,
            ],
        );
    }
    out
}

pub fn region_csv(map: &RegionMap) -> String {
    let mut out = format!("{REGION_HEADER}\n");
    for (eta, g, regime) in map.iter() {
        out.push_str(&format!("{},{},{}\n", fmt_num(eta), fmt_num(g), regime));
    }
    out
}

pub fn surface_csv(rows: &[SurfaceRow]) -> String {
    let mut out = format!("{SURFACE_HEADER}\n");
    for r in rows {
        push_row(&mut out, &[r.eta, r.g, r.g_ab, r.g_ba]);
    }
    out
}
