//! CSV records for rate results.

use diqkd_core::{ProtocolVariant, RateResult, SourcePoint};

pub const HEADER: &str =
    "eta,protocol,rate_raw,rate_clamped,S,ec_term,eve_term,p,g,gbar,N,alpha0,alpha1,alpha2,beta1,beta2";

/// `x` rounded to `digits` significant digits, shortest form (like `%.12g`).
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn num(x: f64) -> String {
    sig(x, 12)
}

pub fn row(protocol: ProtocolVariant, r: &RateResult) -> String {
    let pt = &r.point;
    let (g, gbar, n) = match pt.source {
        SourcePoint::Spdc(s) => (num(s.g()), num(s.gbar()), s.modes().to_string()),
        SourcePoint::Qubit { .. } => (String::new(), String::new(), String::new()),
    };
    let fields = [
        num(r.eta),
        protocol.name().to_string(),
        num(r.rate),
        num(r.clamped()),
        num(r.s.value()),
        num(r.ec_term),
        num(r.eve_term),
        num(pt.p.p()),
        g,
        gbar,
        n,
        num(pt.a0.angle),
        num(pt.a1.angle),
        num(pt.a2.angle),
        num(pt.b1.angle),
        num(pt.b2.angle),
    ];
    fields.join(",")
}

/// Header plus rows sorted by protocol name, then efficiency; LF endings.
pub fn table(rows: &[(ProtocolVariant, RateResult)]) -> String {
    let mut sorted: Vec<&(ProtocolVariant, RateResult)> = rows.iter().collect();
    sorted.sort_by(|a, b| a.0.name().cmp(b.0.name()).then(a.1.eta.total_cmp(&b.1.eta)));
    let mut out = String::from(HEADER);
    out.push('\n');
    for (p, r) in sorted {
        out.push_str(&row(*p, r));
        out.push('\n');
    }
    out
}
