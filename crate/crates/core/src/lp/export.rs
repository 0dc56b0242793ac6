//! CPLEX-style LP text export.

use std::fmt::Write;

use super::{LinearProgram, Row};
use crate::rational::{self, Rational};

fn sanitize(name: &str) -> String {
    let mut s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "_.()".contains(c) { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, '_');
    }
    s
}

fn number(r: &Rational) -> String {
    if rational::is_terminating(r) {
        rational::display(r)
    } else {
        format!("{:?}", rational::to_f64(r))
    }
}

fn terms(out: &mut String, coeffs: &[(usize, Rational)], names: &[String]) {
    if coeffs.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (n, (k, a)) in coeffs.iter().enumerate() {
        let neg = *a < Rational::from_integer(0);
        let mag = if neg { -*a } else { *a };
        let sign = match (n, neg) {
            (0, false) => "",
            (0, true) => "-",
            (_, false) => "+ ",
            (_, true) => "- ",
        };
        let _ = write!(out, " {sign}{} {}", number(&mag), names[*k]);
    }
}

/// Renders `lp` in the LP text format documented in the README.
pub fn to_lp_format(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp.names.iter().map(|n| sanitize(n)).collect();
    let mut out = String::from("Maximize\n obj:");
    let obj: Vec<(usize, Rational)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != Rational::from_integer(0))
        .map(|(k, c)| (k, *c))
        .collect();
    terms(&mut out, &obj, &names);
    out.push_str("\nSubject To\n");
    for (r, Row { name, coeffs, rel, rhs }) in lp.rows.iter().enumerate() {
        let label = if name.is_empty() { format!("r{r}") } else { sanitize(name) };
        let _ = write!(out, " {label}:");
        terms(&mut out, coeffs, &names);
        let _ = writeln!(out, " {} {}", rel.symbol(), number(rhs));
    }
    out.push_str("Bounds\n");
    for (k, u) in lp.upper.iter().enumerate() {
        match u {
            Some(u) => {
                let _ = writeln!(out, " 0 <= {} <= {}", names[k], number(u));
            }
            None => {
                let _ = writeln!(out, " {} >= 0", names[k]);
            }
        }
    }
    out.push_str("End\n");
    out
}
