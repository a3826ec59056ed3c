//! End-to-end acceptance: one PASS/FAIL line per criterion, printed straight to stdout so it
//! shows up even when the harness captures test output.

use std::io::Write;

use zetahess::io::CheckRow;
use zetahess::{verify, Exec};

struct Criterion {
    id: u32,
    title: &'static str,
    /// a stretch goal is reported but does not fail the run
    stretch: bool,
    /// wall-clock budget for the whole criterion, seconds
    runtime: Option<f64>,
    rows: fn() -> Vec<CheckRow>,
}

fn grid() -> Vec<CheckRow> {
    verify::gamma_identity_grid(Exec::default())
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "six generated symbol patterns equal the hand-encoded forms", stretch: false, runtime: Some(10.0), rows: verify::theorem2 },
    Criterion { id: 2, title: "nine (u,v)-integral substitutions reproduced exactly", stretch: false, runtime: None, rows: verify::substitution_table },
    Criterion { id: 3, title: "gamma-integral identity on the 5x5 strip grid, rel. err <= 1e-8", stretch: false, runtime: Some(60.0), rows: grid },
    Criterion { id: 4, title: "steepest descent: leading coefficient 2 (1e-6), C2 fit vs substitution (1e-4)", stretch: false, runtime: None, rows: verify::steepest_descent },
    Criterion { id: 5, title: "circle zeta: Z(1) = 1/12, Z(-1) = 0, corrected zeta regular at 1/2 and 0", stretch: false, runtime: None, rows: verify::circle_zeta },
    Criterion { id: 6, title: "spectral Hessian vs finite differences, n=1, K=64, s=3 (1e-6)", stretch: false, runtime: Some(120.0), rows: verify::spectral_vs_fd },
    Criterion { id: 7, title: "heat-trace second variation within 2% of the symbol at t=1e-3, decreasing", stretch: false, runtime: None, rows: verify::heat_trace },
    Criterion { id: 8, title: "coefficient of |m|^(n-2s) from 40-digit Hessians within 5%", stretch: true, runtime: None, rows: verify::nonlocal_exponent },
    Criterion { id: 9, title: "linearization tables vs coordinate finite differences (1e-6)", stretch: false, runtime: None, rows: verify::linearization },
    Criterion { id: 10, title: "all pole locations lie in n/2 + N+", stretch: false, runtime: None, rows: verify::pole_property },
];

fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

#[test]
fn acceptance() {
    let mut gating = Vec::new();
    for c in &CRITERIA {
        let t = std::time::Instant::now();
        let rows = (c.rows)();
        let secs = t.elapsed().as_secs_f64();
        let bad: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass || r.criterion != Some(c.id)).collect();
        let slow = c.runtime.map(|b| secs > b).unwrap_or(false);
        let worst = rows.iter().filter(|r| r.budget > 0.0 && r.budget.is_finite()).map(|r| r.error / r.budget).fold(0.0, f64::max);
        let ok = !rows.is_empty() && bad.is_empty() && !slow;
        say(&format!(
            "{} criterion {}{}: {} [{} checks, worst error/budget {:.2e}, {:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            if c.stretch { " (stretch)" } else { "" },
            c.title,
            rows.len(),
            worst,
            secs
        ));
        for r in &bad {
            say(&format!("    failed: {} (error {:e}, budget {:e}, lhs {}, rhs {})", r.name, r.error, r.budget, r.lhs, r.rhs));
        }
        if slow {
            say(&format!("    over the {:.0} s budget", c.runtime.unwrap()));
        }
        if !ok && !c.stretch {
            gating.push(c.id);
        }
    }
    assert!(gating.is_empty(), "criteria failed: {gating:?}");
}
