//! Inputs/outputs table of a certified run and its JSON form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::certify::{Certificate, LyapunovResult};
use crate::enclosure::EnclosedDensity;
use crate::matrix::NormKind;
use crate::pipeline::LyData;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub len: usize,
    pub sup: f64,
    pub diameter: f64,
    pub float_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificate: Certificate,
    pub lyapunov: Option<LyapunovResult>,
    pub density: DensitySummary,
    /// Mode specific coefficients beyond the certificate fields.
    pub extra_inputs: Vec<Row>,
}

fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-3..1e5).contains(&a) {
        let s = format!("{x:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.4e}")
    }
}

fn row(name: &str, value: String) -> Row {
    Row { name: name.into(), value }
}

pub fn report<F: Scalar>(cert: &Certificate, lyap: Option<&LyapunovResult>, density: &EnclosedDensity<F>, ly: &LyData<F>) -> CertificateReport {
    let extra_inputs = match ly {
        LyData::Bv(c) => vec![
            row("min piece length", num(c.min_branch_len.lo.as_f64())),
            row("sup|T''/T'^2|", num(c.distortion_sup.hi.as_f64())),
        ],
        LyData::Lip { coeffs, lin_err } => vec![
            row("B1", num(coeffs.b_one.hi.as_f64())),
            row("M", num(coeffs.m_sup.hi.as_f64())),
            row("alpha", num(coeffs.alpha.hi.as_f64())),
            row("iterate k", coeffs.k_iter.to_string()),
            row("lin_err", num(lin_err.as_f64())),
        ],
    };
    CertificateReport {
        certificate: cert.clone(),
        lyapunov: lyap.cloned(),
        density: DensitySummary {
            len: density.values.len(),
            sup: density.sup_norm().as_f64(),
            diameter: density.diameter.as_f64(),
            float_err: density.float_err.as_f64(),
        },
        extra_inputs,
    }
}

impl CertificateReport {
    pub fn inputs(&self) -> Vec<Row> {
        let c = &self.certificate;
        let mut rows = vec![row("lambda", num(c.lambda))];
        if let Some(bp) = c.b_prime {
            rows.push(row("B'", num(bp)));
        }
        rows.push(row("B", num(c.b)));
        rows.push(row("eps", num(c.eps)));
        rows.push(row("eps_num", num(c.eps_num)));
        rows.push(row("float ledger", num(c.err_components.float_ledger)));
        rows.extend(self.extra_inputs.iter().cloned());
        rows
    }

    pub fn outputs(&self) -> Vec<Row> {
        let c = &self.certificate;
        let mut rows = vec![
            row("N_eps", c.n_eps.to_string()),
            row("N", c.n_true.to_string()),
            row("l", c.l.to_string()),
            row("eps_rig", num(c.eps_rig)),
        ];
        if let Some(l) = &self.lyapunov {
            let label = if l.iterate == 1 { String::new() } else { format!(" (of T^{})", l.iterate) };
            rows.push(row("L_exp", format!("{} +- {}{label}", num(l.estimate), num(l.radius))));
        }
        rows
    }

    /// Two-column table, inputs left and outputs right.
    pub fn render_table(&self) -> String {
        let c = &self.certificate;
        let norm = match c.mode {
            NormKind::L1 => "L1",
            NormKind::Linf => "Linf",
        };
        let mut s = String::new();
        let _ = writeln!(s, "map {}  norm {}  k {}", c.map_id, norm, c.k);
        if let Some(nu) = c.nu {
            let _ = writeln!(s, "nu {}  nnz_max {}", num(nu), c.nnz_max);
        } else {
            let _ = writeln!(s, "nnz_max {}", c.nnz_max);
        }
        let (ins, outs) = (self.inputs(), self.outputs());
        let lw = ins.iter().map(|r| r.name.len() + r.value.len() + 2).max().unwrap_or(0).max(8);
        let _ = writeln!(s, "{:<lw$} | Outputs", "Inputs");
        let _ = writeln!(s, "{}-+-{}", "-".repeat(lw), "-".repeat(24));
        for i in 0..ins.len().max(outs.len()) {
            let l = ins.get(i).map_or(String::new(), |r| format!("{:<w$}  {}", r.name, r.value, w = lw - r.value.len() - 2));
            let r = outs.get(i).map_or(String::new(), |r| format!("{:<8} {}", r.name, r.value));
            let _ = writeln!(s, "{l:<lw$} | {r}");
        }
        let e = &c.err_components;
        let _ = writeln!(
            s,
            "eps_rig = {} (discretization) + {} (matrix) + {} (numeric)",
            num(e.discretization),
            num(e.matrix),
            num(e.numeric)
        );
        s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
