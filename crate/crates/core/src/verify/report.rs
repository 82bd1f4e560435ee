//! Machine-readable reports whose pass/fail flags are recomputable from the stored numbers.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Comparison applied to `lhs` and `rhs` of a [`Check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs`.
    Le,
    /// `lhs ≥ rhs`.
    Ge,
    /// `|lhs - rhs| ≤ tol·|rhs|`.
    RelClose { tol: f64 },
    /// `|lhs - rhs| ≤ tol`.
    AbsClose { tol: f64 },
    /// `lo ≤ lhs ≤ hi`; `rhs` is ignored.
    Within { lo: f64, hi: f64 },
}

impl Relation {
    pub fn holds(&self, lhs: f64, rhs: f64) -> bool {
        match *self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::RelClose { tol } => (lhs - rhs).abs() <= tol * rhs.abs(),
            Relation::AbsClose { tol } => (lhs - rhs).abs() <= tol,
            Relation::Within { lo, hi } => lo <= lhs && lhs <= hi,
        }
    }

    /// Signed distance to failure, relative to the right-hand side where one exists.
    pub fn margin(&self, lhs: f64, rhs: f64) -> f64 {
        let rel = |x: f64, scale: f64| if scale != 0.0 { x / scale.abs() } else { x };
        match *self {
            Relation::Le => rel(rhs - lhs, rhs),
            Relation::Ge => rel(lhs - rhs, rhs),
            Relation::RelClose { tol } => tol - rel((lhs - rhs).abs(), rhs),
            Relation::AbsClose { tol } => tol - (lhs - rhs).abs(),
            Relation::Within { lo, hi } => (lhs - lo).min(hi - lhs),
        }
    }
}

/// One asserted inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub lhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub rhs: f64,
    pub relation: Relation,
    #[serde(deserialize_with = "nullable")]
    pub margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation,
            margin: relation.margin(lhs, rhs),
            pass: relation.holds(lhs, rhs),
            detail: None,
        }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, Relation::Le, rhs)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, Relation::Ge, rhs)
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, Relation::Within { lo, hi }, f64::NAN)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// The stored flag agrees with the stored numbers.
    pub fn consistent(&self) -> bool {
        self.pass == self.relation.holds(self.lhs, self.rhs)
    }
}

/// A measurement that is reported but not asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
}

/// Per-annulus quantities of the constructive chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRecord {
    pub center: Vec<[f64; 2]>,
    pub inner: f64,
    pub outer: f64,
    pub measure: f64,
    pub doubled_measure: f64,
    pub dirichlet: f64,
    pub l2: f64,
    pub rayleigh: f64,
}

/// Quantities for one `(case, k)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub case: usize,
    pub k: usize,
    pub lambda_k: f64,
    pub degree_d: f64,
    pub deg: Option<usize>,
    pub volume: f64,
    #[serde(deserialize_with = "nullable")]
    pub bound: f64,
    #[serde(default)]
    pub annuli: Vec<AnnulusRecord>,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    pub checks: Vec<Check>,
}

impl KRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// How the headline constant is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantDerivation {
    pub n: usize,
    pub m: usize,
    /// Covering number `9^{2m}`.
    pub covering_number: f64,
    /// `1/(8 N^{12})`.
    pub c_theoretical: f64,
    /// Capture fraction used for the packing.
    pub c_target: f64,
    /// Fraction entering the constant: the theoretical one in strict mode.
    pub c_used: f64,
    /// `1600·n/c_used`.
    pub constant: f64,
    pub derivation: String,
}

impl ConstantDerivation {
    pub fn new(m: usize, c_target: f64, strict: bool) -> Self {
        let covering_number = 9f64.powi(2 * m as i32);
        let c_theoretical = 1.0 / (8.0 * covering_number.powi(12));
        let c_used = if strict { c_theoretical } else { c_target };
        Self {
            n: 1,
            m,
            covering_number,
            c_theoretical,
            c_target,
            c_used,
            constant: 1600.0 / c_used,
            derivation: "R(u_i) <= 4 A_phi / (mu(A_i)/400) with mu(A_i) >= c Vol/k and A_phi = d Vol, \
                         so C(1,m) = 1600/c; c = 1/(8 N^12), N = 9^(2m) gives 12800·9^(24m)"
                .into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub strict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<ConstantDerivation>,
    #[serde(default)]
    pub records: Vec<KRecord>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub all_pass: bool,
}

impl CertificateReport {
    pub fn new(command: &str, seed: u64, strict: bool) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed,
            strict,
            constant: None,
            records: Vec::new(),
            checks: Vec::new(),
            metrics: Vec::new(),
            notes: Vec::new(),
            all_pass: true,
        }
    }

    pub fn push_metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push(Metric { name: name.into(), value });
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().chain(self.records.iter().flat_map(|r| r.checks.iter()))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.all_checks().filter(|c| !c.pass).collect()
    }

    /// Sets `all_pass` from the individual flags.
    pub fn finalize(mut self) -> Self {
        let all = self.all_checks().all(|c| c.pass);
        self.all_pass = all;
        self
    }

    /// Re-evaluates every relation from the stored numbers and compares with the stored flags.
    pub fn recheck(&self) -> bool {
        self.all_checks().all(Check::consistent) && self.all_pass == self.all_checks().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, PinnedFormatter::default());
        self.serialize(&mut ser)?;
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// One row per asserted check.
    pub fn tables_csv(&self) -> String {
        let mut out = String::from("case,k,name,lhs,rhs,margin,pass\n");
        let mut row = |case: String, k: String, c: &Check| {
            out.push_str(&format!(
                "{case},{k},{},{},{},{},{}\n",
                c.name,
                fmt17(c.lhs),
                fmt17(c.rhs),
                fmt17(c.margin),
                c.pass
            ));
        };
        for c in &self.checks {
            row(String::new(), String::new(), c);
        }
        for r in &self.records {
            for c in &r.checks {
                row(r.case.to_string(), r.k.to_string(), c);
            }
        }
        out
    }

    /// `case,k,lambda_k,bound` for plotting.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("case,k,lambda_k,bound\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.case, r.k, fmt17(r.lambda_k), fmt17(r.bound)));
        }
        out
    }

    /// Writes `report.json`, `tables.csv` and `plot.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_json(&dir.join("report.json"))?;
        std::fs::write(dir.join("tables.csv"), self.tables_csv())?;
        std::fs::write(dir.join("plot.csv"), self.plot_csv())?;
        Ok(())
    }
}

/// Reads `null` as NaN.
fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// `{:.16e}`, the shortest format carrying 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// Pretty JSON with every float written to 17 significant digits and non-finite values as `null`.
#[derive(Default)]
struct PinnedFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for PinnedFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CertificateReport {
        let mut r = CertificateReport::new("test", 3, false);
        r.checks.push(Check::le("a", 1.0, 2.0));
        r.checks.push(Check::within("b", 0.5, 0.0, 1.0).with_detail("x"));
        r.records.push(KRecord {
            case: 0,
            k: 2,
            lambda_k: 0.1 + 0.2,
            degree_d: 1.0,
            deg: Some(1),
            volume: std::f64::consts::PI,
            bound: f64::NAN,
            annuli: vec![],
            metrics: vec![Metric { name: "z".into(), value: 1e-300 }],
            checks: vec![Check::new("c", 1.0, Relation::RelClose { tol: 0.01 }, 1.005)],
        });
        r.finalize()
    }

    #[test]
    fn relations() {
        assert!(Relation::Le.holds(1.0, 1.0));
        assert!(!Relation::Ge.holds(0.9, 1.0));
        assert!(Relation::RelClose { tol: 0.1 }.holds(1.05, 1.0));
        assert!(!Relation::AbsClose { tol: 0.01 }.holds(1.05, 1.0));
        assert!(Relation::Within { lo: 0.0, hi: 1.0 }.holds(1.0, f64::NAN));
        assert!((Relation::Le.margin(1.0, 4.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn json_pins_seventeen_digits_and_round_trips() {
        let r = sample();
        assert!(r.all_pass && r.recheck());
        let text = r.to_json().unwrap();
        assert!(text.contains("3.0000000000000004e-1"));
        assert!(text.contains("\"bound\": null"));
        let back = CertificateReport::from_json(&text).unwrap();
        assert_eq!(back.records[0].lambda_k, 0.1 + 0.2);
        assert!(back.records[0].bound.is_nan());
        assert!(back.recheck());
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn tampered_flag_is_detected() {
        let mut r = sample();
        r.checks[0].lhs = 3.0;
        assert!(!r.recheck());
    }

    #[test]
    fn csv_outputs() {
        let r = sample();
        assert_eq!(r.tables_csv().lines().count(), 4);
        assert!(r.plot_csv().lines().nth(1).unwrap().starts_with("0,2,"));
    }
}
