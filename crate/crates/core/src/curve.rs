//! Sampled exponent curves and their CSV form.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::ext_real::{ExtReal, INF_TOKEN};
use crate::gallager::{GallagerSolver, DEFAULT_DELTA_CAP};
use crate::kl::{KlSolver, VSolverConfig};

/// Quantities that can be sampled along a rate grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `G(R|W)`, Gallager form.
    StrongConverse,
    /// `G̃⁺_{-1}(R|W)`, divergence form.
    DkExponent,
    /// `G̃_sp(R|W)`.
    SpherePackingSc,
    /// `E(R|W)`, Gallager form.
    ErrorExponent,
    /// `Ẽ_sp(R|W)`.
    SpherePackingErr,
    /// The constant `C(W)`.
    CapacityLine,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::StrongConverse,
        Quantity::DkExponent,
        Quantity::SpherePackingSc,
        Quantity::ErrorExponent,
        Quantity::SpherePackingErr,
        Quantity::CapacityLine,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Quantity::StrongConverse => "G",
            Quantity::DkExponent => "G_dk",
            Quantity::SpherePackingSc => "G_sp",
            Quantity::ErrorExponent => "E",
            Quantity::SpherePackingErr => "E_sp",
            Quantity::CapacityLine => "C",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.tag() == s)
            .ok_or_else(|| Error::UnknownQuantity(s.to_string()))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rate: f64,
    pub value: ExtReal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCurve {
    pub quantity: Quantity,
    pub channel_digest: String,
    pub points: Vec<CurvePoint>,
}

impl ExponentCurve {
    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    pub fn values(&self) -> Vec<ExtReal> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Checks that `rates` is a strictly increasing list of finite
/// nonnegative numbers.
pub fn validate_rate_grid(rates: &[f64]) -> Result<()> {
    for (i, &r) in rates.iter().enumerate() {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Validation(format!("rate {r} is not a finite nonnegative number")));
        }
        if i > 0 && r <= rates[i - 1] {
            return Err(Error::Validation(format!(
                "rate grid is not strictly increasing at index {i} ({} then {r})",
                rates[i - 1]
            )));
        }
    }
    Ok(())
}

/// Evaluates `quantity` at each rate of `rates`.
pub fn emit_curve(quantity: Quantity, w: &Channel, rates: &[f64], cfg: &VSolverConfig) -> Result<ExponentCurve> {
    validate_rate_grid(rates)?;
    let mut values = Vec::with_capacity(rates.len());
    match quantity {
        Quantity::StrongConverse => {
            let mut s = GallagerSolver::new(w);
            for &r in rates {
                values.push(ExtReal::Finite(s.strong_converse(r)?));
            }
        }
        Quantity::ErrorExponent => {
            let mut s = GallagerSolver::new(w);
            for &r in rates {
                values.push(s.error_exponent(r, DEFAULT_DELTA_CAP)?);
            }
        }
        _ => {
            let mut s = KlSolver::new(w, *cfg)?;
            for &r in rates {
                values.push(match quantity {
                    Quantity::DkExponent => ExtReal::Finite(s.dk_exponent(r)?),
                    Quantity::SpherePackingSc => s.sphere_packing_sc(r)?,
                    Quantity::SpherePackingErr => s.sphere_packing_err(r)?,
                    _ => ExtReal::Finite(s.capacity()),
                });
            }
        }
    }
    Ok(ExponentCurve {
        quantity,
        channel_digest: w.digest(),
        points: rates
            .iter()
            .zip(values)
            .map(|(&rate, value)| CurvePoint { rate, value })
            .collect(),
    })
}

/// Formats `v` with 9 significant digits, plain notation when the exponent
/// is moderate, trailing zeros removed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("exponent digits");
    if (-5..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mant, e) = sci.split_at(sci.find('e').expect("exponent"));
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}{e}")
    }
}

fn format_cell(v: &ExtReal) -> String {
    match v {
        ExtReal::Infinite => INF_TOKEN.to_string(),
        ExtReal::Finite(x) => format_sig9(*x),
    }
}

fn parse_cell(s: &str, what: &str) -> Result<ExtReal> {
    if s == INF_TOKEN {
        return Ok(ExtReal::Infinite);
    }
    let lower = s.to_ascii_lowercase();
    if lower.contains("inf") || lower.contains("nan") {
        return Err(Error::Parse(format!("{what}: `{s}` is not a number")));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: `{s}` is not a number")))?;
    Ok(ExtReal::Finite(v))
}

/// A rate column plus one column per quantity, as stored in CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub quantities: Vec<Quantity>,
    pub rates: Vec<f64>,
    /// `columns[k][i]` is quantity `k` at `rates[i]`.
    pub columns: Vec<Vec<ExtReal>>,
}

impl CurveFile {
    /// Joins curves sampled on the same rate grid.
    pub fn from_curves(curves: &[ExponentCurve]) -> Result<Self> {
        let rates = curves.first().map(|c| c.rates()).unwrap_or_default();
        for c in curves {
            if c.rates() != rates {
                return Err(Error::Validation("curves are sampled on different rate grids".into()));
            }
        }
        Ok(CurveFile {
            quantities: curves.iter().map(|c| c.quantity).collect(),
            rates,
            columns: curves.iter().map(|c| c.values()).collect(),
        })
    }

    /// Splits back into curves labelled with `channel_digest`.
    pub fn to_curves(&self, channel_digest: &str) -> Vec<ExponentCurve> {
        self.quantities
            .iter()
            .zip(&self.columns)
            .map(|(&quantity, col)| ExponentCurve {
                quantity,
                channel_digest: channel_digest.to_string(),
                points: self
                    .rates
                    .iter()
                    .zip(col)
                    .map(|(&rate, &value)| CurvePoint { rate, value })
                    .collect(),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("R");
        for q in &self.quantities {
            out.push(',');
            out.push_str(q.tag());
        }
        out.push('\n');
        for (i, r) in self.rates.iter().enumerate() {
            out.push_str(&format_sig9(*r));
            for col in &self.columns {
                out.push(',');
                out.push_str(&format_cell(&col[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the CSV written by [`CurveFile::to_csv`].
pub fn parse_curve_csv(text: &str) -> Result<CurveFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty curve file".into()))?;
    let mut names = header.split(',').map(str::trim);
    if names.next() != Some("R") {
        return Err(Error::Parse("first column must be `R`".into()));
    }
    let quantities = names.map(Quantity::from_str).collect::<Result<Vec<_>>>()?;
    let mut rates = Vec::new();
    let mut columns = vec![Vec::new(); quantities.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != quantities.len() + 1 {
            return Err(Error::Parse(format!(
                "row {}: expected {} columns, found {}",
                i + 1,
                quantities.len() + 1,
                cells.len()
            )));
        }
        match parse_cell(cells[0], "rate")? {
            ExtReal::Finite(r) => rates.push(r),
            ExtReal::Infinite => return Err(Error::Parse(format!("row {}: infinite rate", i + 1))),
        }
        for (col, cell) in columns.iter_mut().zip(&cells[1..]) {
            col.push(parse_cell(cell, "value")?);
        }
    }
    validate_rate_grid(&rates).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(CurveFile {
        quantities,
        rates,
        columns,
    })
}
