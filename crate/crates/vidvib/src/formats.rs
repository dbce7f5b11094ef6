//! CSV and JSON artefacts. Every number is written with six significant digits so
//! identical runs produce identical bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use vidvib_core::band::{ModeBand, OdsProfile};
use vidvib_core::displacement::{DisplacementSignal, Units};
use vidvib_core::features::FeatureSet;
use vidvib_core::multipoint::FrequencyMap;
use vidvib_core::spectral::{ModeEstimate, Spectrum};

/// `x` with six significant digits, `%g` style, without trailing zeros.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

/// `x` rounded to six significant digits, for JSON output.
pub fn round6(x: f64) -> f64 {
    fmt6(x).parse().unwrap_or(x)
}

pub fn signal_csv(signal: &DisplacementSignal) -> String {
    let mut s = String::from("t_s,dx,dy,units\n");
    let units = signal.units.as_str();
    for t in 0..signal.len() {
        let _ = writeln!(
            s,
            "{},{},{},{units}",
            fmt6(t as f64 / signal.fps),
            fmt6(signal.dx[t]),
            fmt6(signal.dy[t])
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTable {
    pub t_s: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub units: Units,
}

impl SignalTable {
    /// Sample rate implied by the time column.
    pub fn rate(&self) -> Option<f64> {
        let n = self.t_s.len();
        (n >= 2 && self.t_s[n - 1] > self.t_s[0])
            .then(|| (n - 1) as f64 / (self.t_s[n - 1] - self.t_s[0]))
    }
}

pub fn parse_signal_csv(text: &str) -> Result<SignalTable, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty signal file")?;
    if header.trim() != "t_s,dx,dy,units" {
        return Err(format!("unexpected header `{header}`, expected `t_s,dx,dy,units`"));
    }
    let mut table = SignalTable {
        t_s: Vec::new(),
        dx: Vec::new(),
        dy: Vec::new(),
        units: Units::Px,
    };
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(format!("row {}: expected 4 columns", i + 1));
        }
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("row {}: `{v}` is not a number", i + 1))
        };
        table.t_s.push(num(cols[0])?);
        table.dx.push(num(cols[1])?);
        table.dy.push(num(cols[2])?);
        table.units = match cols[3] {
            "px" => Units::Px,
            "mm" => Units::Mm,
            other => return Err(format!("row {}: unknown units `{other}`", i + 1)),
        };
    }
    Ok(table)
}

pub fn features_csv(set: &FeatureSet) -> String {
    let mut s = String::from("x,y,score\n");
    for f in &set.points {
        let _ = writeln!(s, "{},{},{}", f.x, f.y, fmt6(f.score));
    }
    s
}

pub fn frequency_map_csv(map: &FrequencyMap) -> String {
    let mut s = String::from("x,y,freq_hz\n");
    for e in &map.entries {
        let _ = writeln!(s, "{},{},{}", e.point.x, e.point.y, fmt6(e.freq_hz));
    }
    s
}

pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut s = String::from("freq_hz,magnitude\n");
    for (f, m) in spec.freqs_hz.iter().zip(&spec.mag) {
        let _ = writeln!(s, "{},{}", fmt6(*f), fmt6(*m));
    }
    s
}

pub fn ods_csv(ods: &OdsProfile) -> String {
    let mut s = String::from("position_index,x,y,value\n");
    for (i, (p, v)) in ods.positions.iter().zip(&ods.values).enumerate() {
        let _ = writeln!(s, "{i},{},{},{}", p.x, p.y, fmt6(*v));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub rank: usize,
    pub freq_hz: f64,
    pub snr: f64,
    pub magnitude: f64,
}

impl From<&ModeEstimate> for ModeRecord {
    fn from(m: &ModeEstimate) -> Self {
        ModeRecord {
            rank: m.rank,
            freq_hz: round6(m.freq_hz),
            snr: round6(m.snr),
            magnitude: round6(m.magnitude),
        }
    }
}

pub fn modes_json(modes: &[ModeEstimate]) -> String {
    let records: Vec<ModeRecord> = modes.iter().map(ModeRecord::from).collect();
    to_json(&records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub mode_rank: usize,
    pub mu_hz: f64,
    pub sigma_hz: f64,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl From<&ModeBand> for BandRecord {
    fn from(b: &ModeBand) -> Self {
        BandRecord {
            mode_rank: b.mode.rank,
            mu_hz: round6(b.band.mu_hz),
            sigma_hz: round6(b.band.sigma_hz),
            lo_hz: round6(b.band.lo_hz),
            hi_hz: round6(b.band.hi_hz),
        }
    }
}

/// Bands of one named region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiBands {
    pub roi: String,
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    pub bands: Vec<BandRecord>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(0.0), "0");
        assert_eq!(fmt6(-0.0), "0");
        assert_eq!(fmt6(2.67), "2.67");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(123456.7), "123457");
        assert_eq!(fmt6(999999.7), "1e6");
        assert_eq!(fmt6(1234567.0), "1.23457e6");
        assert_eq!(fmt6(0.000012345678), "1.23457e-5");
        assert_eq!(fmt6(-0.5), "-0.5");
        assert_eq!(fmt6(-1e-7), "-1e-7");
        assert_eq!(fmt6(60.0), "60");
    }

    #[test]
    fn signal_round_trip() {
        let sig = DisplacementSignal {
            point: vidvib_core::Point::new(1, 2),
            dx: vec![0.0, 0.125, -0.25],
            dy: vec![0.0, 1.0, 2.0],
            units: Units::Mm,
            fps: 4.0,
            gaps: 0,
        };
        let table = parse_signal_csv(&signal_csv(&sig)).unwrap();
        assert_eq!(table.dx, sig.dx);
        assert_eq!(table.dy, sig.dy);
        assert_eq!(table.units, Units::Mm);
        assert_eq!(table.rate(), Some(4.0));
        assert!(parse_signal_csv("a,b\n").is_err());
    }
}
