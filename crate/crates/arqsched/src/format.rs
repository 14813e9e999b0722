//! Output formats: reward-curve CSV, episode-trace CSV and the reference
//! lines plotted next to the curves.

use std::io::{self, Write};

use arqsched_core::policy::{classify_system, threshold_l, SystemType, ThresholdL};
use arqsched_core::sim::EpisodeTrace;
use arqsched_core::{RewardVector, State, TransitionMatrix};
use serde::Serialize;

pub const CURVES_HEADER: &str = "k,r1,r2,r3";
pub const TRACE_HEADER: &str = "slot,s1,s2,action,feedback,reward,belief1,belief2";

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `k,r1,r2,r3` for `k = 0..=k_max`.
pub fn write_curves<W: Write>(mut out: W, p: &TransitionMatrix, alpha: &RewardVector, k_max: usize) -> io::Result<()> {
    let curves = State::ALL.map(|s| p.reward_curve(alpha, s, k_max));
    writeln!(out, "{CURVES_HEADER}")?;
    let rows = curves[0].iter().zip(&curves[1]).zip(&curves[2]);
    for (k, ((r1, r2), r3)) in rows.enumerate() {
        writeln!(out, "{k},{},{},{}", sig12(*r1), sig12(*r2), sig12(*r3))?;
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
#[error("malformed curves CSV at line {line}: {reason}")]
pub struct MalformedCsv {
    pub line: usize,
    pub reason: String,
}

/// Parses curve CSV back into `(k, [r1, r2, r3])` rows.
pub fn parse_curves(text: &str) -> Result<Vec<(usize, [f64; 3])>, MalformedCsv> {
    let err = |line, reason: &str| MalformedCsv { line, reason: reason.into() };
    let mut lines = text.lines();
    if lines.next() != Some(CURVES_HEADER) {
        return Err(err(1, "expected header k,r1,r2,r3"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(err(n, "expected 4 fields"));
        }
        let k: usize = fields[0].parse().map_err(|_| err(n, "bad lag"))?;
        if k != rows.len() {
            return Err(err(n, "lags must count up from 0"));
        }
        let mut r = [0.0; 3];
        for (slot, field) in r.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|_| err(n, "bad reward"))?;
        }
        rows.push((k, r));
    }
    Ok(rows)
}

/// Writes one CSV row per slot of `trace`.
pub fn write_trace<W: Write>(mut out: W, trace: &EpisodeTrace) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.slot,
            r.states[0],
            r.states[1],
            r.action,
            r.feedback,
            sig12(r.reward),
            r.beliefs[0],
            r.beliefs[1]
        )?;
    }
    out.flush()
}

/// Horizontal reference lines for a curve plot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefLines {
    #[serde(rename = "type")]
    pub system: SystemType,
    /// `p_ss alpha`.
    pub steady_reward: f64,
    /// `p_2 alpha`.
    pub p2_reward: f64,
    /// Crossover lag; absent for type II systems.
    pub threshold_l: Option<ThresholdL>,
}

impl RefLines {
    pub fn new(p: &TransitionMatrix, alpha: &RewardVector) -> Self {
        RefLines {
            system: classify_system(p, alpha),
            steady_reward: p.steady_reward(alpha),
            p2_reward: p.row_reward(State::S2, alpha),
            threshold_l: threshold_l(p, alpha).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use arqsched_core::sim::{SimConfig, SimPolicy, Simulator};

    const P_A: [[f64; 3]; 3] = [[0.8, 0.15, 0.05], [0.1, 0.7, 0.2], [0.05, 0.15, 0.8]];

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(123456.789), "123456.789");
        assert_eq!(sig12(1.5e-7), "1.5e-07");
        assert_eq!(sig12(-0.25), "-0.25");
        assert_eq!(sig12(0.99999999999999), "1");
        assert_eq!(sig12(1e15), "1e+15");
    }

    #[test]
    fn curves_round_trip() {
        let p = TransitionMatrix::new(P_A).unwrap();
        let alpha = RewardVector::normalized(0.5).unwrap();
        let mut buf = Vec::new();
        write_curves(&mut buf, &p, &alpha, 64).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 66);
        let rows = parse_curves(&text).unwrap();
        assert_eq!(rows.len(), 65);
        let exact = p.reward_curve(&alpha, State::S3, 64);
        for (k, r) in rows {
            assert!((r[2] - exact[k]).abs() <= 1e-12);
        }
        assert!(parse_curves("k,r1,r2\n").is_err());
        assert!(parse_curves("k,r1,r2,r3\n1,0,0,0\n").is_err());
    }

    #[test]
    fn trace_rows_render_beliefs() {
        let p = TransitionMatrix::new(P_A).unwrap();
        let cfg =
            SimConfig::new(p, RewardVector::normalized(0.5).unwrap(), SimPolicy::GreedyStructured).with_horizon(4);
        let trace = Simulator::new(cfg).unwrap().run_episode(0);
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 8);
        assert_eq!((first[0], first[3], first[6], first[7]), ("0", "1", "S", "S"));
        assert!(first[4].starts_with('F'));
        let second: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(second[6], format!("{}@0", first[4].trim_start_matches('F')));
    }

    #[test]
    fn reference_lines_follow_the_system_type() {
        let p = TransitionMatrix::new(P_A).unwrap();
        let one = RefLines::new(&p, &RewardVector::normalized(0.9).unwrap());
        assert_eq!(one.system, SystemType::TypeI);
        assert!(one.p2_reward > one.steady_reward);
        assert_eq!(one.threshold_l, Some(ThresholdL::Finite(3)));
        let two = RefLines::new(&p, &RewardVector::normalized(0.5).unwrap());
        assert!(two.p2_reward < two.steady_reward);
        assert_eq!(two.threshold_l, None);
    }
}
