//! Descriptive cell summaries, the 2x2 successive-differences contrast
//! fit on log durations, and a Kolmogorov-Smirnov normality check.
//!
//! The contrast coding fixes +0.5 = High on both factors, so a high-overlap
//! facilitation (shorter durations) shows up as a negative coefficient.
//! The fit is ordinary least squares with classical standard errors; a
//! by-subject aggregated variant (one mean per subject per cell) is
//! provided to approximate subject clustering.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stimgen::CellLabel;

/// Mean and standard error of one condition cell, untransformed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub condition: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

/// Per-condition mean and SE (= SD/sqrt(n), sample SD). Conditions listed
/// in `conditions` but absent from the data get an n=0 summary; an empty
/// list summarizes the observed conditions.
pub fn summarize_cells(rows: &[(String, f64)], conditions: &[String]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in conditions {
        groups.entry(c.as_str()).or_default();
    }
    for (c, v) in rows {
        if conditions.is_empty() || groups.contains_key(c.as_str()) {
            groups.entry(c.as_str()).or_default().push(*v);
        }
    }
    groups
        .into_iter()
        .map(|(condition, values)| {
            let n = values.len();
            if n == 0 {
                return CellSummary { condition: condition.to_string(), n, mean: None, se: None };
            }
            let mean = values.iter().sum::<f64>() / n as f64;
            let se = if n >= 2 {
                let var =
                    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                Some(var.sqrt() / (n as f64).sqrt())
            } else {
                None
            };
            CellSummary { condition: condition.to_string(), n, mean: Some(mean), se }
        })
        .collect()
}

/// Successive-differences codes (-0.5 / +0.5) for the two CA factors plus
/// their elementwise product as the interaction column.
#[derive(Debug, Clone)]
pub struct ContrastDesign {
    rows: Vec<[f64; 3]>,
}

impl ContrastDesign {
    pub fn codes(label: CellLabel) -> [f64; 3] {
        let verb = if label.verb_high() { 0.5 } else { -0.5 };
        let adj = if label.adjective_high() { 0.5 } else { -0.5 };
        [verb, adj, verb * adj]
    }

    pub fn from_labels(labels: &[CellLabel]) -> ContrastDesign {
        ContrastDesign {
            rows: labels.iter().map(|&l| Self::codes(l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub const TERMS: [&str; 4] = ["intercept", "verb_ca", "adjective_ca", "interaction"];

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub term: &'static str,
    pub b: f64,
    pub se: f64,
    pub t: f64,
    /// SE was zero, t reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: Vec<Coefficient>,
    pub residuals: Vec<f64>,
    pub sigma2: f64,
    pub n: usize,
}

fn invert4(mut a: [[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for col in 0..4 {
        let mut piv = col;
        for r in col + 1..4 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..4 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..4 {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// OLS fit of log durations on [1, verb, adjective, verb*adjective].
pub fn fit_contrasts(y: &[f64], design: &ContrastDesign) -> Result<FitResult> {
    if y.len() != design.len() {
        return Err(Error::InvalidInput(format!(
            "{} responses vs {} design rows",
            y.len(),
            design.len()
        )));
    }
    let n = y.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 observations, got {n}"
        )));
    }
    let mut xtx = [[0.0f64; 4]; 4];
    let mut xty = [0.0f64; 4];
    for (row, &yi) in design.rows.iter().zip(y) {
        let x = [1.0, row[0], row[1], row[2]];
        for i in 0..4 {
            for j in 0..4 {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * yi;
        }
    }
    let inv = invert4(xtx).ok_or(Error::SingularDesign)?;
    let mut b = [0.0f64; 4];
    for i in 0..4 {
        for j in 0..4 {
            b[i] += inv[i][j] * xty[j];
        }
    }
    let mut residuals = Vec::with_capacity(n);
    let mut rss = 0.0;
    for (row, &yi) in design.rows.iter().zip(y) {
        let x = [1.0, row[0], row[1], row[2]];
        let pred: f64 = (0..4).map(|i| b[i] * x[i]).sum();
        let r = yi - pred;
        rss += r * r;
        residuals.push(r);
    }
    let df = (n - 4) as f64;
    let sigma2 = (rss / df).max(0.0);
    let coefficients = (0..4)
        .map(|i| {
            let se = (sigma2 * inv[i][i].max(0.0)).sqrt();
            let (t, degenerate) = if se > 0.0 { (b[i] / se, false) } else { (0.0, true) };
            Coefficient { term: TERMS[i], b: b[i], se, t, degenerate }
        })
        .collect();
    Ok(FitResult { coefficients, residuals, sigma2, n })
}

/// Aggregates to one mean per subject per cell, then fits the same design.
pub fn fit_contrasts_by_subject(rows: &[(String, CellLabel, f64)]) -> Result<FitResult> {
    let mut cells: BTreeMap<(&str, CellLabel), (f64, usize)> = BTreeMap::new();
    for (subject, label, v) in rows {
        let e = cells.entry((subject.as_str(), *label)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let mut labels = Vec::with_capacity(cells.len());
    let mut y = Vec::with_capacity(cells.len());
    for ((_, label), (sum, n)) in cells {
        labels.push(label);
        y.push(sum / n as f64);
    }
    fit_contrasts(&y, &ContrastDesign::from_labels(&labels))
}

/// One-sample Kolmogorov-Smirnov test against a normal with the sample's
/// own mean and SD, asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub d: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn ks_normality(residuals: &[f64]) -> Result<KsTest> {
    let n = residuals.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!(
            "need at least 5 residuals, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(Error::InvalidInput("zero-variance residuals".into()));
    }
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = residuals.iter().map(|r| (r - mean) / sd).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut d = 0.0f64;
    for (i, z) in sorted.iter().enumerate() {
        let cdf = normal.cdf(*z);
        let upper = (i + 1) as f64 / nf - cdf;
        let lower = cdf - i as f64 / nf;
        d = d.max(upper).max(lower);
    }
    let p_value = kolmogorov_sf(nf.sqrt() * d);
    Ok(KsTest { d, p_value, n })
}

/// Asymptotic Kolmogorov survival function
/// Q(lambda) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2),
/// truncated when terms drop below 1e-10.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=1000 {
        let term = (-2.0 * (j as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Full per-measure analysis: log transform, cell-mean residual trimming,
/// untransformed summaries, pooled and by-subject contrast fits, and the
/// normality check on the pooled residuals.
#[derive(Debug, Clone)]
pub struct MeasureAnalysis {
    pub measure: String,
    pub n_input: usize,
    pub n_trimmed: usize,
    pub residual_sd: f64,
    pub untrimmed_groups: Vec<String>,
    pub summaries: Vec<CellSummary>,
    pub fit: Option<FitResult>,
    pub fit_by_subject: Option<FitResult>,
    pub ks: Option<KsTest>,
}

/// `rows` are (subject, item, condition, duration_ms). Inference runs on
/// natural-log durations; the summaries stay in milliseconds. Rows whose
/// condition is not one of the four design cells are summarized but left
/// out of the fits.
pub fn analyze_measure(
    measure: &str,
    rows: &[(String, String, String, f64)],
    trim_k: f64,
) -> Result<MeasureAnalysis> {
    for (_, _, _, v) in rows {
        if *v <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "{measure}: non-positive duration {v}"
            )));
        }
    }
    let logged: Vec<(String, f64)> = rows
        .iter()
        .map(|(_, _, c, v)| (c.clone(), v.ln()))
        .collect();
    let trim = crate::eyemeasures::trim_outliers(&logged, trim_k);
    let retained: Vec<&(String, String, String, f64)> = rows
        .iter()
        .zip(&trim.retained)
        .filter(|(_, &keep)| keep)
        .map(|(r, _)| r)
        .collect();

    let summary_rows: Vec<(String, f64)> = retained
        .iter()
        .map(|(_, _, c, v)| (c.clone(), *v))
        .collect();
    let conditions: Vec<String> = CellLabel::ALL.iter().map(|l| l.as_str().to_string()).collect();
    let summaries = summarize_cells(&summary_rows, &conditions);

    let mut labels = Vec::new();
    let mut y = Vec::new();
    let mut by_subject = Vec::new();
    for (subject, _, condition, v) in &retained {
        if let Some(label) = CellLabel::parse(condition) {
            labels.push(label);
            y.push(v.ln());
            by_subject.push((subject.clone(), label, v.ln()));
        }
    }
    let distinct = {
        let mut l = labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    };
    let (fit, fit_by_subject, ks) = if y.len() >= 5 && distinct == 4 {
        let fit = fit_contrasts(&y, &ContrastDesign::from_labels(&labels))?;
        let ks = ks_normality(&fit.residuals).ok();
        let fit_subject = fit_contrasts_by_subject(&by_subject).ok();
        (Some(fit), fit_subject, ks)
    } else {
        (None, None, None)
    };

    Ok(MeasureAnalysis {
        measure: measure.to_string(),
        n_input: rows.len(),
        n_trimmed: trim.removed.len(),
        residual_sd: trim.residual_sd,
        untrimmed_groups: trim.untrimmed_groups,
        summaries,
        fit,
        fit_by_subject,
        ks,
    })
}

/// Summary table rows: `measure condition n mean se`.
pub fn write_table3_tsv<W: std::io::Write>(
    analyses: &[MeasureAnalysis],
    mut w: W,
) -> Result<()> {
    writeln!(w, "#table3")?;
    for a in analyses {
        for s in &a.summaries {
            let fmt_opt = |v: Option<f64>| v.map_or("NA".to_string(), crate::tsv::fmt_f64);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                a.measure,
                s.condition,
                s.n,
                fmt_opt(s.mean),
                fmt_opt(s.se)
            )?;
        }
    }
    Ok(())
}

/// Coefficient table rows: `measure fit term b se t degenerate`.
pub fn write_table4_tsv<W: std::io::Write>(
    analyses: &[MeasureAnalysis],
    mut w: W,
) -> Result<()> {
    writeln!(w, "#table4")?;
    for a in analyses {
        for (fit_name, fit) in [("pooled", &a.fit), ("by_subject", &a.fit_by_subject)] {
            let Some(fit) = fit else { continue };
            for c in &fit.coefficients {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    a.measure,
                    fit_name,
                    c.term,
                    crate::tsv::fmt_f64(c.b),
                    crate::tsv::fmt_f64(c.se),
                    crate::tsv::fmt_f64(c.t),
                    if c.degenerate { 1 } else { 0 }
                )?;
            }
        }
    }
    Ok(())
}

/// Trim and normality diagnostics:
/// `measure n_input n_trimmed residual_sd ks_d ks_p untrimmed_groups`.
pub fn write_diagnostics_tsv<W: std::io::Write>(
    analyses: &[MeasureAnalysis],
    mut w: W,
) -> Result<()> {
    writeln!(w, "#diagnostics")?;
    for a in analyses {
        let (d, p) = a
            .ks
            .map_or(("NA".to_string(), "NA".to_string()), |k| {
                (crate::tsv::fmt_f64(k.d), crate::tsv::fmt_f64(k.p_value))
            });
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            a.measure,
            a.n_input,
            a.n_trimmed,
            crate::tsv::fmt_f64(a.residual_sd),
            d,
            p,
            a.untrimmed_groups.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::ContinuousCDF;

    fn labels_2x2(per_cell: usize) -> Vec<CellLabel> {
        let mut out = Vec::new();
        for label in CellLabel::ALL {
            out.extend(std::iter::repeat_n(label, per_cell));
        }
        out
    }

    #[test]
    fn summary_of_constant_cell() {
        let rows: Vec<(String, f64)> =
            (0..3).map(|_| ("HH".to_string(), 235.0)).collect();
        let s = summarize_cells(&rows, &[]);
        assert_eq!(s[0].n, 3);
        assert_eq!(s[0].mean, Some(235.0));
        assert_eq!(s[0].se, Some(0.0));
    }

    #[test]
    fn summary_se_hand_value() {
        let rows = vec![("LL".to_string(), 200.0), ("LL".to_string(), 300.0)];
        let s = summarize_cells(&rows, &[]);
        assert_eq!(s[0].mean, Some(250.0));
        // SD = 70.71..., SE = SD / sqrt(2) = 50
        assert_relative_eq!(s[0].se.unwrap(), 50.0, epsilon = 1e-12);
    }

    #[test]
    fn summary_empty_cell_reported() {
        let rows = vec![("HH".to_string(), 1.0)];
        let conds: Vec<String> = ["HH", "HL"].iter().map(|s| s.to_string()).collect();
        let s = summarize_cells(&rows, &conds);
        let hl = s.iter().find(|c| c.condition == "HL").unwrap();
        assert_eq!(hl.n, 0);
        assert_eq!(hl.mean, None);
    }

    #[test]
    fn contrast_columns_orthogonal_on_balanced_design() {
        let design = ContrastDesign::from_labels(&labels_2x2(10));
        for i in 0..3 {
            let sum: f64 = design.rows.iter().map(|r| r[i]).sum();
            assert_eq!(sum, 0.0);
            for j in (i + 1)..3 {
                let dot: f64 = design.rows.iter().map(|r| r[i] * r[j]).sum();
                assert_eq!(dot, 0.0);
            }
        }
    }

    #[test]
    fn hand_solved_eight_observation_fit() {
        // cells HH (10, 12), HL (8, 9), LH (7, 7), LL (5, 6)
        let labels = vec![
            CellLabel::HH, CellLabel::HH,
            CellLabel::HL, CellLabel::HL,
            CellLabel::LH, CellLabel::LH,
            CellLabel::LL, CellLabel::LL,
        ];
        let y = [10.0, 12.0, 8.0, 9.0, 7.0, 7.0, 5.0, 6.0];
        let fit = fit_contrasts(&y, &ContrastDesign::from_labels(&labels)).unwrap();
        // orthogonal design: B = diag(X'X)^-1 X'y computed by hand
        // grand mean 8; verb effect 9.75 - 6.25; adjective 9 - 7;
        // interaction (11 - 8.5 - 7 + 5.5) / 1
        let b: Vec<f64> = fit.coefficients.iter().map(|c| c.b).collect();
        assert_relative_eq!(b[0], 8.0, epsilon = 1e-10);
        assert_relative_eq!(b[1], 3.5, epsilon = 1e-10);
        assert_relative_eq!(b[2], 2.0, epsilon = 1e-10);
        assert_relative_eq!(b[3], 1.0, epsilon = 1e-10);
        // RSS = 3.0 on 4 df => sigma2 = 0.75
        assert_relative_eq!(fit.sigma2, 0.75, epsilon = 1e-10);
        assert_relative_eq!(
            fit.coefficients[1].se,
            (0.75f64 / 2.0).sqrt(),
            epsilon = 1e-10
        );
        assert_relative_eq!(
            fit.coefficients[1].t,
            3.5 / (0.75f64 / 2.0).sqrt(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn main_effect_equals_cell_mean_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let labels = labels_2x2(25);
        let y: Vec<f64> = labels.iter().map(|_| rng.random_range(5.0..6.0)).collect();
        let fit = fit_contrasts(&y, &ContrastDesign::from_labels(&labels)).unwrap();
        let mean = |pred: &dyn Fn(CellLabel) -> bool| {
            let vals: Vec<f64> = labels
                .iter()
                .zip(&y)
                .filter(|(l, _)| pred(**l))
                .map(|(_, v)| *v)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let verb_diff = mean(&|l: CellLabel| l.verb_high()) - mean(&|l: CellLabel| !l.verb_high());
        assert_relative_eq!(fit.coefficients[1].b, verb_diff, epsilon = 1e-12);
    }

    #[test]
    fn constant_response_is_degenerate_with_zero_t() {
        let labels = labels_2x2(3);
        let y = vec![5.0; labels.len()];
        let fit = fit_contrasts(&y, &ContrastDesign::from_labels(&labels)).unwrap();
        for c in &fit.coefficients[1..] {
            assert_eq!(c.b, 0.0);
            assert_eq!(c.t, 0.0);
            assert!(c.degenerate);
        }
        assert_relative_eq!(fit.coefficients[0].b, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_design_is_singular() {
        // only HH and LL present: verb and adjective columns coincide
        let labels = vec![CellLabel::HH, CellLabel::HH, CellLabel::HH, CellLabel::LL, CellLabel::LL, CellLabel::LL];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(
            fit_contrasts(&y, &ContrastDesign::from_labels(&labels)),
            Err(Error::SingularDesign)
        ));
    }

    #[test]
    fn too_few_observations_rejected() {
        let labels = vec![CellLabel::HH, CellLabel::HL, CellLabel::LH, CellLabel::LL];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fit_contrasts(&y, &ContrastDesign::from_labels(&labels)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn facilitation_for_high_levels_gives_negative_coefficient() {
        // high verb overlap is 0.1 log units faster
        let labels = labels_2x2(20);
        let y: Vec<f64> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let base = 5.4 + 0.001 * (i % 7) as f64;
                if l.verb_high() { base - 0.1 } else { base }
            })
            .collect();
        let fit = fit_contrasts(&y, &ContrastDesign::from_labels(&labels)).unwrap();
        assert!(fit.coefficients[1].b < 0.0);
    }

    #[test]
    fn scale_shift_moves_only_the_intercept() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels = labels_2x2(30);
        let y: Vec<f64> = labels.iter().map(|_| 5.0 + rng.random_range(0.0..0.5)).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + 1000.0f64.ln()).collect();
        let f1 = fit_contrasts(&y, &ContrastDesign::from_labels(&labels)).unwrap();
        let f2 = fit_contrasts(&shifted, &ContrastDesign::from_labels(&labels)).unwrap();
        for i in 1..4 {
            assert_relative_eq!(
                f1.coefficients[i].b,
                f2.coefficients[i].b,
                epsilon = 1e-10
            );
        }
        assert_relative_eq!(
            f2.coefficients[0].b - f1.coefficients[0].b,
            1000.0f64.ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn by_subject_aggregation_matches_pooled_on_balanced_data() {
        // with equal cell sizes per subject the aggregated fit has the
        // same coefficient estimates
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        let mut labels = Vec::new();
        for s in 0..6 {
            for label in CellLabel::ALL {
                for r in 0..2 {
                    let v = 5.0
                        + 0.1 * s as f64
                        + if label.verb_high() { -0.05 } else { 0.05 }
                        + 0.01 * r as f64;
                    rows.push((format!("s{s}"), label, v));
                    ys.push(v);
                    labels.push(label);
                }
            }
        }
        let pooled = fit_contrasts(&ys, &ContrastDesign::from_labels(&labels)).unwrap();
        let by_subject = fit_contrasts_by_subject(&rows).unwrap();
        for i in 0..4 {
            assert_relative_eq!(
                pooled.coefficients[i].b,
                by_subject.coefficients[i].b,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn ks_near_normal_grid_has_high_p() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 100;
        let grid: Vec<f64> = (1..=n)
            .map(|i| normal.inverse_cdf(i as f64 / (n as f64 + 1.0)))
            .collect();
        let ks = ks_normality(&grid).unwrap();
        assert!(ks.d < 0.05, "d = {}", ks.d);
        assert!(ks.p_value > 0.9, "p = {}", ks.p_value);
    }

    #[test]
    fn ks_detects_uniform_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..1.0)).collect();
        let ks = ks_normality(&vals).unwrap();
        assert!(ks.p_value < 0.01, "p = {}", ks.p_value);
    }

    #[test]
    fn ks_needs_five_values() {
        assert!(matches!(
            ks_normality(&[0.1, 0.2, -0.1, 0.0]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn analyze_measure_trims_and_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut rows = Vec::new();
        for s in 0..8 {
            for label in CellLabel::ALL {
                for i in 0..5 {
                    let v = 240.0 + rng.random_range(-30.0..30.0);
                    rows.push((
                        format!("s{s}"),
                        format!("i{i}"),
                        label.as_str().to_string(),
                        v,
                    ));
                }
            }
        }
        // one wild outlier in HH
        rows.push(("s0".to_string(), "ix".to_string(), "HH".to_string(), 4000.0));
        let a = analyze_measure("ffd", &rows, 2.5).unwrap();
        assert_eq!(a.n_input, rows.len());
        assert_eq!(a.n_trimmed, 1);
        assert!(a.fit.is_some());
        assert!(a.ks.is_some());
        // summaries are on the millisecond scale
        let hh = a.summaries.iter().find(|s| s.condition == "HH").unwrap();
        assert!(hh.mean.unwrap() > 200.0);
    }
}
