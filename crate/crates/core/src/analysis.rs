//! Campaign statistics over T1 record collections.
//!
//! Everything here is a pure function of its inputs. Records whose fit did
//! not converge are excluded from statistics and counted separately.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decay::gamma_qp_for_gap;
use crate::protocols::{ControlKind, T1Record};
use crate::{Error, Result};

/// Temperatures below this pin the residual rate, mK.
pub const LOW_TEMPERATURE_MK: f64 = 40.0;
/// Only temperatures at or above this enter the gap fit, mK.
pub const FIT_TEMPERATURE_MK: f64 = 135.0;
/// Gap search interval, GHz.
pub const GAP_SEARCH_GHZ: (f64, f64) = (10.0, 100.0);
const GAP_REL_TOL: f64 = 1e-4;

fn check_positive(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InsufficientData("empty list".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("values", format!("{v} is not a positive number")));
    }
    Ok(())
}

/// `n / Σ 1/x`.
pub fn harmonic_mean(values: &[f64]) -> Result<f64> {
    check_positive(values)?;
    let inv: f64 = values.iter().map(|x| 1.0 / x).sum();
    Ok(values.len() as f64 / inv)
}

/// Element k is the harmonic mean of the first k+1 values.
pub fn cumulative_hmean(values: &[f64]) -> Result<Vec<f64>> {
    check_positive(values)?;
    let mut inv = 0.0;
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, x)| {
            inv += 1.0 / x;
            (k + 1) as f64 / inv
        })
        .collect())
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("empty list".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("standard deviation needs two values".into()));
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// `(σ_FR / σ_AC)²`: how many independent qubits it would take to match the
/// spread reduction of one AC measurement.
pub fn n_effective(sigma_fr: f64, sigma_ac: f64) -> Result<f64> {
    if !(sigma_ac > 0.0) {
        return Err(Error::invalid("sigma_ac", "must be > 0"));
    }
    if !(sigma_fr >= 0.0) {
        return Err(Error::invalid("sigma_fr", "must be >= 0"));
    }
    Ok((sigma_fr / sigma_ac).powi(2))
}

/// `Q = 2π·f_q·T1` with f_q in GHz and T1 in µs.
pub fn quality_factor(f_q_ghz: f64, t1_us: f64) -> Result<f64> {
    if !(f_q_ghz > 0.0) {
        return Err(Error::invalid("f_q", "must be > 0"));
    }
    if !(t1_us > 0.0) {
        return Err(Error::invalid("t1", "must be > 0"));
    }
    Ok(2.0 * std::f64::consts::PI * f_q_ghz * 1e3 * t1_us)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_used: usize,
}

/// Ordinary least squares of Q against frequency. `excluded[i]` drops
/// point i; a missing entry means the point is kept.
pub fn fit_q_vs_frequency(points: &[(f64, f64)], excluded: &[bool]) -> Result<LinearFit> {
    let used: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.get(*i).copied().unwrap_or(false))
        .map(|(_, p)| *p)
        .collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs two points, {} left after exclusions",
            used.len()
        )));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all frequencies are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        n_used: used.len(),
    })
}

/// Slope of the least-squares line through the origin, `Σxy / Σx²`.
pub fn fit_sigma_vs_mu(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData("empty list".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0)) {
        return Err(Error::invalid("mu", format!("{} is not positive", p.0)));
    }
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    Ok(sxy / sxx)
}

/// Model evaluation at one input point of a temperature fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureResidual {
    pub temperature_mk: f64,
    pub t1_us: f64,
    pub model_t1_us: f64,
    /// Measured minus model rate, µs⁻¹.
    pub rate_residual: f64,
    pub used_in_fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    /// Residual rate, µs⁻¹.
    pub gamma0: f64,
    /// Fitted superconducting gap, GHz.
    pub gap_ghz: f64,
    /// False when the minimum sits on the edge of the search interval.
    pub converged: bool,
    pub residuals: Vec<TemperatureResidual>,
}

/// Fits `Γ(T) = Γ0 + Γ_qp(T; Δ)`. Γ0 is the mean rate implied by the
/// points below 40 mK (inverse of their mean T1); Δ minimizes the squared
/// rate error over the points at or above 135 mK.
pub fn fit_temperature_model(points: &[(f64, f64)], f_q: f64) -> Result<TemperatureFit> {
    if !(f_q > 0.0) {
        return Err(Error::invalid("f_q", "must be > 0"));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 >= 0.0 && p.1 > 0.0)) {
        return Err(Error::invalid("points", format!("({}, {}) is not a valid (T, T1) pair", p.0, p.1)));
    }
    let low: Vec<f64> = points.iter().filter(|p| p.0 < LOW_TEMPERATURE_MK).map(|p| p.1).collect();
    let high: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= FIT_TEMPERATURE_MK).collect();
    if low.is_empty() || high.is_empty() {
        return Err(Error::InsufficientData(format!(
            "need points below {LOW_TEMPERATURE_MK} mK and at or above {FIT_TEMPERATURE_MK} mK"
        )));
    }
    let gamma0 = 1.0 / mean(&low)?;
    let sse = |gap: f64| -> f64 {
        high.iter()
            .map(|&(t, t1)| {
                let model = gamma0 + gamma_qp_for_gap(t, f_q, gap).unwrap_or(f64::INFINITY);
                (1.0 / t1 - model).powi(2)
            })
            .sum()
    };
    let (lo, hi) = GAP_SEARCH_GHZ;
    let gap = golden_section(sse, lo, hi, GAP_REL_TOL);
    let edge = 2.0 * GAP_REL_TOL * gap;
    let converged = gap - lo > edge && hi - gap > edge;
    let residuals = points
        .iter()
        .map(|&(t, t1)| {
            let model = gamma0 + gamma_qp_for_gap(t, f_q, gap)?;
            Ok(TemperatureResidual {
                temperature_mk: t,
                t1_us: t1,
                model_t1_us: 1.0 / model,
                rate_residual: 1.0 / t1 - model,
                used_in_fit: t >= FIT_TEMPERATURE_MK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureFit {
        gamma0,
        gap_ghz: gap,
        converged,
        residuals,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > rel_tol * 0.5 * (a + b).abs() {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Summary of one control kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub kind: ControlKind,
    pub count: usize,
    pub excluded_count: usize,
    pub mean_us: Option<f64>,
    pub hmean_us: Option<f64>,
    pub std_us: Option<f64>,
}

impl KindStats {
    pub fn from_records<'a>(kind: ControlKind, records: impl IntoIterator<Item = &'a T1Record>) -> Self {
        let mut values = Vec::new();
        let mut excluded = 0;
        for r in records.into_iter().filter(|r| r.control.kind == kind) {
            match r.usable_t1() {
                Some(t1) => values.push(t1),
                None => excluded += 1,
            }
        }
        KindStats {
            kind,
            count: values.len(),
            excluded_count: excluded,
            mean_us: mean(&values).ok(),
            hmean_us: harmonic_mean(&values).ok(),
            std_us: sample_std(&values).ok(),
        }
    }
}

/// Final fast-random h-mean against the AC averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub fast_random_hmean_us: f64,
    pub ac_mean_us: f64,
    pub ac_hmean_us: f64,
    /// `hmean_FR / mean_AC − 1`.
    pub rel_to_ac_mean: f64,
    /// `hmean_FR / hmean_AC − 1`.
    pub rel_to_ac_hmean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindQuality {
    pub kind: ControlKind,
    pub q_mean: Option<f64>,
    pub q_hmean: Option<f64>,
}

/// AC measurements at one (vpp, f_ac) setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCellStats {
    pub vpp_v: f64,
    pub f_ac_hz: f64,
    pub slew_product_v_per_s: f64,
    pub count: usize,
    pub mean_us: Option<f64>,
    pub hmean_us: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitReport {
    pub qubit_id: String,
    pub f_q_ghz: f64,
    pub kinds: Vec<KindStats>,
    pub n_eff: Option<f64>,
    pub convergence: Option<Convergence>,
    pub quality: Vec<KindQuality>,
    pub ac_sweep: Vec<SweepCellStats>,
    pub temperature_fit: Option<TemperatureFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaMuFit {
    pub kind: ControlKind,
    pub slope: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config_hashes: Vec<String>,
    pub record_count: usize,
    pub qubits: Vec<QubitReport>,
    pub sigma_vs_mu: Vec<SigmaMuFit>,
    /// OLS of AC quality factor against frequency across qubits.
    pub q_vs_frequency: Option<LinearFit>,
    pub q_fit_excluded: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct AnalysisOptions {
    /// Permit records from several qubits in one report.
    pub allow_mixed: bool,
    /// Qubits left out of the Q-vs-frequency fit.
    pub exclude_from_q_fit: Vec<String>,
}

/// Groups records by qubit, in first-appearance order.
pub fn group_by_qubit(records: &[T1Record]) -> Vec<(String, Vec<&T1Record>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&T1Record>> = BTreeMap::new();
    for r in records {
        if !groups.contains_key(&r.qubit_id) {
            order.push(r.qubit_id.clone());
        }
        groups.entry(r.qubit_id.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|id| {
            let g = groups.remove(&id).unwrap_or_default();
            (id, g)
        })
        .collect()
}

fn present_kinds(records: &[&T1Record]) -> Vec<ControlKind> {
    ControlKind::ALL
        .into_iter()
        .filter(|k| records.iter().any(|r| r.control.kind == *k))
        .collect()
}

fn ac_sweep_cells(records: &[&T1Record]) -> Vec<SweepCellStats> {
    let mut cells: Vec<(f64, f64, Vec<f64>, usize)> = Vec::new();
    for r in records.iter().filter(|r| r.control.kind == ControlKind::Ac) {
        let (Some(vpp), Some(f)) = (r.control.vpp_v, r.control.f_ac_hz) else {
            continue;
        };
        let idx = match cells.iter().position(|c| c.0 == vpp && c.1 == f) {
            Some(i) => i,
            None => {
                cells.push((vpp, f, Vec::new(), 0));
                cells.len() - 1
            }
        };
        cells[idx].3 += 1;
        if let Some(t1) = r.usable_t1() {
            cells[idx].2.push(t1);
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    cells
        .into_iter()
        .map(|(vpp_v, f_ac_hz, v, _)| SweepCellStats {
            vpp_v,
            f_ac_hz,
            slew_product_v_per_s: vpp_v * f_ac_hz,
            count: v.len(),
            mean_us: mean(&v).ok(),
            hmean_us: harmonic_mean(&v).ok(),
        })
        .collect()
}

/// (T, T1) pairs for the temperature fit: AC records when any exist at
/// more than one temperature, otherwise every usable record.
pub fn temperature_points(records: &[&T1Record]) -> Vec<(f64, f64)> {
    let collect = |only_ac: bool| -> Vec<(f64, f64)> {
        records
            .iter()
            .filter(|r| !only_ac || r.control.kind == ControlKind::Ac)
            .filter_map(|r| r.usable_t1().map(|t1| (r.temperature_mk, t1)))
            .collect()
    };
    let ac = collect(true);
    let distinct = |pts: &[(f64, f64)]| {
        let mut t: Vec<f64> = pts.iter().map(|p| p.0).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t.len()
    };
    if distinct(&ac) > 1 {
        ac
    } else {
        collect(false)
    }
}

fn qubit_report(id: &str, records: &[&T1Record]) -> QubitReport {
    let f_q = records.first().map_or(0.0, |r| r.f_q_ghz);
    let kinds: Vec<KindStats> = present_kinds(records)
        .into_iter()
        .map(|k| KindStats::from_records(k, records.iter().copied()))
        .collect();
    let stats = |k: ControlKind| kinds.iter().find(|s| s.kind == k);
    let ac = stats(ControlKind::Ac);
    let fr = stats(ControlKind::FastRandom);
    let n_eff = match (fr.and_then(|s| s.std_us), ac.and_then(|s| s.std_us)) {
        (Some(sf), Some(sa)) => n_effective(sf, sa).ok(),
        _ => None,
    };
    let convergence = match (
        fr.and_then(|s| s.hmean_us),
        ac.and_then(|s| s.mean_us),
        ac.and_then(|s| s.hmean_us),
    ) {
        (Some(h), Some(m), Some(ah)) => Some(Convergence {
            fast_random_hmean_us: h,
            ac_mean_us: m,
            ac_hmean_us: ah,
            rel_to_ac_mean: h / m - 1.0,
            rel_to_ac_hmean: h / ah - 1.0,
        }),
        _ => None,
    };
    let quality = kinds
        .iter()
        .map(|s| KindQuality {
            kind: s.kind,
            q_mean: s.mean_us.and_then(|t| quality_factor(f_q, t).ok()),
            q_hmean: s.hmean_us.and_then(|t| quality_factor(f_q, t).ok()),
        })
        .collect();
    QubitReport {
        qubit_id: id.to_string(),
        f_q_ghz: f_q,
        kinds,
        n_eff,
        convergence,
        quality,
        ac_sweep: ac_sweep_cells(records),
        temperature_fit: fit_temperature_model(&temperature_points(records), f_q).ok(),
    }
}

/// Builds the campaign report. Fails on records from several qubits unless
/// `allow_mixed` is set.
pub fn analyze(records: &[T1Record], options: &AnalysisOptions) -> Result<AnalysisReport> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let groups = group_by_qubit(records);
    if groups.len() > 1 && !options.allow_mixed {
        let ids: Vec<&str> = groups.iter().map(|g| g.0.as_str()).collect();
        return Err(Error::invalid(
            "records",
            format!("mixed qubit ids ({}); pass --allow-mixed to merge", ids.join(", ")),
        ));
    }
    let mut hashes: Vec<String> = records.iter().map(|r| r.config_hash.clone()).collect();
    hashes.sort();
    hashes.dedup();

    let qubits: Vec<QubitReport> = groups.iter().map(|(id, g)| qubit_report(id, g)).collect();

    let sigma_vs_mu = ControlKind::ALL
        .into_iter()
        .filter_map(|kind| {
            let pts: Vec<(f64, f64)> = qubits
                .iter()
                .filter_map(|q| {
                    let mu = q.kinds.iter().find(|s| s.kind == ControlKind::Ac)?.mean_us?;
                    let sigma = q.kinds.iter().find(|s| s.kind == kind)?.std_us?;
                    Some((mu, sigma))
                })
                .collect();
            fit_sigma_vs_mu(&pts).ok().map(|slope| SigmaMuFit {
                kind,
                slope,
                n_points: pts.len(),
            })
        })
        .collect();

    let q_points: Vec<(f64, f64, bool)> = qubits
        .iter()
        .filter_map(|q| {
            let ac = q.quality.iter().find(|k| k.kind == ControlKind::Ac)?.q_mean?;
            Some((q.f_q_ghz, ac, options.exclude_from_q_fit.contains(&q.qubit_id)))
        })
        .collect();
    let pts: Vec<(f64, f64)> = q_points.iter().map(|p| (p.0, p.1)).collect();
    let excluded: Vec<bool> = q_points.iter().map(|p| p.2).collect();
    let q_vs_frequency = fit_q_vs_frequency(&pts, &excluded).ok();

    Ok(AnalysisReport {
        config_hashes: hashes,
        record_count: records.len(),
        qubits,
        sigma_vs_mu,
        q_vs_frequency,
        q_fit_excluded: options.exclude_from_q_fit.clone(),
    })
}
