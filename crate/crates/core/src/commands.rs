//! Subcommand bodies of the `ibrelay` binary. Each reads an
//! [`ExperimentSpec`] and writes CSV/SVG files into an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bounds::{oneshot_scheme_bounds, lossy_scheme_bounds, SecondOrderCurve};
use crate::error::{Error, Result};
use crate::experiment::{run_and_write, ExperimentSpec, Instance, SchemeSpec};
use crate::ibrd::{default_u_size, dispersion_quantities, solve_ib, solve_noisy_rd, DistortionMeasure};
use crate::prob::{mutual_information, JointPmf};
use crate::schemes::{NoisyVLConfig, NoisyVlScheme, RelayConfig, RelayScheme};

fn distortion_of(spec: &ExperimentSpec, p_xy: &JointPmf) -> Result<DistortionMeasure> {
    match &spec.scheme {
        SchemeSpec::NoisyVl { distortion: Some(d), .. } => Ok(d.clone()),
        _ => DistortionMeasure::hamming(p_xy.n_rows()),
    }
}

/// `C` values of the spec, or ten evenly spaced points in `(0, I(X;Y))`.
fn c_values(spec: &ExperimentSpec, p_xy: &JointPmf) -> Vec<f64> {
    if spec.grid.c.is_empty() {
        let i = mutual_information(p_xy);
        (1..=10).map(|k| i * k as f64 / 11.0).collect()
    } else {
        spec.grid.c.clone()
    }
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::bounds::csv_path_error(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct IbRow {
    c: f64,
    ib: f64,
    achieved_c: f64,
    lambda_star: f64,
}

pub fn ib_curve(spec: &ExperimentSpec, out: &Path) -> Result<PathBuf> {
    let p_xy = spec.instance.p_xy()?;
    let mut rows = Vec::new();
    for c in c_values(spec, &p_xy) {
        let s = solve_ib(&p_xy, c, default_u_size(&p_xy))?;
        rows.push(IbRow {
            c,
            ib: s.ib_bits,
            achieved_c: s.achieved_c_bits,
            lambda_star: s.lambda_star,
        });
    }
    let path = out.join("ib_curve.csv");
    write_rows(&rows, &path)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
struct DispersionRow {
    c: f64,
    distortion: f64,
    ib: f64,
    vib: Option<f64>,
    cvib: Option<f64>,
    rate: f64,
    v_tilde: Option<f64>,
    cv_tilde: Option<f64>,
}

pub fn dispersion(spec: &ExperimentSpec, out: &Path) -> Result<PathBuf> {
    let p_xy = spec.instance.p_xy()?;
    let d = distortion_of(spec, &p_xy)?;
    if spec.grid.distortion.is_empty() {
        return Err(Error::Config("dispersion needs at least one distortion level".into()));
    }
    let mut rows = Vec::new();
    for c in c_values(spec, &p_xy) {
        let ib = solve_ib(&p_xy, c, default_u_size(&p_xy))?;
        for &level in &spec.grid.distortion {
            let rd = solve_noisy_rd(&p_xy, &d, level, d.z_size())?;
            let ds = dispersion_quantities(&ib, &rd).ok();
            rows.push(DispersionRow {
                c,
                distortion: level,
                ib: ib.ib_bits,
                vib: ds.map(|s| s.vib),
                cvib: ds.map(|s| s.cvib),
                rate: rd.rate_bits,
                v_tilde: ds.map(|s| s.v_tilde),
                cv_tilde: ds.map(|s| s.cv_tilde),
            });
        }
    }
    let path = out.join("dispersion.csv");
    write_rows(&rows, &path)?;
    Ok(path)
}

/// Second-order curve at the first `(C, D)` of the spec over its `n` and
/// `ε` axes.
pub fn second_order_curve(spec: &ExperimentSpec) -> Result<SecondOrderCurve> {
    let p_xy = spec.instance.p_xy()?;
    let d = distortion_of(spec, &p_xy)?;
    let c = *c_values(spec, &p_xy).first().expect("nonempty");
    let level = *spec
        .grid
        .distortion
        .first()
        .ok_or_else(|| Error::Config("curves need a distortion level".into()))?;
    let ib = solve_ib(&p_xy, c, default_u_size(&p_xy))?;
    let rd = solve_noisy_rd(&p_xy, &d, level, d.z_size())?;
    let ds = dispersion_quantities(&ib, &rd)?;
    let ns: Vec<u64> = spec.grid.n.iter().map(|&n| n as u64).filter(|&n| n >= 2).collect();
    let eps = if spec.grid.eps.is_empty() { vec![0.1] } else { spec.grid.eps.clone() };
    SecondOrderCurve::build(&ib, &ds, &rd, &ns, &eps)
}

#[derive(Debug, Serialize)]
struct BoundRow {
    n: usize,
    c: Option<f64>,
    eps: Option<f64>,
    distortion: Option<f64>,
    #[serde(rename = "L")]
    l: Option<u64>,
    #[serde(rename = "K")]
    k: Option<u64>,
    pe_bound: Option<f64>,
    len_bound: Option<f64>,
    note: Option<String>,
}

/// Scheme guarantees per cell and, where defined, the second-order curve.
pub fn bounds(spec: &ExperimentSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let p_xy = spec.instance.p_xy()?;
    let mut rows = Vec::new();
    for cell in spec.cells() {
        let b = match &spec.scheme {
            SchemeSpec::NoisyVl { .. } => (|| {
                let d = distortion_of(spec, &p_xy)?;
                let level = cell.distortion.ok_or_else(|| Error::Config("missing distortion".into()))?;
                let eps = cell.eps.ok_or_else(|| Error::Config("missing eps".into()))?;
                let rd = solve_noisy_rd(&p_xy, &d, level, d.z_size())?;
                let reference = crate::prob::Pmf::normalized(d.z_alphabet().clone(), rd.z_marginal())?;
                let cfg = NoisyVLConfig::new(p_xy.clone(), d, level, eps, reference, cell.n);
                lossy_scheme_bounds(&NoisyVlScheme::new(cfg)?)
            })(),
            SchemeSpec::Relay { variant, kernel_u_given_y, beta, strengthen_threshold, .. } => (|| {
                let Instance::Channel { p_x, channel } = &spec.instance else {
                    return Err(Error::Config("relay bounds need p_x and channel".into()));
                };
                let c = cell.c.ok_or_else(|| Error::Config("missing C".into()))?;
                let k = match kernel_u_given_y {
                    Some(k) => k.clone(),
                    None => solve_ib(&p_xy, c.min(mutual_information(&p_xy)), default_u_size(&p_xy))?
                        .compacted()?
                        .kernel_u_given_y,
                };
                let mut cfg = RelayConfig::new(p_x.clone(), channel.clone(), k, cell.n, c, *variant);
                if let Some(l) = cell.l {
                    cfg.message_count = l;
                }
                if let Some(e) = cell.eps {
                    cfg.eps_prime = e;
                }
                cfg.fl_description_size = cell.k;
                cfg.beta = beta.clone();
                cfg.strengthen_threshold = *strengthen_threshold;
                oneshot_scheme_bounds(&RelayScheme::new(cfg)?)
            })(),
        };
        let (pe, len, note) = match b {
            Ok(b) => (Some(b.pe_bound), Some(b.len_bound), b.diagnostic),
            Err(e) => (None, None, Some(e.to_string())),
        };
        rows.push(BoundRow {
            n: cell.n,
            c: cell.c,
            eps: cell.eps,
            distortion: cell.distortion,
            l: cell.l,
            k: cell.k,
            pe_bound: pe,
            len_bound: len,
            note,
        });
    }
    let mut written = vec![out.join("bounds.csv")];
    write_rows(&rows, &written[0])?;
    if let Ok(curve) = second_order_curve(spec) {
        let p = out.join("curve.csv");
        curve.write_csv(&p)?;
        written.push(p);
    }
    Ok(written)
}

/// Runs the spec's Monte-Carlo sweep. `expect` restricts the scheme kind.
pub fn simulate(spec: &ExperimentSpec, out: &Path, expect: Option<&str>) -> Result<Vec<PathBuf>> {
    let kind = match spec.scheme {
        SchemeSpec::NoisyVl { .. } => "noisy-vl",
        SchemeSpec::Relay { .. } => "relay",
    };
    if let Some(e) = expect {
        if e != kind {
            return Err(Error::Config(format!("this subcommand needs a {e} scheme, the spec has {kind}")));
        }
    }
    let curve = if spec.outputs.plot_svg.is_some() { second_order_curve(spec).ok() } else { None };
    run_and_write(spec, Some(out), curve.as_ref())
}
