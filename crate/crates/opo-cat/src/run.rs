//! Subcommand implementations. Every file is written atomically (temp +
//! rename) with a config-hash comment so sweep merges stay deterministic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use opo_core::closed_form::{detection_formulas, dplus_wigner_form, shifted_thermal_pmf};
use opo_core::conditioning::{
    assemble_cat_and_mixture, conditional_blocks, herald_45basis, to_dpm_and_condition, CatAssembly,
    CatKind, ConditionalBlocks, POLARIZATION_SUCCESS,
};
use opo_core::detection::{
    detection_record, phi_grid, photon_distributions, quadrature_marginals, MarginalAxis, WignerSource,
};
use opo_core::fock::{evolve_rho, initial_three_mode_rho, FockBasis, FockDensityMatrix, Ladder, Liouvillian};
use opo_core::gaussian::{stability, steady_state, DriftConfig};
use opo_core::phase_space::SystemParams;

use crate::config::RunConfig;
use crate::fmt::g12;
use crate::report::{ComparisonReport, ReportFormat};
use crate::{CliError, SweepTarget};

const N_WORD: [(usize, Ladder); 2] = [(0, Ladder::Create), (0, Ladder::Annihilate)];

/// Cutoff for modes 2 and 3 at which the self-consistent equilibrium
/// passes its covariance verification with margin.
pub fn recommended_cutoff(nbar: f64) -> usize {
    if nbar <= 0.12 {
        8
    } else if nbar <= 0.3 {
        10
    } else if nbar <= 0.55 {
        12
    } else if nbar <= 0.8 {
        14
    } else {
        16
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// Atomic write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("cannot rename to {}: {e}", path.display())))
}

fn csv_header(hash: &str, columns: &str) -> String {
    format!("# config-hash={hash}\n{columns}\n")
}

/// The heralding pipeline shared by `cat`, `detect`, and `check`:
/// equilibrium → tensor with the trigger vacuum → evolve to t = 1 →
/// conditional blocks.
struct HeraldedRun {
    rho: FockDensityMatrix,
    blocks: ConditionalBlocks,
    params: SystemParams,
}

fn heralded_run(cfg: &RunConfig) -> Result<HeraldedRun, CliError> {
    let params = cfg.params()?;
    let basis =
        FockBasis::new(&cfg.cutoffs).map_err(CliError::Domain)?;
    let rho0 = initial_three_mode_rho(&params, &basis).map_err(CliError::Domain)?;
    let lv = Liouvillian::three_mode(&params, basis).map_err(CliError::Domain)?;
    let dt = lv.suggested_dt().min(0.25);
    let rho = evolve_rho(&rho0, &lv, 1.0, dt).map_err(CliError::Domain)?;
    let blocks = conditional_blocks(&rho).map_err(CliError::Domain)?;
    Ok(HeraldedRun { rho, blocks, params })
}

fn assembly_from(run: &HeraldedRun) -> Result<CatAssembly, CliError> {
    assemble_cat_and_mixture(run.blocks.clone()).map_err(CliError::Domain)
}

/// `stability`: eigenvalue CSV plus threshold flags.
pub fn run_stability(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let params = cfg.params()?;
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;

    let rep6 = stability(&params, DriftConfig::Full6);
    let rep4 = stability(&params, DriftConfig::Opo4);
    let mut text = csv_header(&hash, "config,index,re,im,stable,unstable,threshold_margin");
    for (label, rep) in [("full6", &rep6), ("opo4", &rep4)] {
        for (i, z) in rep.eigenvalues.iter().enumerate() {
            text.push_str(&format!(
                "{label},{i},{},{},{},{},{}\n",
                g12(z.re),
                g12(z.im),
                rep.stable,
                !rep.stable,
                g12(rep.threshold_margin)
            ));
        }
    }
    let path = cfg.outputs.join("stability.csv");
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// `steady`: covariance + N̄ + purity as JSON.
pub fn run_steady(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let params = cfg.params()?;
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;

    let (state, nbar) = steady_state(&params).map_err(CliError::Domain)?;
    let purity = state.purity().map_err(CliError::Domain)?;
    let cov: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| state.cov()[(i, j)]).collect())
        .collect();
    let doc = serde_json::json!({
        "config_hash": hash,
        "ratio": params.ratio(),
        "nbar": nbar,
        "purity": purity,
        "covariance": cov,
        "ordering": "x2,y2,x3,y3",
    });
    let path = cfg.outputs.join("steady.json");
    write_atomic(&path, serde_json::to_string_pretty(&doc).expect("json").as_bytes())?;
    Ok(path)
}

/// `cat`: herald probabilities and block moments as JSON; optional binary
/// dump of the evolved three-mode density matrix.
pub fn run_cat(cfg: &RunConfig, dump_rho: bool) -> Result<PathBuf, CliError> {
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;
    let run = heralded_run(cfg)?;
    let nbar = cfg.nbar_value()?;

    let n0 = run.blocks.rho0.moment(&N_WORD).map_err(CliError::Domain)?.re / run.blocks.trace0;
    let n1 = run.blocks.rho1.moment(&N_WORD).map_err(CliError::Domain)?.re / run.blocks.trace1;
    let a_int = run.blocks.rho_int.moment(&[(0, Ladder::Annihilate)]).map_err(CliError::Domain)?;
    let doc = serde_json::json!({
        "config_hash": hash,
        "nbar_target": nbar,
        "ratio": run.params.ratio(),
        "trace0": run.blocks.trace0,
        "trace1": run.blocks.trace1,
        "p_herald": run.blocks.trace0 * run.blocks.trace1,
        "p_polarization": POLARIZATION_SUCCESS,
        "trace1_formula": cfg.chi1_t * cfg.chi1_t * (nbar + 1.0),
        "n2_rho0": n0,
        "n2_rho0_formula": nbar,
        "n2_rho1": n1,
        "n2_rho1_formula": 2.0 * nbar + 1.0,
        "a2_int_re": a_int.re,
        "a2_int_formula": cfg.chi1_t * (nbar + 1.0),
        "trace_rho_int": run.blocks.rho_int.trace().norm(),
    });
    let path = cfg.outputs.join("cat.json");
    write_atomic(&path, serde_json::to_string_pretty(&doc).expect("json").as_bytes())?;

    if dump_rho {
        let mut buf = Vec::new();
        run.rho.write_dump(&mut buf).map_err(CliError::Domain)?;
        write_atomic(&cfg.outputs.join("rho123.bin"), &buf)?;
    }
    Ok(path)
}

/// `detect`: DetectionRecord CSV for the cat and for the mixture.
pub fn run_detect(cfg: &RunConfig) -> Result<(PathBuf, PathBuf), CliError> {
    let run = heralded_run(cfg)?;
    detect_outputs(cfg, &run)
}

fn detect_outputs(cfg: &RunConfig, run: &HeraldedRun) -> Result<(PathBuf, PathBuf), CliError> {
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;
    let assembly = assembly_from(run)?;
    let grid = phi_grid(cfg.phi_points);

    let mut paths = Vec::new();
    for (kind, name) in [(CatKind::Cat, "detect_cat.csv"), (CatKind::Mixture, "detect_mixture.csv")] {
        let rec = detection_record(&assembly, &grid, kind).map_err(CliError::Domain)?;
        let mut buf = Vec::new();
        buf.extend_from_slice(format!("# config-hash={hash}\n").as_bytes());
        rec.write_csv(&mut buf, g12).map_err(CliError::Domain)?;
        let path = cfg.outputs.join(name);
        write_atomic(&path, &buf)?;
        paths.push(path);
    }

    // Photon-number distributions alongside the fringes.
    let (p_h, p_v, p) = photon_distributions(&assembly).map_err(CliError::Domain)?;
    let mut text = csv_header(&hash, "n,p_h,p_v,p,p_h_formula");
    let nbar = cfg.nbar_value()?;
    for n in 0..p.len() {
        text.push_str(&format!(
            "{n},{},{},{},{}\n",
            g12(p_h[n]),
            g12(p_v[n]),
            g12(p[n]),
            g12(shifted_thermal_pmf(nbar, n))
        ));
    }
    write_atomic(&cfg.outputs.join("photon_distributions.csv"), text.as_bytes())?;

    Ok((paths.remove(0), paths.remove(0)))
}

/// `wigner`: normalized closed-form W(x, y) grid for the conditioned d₊
/// mode plus both quadrature marginals, and the oracle origin value for
/// reference.
pub fn run_wigner(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;
    let params = cfg.params()?;
    let amps = cfg.amplitudes()?;
    let nbar = cfg.nbar_value()?;
    let form = dplus_wigner_form(params.ratio(), &amps)
        .map_err(CliError::Domain)?
        .normalized()
        .map_err(CliError::Domain)?;

    let g = &cfg.grid;
    let step = (g.xmax - g.xmin) / (g.n - 1) as f64;
    let mut text = csv_header(&hash, "x,y,w");
    for i in 0..g.n {
        let x = g.xmin + i as f64 * step;
        for j in 0..g.n {
            let y = g.xmin + j as f64 * step;
            text.push_str(&format!("{},{},{}\n", g12(x), g12(y), g12(form.wigner(x, y))));
        }
    }
    let path = cfg.outputs.join("wigner.csv");
    write_atomic(&path, text.as_bytes())?;

    let axis_grid: Vec<f64> = (0..g.n).map(|i| g.xmin + i as f64 * step).collect();
    let range = 3.0 + 2.0 * nbar.sqrt();
    for (axis, name) in [(MarginalAxis::X, "marginal_x.csv"), (MarginalAxis::Y, "marginal_y.csv")] {
        let density = quadrature_marginals(&form, axis, &axis_grid, range);
        let mut text = csv_header(&hash, "q,p_density");
        for (q, d) in axis_grid.iter().zip(&density) {
            text.push_str(&format!("{},{}\n", g12(*q), g12(*d)));
        }
        write_atomic(&cfg.outputs.join(name), text.as_bytes())?;
    }

    // Oracle origin value of the conditioned d₊ state, for reference.
    let run = heralded_run(cfg)?;
    let rho1_45 = herald_45basis(&run.rho).map_err(CliError::Domain)?;
    let (d_plus, p_cond) = to_dpm_and_condition(&rho1_45, &amps).map_err(CliError::Domain)?;
    let w0 = d_plus.wigner_single(&[(0.0, 0.0)]).map_err(CliError::Domain)?[0];
    let doc = serde_json::json!({
        "config_hash": hash,
        "oracle_w_origin": w0,
        "closed_form_w_origin_unnormalized":
            opo_core::closed_form::dplus_wigner(params.ratio(), &amps, 0.0, 0.0),
        "p_condition": p_cond,
    });
    write_atomic(
        &cfg.outputs.join("wigner_origin.json"),
        serde_json::to_string_pretty(&doc).expect("json").as_bytes(),
    )?;
    Ok(path)
}

/// `check`: oracle vs closed forms at the configured N̄. Returns whether
/// every row passed.
pub fn run_check(cfg: &RunConfig, format: ReportFormat) -> Result<bool, CliError> {
    let hash = cfg.fingerprint();
    ensure_dir(&cfg.outputs)?;
    let nbar = cfg.nbar_value()?;
    let run = heralded_run(cfg)?;
    let assembly = assembly_from(&run)?;
    let f0 = detection_formulas(nbar, 0.0);

    let mut report = ComparisonReport::default();

    // Steady state: oracle moments of the equilibrium block.
    let eq23 = run.blocks.rho0.normalized().map_err(CliError::Domain)?;
    let n_eq = eq23.moment(&N_WORD).map_err(CliError::Domain)?.re;
    report.push("steady_nbar", nbar, n_eq, 0.02);
    let purity_oracle: f64 = {
        let d = eq23.basis().dim();
        let mut p = 0.0;
        for n in 0..d {
            for m in 0..d {
                p += eq23.get(n, m).norm_sqr();
            }
        }
        p
    };
    report.push("purity", 1.0 - run.params.ratio().powi(2), purity_oracle, 0.02);

    // Herald blocks.
    report.push(
        "herald_trace1",
        cfg.chi1_t * cfg.chi1_t * (nbar + 1.0),
        run.blocks.trace1,
        0.02,
    );
    let n0 = run.blocks.rho0.moment(&N_WORD).map_err(CliError::Domain)?.re / run.blocks.trace0;
    let n1 = run.blocks.rho1.moment(&N_WORD).map_err(CliError::Domain)?.re / run.blocks.trace1;
    report.push("n2_rho0", nbar, n0, 0.02);
    report.push("n2_rho1", 2.0 * nbar + 1.0, n1, 0.02);

    // Fringes and coherence at φ = 0, plus grid visibilities.
    let grid = phi_grid(cfg.phi_points);
    let rec_cat = detection_record(&assembly, &grid, CatKind::Cat).map_err(CliError::Domain)?;
    let (mix0, _) =
        opo_core::detection::interference_counts(&assembly, 0.0, CatKind::Mixture).map_err(CliError::Domain)?;
    report.push("mix_counts", f0.mix_counts, mix0, 0.02);
    report.push("cat_counts_phi0", f0.cat_counts, rec_cat.counts_c[0], 0.02);
    // "within 0.01" at visibility 0.6 translates to 1/60 relative.
    report.push("visibility", f0.visibility, rec_cat.visibility, 0.01 / f0.visibility);
    report.push("cc2_phi0", f0.cc2, rec_cat.cc2[0], 0.02);
    report.push("dd2_phi0", f0.dd2, rec_cat.dd2[0], 0.02);
    report.push("ccdd_phi0", f0.ccdd, rec_cat.ccdd[0], 0.02);
    report.push("g1_phi0", f0.g1, rec_cat.g1[0], 0.02);
    report.push("g2_phi0", f0.g2, rec_cat.g2[0], 0.02);
    let cc2_max = rec_cat.cc2.iter().cloned().fold(f64::MIN, f64::max);
    let cc2_min = rec_cat.cc2.iter().cloned().fold(f64::MAX, f64::min);
    report.push("corr_visibility", f0.corr_visibility, (cc2_max - cc2_min) / (cc2_max + cc2_min), 0.02);

    // Photodetection: total-variation distance to the shifted thermal law.
    let (p_h, _, _) = photon_distributions(&assembly).map_err(CliError::Domain)?;
    let mut tv = 0.0;
    for (n, ph) in p_h.iter().enumerate() {
        tv += 0.5 * (ph - shifted_thermal_pmf(nbar, n)).abs();
    }
    tv += 0.5 * (p_h.len()..400).map(|n| shifted_thermal_pmf(nbar, n)).sum::<f64>();
    report.push("ph_tv_distance", 0.0, tv, 1e-2);

    // Wigner origin ratio against the N̄ = 0 reference run.
    let origin = |r: &FockDensityMatrix| -> Result<f64, CliError> {
        let rho1 = herald_45basis(r).map_err(CliError::Domain)?;
        let mixed = rho1.apply_balanced_mix(0, 1).map_err(CliError::Domain)?;
        Ok(mixed.wigner_two(&[[0.0; 4]]).map_err(CliError::Domain)?[0])
    };
    let w_n = origin(&run.rho)?;
    let mut cfg0 = cfg.clone();
    cfg0.nbar = Some(0.0);
    cfg0.chi2_t = None;
    cfg0.cutoffs = [2, 6, 6];
    let run0 = heralded_run(&cfg0)?;
    let w_0 = origin(&run0.rho)?;
    report.push(
        "wigner_origin_ratio",
        1.0 / ((2.0 * nbar + 1.0) * (nbar + 1.0)),
        w_n / w_0,
        0.05,
    );

    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
        ReportFormat::Text => "txt",
    };
    let mut buf = Vec::new();
    report.emit(&mut buf, format, &hash)?;
    write_atomic(&cfg.outputs.join(format!("check.{ext}")), &buf)?;

    // Mirror the summary on stdout.
    let mut stdout_buf = Vec::new();
    report.emit(&mut stdout_buf, ReportFormat::Text, &hash)?;
    std::io::stdout().write_all(&stdout_buf).map_err(|e| CliError::Io(e.to_string()))?;

    Ok(report.all_pass())
}

/// One sweep-point summary row.
struct SweepRow {
    nbar: f64,
    columns: Vec<(String, String)>,
}

/// `sweep`: run a target over an N̄ grid; each point writes its own
/// subdirectory, and a summary CSV is merged in grid order afterwards.
pub fn run_sweep(
    cfg: &RunConfig,
    nbar_grid: &[f64],
    target: SweepTarget,
    workers: usize,
) -> Result<PathBuf, CliError> {
    if nbar_grid.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty nbar grid".into()));
    }
    ensure_dir(&cfg.outputs)?;

    let point_cfg = |idx: usize, nbar: f64| -> RunConfig {
        let mut c = cfg.clone();
        c.nbar = Some(nbar);
        c.chi2_t = None;
        // Keep the cavity-mode cutoffs adequate for every grid point.
        let rec = recommended_cutoff(nbar);
        c.cutoffs[1] = c.cutoffs[1].max(rec);
        c.cutoffs[2] = c.cutoffs[2].max(rec);
        c.outputs = cfg.outputs.join(format!("sweep_{idx:03}"));
        c
    };

    let run_point = |idx: usize, nbar: f64| -> Result<SweepRow, CliError> {
        let c = point_cfg(idx, nbar);
        c.validate()?;
        let mut columns: Vec<(String, String)> = Vec::new();
        match target {
            SweepTarget::Steady => {
                run_steady(&c)?;
                let params = c.params()?;
                let (state, nbar_out) = steady_state(&params).map_err(CliError::Domain)?;
                columns.push(("nbar_out".into(), g12(nbar_out)));
                columns.push(("purity".into(), g12(state.purity().map_err(CliError::Domain)?)));
            }
            SweepTarget::Stability => {
                run_stability(&c)?;
                let rep = stability(&c.params()?, DriftConfig::Opo4);
                let min_re = rep.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                columns.push(("min_re_lambda".into(), g12(min_re)));
                columns.push(("stable".into(), rep.stable.to_string()));
            }
            SweepTarget::Detect => {
                let run = heralded_run(&c)?;
                detect_outputs(&c, &run)?;
                let assembly = assembly_from(&run)?;
                let grid = phi_grid(c.phi_points);
                let rec = detection_record(&assembly, &grid, CatKind::Cat).map_err(CliError::Domain)?;
                let f = detection_formulas(nbar, 0.0);
                columns.push(("visibility".into(), g12(rec.visibility)));
                columns.push(("visibility_formula".into(), g12(f.visibility)));
                columns.push(("g1_phi0".into(), g12(rec.g1[0])));
                columns.push(("g2_phi0".into(), g12(rec.g2[0])));
                columns.push(("subpoissonian_phi0".into(), rec.subpoissonian[0].to_string()));
            }
            SweepTarget::Check => {
                let pass = run_check(&c, ReportFormat::Csv)?;
                columns.push(("all_pass".into(), pass.to_string()));
            }
        }
        Ok(SweepRow { nbar, columns })
    };

    // Independent points, fixed assignment, results merged in index order.
    let indexed: Vec<(usize, f64)> = nbar_grid.iter().cloned().enumerate().collect();
    let mut results: Vec<Option<Result<SweepRow, CliError>>> = Vec::new();
    results.resize_with(indexed.len(), || None);

    std::thread::scope(|scope| {
        let chunks: Vec<Vec<(usize, f64)>> = (0..workers)
            .map(|w| indexed.iter().skip(w).step_by(workers).cloned().collect())
            .collect();
        let mut handles = Vec::new();
        for chunk in chunks {
            handles.push(scope.spawn(move || {
                chunk
                    .into_iter()
                    .map(|(idx, nbar)| (idx, run_point(idx, nbar)))
                    .collect::<Vec<_>>()
            }));
        }
        for h in handles {
            for (idx, res) in h.join().expect("sweep worker panicked") {
                results[idx] = Some(res);
            }
        }
    });

    let mut rows = Vec::new();
    for res in results.into_iter() {
        rows.push(res.expect("every sweep point assigned")?);
    }

    let hash = cfg.fingerprint();
    let column_names: Vec<String> = rows[0].columns.iter().map(|(k, _)| k.clone()).collect();
    let mut text = csv_header(&hash, &format!("index,nbar,{}", column_names.join(",")));
    for (idx, row) in rows.iter().enumerate() {
        let values: Vec<String> = row.columns.iter().map(|(_, v)| v.clone()).collect();
        text.push_str(&format!("{idx},{},{}\n", g12(row.nbar), values.join(",")));
    }
    let path = cfg.outputs.join("sweep_summary.csv");
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
