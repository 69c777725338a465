use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use orifield::linalg::Matrix2;
use orifield::monogenic::{
    cropped_structure_tensor, estimate_hurst, max_scale, wavelet_pyramid, windowed_orientation_field,
    RadialProfile,
};
use orifield::raster::{read_channels, write_pgm};
use orifield::synth::{synthesize, Interpolation, SynthOptions};
use orifield::tensor::{
    closed_form_tensor, deformed_orientation, orientation_of, structure_tensor_quadrature, DEFAULT_DEGENERACY_TOL,
    DEFAULT_QUADRATURE_NODES,
};
use orifield::{AnisotropySpec, FieldModel, Grid, StructureTensor};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{inline_or_file, sig12, with_suffix, write_snapshot, Globals};

#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    /// Model JSON: a file path or an inline object.
    #[arg(long, value_parser = raw_json_arg)]
    pub model: Option<Value>,
    /// Raster side (power of two, at least 8).
    #[arg(long)]
    pub n: Option<usize>,
    /// Left/bottom edge of the square domain.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Right/top edge of the square domain.
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<f64>,
    /// Output stem inside the output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Also write an 8-bit PGM preview.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pgm: Option<bool>,
    /// Side of the frequency lattice.
    #[arg(long)]
    pub freq_n: Option<usize>,
    /// Period of the FFT method in units of the domain side.
    #[arg(long)]
    pub period_factor: Option<usize>,
    /// Cap on direct-summation work (operations).
    #[arg(long)]
    pub op_cap: Option<u64>,
    /// Margin of the base grid of warped fields.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Interpolation of warped fields: bilinear or bicubic.
    #[arg(long)]
    pub interpolation: Option<String>,
    /// Side of the base grid of warped fields.
    #[arg(long)]
    pub base_n: Option<usize>,
    /// Upper bound on the automatic base grid side.
    #[arg(long)]
    pub max_base_n: Option<usize>,
}

/// Keeps the argument as a string; [`inline_or_file`] decides later.
fn raw_json_arg(s: &str) -> std::result::Result<Value, String> {
    Ok(Value::String(s.to_string()))
}

fn interpolation(s: &str) -> Result<Interpolation> {
    match s {
        "bilinear" => Ok(Interpolation::Bilinear),
        "bicubic" => Ok(Interpolation::Bicubic),
        _ => bail!("unknown interpolation '{s}' (bilinear, bicubic)"),
    }
}

pub fn synth(g: &Globals, args: SynthArgs) -> Result<Value> {
    let Some(model_src) = &args.model else { bail!("synth needs --model") };
    let model_json = inline_or_file(model_src)?;
    let model = FieldModel::from_json(&model_json.to_string()).context("invalid model")?;
    let defaults = SynthOptions::default();
    let resolved = SynthArgs {
        model: Some(serde_json::to_value(&model)?),
        n: Some(args.n.unwrap_or(256)),
        x0: Some(args.x0.unwrap_or(0.0)),
        x1: Some(args.x1.unwrap_or(1.0)),
        out: Some(args.out.clone().unwrap_or_else(|| "field".into())),
        pgm: Some(args.pgm.unwrap_or(false)),
        freq_n: args.freq_n,
        period_factor: Some(args.period_factor.unwrap_or(defaults.period_factor)),
        op_cap: Some(args.op_cap.unwrap_or(defaults.op_cap)),
        margin: Some(args.margin.unwrap_or(defaults.margin)),
        interpolation: Some(args.interpolation.clone().unwrap_or_else(|| "bilinear".into())),
        base_n: args.base_n,
        max_base_n: Some(args.max_base_n.unwrap_or(defaults.max_base_n)),
    };
    let grid = Grid::square(resolved.n.unwrap(), resolved.x0.unwrap(), resolved.x1.unwrap())?;
    let opts = SynthOptions {
        freq_n: resolved.freq_n,
        period_factor: resolved.period_factor.unwrap(),
        op_cap: resolved.op_cap.unwrap(),
        margin: resolved.margin.unwrap(),
        interpolation: interpolation(resolved.interpolation.as_deref().unwrap())?,
        base_n: resolved.base_n,
        max_base_n: resolved.max_base_n.unwrap(),
        base_grid: None,
    };
    let stem = g.out_dir.join(resolved.out.as_deref().unwrap());
    let t = Instant::now();
    info!("synthesizing {} on {}² with seed {}", model.name(), grid.n, g.seed);
    let real = synthesize(&model, &grid, g.seed, &opts)?;
    let elapsed = t.elapsed().as_secs_f64();
    real.save(&stem)?;
    let mut files = vec![with_suffix(&stem, ".f64"), with_suffix(&stem, ".json")];
    if resolved.pgm == Some(true) {
        let p = with_suffix(&stem, ".pgm");
        write_pgm(&p, &real.values)?;
        files.push(p);
    }
    files.push(write_snapshot(&stem, "synth", g, &resolved)?);
    let (lo, hi) = real.values.min_max();
    Ok(json!({
        "model": model.name(),
        "n": grid.n,
        "seed": g.seed,
        "synthesis": real.params,
        "min": sig12(lo),
        "max": sig12(hi),
        "max_imag_residue": sig12(real.max_imag_residue),
        "elapsed_s": sig12(elapsed),
        "files": files,
    }))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    /// Raster stem (`<stem>.f64` with its `<stem>.json` sidecar).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Wavelet scales, comma separated (0 is the finest).
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<u32>>,
    /// Radial profile: simoncelli or meyer.
    #[arg(long)]
    pub profile: Option<String>,
    /// Gaussian window of the per-pixel orientation field, in pixels.
    #[arg(long)]
    pub window: Option<f64>,
    /// Scale of the per-pixel orientation field.
    #[arg(long)]
    pub field_scale: Option<u32>,
    /// Central fraction of each side averaged by the global estimates.
    #[arg(long)]
    pub crop: Option<f64>,
    /// Output stem inside the output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Also write a colour-coded PPM of the orientation field.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ppm: Option<bool>,
}

fn strip_raster_ext(p: &Path) -> PathBuf {
    match p.extension().and_then(|e| e.to_str()) {
        Some("f64") | Some("json") => p.with_extension(""),
        _ => p.to_path_buf(),
    }
}

fn tensor_json(j: &StructureTensor) -> Value {
    let o = orientation_of(j, DEFAULT_DEGENERACY_TOL).ok();
    json!({
        "tensor": [sig12(j.j11), sig12(j.j12), sig12(j.j22)],
        "trace": sig12(j.trace()),
        "angle": o.map(|o| sig12(o.angle)),
        "angle_deg": o.map(|o| sig12(o.angle.to_degrees())),
        "coherency": o.map_or(0.0, |o| sig12(o.coherency)),
        "degenerate": o.is_none_or(|o| o.degenerate),
    })
}

pub fn analyze(g: &Globals, args: AnalyzeArgs) -> Result<Value> {
    let Some(input) = &args.input else { bail!("analyze needs --input") };
    let input = strip_raster_ext(input);
    let (channels, sidecar) = read_channels(&input)?;
    let image = &channels[0];
    let n = image.n();
    let top = max_scale(n);
    let scales = args.scales.clone().unwrap_or_else(|| (0..=top.min(2)).collect());
    if scales.is_empty() {
        bail!("at least one scale is needed");
    }
    let profile: RadialProfile = args.profile.as_deref().unwrap_or("simoncelli").parse()?;
    let crop = args.crop.unwrap_or(1.0);
    let default_out = format!("{}.analysis", input.file_name().and_then(|s| s.to_str()).unwrap_or("raster"));
    let resolved = AnalyzeArgs {
        input: Some(input.clone()),
        scales: Some(scales.clone()),
        profile: Some(profile.name().into()),
        window: args.window,
        field_scale: args.window.map(|_| args.field_scale.unwrap_or(*scales.iter().min().expect("non-empty"))),
        crop: Some(crop),
        out: Some(args.out.clone().unwrap_or(default_out)),
        ppm: Some(args.ppm.unwrap_or(false)),
    };
    let stem = g.out_dir.join(resolved.out.as_deref().unwrap());
    let mut all = scales.clone();
    if let Some(s) = resolved.field_scale {
        all.push(s);
    }
    all.sort_unstable();
    all.dedup();
    let pyr = wavelet_pyramid(image, &all, profile)?;
    let mut per_scale = Vec::new();
    for &s in &scales {
        let j = cropped_structure_tensor(&pyr, s, crop)?;
        let mut v = tensor_json(&j);
        v["scale"] = json!(s);
        per_scale.push(v);
    }
    // The finest requested scale gives the headline orientation.
    let finest = *scales.iter().min().expect("non-empty");
    let head = cropped_structure_tensor(&pyr, finest, crop)?;
    let (hurst, hurst_note) = match estimate_hurst(&pyr, &scales) {
        Ok(h) => (Some(sig12(h)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut files = Vec::new();
    let mut field = Value::Null;
    if let (Some(w), Some(fs)) = (resolved.window, resolved.field_scale) {
        let f = windowed_orientation_field(&pyr, fs, w)?;
        let fstem = with_suffix(&stem, ".orientation");
        f.save(&fstem)?;
        files.extend([with_suffix(&fstem, ".f64"), with_suffix(&fstem, ".json")]);
        if resolved.ppm == Some(true) {
            let p = with_suffix(&fstem, ".ppm");
            f.save_ppm(&p)?;
            files.push(p);
        }
        let st = f.axial_stats(crop);
        field = json!({
            "scale": fs,
            "window": w,
            "valid_pixels": st.count,
            "mean_angle": sig12(st.mean),
            "mean_angle_deg": sig12(st.mean.to_degrees()),
            "axial_std_deg": sig12(st.std.to_degrees()),
        });
    }
    let mut summary = tensor_json(&head);
    let extra = json!({
        "input": input,
        "n": n,
        "profile": profile.name(),
        "crop": crop,
        "image_power": sig12(pyr.image_power),
        "scales": per_scale,
        "hurst": hurst,
        "hurst_note": hurst_note,
        "orientation_field": field,
        "model": sidecar.model,
        "seed": sidecar.seed,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut summary, extra) {
        a.extend(b);
    }
    let spath = with_suffix(&stem, ".summary.json");
    std::fs::write(&spath, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(spath);
    files.push(write_snapshot(&stem, "analyze", g, &resolved)?);
    summary["files"] = json!(files);
    Ok(summary)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct TensorArgs {
    /// Anisotropy JSON: a file path or an inline object.
    #[arg(long, value_parser = raw_json_arg)]
    pub spec: Option<Value>,
    /// Linear map L, row major: `a,b,c,d`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub matrix: Option<Vec<f64>>,
    /// Gauss–Legendre nodes of the quadrature.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Also write `<out>.json` and a snapshot into the output directory.
    #[arg(long)]
    pub out: Option<String>,
}

pub fn tensor(g: &Globals, args: TensorArgs) -> Result<Value> {
    let Some(src) = &args.spec else { bail!("tensor needs --spec") };
    let spec = AnisotropySpec::from_json(&inline_or_file(src)?.to_string()).context("invalid anisotropy")?;
    let nodes = args.nodes.unwrap_or(DEFAULT_QUADRATURE_NODES);
    let matrix = match args.matrix.as_deref() {
        None => None,
        Some(&[a, b, c, d]) => Some(Matrix2::new(a, b, c, d)),
        Some(v) => bail!("--matrix needs 4 entries, got {}", v.len()),
    };
    let j = structure_tensor_quadrature(&spec, nodes)?;
    let mut out = tensor_json(&j);
    out["quadrature"] = out["tensor"].take();
    if let Value::Object(m) = &mut out {
        m.remove("tensor");
    }
    out["nodes"] = json!(nodes);
    out["closed_form"] = match closed_form_tensor(&spec) {
        Some(c) => json!([sig12(c.j11), sig12(c.j12), sig12(c.j22)]),
        None => Value::Null,
    };
    if let Ok(o) = orientation_of(&j, DEFAULT_DEGENERACY_TOL) {
        out["direction"] = json!([sig12(o.direction[0]), sig12(o.direction[1])]);
        if let Some(l) = matrix {
            let d = deformed_orientation(o.direction, &l)?;
            let a = d[1].atan2(d[0]);
            let a = if a > PI / 2.0 { a - PI } else if a <= -PI / 2.0 { a + PI } else { a };
            out["deformed"] = json!({
                "matrix": [l.m[0][0], l.m[0][1], l.m[1][0], l.m[1][1]],
                "direction": [sig12(d[0]), sig12(d[1])],
                "angle": sig12(a),
                "angle_deg": sig12(a.to_degrees()),
            });
        }
    }
    if let Some(name) = &args.out {
        let stem = g.out_dir.join(name);
        let resolved = TensorArgs { spec: Some(serde_json::to_value(&spec)?), matrix: args.matrix.clone(), nodes: Some(nodes), out: Some(name.clone()) };
        let path = with_suffix(&stem, ".json");
        std::fs::write(&path, serde_json::to_string_pretty(&out)? + "\n")?;
        write_snapshot(&stem, "tensor", g, &resolved)?;
    }
    Ok(out)
}
