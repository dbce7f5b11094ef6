//! Subcommands of the `vidvib` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vidvib_core::band::{extract_ods, magnify, mode_bands, FrequencyBand, DEFAULT_EPSILON};
use vidvib_core::displacement::{to_units, Axis, DisplacementSignal, Units};
use vidvib_core::features::{harris_corners, overlay_features, HarrisParams, Roi};
use vidvib_core::filter::{FilterParams, QuadratureBank, DEFAULT_SIGMA_PX};
use vidvib_core::multipoint::{
    dominant_frequency_map, mean_signal, mean_spectrum, measure_points, render_frequency_map,
    MeasureParams, Measurement, WeightKernel,
};
use vidvib_core::spectral::{
    fft_spectrum, nrmse, pick_modes, resample, ModeEstimate, ModePickParams, Window,
    MIN_SPECTRUM_LEN,
};
use vidvib_core::synth::{synthesize_rigid, Pattern};
use vidvib_core::{FrameSequence, Point};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::formats::{self, fmt6, round6, BandRecord, RoiBands};
use crate::io::{self, MANIFEST_NAME};

#[derive(Debug, Parser)]
#[command(name = "vidvib", version, about = "Phase-based vibration measurement from video")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic sequence of a pattern in sinusoidal motion.
    Synth(SynthArgs),
    /// Detect Harris corners on the first frame.
    Features(InputArgs),
    /// Displacement signals, spectrum, modes and frequency map of a region.
    Measure(MeasureArgs),
    /// Spectrum and modes of a displacement CSV.
    Spectrum(SpectrumArgs),
    /// Dominant frequency of every feature point.
    Map(InputArgs),
    /// Amplification bands for every mode of every region.
    Bands(BandsArgs),
    /// Magnify motion in a frequency band and extract the deflection shape.
    Magnify(MagnifyArgs),
    /// Compare a measured displacement CSV against a reference CSV.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// grating, checkerboard or blob.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Peak displacement in px; a comma list gives one tone per entry.
    #[arg(long)]
    pub amp: Option<String>,
    /// Tone frequencies in Hz, matching `--amp`.
    #[arg(long)]
    pub freq: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase0: Option<f64>,
    /// Direction of motion, degrees from the +x axis.
    #[arg(long, allow_hyphen_values = true)]
    pub direction_deg: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Duration in seconds.
    #[arg(long)]
    pub dur: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Grating wavelength, checker side or blob sigma, px.
    #[arg(long)]
    pub scale_px: Option<f64>,
    /// Luminance noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Physical scale recorded in the manifest.
    #[arg(long)]
    pub mm_per_px: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Manifest file or the directory holding `manifest.txt`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `x,y,w,h` or `name=x,y,w,h`; repeatable. The whole frame if omitted.
    #[arg(long)]
    pub roi: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quadrature filter scale, px.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Patch kernel: 3x3, 5x5, uniform-N or file:PATH.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Frequencies at or below this are ignored, Hz.
    #[arg(long)]
    pub f_min: Option<f64>,
    /// Overrides the manifest scale.
    #[arg(long)]
    pub mm_per_px: Option<f64>,
    #[arg(long)]
    pub harris_k: Option<f64>,
    #[arg(long)]
    pub harris_window: Option<f64>,
    #[arg(long)]
    pub harris_threshold: Option<f64>,
    #[arg(long)]
    pub nms_radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModeArgs {
    #[arg(long)]
    pub max_modes: Option<usize>,
    /// Minimum spacing of reported modes, Hz.
    #[arg(long)]
    pub min_sep: Option<f64>,
    /// rect or hann.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Also write one CSV per feature point.
    #[arg(long)]
    pub per_point: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Displacement CSV.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// x, y or auto.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub f_min: Option<f64>,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Band half-width in standard deviations.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MagnifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Explicit band `lo,hi` in Hz.
    #[arg(long)]
    pub band: Option<String>,
    /// Derive the band from the region's measured modes.
    #[arg(long)]
    pub auto: bool,
    /// Mode rank used with `--auto`.
    #[arg(long)]
    pub mode: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Deflection line `x0,y0,x1,y1`; defaults to the long centre line of the region.
    #[arg(long)]
    pub ods_line: Option<String>,
    #[arg(long)]
    pub ods_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Measured displacement CSV.
    pub a: Option<PathBuf>,
    /// Reference displacement CSV.
    pub b: Option<PathBuf>,
    /// x, y or auto.
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long)]
    pub f_min: Option<f64>,
    #[command(flatten)]
    pub modes: ModeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, &cfg),
        Command::Features(a) => cmd_features(&a, &cfg),
        Command::Measure(a) => cmd_measure(&a, &cfg),
        Command::Spectrum(a) => cmd_spectrum(&a, &cfg),
        Command::Map(a) => cmd_map(&a, &cfg),
        Command::Bands(a) => cmd_bands(&a, &cfg),
        Command::Magnify(a) => cmd_magnify(&a, &cfg),
        Command::Compare(a) => cmd_compare(&a, &cfg),
    }
}

/// Thread count from the flag or the config file.
pub fn resolve_threads(cli: &Cli) -> CliResult<Option<usize>> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let n = cfg.resolve(cli.threads, "threads")?;
    if n == Some(0) {
        return Err(CliError::config("`--threads` must be at least 1"));
    }
    Ok(n)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("{what}: `{v}` is not a number")))
        })
        .collect()
}

pub fn parse_pattern(name: &str) -> CliResult<Pattern> {
    match name {
        "grating" => Ok(Pattern::Grating),
        "checkerboard" => Ok(Pattern::Checkerboard),
        "blob" => Ok(Pattern::GaussianBlob),
        other => Err(CliError::config(format!(
            "unknown pattern `{other}`, expected grating, checkerboard or blob"
        ))),
    }
}

pub fn parse_window(name: &str) -> CliResult<Window> {
    match name {
        "rect" => Ok(Window::Rect),
        "hann" => Ok(Window::Hann),
        other => Err(CliError::config(format!("unknown window `{other}`, expected rect or hann"))),
    }
}

/// `x,y,w,h` or `name=x,y,w,h`; unnamed regions are called `roi1`, `roi2`, ...
pub fn parse_roi(text: &str, index: usize) -> CliResult<(String, Roi)> {
    let (name, rect) = match text.split_once('=') {
        Some((n, r)) => (n.trim().to_string(), r),
        None => (format!("roi{}", index + 1), text),
    };
    let v: Vec<usize> = rect
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("roi `{text}`: expected x,y,w,h")))?;
    match v[..] {
        [x, y, w, h] => Ok((name, Roi::new(x, y, w, h))),
        _ => Err(CliError::config(format!("roi `{text}`: expected x,y,w,h"))),
    }
}

pub fn parse_kernel(spec: &str) -> CliResult<WeightKernel> {
    let kernel = match spec {
        "3x3" => WeightKernel::binomial(3)?,
        "5x5" => WeightKernel::binomial(5)?,
        s if s.starts_with("uniform-") => {
            let n = s["uniform-".len()..]
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("kernel `{s}`: expected uniform-N")))?;
            WeightKernel::uniform(n)?
        }
        s if s.starts_with("file:") => {
            let path = Path::new(&s["file:".len()..]);
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let values = parse_list(&text.split_whitespace().collect::<Vec<_>>().join(","), "kernel")?;
            let side = (values.len() as f64).sqrt().round() as usize;
            if side * side != values.len() {
                return Err(CliError::config(format!(
                    "{}: {} weights do not form a square",
                    path.display(),
                    values.len()
                )));
            }
            WeightKernel::new(side, values)?
        }
        other => {
            return Err(CliError::config(format!(
                "unknown kernel `{other}`, expected 3x3, 5x5, uniform-N or file:PATH"
            )))
        }
    };
    Ok(kernel)
}

fn manifest_path(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join(MANIFEST_NAME)
    } else {
        input.to_path_buf()
    }
}

fn out_dir(flag: &Option<PathBuf>, cfg: &ConfigFile) -> CliResult<PathBuf> {
    let dir: PathBuf = cfg.require(flag.clone(), "out")?;
    create_dir(&dir)?;
    Ok(dir)
}

/// Everything an analysis command needs from [`InputArgs`].
struct Analysis {
    seq: FrameSequence,
    rois: Vec<(String, Roi)>,
    kernel: WeightKernel,
    params: MeasureParams,
    f_min: f64,
    out: PathBuf,
}

impl Analysis {
    fn load(args: &InputArgs, cfg: &ConfigFile) -> CliResult<Self> {
        let input: PathBuf = cfg.require(args.input.clone(), "input")?;
        let manifest = manifest_path(&input);
        if !manifest.is_file() {
            return Err(CliError::config(format!("{}: no such manifest", manifest.display())));
        }
        let mut seq = io::load_sequence(&manifest)?;
        if let Some(scale) = cfg.resolve(args.mm_per_px, "mm-per-px")? {
            seq = seq.with_scale(Some(scale))?;
        }
        let roi_specs = cfg.list(&args.roi, "roi");
        let rois = if roi_specs.is_empty() {
            vec![("full".to_string(), Roi::full(seq.width(), seq.height()))]
        } else {
            roi_specs
                .iter()
                .enumerate()
                .map(|(i, s)| parse_roi(s, i))
                .collect::<CliResult<_>>()?
        };
        let kernel = parse_kernel(&cfg.or(args.kernel.clone(), "kernel", "5x5".to_string())?)?;
        let defaults = HarrisParams::default();
        let params = MeasureParams {
            filter: FilterParams {
                sigma_px: cfg.or(args.sigma, "sigma", DEFAULT_SIGMA_PX)?,
                ..FilterParams::default()
            },
            harris: HarrisParams {
                k: cfg.or(args.harris_k, "harris-k", defaults.k)?,
                window_sigma: cfg.or(args.harris_window, "harris-window", defaults.window_sigma)?,
                threshold_rel: cfg.or(
                    args.harris_threshold,
                    "harris-threshold",
                    defaults.threshold_rel,
                )?,
                nms_radius: cfg.or(args.nms_radius, "nms-radius", defaults.nms_radius)?,
            },
        };
        let f_min = cfg.or(args.f_min, "f-min", ModePickParams::default().f_min)?;
        let out = out_dir(&args.out, cfg)?;
        Ok(Analysis {
            seq,
            rois,
            kernel,
            params,
            f_min,
            out,
        })
    }

    /// The single region of commands that take one.
    fn single_roi(&self, command: &str) -> CliResult<Roi> {
        match &self.rois[..] {
            [(_, roi)] => Ok(*roi),
            _ => Err(CliError::config(format!("`{command}` takes a single --roi"))),
        }
    }

    fn measure(&self, roi: Roi) -> CliResult<Measurement> {
        let m = measure_points(&self.seq, roi, &self.kernel, &self.params)?;
        if m.short_sequence {
            eprintln!(
                "warning: {} frames at {} fps is under two seconds; spectra will be coarse",
                self.seq.len(),
                fmt6(self.seq.fps())
            );
        }
        Ok(m)
    }

    /// Signal in mm when the sequence has a scale.
    fn physical(&self, signal: &DisplacementSignal) -> CliResult<DisplacementSignal> {
        match self.seq.scale_mm_per_px() {
            Some(s) if signal.units == Units::Px => Ok(to_units(signal, s)?),
            _ => Ok(signal.clone()),
        }
    }

    fn write_features(&self, m: &Measurement) -> CliResult<()> {
        write(&self.out.join("features.csv"), formats::features_csv(&m.features))?;
        let overlay = overlay_features(&self.seq.frames()[0], &m.features);
        io::save_gray(&overlay, &self.out.join("features_overlay.png"))?;
        Ok(())
    }

    fn write_map(&self, m: &Measurement) -> CliResult<()> {
        let map = dominant_frequency_map(&m.patched, m.features.roi, self.f_min)?;
        write(&self.out.join("frequency_map.csv"), formats::frequency_map_csv(&map))?;
        let img = render_frequency_map(&map, &self.seq.frames()[0])?;
        io::save_rgb(&img, &self.out.join("frequency_map.png"))?;
        println!(
            "frequency map: {} points, spread {} Hz",
            map.entries.len(),
            fmt6(map.spread())
        );
        Ok(())
    }
}

fn mode_params(args: &ModeArgs, f_min: f64, cfg: &ConfigFile) -> CliResult<(ModePickParams, Window)> {
    let d = ModePickParams::default();
    let pick = ModePickParams {
        max_modes: cfg.or(args.max_modes, "max-modes", d.max_modes)?,
        f_min,
        min_sep_hz: cfg.or(args.min_sep, "min-sep", d.min_sep_hz)?,
        ..d
    };
    if !(pick.min_sep_hz.is_finite() && pick.min_sep_hz >= 0.0) {
        return Err(CliError::config("`--min-sep` must be non-negative"));
    }
    let window = parse_window(&cfg.or(args.window.clone(), "window", "rect".to_string())?)?;
    Ok((pick, window))
}

fn print_modes(modes: &[ModeEstimate]) {
    for m in modes {
        println!(
            "mode {}: {} Hz (snr {})",
            m.rank,
            fmt6(m.freq_hz),
            fmt6(m.snr)
        );
    }
}

fn cmd_synth(a: &SynthArgs, cfg: &ConfigFile) -> CliResult<()> {
    let pattern = parse_pattern(&cfg.or(a.pattern.clone(), "pattern", "grating".to_string())?)?;
    let amps = parse_list(&cfg.or(a.amp.clone(), "amp", "0.3".to_string())?, "amp")?;
    let freqs = parse_list(&cfg.or(a.freq.clone(), "freq", "2.67".to_string())?, "freq")?;
    if amps.len() != freqs.len() {
        return Err(CliError::config(format!(
            "{} amplitudes but {} frequencies",
            amps.len(),
            freqs.len()
        )));
    }
    let fps = cfg.or(a.fps, "fps", 60.0)?;
    let dur = cfg.or(a.dur, "dur", 10.0)?;
    let width = cfg.or(a.width, "width", 256)?;
    let height = cfg.or(a.height, "height", 256)?;
    let phase0 = cfg.or(a.phase0, "phase0", 0.0)?;
    let direction = cfg.or(a.direction_deg, "direction-deg", 0.0)?.to_radians();
    let scale_px = cfg.or(a.scale_px, "scale-px", pattern.default_scale())?;
    let noise = cfg.or(a.noise, "noise", 0.0)?;
    let seed = cfg.or(a.seed, "seed", 0)?;
    let mm_per_px = cfg.resolve(a.mm_per_px, "mm-per-px")?;
    let out = out_dir(&a.out, cfg)?;

    if !(fps.is_finite() && fps > 0.0) {
        return Err(CliError::config(format!("fps must be positive, got {fps}")));
    }
    if !(dur.is_finite() && dur > 0.0) {
        return Err(CliError::config(format!("duration must be positive, got {dur}")));
    }
    if !(scale_px.is_finite() && scale_px > 0.0) {
        return Err(CliError::config(format!("scale must be positive, got {scale_px}")));
    }
    for (&amp, &f) in amps.iter().zip(&freqs) {
        if !(amp.is_finite() && amp >= 0.0) {
            return Err(CliError::config(format!("amplitude must be non-negative, got {amp}")));
        }
        if !(f.is_finite() && f >= 0.0) {
            return Err(CliError::config(format!("frequency must be non-negative, got {f}")));
        }
        if f >= fps / 2.0 {
            return Err(vidvib_core::Error::Nyquist {
                freq_hz: f,
                nyquist_hz: fps / 2.0,
            }
            .into());
        }
    }
    let frames = (dur * fps).round() as usize;
    let (ux, uy) = (direction.cos(), direction.sin());
    let tau = 2.0 * std::f64::consts::PI;
    let seq = synthesize_rigid(pattern, scale_px, width, height, fps, frames, noise, seed, |t| {
        let s: f64 = amps
            .iter()
            .zip(&freqs)
            .map(|(a, f)| a * (tau * f * t as f64 / fps + phase0).sin())
            .sum();
        [ux * s, uy * s]
    })?
    .with_scale(mm_per_px)?;
    let manifest = io::save_sequence(&seq, &out)?;
    println!("wrote {} frames to {}", seq.len(), manifest.display());
    Ok(())
}

fn cmd_features(a: &InputArgs, cfg: &ConfigFile) -> CliResult<()> {
    let an = Analysis::load(a, cfg)?;
    let roi = an.single_roi("features")?;
    let bank = QuadratureBank::new(an.params.filter.sigma_px)?;
    roi.validate(an.seq.width(), an.seq.height(), bank.horizontal.taps())?;
    let set = harris_corners(&an.seq.frames()[0], roi, &an.params.harris)?;
    write(&an.out.join("features.csv"), formats::features_csv(&set))?;
    let overlay = overlay_features(&an.seq.frames()[0], &set);
    io::save_gray(&overlay, &an.out.join("features_overlay.png"))?;
    println!("features: {}", set.len());
    Ok(())
}

fn cmd_measure(a: &MeasureArgs, cfg: &ConfigFile) -> CliResult<()> {
    let an = Analysis::load(&a.input, cfg)?;
    let (pick, window) = mode_params(&a.modes, an.f_min, cfg)?;
    let roi = an.single_roi("measure")?;
    let m = an.measure(roi)?;
    an.write_features(&m)?;

    let mean = mean_signal(&m.patched).ok_or(vidvib_core::Error::NoFeatures)?;
    write(&an.out.join("signal_mean.csv"), formats::signal_csv(&an.physical(&mean)?))?;
    if cfg.switch(a.per_point, "per-point")? {
        let dir = an.out.join("signals");
        create_dir(&dir)?;
        for (p, s) in &m.patched {
            let name = format!("x{:04}_y{:04}.csv", p.x, p.y);
            write(&dir.join(name), formats::signal_csv(&an.physical(s)?))?;
        }
    }

    let (_, spectrum) = mean_spectrum(&m.patched, an.f_min, window)?;
    write(&an.out.join("spectrum.csv"), formats::spectrum_csv(&spectrum))?;
    let modes = pick_modes(&spectrum, &pick);
    write(&an.out.join("modes.json"), formats::modes_json(&modes))?;
    println!("features: {}", m.features.len());
    print_modes(&modes);
    an.write_map(&m)
}

fn cmd_map(a: &InputArgs, cfg: &ConfigFile) -> CliResult<()> {
    let an = Analysis::load(a, cfg)?;
    let roi = an.single_roi("map")?;
    let m = an.measure(roi)?;
    an.write_features(&m)?;
    an.write_map(&m)
}

fn cmd_bands(a: &BandsArgs, cfg: &ConfigFile) -> CliResult<()> {
    let an = Analysis::load(&a.input, cfg)?;
    let (pick, window) = mode_params(&a.modes, an.f_min, cfg)?;
    let epsilon = cfg.or(a.epsilon, "epsilon", DEFAULT_EPSILON)?;
    let mut report = Vec::with_capacity(an.rois.len());
    for (name, roi) in &an.rois {
        let m = an.measure(*roi)?;
        let bands = mode_bands(&m.patched, &pick, epsilon, window)?;
        for b in &bands {
            println!(
                "{name} mode {}: {} Hz, band {} - {} Hz",
                b.mode.rank,
                fmt6(b.mode.freq_hz),
                fmt6(b.band.lo_hz),
                fmt6(b.band.hi_hz)
            );
        }
        report.push(RoiBands {
            roi: name.clone(),
            x0: roi.x0,
            y0: roi.y0,
            width: roi.width,
            height: roi.height,
            bands: bands.iter().map(BandRecord::from).collect(),
        });
    }
    write(&an.out.join("bands.json"), formats::to_json(&report))
}

#[derive(Debug, Serialize)]
struct MagnifyReport {
    alpha: f64,
    lo_hz: f64,
    hi_hz: f64,
    source: &'static str,
}

fn cmd_magnify(a: &MagnifyArgs, cfg: &ConfigFile) -> CliResult<()> {
    let an = Analysis::load(&a.input, cfg)?;
    let roi = an.single_roi("magnify")?;
    let alpha: f64 = cfg.require(a.alpha, "alpha")?;
    let manual = cfg.resolve(a.band.clone(), "band")?;
    let auto = cfg.switch(a.auto, "auto")?;
    let (band, source) = match (manual, auto) {
        (Some(_), true) => {
            return Err(CliError::config("give either `--band` or `--auto`, not both"));
        }
        (Some(text), false) => match parse_list(&text, "band")?[..] {
            [lo, hi] => (FrequencyBand::manual(lo, hi)?, "manual"),
            _ => return Err(CliError::config(format!("band `{text}`: expected lo,hi"))),
        },
        (None, true) => {
            let (pick, window) = mode_params(&a.modes, an.f_min, cfg)?;
            let epsilon = cfg.or(a.epsilon, "epsilon", DEFAULT_EPSILON)?;
            let rank = cfg.or(a.mode, "mode", 1)?;
            let m = an.measure(roi)?;
            let bands = mode_bands(&m.patched, &pick, epsilon, window)?;
            let chosen = bands.into_iter().find(|b| b.mode.rank == rank).ok_or_else(|| {
                CliError::data(format!("no mode of rank {rank} in the region"))
            })?;
            (chosen.band, "auto")
        }
        (None, false) => return Err(CliError::config("`--band lo,hi` or `--auto` is required")),
    };
    let out_seq = magnify(&an.seq, roi, &band, alpha, &an.params.filter)?;
    io::save_sequence(&out_seq, &an.out)?;
    let report = MagnifyReport {
        alpha: round6(alpha),
        lo_hz: round6(band.lo_hz),
        hi_hz: round6(band.hi_hz),
        source,
    };
    write(&an.out.join("magnify.json"), formats::to_json(&report))?;
    println!(
        "magnified {} - {} Hz by {}",
        fmt6(band.lo_hz),
        fmt6(band.hi_hz),
        fmt6(alpha)
    );

    let count = cfg.or(a.ods_points, "ods-points", 9)?;
    // Magnified pixels within a filter border of the frame edge saw reflected input.
    let margin = 2 * QuadratureBank::new(an.params.filter.sigma_px)?.horizontal.border() + 1;
    let line = match cfg.resolve(a.ods_line.clone(), "ods-line")? {
        Some(text) => match parse_list(&text, "ods-line")?[..] {
            [x0, y0, x1, y1] => sample_line([x0, y0], [x1, y1], count)?,
            _ => return Err(CliError::config(format!("ods-line `{text}`: expected x0,y0,x1,y1"))),
        },
        None => match default_ods_line(roi, an.seq.width(), an.seq.height(), margin, count) {
            Some(line) => line,
            None => {
                eprintln!("warning: region too small for a deflection line; ods.csv not written");
                return Ok(());
            }
        },
    };
    match extract_ods(&out_seq, &line, &band, &an.params.filter) {
        Ok(ods) => write(&an.out.join("ods.csv"), formats::ods_csv(&ods)),
        Err(e @ (vidvib_core::Error::ZeroAmplitude | vidvib_core::Error::InvalidParameter { .. }))
            if a.ods_line.is_none() && cfg.all("ods-line").is_empty() =>
        {
            eprintln!("warning: {e}; ods.csv not written");
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

/// `count` points evenly spaced from `a` to `b`, rounded to pixels.
pub fn sample_line(a: [f64; 2], b: [f64; 2], count: usize) -> CliResult<Vec<Point>> {
    if count < 3 {
        return Err(CliError::config(format!("need at least 3 line points, got {count}")));
    }
    if a.iter().chain(&b).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(CliError::config("line endpoints must be non-negative pixel coordinates"));
    }
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            Point::new(
                (a[0] + t * (b[0] - a[0])).round() as usize,
                (a[1] + t * (b[1] - a[1])).round() as usize,
            )
        })
        .collect())
}

/// Centre line along the longer side of `roi`, kept `margin` pixels inside the frame.
pub fn default_ods_line(
    roi: Roi,
    width: usize,
    height: usize,
    margin: usize,
    count: usize,
) -> Option<Vec<Point>> {
    let lo = |start: usize| start.max(margin);
    let hi = |end: usize, limit: usize| end.min(limit.saturating_sub(margin + 1));
    let (x0, x1) = (lo(roi.x0), hi(roi.x1().saturating_sub(1), width));
    let (y0, y1) = (lo(roi.y0), hi(roi.y1().saturating_sub(1), height));
    if x1 <= x0 || y1 < y0 {
        return None;
    }
    let (cx, cy) = ((x0 + x1) / 2, (y0 + y1) / 2);
    let (a, b) = if roi.width >= roi.height {
        ([x0, cy], [x1, cy])
    } else {
        ([cx, y0], [cx, y1])
    };
    let span = (b[0] - a[0]).max(b[1] - a[1]);
    if span + 1 < count {
        return None;
    }
    sample_line(
        [a[0] as f64, a[1] as f64],
        [b[0] as f64, b[1] as f64],
        count,
    )
    .ok()
}

#[derive(Debug, Serialize)]
struct ModeDifference {
    rank: usize,
    reference_hz: f64,
    measured_hz: Option<f64>,
    diff_hz: Option<f64>,
    diff_percent: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    axis: &'static str,
    rate_hz: f64,
    samples: usize,
    nrmse_percent: f64,
    modes: Vec<ModeDifference>,
}

fn load_table(path: &Path) -> CliResult<formats::SignalTable> {
    if !path.is_file() {
        return Err(CliError::config(format!("{}: no such file", path.display())));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    formats::parse_signal_csv(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn table_rate(t: &formats::SignalTable, path: &Path) -> CliResult<f64> {
    t.rate()
        .ok_or_else(|| CliError::data(format!("{}: need two or more increasing time stamps", path.display())))
}

fn pick_axis(name: &str, table: &formats::SignalTable) -> CliResult<Axis> {
    let range = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    match name {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        "auto" => Ok(if range(&table.dy) > range(&table.dx) {
            Axis::Y
        } else {
            Axis::X
        }),
        other => Err(CliError::config(format!("unknown axis `{other}`, expected x, y or auto"))),
    }
}

fn column(table: &formats::SignalTable, axis: Axis) -> &[f64] {
    match axis {
        Axis::X => &table.dx,
        Axis::Y => &table.dy,
    }
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::X => "x",
        Axis::Y => "y",
    }
}

fn cmd_spectrum(a: &SpectrumArgs, cfg: &ConfigFile) -> CliResult<()> {
    let path: PathBuf = cfg.require(a.signal.clone(), "signal")?;
    let table = load_table(&path)?;
    let fps = table_rate(&table, &path)?;
    let axis = pick_axis(&cfg.or(a.axis.clone(), "axis", "auto".to_string())?, &table)?;
    let f_min = cfg.or(a.f_min, "f-min", ModePickParams::default().f_min)?;
    let (pick, window) = mode_params(&a.modes, f_min, cfg)?;
    let out = out_dir(&a.out, cfg)?;
    let spectrum = fft_spectrum(column(&table, axis), fps, window)?;
    let modes = pick_modes(&spectrum, &pick);
    write(&out.join("spectrum.csv"), formats::spectrum_csv(&spectrum))?;
    write(&out.join("modes.json"), formats::modes_json(&modes))?;
    print_modes(&modes);
    Ok(())
}

fn cmd_compare(a: &CompareArgs, cfg: &ConfigFile) -> CliResult<()> {
    let path_a: PathBuf = cfg.require(a.a.clone(), "a")?;
    let path_b: PathBuf = cfg.require(a.b.clone(), "b")?;
    let (ta, tb) = (load_table(&path_a)?, load_table(&path_b)?);
    if ta.units != tb.units {
        return Err(CliError::data(format!(
            "units differ: {} vs {}",
            ta.units.as_str(),
            tb.units.as_str()
        )));
    }
    let (ra, rb) = (table_rate(&ta, &path_a)?, table_rate(&tb, &path_b)?);
    let axis = pick_axis(&cfg.or(a.axis.clone(), "axis", "auto".to_string())?, &tb)?;
    let f_min = cfg.or(a.f_min, "f-min", ModePickParams::default().f_min)?;
    let (pick, window) = mode_params(&a.modes, f_min, cfg)?;

    // Bring both onto the lower of the two rates.
    let rate = ra.min(rb);
    let mut sa = resample(column(&ta, axis), ra, rate)?;
    let mut sb = resample(column(&tb, axis), rb, rate)?;
    let n = sa.len().min(sb.len());
    sa.truncate(n);
    sb.truncate(n);
    let err = nrmse(&sa, &sb)?;

    let mut modes = Vec::new();
    if n >= MIN_SPECTRUM_LEN {
        let ma = pick_modes(&fft_spectrum(&sa, rate, window)?, &pick);
        let mb = pick_modes(&fft_spectrum(&sb, rate, window)?, &pick);
        for m in &mb {
            let nearest = ma
                .iter()
                .map(|x| x.freq_hz)
                .min_by(|x, y| (x - m.freq_hz).abs().total_cmp(&(y - m.freq_hz).abs()));
            modes.push(ModeDifference {
                rank: m.rank,
                reference_hz: round6(m.freq_hz),
                measured_hz: nearest.map(round6),
                diff_hz: nearest.map(|f| round6(f - m.freq_hz)),
                diff_percent: nearest.map(|f| round6(100.0 * (f - m.freq_hz) / m.freq_hz)),
            });
        }
    } else {
        eprintln!("warning: {n} samples is too short for mode comparison");
    }
    let report = CompareReport {
        axis: axis_name(axis),
        rate_hz: round6(rate),
        samples: n,
        nrmse_percent: round6(err),
        modes,
    };
    println!("nrmse: {} %", fmt6(err));
    for m in &report.modes {
        if let (Some(f), Some(d)) = (m.measured_hz, m.diff_percent) {
            println!(
                "mode {}: reference {} Hz, measured {} Hz ({} %)",
                m.rank,
                fmt6(m.reference_hz),
                fmt6(f),
                fmt6(d)
            );
        }
    }
    if let Some(dir) = cfg.resolve(a.out.clone(), "out")? {
        create_dir(&dir)?;
        write(&dir.join("compare.json"), formats::to_json(&report))?;
    }
    Ok(())
}
