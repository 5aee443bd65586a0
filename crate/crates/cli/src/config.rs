//! Flat `key=value` run configuration.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use facesketch::fit::{AdamSettings, FitConfig, StepSizes};
use facesketch::model::FacePart;
use facesketch::objective::LossWeights;
use facesketch::render::{CameraSpec, RasterSettings};
use facesketch::sketch::{SketchParams, SketchStyle};

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "FACESKETCH_OUT_DIR";

/// Every setting of a run. Camera-derived values (`camera.focal`,
/// `camera.cx`, `camera.cy`, `raster.sigma`) follow `camera.size` unless set.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub size: usize,
    pub focal: Option<f64>,
    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub near: f64,
    pub far: f64,
    pub subject_depth: f64,
    pub sigma: Option<f64>,
    pub gamma: f64,
    pub style: SketchStyle,
    pub sketch: SketchParams,
    pub weights: LossWeights,
    pub iters: [usize; 3],
    pub steps: StepSizes,
    pub adam: AdamSettings,
    pub march_every: usize,
    pub divergence_factor: f64,
    pub divergence_window: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let cam = fit.camera;
        RunConfig {
            size: cam.width,
            focal: None,
            cx: None,
            cy: None,
            near: cam.near,
            far: cam.far,
            subject_depth: cam.subject_depth,
            sigma: None,
            gamma: fit.raster.gamma,
            style: fit.style,
            sketch: fit.sketch,
            weights: fit.weights,
            iters: [fit.iters_a, fit.iters_b, fit.iters_c],
            steps: fit.steps,
            adam: fit.adam,
            march_every: fit.march_every,
            divergence_factor: fit.divergence_factor,
            divergence_window: fit.divergence_window,
            seed: fit.seed,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| anyhow!("`{key}`: cannot parse `{value}`: {e}"))
}

fn part_key(part: FacePart) -> String {
    format!("loss.part.{}", part.name())
}

impl RunConfig {
    /// Sets one key; unknown keys and unparsable values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let w = &mut self.weights;
        let s = &mut self.sketch;
        let st = &mut self.steps;
        match key {
            "camera.size" => self.size = num(key, value)?,
            "camera.focal" => self.focal = Some(num(key, value)?),
            "camera.cx" => self.cx = Some(num(key, value)?),
            "camera.cy" => self.cy = Some(num(key, value)?),
            "camera.near" => self.near = num(key, value)?,
            "camera.far" => self.far = num(key, value)?,
            "camera.subject_depth" => self.subject_depth = num(key, value)?,
            "raster.sigma" => self.sigma = Some(num(key, value)?),
            "raster.gamma" => self.gamma = num(key, value)?,
            "sketch.style" => self.style = value.parse().map_err(|e| anyhow!("`{key}`: {e}"))?,
            "sketch.sigma_s" => s.sigma_s = num(key, value)?,
            "sketch.edge_gain" => s.edge_gain = num(key, value)?,
            "sketch.sigma_e" => s.sigma_e = num(key, value)?,
            "sketch.k_e" => s.k_e = num(key, value)?,
            "sketch.tau" => s.tau = num(key, value)?,
            "sketch.epsilon" => s.epsilon = num(key, value)?,
            "sketch.phi" => s.phi = num(key, value)?,
            "loss.sketch" => w.sketch = num(key, value)?,
            "loss.sketch_photo" => w.sketch_photo = num(key, value)?,
            "loss.sketch_percep" => w.sketch_percep = num(key, value)?,
            "loss.pho" => w.pho = num(key, value)?,
            "loss.per" => w.per = num(key, value)?,
            "loss.lmk" => w.lmk = num(key, value)?,
            "loss.prdl" => w.prdl = num(key, value)?,
            "loss.reg" => w.reg = num(key, value)?,
            "loss.tv" => w.tv = num(key, value)?,
            "loss.reg_id" => w.reg_id = num(key, value)?,
            "loss.reg_exp" => w.reg_exp = num(key, value)?,
            "loss.reg_alb" => w.reg_alb = num(key, value)?,
            "fit.iters_a" => self.iters[0] = num(key, value)?,
            "fit.iters_b" => self.iters[1] = num(key, value)?,
            "fit.iters_c" => self.iters[2] = num(key, value)?,
            "fit.step.pose" => st.pose = num(key, value)?,
            "fit.step.lighting" => st.lighting = num(key, value)?,
            "fit.step.shape" => st.shape = num(key, value)?,
            "fit.step.albedo" => st.albedo = num(key, value)?,
            "fit.step.disp" => st.disp = num(key, value)?,
            "fit.step.detail_scale" => st.detail_scale = num(key, value)?,
            "fit.adam.beta1" => self.adam.beta1 = num(key, value)?,
            "fit.adam.beta2" => self.adam.beta2 = num(key, value)?,
            "fit.adam.eps" => self.adam.eps = num(key, value)?,
            "fit.march_every" => self.march_every = num(key, value)?,
            "fit.divergence_factor" => self.divergence_factor = num(key, value)?,
            "fit.divergence_window" => self.divergence_window = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            _ => {
                let part = FacePart::ALL.into_iter().find(|&p| part_key(p) == key);
                match part {
                    Some(p) => w.parts[p.index()] = num(key, value)?,
                    None => bail!("unknown config key `{key}`"),
                }
            }
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected key=value", n + 1))?;
            self.set(key.trim(), value).with_context(|| format!("{origin}:{}", n + 1))?;
        }
        Ok(())
    }

    /// Applies `--key=value` command-line overrides.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<()> {
        for arg in args {
            let body = arg.strip_prefix("--").ok_or_else(|| anyhow!("unexpected argument `{arg}`"))?;
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{arg}` must have the form --key=value"))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the out-dir environment
    /// variable, then command-line overrides.
    pub fn load(file: Option<&std::path::Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg.apply_overrides(overrides)?;
        cfg.fit_config()?;
        Ok(cfg)
    }

    pub fn camera(&self) -> CameraSpec {
        let mut cam = CameraSpec::for_size(self.size);
        cam.focal = self.focal.unwrap_or(cam.focal);
        cam.principal_point = [self.cx.unwrap_or(cam.principal_point[0]), self.cy.unwrap_or(cam.principal_point[1])];
        cam.near = self.near;
        cam.far = self.far;
        cam.subject_depth = self.subject_depth;
        cam
    }

    /// Validated fit settings.
    pub fn fit_config(&self) -> Result<FitConfig> {
        let camera = self.camera();
        let mut raster = RasterSettings::for_camera(&camera);
        raster.sigma = self.sigma.unwrap_or(raster.sigma);
        raster.gamma = self.gamma;
        let cfg = FitConfig {
            iters_a: self.iters[0],
            iters_b: self.iters[1],
            iters_c: self.iters[2],
            steps: self.steps,
            adam: self.adam,
            seed: self.seed,
            style: self.style,
            sketch: self.sketch,
            weights: self.weights.clone(),
            camera,
            raster,
            march_every: self.march_every,
            divergence_factor: self.divergence_factor,
            divergence_window: self.divergence_window,
        };
        cfg.validate().context("invalid configuration")?;
        Ok(cfg)
    }

    /// Every key with its effective value, in a fixed order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let cam = self.camera();
        let fit = self.fit_config().map(|f| f.raster.sigma).unwrap_or(f64::NAN);
        let (w, s, st) = (&self.weights, &self.sketch, &self.steps);
        let mut out: Vec<(String, String)> = [
            ("camera.size", self.size.to_string()),
            ("camera.focal", cam.focal.to_string()),
            ("camera.cx", cam.principal_point[0].to_string()),
            ("camera.cy", cam.principal_point[1].to_string()),
            ("camera.near", self.near.to_string()),
            ("camera.far", self.far.to_string()),
            ("camera.subject_depth", self.subject_depth.to_string()),
            ("raster.sigma", fit.to_string()),
            ("raster.gamma", self.gamma.to_string()),
            ("sketch.style", self.style.to_string()),
            ("sketch.sigma_s", s.sigma_s.to_string()),
            ("sketch.edge_gain", s.edge_gain.to_string()),
            ("sketch.sigma_e", s.sigma_e.to_string()),
            ("sketch.k_e", s.k_e.to_string()),
            ("sketch.tau", s.tau.to_string()),
            ("sketch.epsilon", s.epsilon.to_string()),
            ("sketch.phi", s.phi.to_string()),
            ("loss.sketch", w.sketch.to_string()),
            ("loss.sketch_photo", w.sketch_photo.to_string()),
            ("loss.sketch_percep", w.sketch_percep.to_string()),
            ("loss.pho", w.pho.to_string()),
            ("loss.per", w.per.to_string()),
            ("loss.lmk", w.lmk.to_string()),
            ("loss.prdl", w.prdl.to_string()),
            ("loss.reg", w.reg.to_string()),
            ("loss.tv", w.tv.to_string()),
            ("loss.reg_id", w.reg_id.to_string()),
            ("loss.reg_exp", w.reg_exp.to_string()),
            ("loss.reg_alb", w.reg_alb.to_string()),
            ("fit.iters_a", self.iters[0].to_string()),
            ("fit.iters_b", self.iters[1].to_string()),
            ("fit.iters_c", self.iters[2].to_string()),
            ("fit.step.pose", st.pose.to_string()),
            ("fit.step.lighting", st.lighting.to_string()),
            ("fit.step.shape", st.shape.to_string()),
            ("fit.step.albedo", st.albedo.to_string()),
            ("fit.step.disp", st.disp.to_string()),
            ("fit.step.detail_scale", st.detail_scale.to_string()),
            ("fit.adam.beta1", self.adam.beta1.to_string()),
            ("fit.adam.beta2", self.adam.beta2.to_string()),
            ("fit.adam.eps", self.adam.eps.to_string()),
            ("fit.march_every", self.march_every.to_string()),
            ("fit.divergence_factor", self.divergence_factor.to_string()),
            ("fit.divergence_window", self.divergence_window.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        out.extend(FacePart::ALL.map(|p| (part_key(p), w.part(p).to_string())));
        out
    }
}
