//! The dynamic-classifier model: a static MLP backbone plus classifier
//! layers whose weights are generated per sample by a hypernetwork.
//!
//! For each dynamic layer, an encoder maps the backbone features of a sample
//! to a small embedding and a two-stage linear generator turns that embedding
//! into a flattened weight matrix and bias. Three classifier modes share the
//! parameter set:
//!
//! * `Static`: a plain affine classifier; the hypernetwork is unused.
//! * `Gpg` (generated parameters, globally): generated weights are the
//!   classifier; backbone trains end to end.
//! * `Lps` (learned parameter shift): generated weights are residuals added
//!   to a pretrained, frozen static basis; the backbone is frozen too.
//!
//! Logits feed `alpha = exp(clamp(logits, -10, 10))`, the concentration of a
//! Dirichlet opinion per sample. Scoring uses a float-only forward that is
//! bitwise identical to the tape path.

use crate::diffcore::{matmul, Matrix, Tape, Value};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const LOGIT_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierMode {
    Static,
    Lps,
    Gpg,
}

impl ClassifierMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierMode::Static => "static",
            ClassifierMode::Lps => "lps",
            ClassifierMode::Gpg => "gpg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(ClassifierMode::Static),
            "lps" => Ok(ClassifierMode::Lps),
            "gpg" => Ok(ClassifierMode::Gpg),
            other => Err(Error::Config(format!(
                "unknown classifier mode {other:?}, expected static, lps or gpg"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub k: usize,
    /// Backbone hidden width.
    pub hidden: usize,
    /// Backbone feature dimension (input to encoders and first dynamic layer).
    pub d_f: usize,
    /// Encoder embedding dimension.
    pub d_e: usize,
    /// Generator hidden dimension.
    pub d_h: usize,
    /// (N_in, N_out) per dynamic layer; relu between layers, none after the
    /// last.
    pub dynamic_layers: Vec<(usize, usize)>,
    pub mode: ClassifierMode,
}

impl ModelConfig {
    /// Desk-scale default: backbone d -> 64 -> 32, one dynamic layer 32 -> k.
    pub fn desk(d: usize, k: usize, mode: ClassifierMode) -> Self {
        ModelConfig {
            d,
            k,
            hidden: 64,
            d_f: 32,
            d_e: 16,
            d_h: 32,
            dynamic_layers: vec![(32, k)],
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k < 2 || self.hidden == 0 || self.d_f == 0 || self.d_e == 0
            || self.d_h == 0
        {
            return Err(Error::Config(format!("model dimensions must be positive: {self:?}")));
        }
        let layers = &self.dynamic_layers;
        if layers.is_empty() {
            return Err(Error::Config("at least one dynamic layer is required".into()));
        }
        if layers[0].0 != self.d_f {
            return Err(Error::Config(format!(
                "first dynamic layer input {} must equal d_f {}",
                layers[0].0, self.d_f
            )));
        }
        if layers[layers.len() - 1].1 != self.k {
            return Err(Error::Config(format!(
                "last dynamic layer output {} must equal k {}",
                layers[layers.len() - 1].1,
                self.k
            )));
        }
        for w in layers.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(Error::Config(format!(
                    "dynamic layer chain mismatch: {} -> {}",
                    w[0].1, w[1].0
                )));
            }
        }
        Ok(())
    }
}

/// Model parameters plus configuration. Parameters live in a name-keyed map
/// so the optimizer, checkpoints and gradient checks all traverse them in one
/// deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct UdnModel {
    pub config: ModelConfig,
    pub params: BTreeMap<String, Matrix>,
    /// Set once a static classifier has been pretrained and frozen as the
    /// basis for Lps residuals.
    pub basis_frozen: bool,
}

/// Shapes and fan-in of every parameter, in creation order.
fn param_plan(cfg: &ModelConfig) -> Vec<(String, usize, usize, usize, f64)> {
    let mut plan = Vec::new();
    let mut push = |name: String, rows: usize, cols: usize, fan_in: usize, scale: f64| {
        plan.push((name, rows, cols, fan_in, scale));
    };
    push("backbone.w1".into(), cfg.d, cfg.hidden, cfg.d, 1.0);
    push("backbone.b1".into(), 1, cfg.hidden, cfg.d, 1.0);
    push("backbone.w2".into(), cfg.hidden, cfg.d_f, cfg.hidden, 1.0);
    push("backbone.b2".into(), 1, cfg.d_f, cfg.hidden, 1.0);
    for (n, &(n_in, n_out)) in cfg.dynamic_layers.iter().enumerate() {
        let gen_out = n_in * n_out + n_out;
        push(format!("encoder.{n}.w"), cfg.d_f, cfg.d_e, cfg.d_f, 1.0);
        push(format!("encoder.{n}.b"), 1, cfg.d_e, cfg.d_f, 1.0);
        push(format!("hyper.{n}.w1"), cfg.d_e, cfg.d_h, cfg.d_e, 1.0);
        push(format!("hyper.{n}.b1"), 1, cfg.d_h, cfg.d_e, 1.0);
        // The last generator stage starts at a tenth of the usual scale so
        // initial dynamic weights sit near zero and alpha near 1.
        push(format!("hyper.{n}.w2"), cfg.d_h, gen_out, cfg.d_h, 0.1);
        push(format!("hyper.{n}.b2"), 1, gen_out, cfg.d_h, 0.1);
        push(format!("static.{n}.w"), n_in, n_out, n_in, 1.0);
        push(format!("static.{n}.b"), 1, n_out, n_in, 1.0);
    }
    plan
}

impl UdnModel {
    /// Fresh model with uniform +-(1/sqrt(fan_in)) initialization.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng64::substream(seed, 0x6d6f64656c);
        let mut params = BTreeMap::new();
        for (name, rows, cols, fan_in, scale) in param_plan(&config) {
            let bound = scale / (fan_in as f64).sqrt();
            let m = Matrix::from_fn(rows, cols, |_, _| rng.uniform(-bound, bound));
            params.insert(name, m);
        }
        Ok(UdnModel { config, params, basis_frozen: false })
    }

    /// Marks the current static classifier as the frozen Lps basis and
    /// switches the model into Lps mode.
    pub fn freeze_basis(&mut self) {
        self.basis_frozen = true;
        self.config.mode = ClassifierMode::Lps;
    }

    /// Parameter names the optimizer may update in the current mode.
    pub fn trainable_keys(&self) -> Vec<String> {
        let is_trainable = |name: &str| match self.config.mode {
            ClassifierMode::Static => {
                name.starts_with("backbone.") || name.starts_with("static.")
            }
            ClassifierMode::Gpg => {
                name.starts_with("backbone.")
                    || name.starts_with("encoder.")
                    || name.starts_with("hyper.")
            }
            ClassifierMode::Lps => name.starts_with("encoder.") || name.starts_with("hyper."),
        };
        self.params.keys().filter(|k| is_trainable(k)).cloned().collect()
    }

    /// Binds every parameter to the tape as a leaf.
    pub fn bind(&self, tape: &Tape) -> BTreeMap<String, Value> {
        self.params.iter().map(|(k, v)| (k.clone(), tape.leaf(v.clone()))).collect()
    }

    fn affine(tape: &Tape, x: &Value, w: &Value, b: &Value) -> Value {
        let rows = x.shape().0;
        let ones = tape.leaf(Matrix::filled(rows, 1, 1.0));
        x.matmul(w).add(&ones.matmul(b))
    }

    /// Backbone MLP: two affine layers with relu after each; output is the
    /// batch of feature rows.
    pub fn backbone_forward(
        &self,
        tape: &Tape,
        bound: &BTreeMap<String, Value>,
        x: &Matrix,
    ) -> Result<Value> {
        if x.cols() != self.config.d {
            return Err(Error::Shape(format!(
                "backbone expects width {}, got {}",
                self.config.d,
                x.cols()
            )));
        }
        if !x.is_finite() {
            return Err(Error::Numeric("backbone input contains non-finite values".into()));
        }
        let xv = tape.leaf(x.clone());
        let h = Self::affine(tape, &xv, &bound["backbone.w1"], &bound["backbone.b1"]).relu();
        Ok(Self::affine(tape, &h, &bound["backbone.w2"], &bound["backbone.b2"]).relu())
    }

    /// Per-sample dynamic parameters, one flattened (weights then bias) row
    /// per sample, one value per dynamic layer.
    pub fn hyper_generate(
        &self,
        tape: &Tape,
        bound: &BTreeMap<String, Value>,
        features: &Value,
    ) -> Vec<Value> {
        let mut out = Vec::with_capacity(self.config.dynamic_layers.len());
        for n in 0..self.config.dynamic_layers.len() {
            let e = Self::affine(
                tape,
                features,
                &bound[&format!("encoder.{n}.w")],
                &bound[&format!("encoder.{n}.b")],
            )
            .relu();
            let g1 = Self::affine(
                tape,
                &e,
                &bound[&format!("hyper.{n}.w1")],
                &bound[&format!("hyper.{n}.b1")],
            );
            let g = Self::affine(
                tape,
                &g1,
                &bound[&format!("hyper.{n}.w2")],
                &bound[&format!("hyper.{n}.b2")],
            );
            out.push(g);
        }
        out
    }

    /// Applies the dynamic classifier to backbone features. `generated` must
    /// come from [`hyper_generate`] on the same batch; it is ignored in
    /// Static mode.
    pub fn classifier_forward(
        &self,
        tape: &Tape,
        bound: &BTreeMap<String, Value>,
        features: &Value,
        generated: &[Value],
    ) -> Result<Value> {
        let layers = &self.config.dynamic_layers;
        if self.config.mode == ClassifierMode::Static {
            let mut a = features.clone();
            for n in 0..layers.len() {
                a = Self::affine(
                    tape,
                    &a,
                    &bound[&format!("static.{n}.w")],
                    &bound[&format!("static.{n}.b")],
                );
                if n + 1 < layers.len() {
                    a = a.relu();
                }
            }
            return Ok(a);
        }
        if self.config.mode == ClassifierMode::Lps && !self.basis_frozen {
            return Err(Error::Config(
                "Lps classifier used before a pretrained basis was frozen".into(),
            ));
        }
        assert_eq!(generated.len(), layers.len(), "generated parameters per layer");

        let rows = features.shape().0;
        let mut sample_logits = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut a = features.slice_rows(i, i + 1);
            for (n, &(n_in, n_out)) in layers.iter().enumerate() {
                let g = generated[n].slice_rows(i, i + 1);
                let w = g.slice_cols(0, n_in * n_out).reshape(n_in, n_out);
                let b = g.slice_cols(n_in * n_out, n_in * n_out + n_out);
                let (w, b) = match self.config.mode {
                    ClassifierMode::Gpg => (w, b),
                    ClassifierMode::Lps => (
                        bound[&format!("static.{n}.w")].add(&w),
                        bound[&format!("static.{n}.b")].add(&b),
                    ),
                    ClassifierMode::Static => unreachable!(),
                };
                a = a.matmul(&w).add(&b);
                if n + 1 < layers.len() {
                    a = a.relu();
                }
            }
            sample_logits.push(a);
        }
        Ok(tape.concat_rows(&sample_logits))
    }

    /// Full forward to logits on the tape.
    pub fn forward_logits(
        &self,
        tape: &Tape,
        bound: &BTreeMap<String, Value>,
        x: &Matrix,
    ) -> Result<Value> {
        let features = self.backbone_forward(tape, bound, x)?;
        let generated = if self.config.mode == ClassifierMode::Static {
            Vec::new()
        } else {
            self.hyper_generate(tape, bound, &features)
        };
        self.classifier_forward(tape, bound, &features, &generated)
    }

    /// Dirichlet concentrations on the tape: exp(clamp(logits, -10, 10)).
    pub fn alpha_value(
        &self,
        tape: &Tape,
        bound: &BTreeMap<String, Value>,
        x: &Matrix,
    ) -> Result<Value> {
        Ok(self.forward_logits(tape, bound, x)?.clamp(-LOGIT_CLAMP, LOGIT_CLAMP).exp())
    }

    fn affine_f64(x: &Matrix, w: &Matrix, b: &Matrix) -> Matrix {
        let mut out = matmul(x, w);
        for r in 0..out.rows() {
            for c in 0..out.cols() {
                out[(r, c)] += b[(0, c)];
            }
        }
        out
    }

    /// Backbone features without the tape, bitwise identical to
    /// [`backbone_forward`]. The density filter measures distances in this
    /// space.
    pub fn backbone_features_f64(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.config.d {
            return Err(Error::Shape(format!(
                "backbone expects width {}, got {}",
                self.config.d,
                x.cols()
            )));
        }
        let p = |name: &str| &self.params[name];
        let relu = |m: Matrix| m.map(|v| if v > 0.0 { v } else { 0.0 });
        let h = relu(Self::affine_f64(x, p("backbone.w1"), p("backbone.b1")));
        Ok(relu(Self::affine_f64(&h, p("backbone.w2"), p("backbone.b2"))))
    }

    /// Float-only forward, bitwise identical to the tape path. Used for
    /// scoring and evaluation where no gradients are needed.
    pub fn logits_f64(&self, x: &Matrix) -> Result<Matrix> {
        let features = self.backbone_features_f64(x)?;
        let p = |name: &str| &self.params[name];
        let affine = Self::affine_f64;
        let relu = |m: Matrix| m.map(|v| if v > 0.0 { v } else { 0.0 });

        let layers = &self.config.dynamic_layers;
        if self.config.mode == ClassifierMode::Static {
            let mut a = features;
            for n in 0..layers.len() {
                a = affine(&a, p(&format!("static.{n}.w")), p(&format!("static.{n}.b")));
                if n + 1 < layers.len() {
                    a = relu(a);
                }
            }
            return Ok(a);
        }
        if self.config.mode == ClassifierMode::Lps && !self.basis_frozen {
            return Err(Error::Config(
                "Lps classifier used before a pretrained basis was frozen".into(),
            ));
        }

        let generated: Vec<Matrix> = (0..layers.len())
            .map(|n| {
                let e = relu(affine(
                    &features,
                    p(&format!("encoder.{n}.w")),
                    p(&format!("encoder.{n}.b")),
                ));
                let g1 = affine(&e, p(&format!("hyper.{n}.w1")), p(&format!("hyper.{n}.b1")));
                affine(&g1, p(&format!("hyper.{n}.w2")), p(&format!("hyper.{n}.b2")))
            })
            .collect();

        let mut logits = Matrix::zeros(features.rows(), self.config.k);
        for i in 0..features.rows() {
            let mut a = Matrix::from_vec(1, features.cols(), features.row(i).to_vec());
            for (n, &(n_in, n_out)) in layers.iter().enumerate() {
                let grow = generated[n].row(i);
                let mut w = Matrix::from_vec(n_in, n_out, grow[..n_in * n_out].to_vec());
                let mut b =
                    Matrix::from_vec(1, n_out, grow[n_in * n_out..n_in * n_out + n_out].to_vec());
                if self.config.mode == ClassifierMode::Lps {
                    let bw = p(&format!("static.{n}.w"));
                    let bb = p(&format!("static.{n}.b"));
                    for (wi, si) in w.data_mut().iter_mut().zip(bw.data()) {
                        *wi = si + *wi;
                    }
                    for (bi, si) in b.data_mut().iter_mut().zip(bb.data()) {
                        *bi = si + *bi;
                    }
                }
                a = affine(&a, &w, &b);
                if n + 1 < layers.len() {
                    a = relu(a);
                }
            }
            for c in 0..self.config.k {
                logits[(i, c)] = a[(0, c)];
            }
        }
        Ok(logits)
    }

    /// Dirichlet concentrations for a batch, float path. Errors name the row
    /// if logits go non-finite.
    pub fn predict_alpha(&self, x: &Matrix) -> Result<Matrix> {
        let logits = self.logits_f64(x)?;
        for r in 0..logits.rows() {
            if logits.row(r).iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite logits for batch row {r}")));
            }
        }
        Ok(logits.map(|v| v.clamp(-LOGIT_CLAMP, LOGIT_CLAMP).exp()))
    }

    /// Writes all parameters as text, losslessly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let cfg = &self.config;
        let mut out = String::from("mada-ckpt 1\n");
        let _ = writeln!(out, "mode {}", cfg.mode.as_str());
        let _ = writeln!(out, "basis_frozen {}", self.basis_frozen);
        let _ = writeln!(
            out,
            "dims d={} k={} hidden={} d_f={} d_e={} d_h={}",
            cfg.d, cfg.k, cfg.hidden, cfg.d_f, cfg.d_e, cfg.d_h
        );
        let layers: Vec<String> =
            cfg.dynamic_layers.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        let _ = writeln!(out, "layers {}", layers.join(","));
        for (name, m) in &self.params {
            let _ = writeln!(out, "param {name} {} {}", m.rows(), m.cols());
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads a checkpoint written by [`save`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l))
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {what}") })
        };

        let (line, header) = next("checkpoint header")?;
        if header != "mada-ckpt 1" {
            return Err(Error::Parse {
                line,
                msg: format!("unsupported checkpoint header {header:?}"),
            });
        }
        let (line, mode_line) = next("mode line")?;
        let mode = ClassifierMode::parse(
            mode_line
                .strip_prefix("mode ")
                .ok_or(Error::Parse { line, msg: "expected mode line".into() })?,
        )?;
        let (line, bf_line) = next("basis_frozen line")?;
        let basis_frozen: bool = bf_line
            .strip_prefix("basis_frozen ")
            .ok_or(Error::Parse { line, msg: "expected basis_frozen line".into() })?
            .parse()
            .map_err(|e| Error::Parse { line, msg: format!("basis_frozen: {e}") })?;

        let (line, dims_line) = next("dims line")?;
        let dims_str = dims_line
            .strip_prefix("dims ")
            .ok_or(Error::Parse { line, msg: "expected dims line".into() })?;
        let mut dims = BTreeMap::new();
        for part in dims_str.split_whitespace() {
            let (k, v) = part
                .split_once('=')
                .ok_or(Error::Parse { line, msg: format!("bad dims entry {part:?}") })?;
            let v: usize =
                v.parse().map_err(|e| Error::Parse { line, msg: format!("dims {k}: {e}") })?;
            dims.insert(k.to_string(), v);
        }
        let dim = |k: &str| -> Result<usize> {
            dims.get(k).copied().ok_or_else(|| Error::Parse {
                line,
                msg: format!("dims missing {k}"),
            })
        };

        let (line, layers_line) = next("layers line")?;
        let layers_str = layers_line
            .strip_prefix("layers ")
            .ok_or(Error::Parse { line, msg: "expected layers line".into() })?;
        let mut dynamic_layers = Vec::new();
        for part in layers_str.split(',') {
            let (a, b) = part
                .split_once(':')
                .ok_or(Error::Parse { line, msg: format!("bad layer shape {part:?}") })?;
            let a: usize =
                a.parse().map_err(|e| Error::Parse { line, msg: format!("layer shape: {e}") })?;
            let b: usize =
                b.parse().map_err(|e| Error::Parse { line, msg: format!("layer shape: {e}") })?;
            dynamic_layers.push((a, b));
        }

        let config = ModelConfig {
            d: dim("d")?,
            k: dim("k")?,
            hidden: dim("hidden")?,
            d_f: dim("d_f")?,
            d_e: dim("d_e")?,
            d_h: dim("d_h")?,
            dynamic_layers,
            mode,
        };
        config.validate()?;

        let mut params = BTreeMap::new();
        while let Some((i, l)) = lines.next() {
            let line = i + 1;
            if l.trim().is_empty() {
                continue;
            }
            let mut parts = l.split_whitespace();
            if parts.next() != Some("param") {
                return Err(Error::Parse { line, msg: format!("expected param line, got {l:?}") });
            }
            let name = parts
                .next()
                .ok_or(Error::Parse { line, msg: "param line missing name".into() })?
                .to_string();
            let rows: usize = parts
                .next()
                .ok_or(Error::Parse { line, msg: "param line missing rows".into() })?
                .parse()
                .map_err(|e| Error::Parse { line, msg: format!("param rows: {e}") })?;
            let cols: usize = parts
                .next()
                .ok_or(Error::Parse { line, msg: "param line missing cols".into() })?
                .parse()
                .map_err(|e| Error::Parse { line, msg: format!("param cols: {e}") })?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ri, row) = lines
                    .next()
                    .map(|(i, l)| (i + 1, l))
                    .ok_or(Error::Parse { line, msg: format!("truncated param {name}") })?;
                for v in row.split_whitespace() {
                    let f: f64 = v.parse().map_err(|e| Error::Parse {
                        line: ri,
                        msg: format!("param {name}: {e}"),
                    })?;
                    data.push(f);
                }
            }
            if data.len() != rows * cols {
                return Err(Error::Parse {
                    line,
                    msg: format!(
                        "param {name}: expected {} values, got {}",
                        rows * cols,
                        data.len()
                    ),
                });
            }
            params.insert(name, Matrix::from_vec(rows, cols, data));
        }

        let expected: Vec<String> = param_plan(&config).into_iter().map(|p| p.0).collect();
        for name in &expected {
            if !params.contains_key(name) {
                return Err(Error::Parse { line: 0, msg: format!("missing parameter {name}") });
            }
        }
        if params.len() != expected.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} parameters, found {}", expected.len(), params.len()),
            });
        }
        Ok(UdnModel { config, params, basis_frozen })
    }
}
