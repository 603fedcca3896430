//! Solve settings: a TOML file whose keys mirror the `solve` flags, with
//! flags overriding the file. Every sweepable key takes one value or a list.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use amli::amli::{AmliConfig, Cycle, Form, GammaMode, Variant};
use amli::experiment::{default_threads, ExperimentCase};
use amli::fem::Source;
use amli::krylov::{SolveOptions, DEFAULT_FCG_WINDOW, DEFAULT_MAX_IT, DEFAULT_TOL};
use amli::mesh::{CoefficientPattern, Dimension};
use clap::Args;
use serde::{Deserialize, Deserializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Markdown),
            other => Err(format!("unknown format `{other}` (expected csv or md)")),
        }
    }
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveArgs {
    /// TOML file with the same keys as the flags (`inv_h`, `fcg_window`, ...)
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Spatial dimension, 2 or 3
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub dim: Option<usize>,

    /// Cells per side of the coarsest mesh
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub coarsest: Option<usize>,

    /// Refinement counts L; finest 1/h = coarsest·2^L
    #[arg(long, value_delimiter = ',', conflicts_with = "inv_h")]
    #[serde(deserialize_with = "list")]
    pub levels: Option<Vec<usize>>,

    /// Finest mesh sizes 1/h
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "list")]
    pub inv_h: Option<Vec<usize>>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(deserialize_with = "list")]
    pub alpha: Option<Vec<f64>>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(deserialize_with = "list")]
    pub beta: Option<Vec<f64>>,

    /// const, jump2d or jump3d
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub pattern: Option<CoefficientPattern>,

    /// Jump ratio of the checkerboard patterns
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "list")]
    pub kappa: Option<Vec<f64>>,

    /// v or w
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "list")]
    pub cycle: Option<Vec<Cycle>>,

    /// linear-t, linear-x or nonlinear
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "list")]
    pub variant: Option<Vec<Variant>>,

    /// mult or add
    #[arg(long, value_delimiter = ',')]
    #[serde(deserialize_with = "list")]
    pub form: Option<Vec<Form>>,

    /// CBS constant for the polynomial: uniform `bound` or per-`level`
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub gamma: Option<GammaMode>,

    /// Shift of the Chebyshev polynomial
    #[arg(long, allow_negative_numbers = true)]
    #[serde(deserialize_with = "single")]
    pub b: Option<f64>,

    /// Relative residual reduction
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub tol: Option<f64>,

    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub max_it: Option<usize>,

    /// manufactured or ones
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub rhs: Option<Source>,

    /// Stop on the recomputed residual instead of the updated one
    #[arg(long)]
    pub true_residual: bool,

    /// Directions kept by the outer flexible CG
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub fcg_window: Option<usize>,

    /// Worker threads for the sweep
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub threads: Option<usize>,

    /// Write the table here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// csv or md
    #[arg(long)]
    #[serde(deserialize_with = "single")]
    pub format: Option<Format>,

    /// Header comment; generated from the settings when absent
    #[arg(long)]
    pub title: Option<String>,

    /// Print 0 in the time column so output is reproducible byte for byte
    #[arg(long)]
    pub no_timings: bool,
}

impl SolveArgs {
    /// `self` with every value given in `flags` replaced.
    pub fn overridden_by(self, flags: SolveArgs) -> SolveArgs {
        // `--levels` on the command line beats `inv_h` in the file and vice versa
        let (levels, inv_h) = if flags.levels.is_some() || flags.inv_h.is_some() {
            (flags.levels, flags.inv_h)
        } else {
            (self.levels, self.inv_h)
        };
        SolveArgs {
            config: flags.config.or(self.config),
            dim: flags.dim.or(self.dim),
            coarsest: flags.coarsest.or(self.coarsest),
            levels,
            inv_h,
            alpha: flags.alpha.or(self.alpha),
            beta: flags.beta.or(self.beta),
            pattern: flags.pattern.or(self.pattern),
            kappa: flags.kappa.or(self.kappa),
            cycle: flags.cycle.or(self.cycle),
            variant: flags.variant.or(self.variant),
            form: flags.form.or(self.form),
            gamma: flags.gamma.or(self.gamma),
            b: flags.b.or(self.b),
            tol: flags.tol.or(self.tol),
            max_it: flags.max_it.or(self.max_it),
            rhs: flags.rhs.or(self.rhs),
            true_residual: flags.true_residual || self.true_residual,
            fcg_window: flags.fcg_window.or(self.fcg_window),
            threads: flags.threads.or(self.threads),
            out: flags.out.or(self.out),
            format: flags.format.or(self.format),
            title: flags.title.or(self.title),
            no_timings: flags.no_timings || self.no_timings,
        }
    }

    /// Reads `--config` if given and applies the flags on top.
    pub fn resolve(self) -> Result<SolveArgs, String> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: SolveArgs = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(file.overridden_by(self))
    }

    pub fn dimension(&self) -> Result<Dimension, String> {
        let d = self.dim.unwrap_or(2);
        Dimension::from_usize(d).ok_or_else(|| format!("dimension must be 2 or 3, got {d}"))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or_else(default_threads)
    }

    /// Refinement counts of every requested mesh.
    fn level_counts(&self, dim: Dimension, coarsest: usize) -> Result<Vec<usize>, String> {
        if let Some(levels) = &self.levels {
            if levels.contains(&0) {
                return Err("level counts must be at least 1".into());
            }
            return Ok(levels.clone());
        }
        let default_inv_h: &[usize] = match dim {
            Dimension::Two => &[8, 16, 32, 64, 128],
            Dimension::Three => &[4, 8, 16, 32],
        };
        self.inv_h
            .as_deref()
            .unwrap_or(default_inv_h)
            .iter()
            .map(|&n| ExperimentCase::levels_for(dim, coarsest, n).map_err(|e| e.to_string()))
            .collect()
    }

    /// All combinations, method-major then parameters then meshes, so the
    /// rows of one method and parameter set form a convergence column.
    pub fn cases(&self) -> Result<Vec<ExperimentCase>, String> {
        let dim = self.dimension()?;
        let coarsest = self.coarsest.unwrap_or_else(|| dim.default_coarsest());
        if coarsest < 2 {
            return Err("the coarsest mesh needs at least 2 cells per side".into());
        }
        let levels = self.level_counts(dim, coarsest)?;
        let pattern = self.pattern.unwrap_or(CoefficientPattern::Constant);
        let alphas = non_empty(&self.alpha, 1.0, "alpha")?;
        let betas = non_empty(&self.beta, 1.0, "beta")?;
        let kappas = non_empty(&self.kappa, 1.0, "kappa")?;
        let defaults = AmliConfig::default();
        let variants = non_empty(&self.variant, defaults.variant, "variant")?;
        let forms = non_empty(&self.form, defaults.form, "form")?;
        let cycles = non_empty(&self.cycle, defaults.cycle, "cycle")?;
        for &x in alphas.iter().chain(&betas).chain(&kappas) {
            if !(x > 0.0 && x.is_finite()) {
                return Err(format!("coefficients must be positive and finite, got {x}"));
            }
        }
        let options = SolveOptions {
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            max_it: self.max_it.unwrap_or(DEFAULT_MAX_IT),
            true_residual: self.true_residual,
        };
        let mut cases = Vec::new();
        for &variant in &variants {
            for &form in &forms {
                for &cycle in &cycles {
                    let mut amli = AmliConfig::new(variant, form, cycle);
                    amli.gamma = self.gamma.unwrap_or(defaults.gamma);
                    amli.b = self.b.unwrap_or(defaults.b);
                    for &alpha in &alphas {
                        for &beta in &betas {
                            for &kappa in &kappas {
                                for &l in &levels {
                                    let mut c = ExperimentCase::new(dim, l, amli);
                                    c.coarsest = coarsest;
                                    c.alpha = alpha;
                                    c.beta = beta;
                                    c.pattern = pattern;
                                    c.kappa = kappa;
                                    c.rhs = self.rhs.unwrap_or(Source::Manufactured);
                                    c.options = options;
                                    c.fcg_window = self.fcg_window.unwrap_or(DEFAULT_FCG_WINDOW);
                                    cases.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(cases)
    }

    /// One-line description of the table for its header comment.
    pub fn describe(&self) -> String {
        if let Some(t) = &self.title {
            return t.clone();
        }
        let dim = self.dim.unwrap_or(2);
        let pattern = match self.pattern.unwrap_or(CoefficientPattern::Constant) {
            CoefficientPattern::Constant => "constant coefficients",
            _ => "checkerboard coefficient jumps",
        };
        let defaults = AmliConfig::default();
        let forms = names(&self.form, defaults.form, |f| match f {
            Form::Multiplicative => "multiplicative".into(),
            Form::Additive => "additive".into(),
        });
        let cycles = names(&self.cycle, defaults.cycle, |c| c.name().to_ascii_uppercase());
        let variants = names(&self.variant, defaults.variant, |v| match v {
            Variant::LinearT => "Chebyshev".into(),
            Variant::LinearX => "best-approximation".into(),
            Variant::Nonlinear => "nonlinear".into(),
        });
        let mut parts = vec![
            format!("{dim}D {pattern}"),
            format!("{forms} form"),
            format!("{cycles} cycles"),
            format!("{variants} stabilization"),
        ];
        for (name, list) in [("alpha", &self.alpha), ("beta", &self.beta), ("kappa", &self.kappa)] {
            if list.as_ref().is_some_and(|l| l.len() > 1) {
                parts.push(format!("{name} sweep"));
            }
        }
        parts.join(", ")
    }
}

fn non_empty<T: Copy>(list: &Option<Vec<T>>, default: T, name: &str) -> Result<Vec<T>, String> {
    match list {
        None => Ok(vec![default]),
        Some(v) if v.is_empty() => Err(format!("`{name}` must not be an empty list")),
        Some(v) => Ok(v.clone()),
    }
}

fn names<T: Copy>(list: &Option<Vec<T>>, default: T, name: impl Fn(T) -> String) -> String {
    let v: Vec<String> = list.clone().unwrap_or_else(|| vec![default]).into_iter().map(name).collect();
    match v.as_slice() {
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
        [] => String::new(),
    }
}

/// A TOML scalar, reparsed through `FromStr` so numbers, enum names and
/// strings go through the same parsers as the flags.
#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Scalar {
    fn parse<T: FromStr, E: serde::de::Error>(self) -> Result<T, E>
    where
        T::Err: Display,
    {
        let text = match self {
            Scalar::Int(i) => i.to_string(),
            Scalar::Float(x) => format!("{x:e}"),
            Scalar::Bool(b) => b.to_string(),
            Scalar::Str(s) => s,
        };
        text.parse().map_err(|e| E::custom(format!("`{text}`: {e}")))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(Scalar),
    Many(Vec<Scalar>),
}

fn single<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    Scalar::deserialize(d)?.parse().map(Some)
}

fn list<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: Display,
{
    match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => Ok(Some(vec![s.parse()?])),
        OneOrMany::Many(v) => v.into_iter().map(Scalar::parse).collect::<Result<_, _>>().map(Some),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> SolveArgs {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn scalars_and_lists_both_accepted() {
        let a = parse("alpha = 1e-3\nbeta = [1, 1e3]\ncycle = [\"v\", \"w\"]\ninv_h = 16\n");
        assert_eq!(a.alpha, Some(vec![1e-3]));
        assert_eq!(a.beta, Some(vec![1.0, 1e3]));
        assert_eq!(a.cycle, Some(vec![Cycle::V, Cycle::W]));
        assert_eq!(a.inv_h, Some(vec![16]));
    }

    #[test]
    fn unknown_keys_and_values_rejected() {
        assert!(toml::from_str::<SolveArgs>("alhpa = 1").is_err());
        assert!(toml::from_str::<SolveArgs>("variant = \"linear-z\"").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = parse("dim = 3\nalpha = [1, 2]\ninv_h = [4, 8]\n");
        let flags = SolveArgs {
            alpha: Some(vec![5.0]),
            levels: Some(vec![1]),
            ..SolveArgs::default()
        };
        let m = file.overridden_by(flags);
        assert_eq!(m.dim, Some(3));
        assert_eq!(m.alpha, Some(vec![5.0]));
        assert_eq!((m.levels, m.inv_h), (Some(vec![1]), None));
    }

    #[test]
    fn sweep_order_is_method_then_parameter_then_mesh() {
        let a = parse("inv_h = [8, 16]\nalpha = [1, 2]\ncycle = [\"v\", \"w\"]\n");
        let cases = a.cases().unwrap();
        let keys: Vec<(Cycle, f64, usize)> = cases.iter().map(|c| (c.amli.cycle, c.alpha, c.inv_h())).collect();
        assert_eq!(
            keys,
            [
                (Cycle::V, 1.0, 8),
                (Cycle::V, 1.0, 16),
                (Cycle::V, 2.0, 8),
                (Cycle::V, 2.0, 16),
                (Cycle::W, 1.0, 8),
                (Cycle::W, 1.0, 16),
                (Cycle::W, 2.0, 8),
                (Cycle::W, 2.0, 16),
            ]
        );
    }

    #[test]
    fn invalid_settings_rejected() {
        assert!(parse("inv_h = [12]").cases().is_err());
        assert!(parse("alpha = []").cases().is_err());
        assert!(parse("alpha = -1").cases().is_err());
        assert!(parse("dim = 4").cases().is_err());
        assert!(parse("levels = [0]").cases().is_err());
    }

    #[test]
    fn description_lists_methods_and_sweeps() {
        let a = parse("form = [\"mult\"]\ncycle = [\"v\", \"w\"]\nvariant = [\"t\", \"x\"]\nalpha = [1, 2]\n");
        assert_eq!(
            a.describe(),
            "2D constant coefficients, multiplicative form, V and W cycles, \
             Chebyshev and best-approximation stabilization, alpha sweep"
        );
    }
}
