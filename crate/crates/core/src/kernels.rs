//! Kernel pairs `(K, G)`: the even diffusion kernel and the odd convection
//! kernel, their moments, and the domination constant `C_GK`.
//!
//! The two moments that drive the large-time behaviour are
//!
//! * `A = ½ ∫ K(z) z² dz`, the effective diffusivity, and
//! * `B = ∫ G(z) z dz`, the effective convection strength.
//!
//! `C_GK` is the smallest constant with `|G| ≤ C_GK · K`, computed as a
//! discrete supremum over a symmetric sample set.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::integrate_real_line;

/// Parity of a kernel component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Analytic or tabulated profile of a kernel component, before amplitude and
/// dilation are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelShape {
    /// `e^{-|x|/σ} / (2σ)`.
    Exponential { sigma: f64 },
    /// Derivative of [`KernelShape::Exponential`]: `-sgn(x) e^{-|x|/σ} / (2σ²)`.
    ExponentialDerivative { sigma: f64 },
    /// Centred normal density with standard deviation `σ`.
    Gaussian { sigma: f64 },
    /// Derivative of [`KernelShape::Gaussian`].
    GaussianDerivative { sigma: f64 },
    /// `1/(2a)` on `[-a, a]`.
    #[serde(rename = "tophat")]
    TopHat { half_width: f64 },
    /// `x` on `[-a, a]`.
    Linear { half_width: f64 },
    Zero,
    /// Piecewise-linear interpolant through `(x, value)` nodes, zero outside
    /// the table. Either `points` is given inline or `path` names a
    /// two-column text file, resolved by [`KernelFn::resolve_tables`].
    Tabulated {
        #[serde(default)]
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
}

impl KernelShape {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            KernelShape::Exponential { sigma } => (-x.abs() / sigma).exp() / (2.0 * sigma),
            KernelShape::ExponentialDerivative { sigma } => {
                if x == 0.0 {
                    0.0
                } else {
                    -x.signum() * (-x.abs() / sigma).exp() / (2.0 * sigma * sigma)
                }
            }
            KernelShape::Gaussian { sigma } => gaussian(x, sigma),
            KernelShape::GaussianDerivative { sigma } => -x / (sigma * sigma) * gaussian(x, sigma),
            KernelShape::TopHat { half_width } => {
                if x.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            KernelShape::Linear { half_width } => {
                if x.abs() <= half_width {
                    x
                } else {
                    0.0
                }
            }
            KernelShape::Zero => 0.0,
            KernelShape::Tabulated { ref points, .. } => interpolate_table(points, x),
        }
    }

    /// Closed-form `∫ f(z) z^k dz` for `k ∈ {0, 1, 2}`.
    fn moment(&self, k: u32) -> Option<f64> {
        let m = match (self, k) {
            (KernelShape::Zero, _) => 0.0,
            (KernelShape::Exponential { .. }, 0) => 1.0,
            (KernelShape::Exponential { .. }, 1) => 0.0,
            (KernelShape::Exponential { sigma }, 2) => 2.0 * sigma * sigma,
            (KernelShape::ExponentialDerivative { .. }, 1) => -1.0,
            (KernelShape::ExponentialDerivative { .. }, _) => 0.0,
            (KernelShape::Gaussian { .. }, 0) => 1.0,
            (KernelShape::Gaussian { .. }, 1) => 0.0,
            (KernelShape::Gaussian { sigma }, 2) => sigma * sigma,
            (KernelShape::GaussianDerivative { .. }, 1) => -1.0,
            (KernelShape::GaussianDerivative { .. }, _) => 0.0,
            (KernelShape::TopHat { .. }, 0) => 1.0,
            (KernelShape::TopHat { .. }, 1) => 0.0,
            (KernelShape::TopHat { half_width }, 2) => half_width * half_width / 3.0,
            (KernelShape::Linear { half_width }, 1) => 2.0 * half_width.powi(3) / 3.0,
            (KernelShape::Linear { .. }, _) => 0.0,
            _ => return None,
        };
        Some(m)
    }

    fn length_scale(&self) -> f64 {
        match *self {
            KernelShape::Exponential { sigma }
            | KernelShape::ExponentialDerivative { sigma }
            | KernelShape::Gaussian { sigma }
            | KernelShape::GaussianDerivative { sigma } => sigma,
            KernelShape::TopHat { half_width } | KernelShape::Linear { half_width } => half_width,
            KernelShape::Zero => 1.0,
            KernelShape::Tabulated { ref points, .. } => {
                let r = table_radius(points);
                if r > 0.0 {
                    r
                } else {
                    1.0
                }
            }
        }
    }

    /// Radius beyond which the component is zero or below double precision.
    fn support_radius(&self) -> f64 {
        // ln(1e16) and sqrt(2 ln(1e16))
        const EXP_TAIL: f64 = 36.841_361_487_904_734;
        const GAUSS_TAIL: f64 = 8.583_864_368_290_58;
        match *self {
            KernelShape::Exponential { sigma } | KernelShape::ExponentialDerivative { sigma } => {
                EXP_TAIL * sigma
            }
            KernelShape::Gaussian { sigma } | KernelShape::GaussianDerivative { sigma } => {
                GAUSS_TAIL * sigma
            }
            KernelShape::TopHat { half_width } | KernelShape::Linear { half_width } => half_width,
            KernelShape::Zero => 0.0,
            KernelShape::Tabulated { ref points, .. } => table_radius(points),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            KernelShape::TopHat { half_width } | KernelShape::Linear { half_width } => {
                vec![-half_width, half_width]
            }
            KernelShape::Tabulated { ref points, .. } => points
                .iter()
                .flat_map(|p| [p[0], -p[0]])
                .collect(),
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::ConfigInvalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            KernelShape::Exponential { sigma }
            | KernelShape::ExponentialDerivative { sigma }
            | KernelShape::Gaussian { sigma }
            | KernelShape::GaussianDerivative { sigma } => positive("sigma", sigma),
            KernelShape::TopHat { half_width } | KernelShape::Linear { half_width } => {
                positive("half_width", half_width)
            }
            KernelShape::Zero => Ok(()),
            KernelShape::Tabulated { ref points, ref path } => {
                if path.is_some() {
                    return Err(Error::ConfigInvalid(
                        "tabulated kernel path not resolved".into(),
                    ));
                }
                if points.len() < 2 {
                    return Err(Error::ConfigInvalid(
                        "tabulated kernel needs at least two points".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::ConfigInvalid(
                        "tabulated kernel abscissae must be strictly increasing".into(),
                    ));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::ConfigInvalid("tabulated kernel has non-finite entries".into()));
                }
                Ok(())
            }
        }
    }
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn table_radius(points: &[[f64; 2]]) -> f64 {
    points.iter().map(|p| p[0].abs()).fold(0.0, f64::max)
}

fn interpolate_table(points: &[[f64; 2]], x: f64) -> f64 {
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return 0.0,
    };
    if x < first[0] || x > last[0] {
        return 0.0;
    }
    let i = points.partition_point(|p| p[0] <= x);
    if i == 0 {
        return first[1];
    }
    if i == points.len() {
        return last[1];
    }
    let [x0, y0] = points[i - 1];
    let [x1, y1] = points[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Reads a two-column `(x, value)` whitespace- or comma-separated table.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_table(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                Error::ConfigInvalid(format!("{}:{}: bad number {s:?}", path.display(), lineno + 1))
            })
        };
        if cols.len() != 2 {
            return Err(Error::ConfigInvalid(format!(
                "{}:{}: expected two columns",
                path.display(),
                lineno + 1
            )));
        }
        points.push([parse(cols[0])?, parse(cols[1])?]);
    }
    points.sort_by(|a, b| a[0].total_cmp(&b[0]));
    Ok(points)
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

/// One kernel component: `x ↦ amplitude · dilation · shape(dilation · x)`.
///
/// A dilation `λ` gives the rescaled kernels `λ K(λx)` that appear in the
/// self-similar rescaling `u_λ(t, x) = λ u(λ²t, λx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFn {
    #[serde(flatten)]
    pub shape: KernelShape,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub amplitude: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub dilation: f64,
    /// Applied to tabulated shapes only: evaluate the even or odd part.
    #[serde(skip)]
    symmetrize: Option<Parity>,
}

impl KernelFn {
    pub fn new(shape: KernelShape) -> Self {
        Self {
            shape,
            amplitude: 1.0,
            dilation: 1.0,
            symmetrize: None,
        }
    }

    pub fn exponential(sigma: f64) -> Self {
        Self::new(KernelShape::Exponential { sigma })
    }

    pub fn exponential_derivative(sigma: f64) -> Self {
        Self::new(KernelShape::ExponentialDerivative { sigma })
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(KernelShape::Gaussian { sigma })
    }

    pub fn gaussian_derivative(sigma: f64) -> Self {
        Self::new(KernelShape::GaussianDerivative { sigma })
    }

    pub fn tophat(half_width: f64) -> Self {
        Self::new(KernelShape::TopHat { half_width })
    }

    pub fn linear(half_width: f64) -> Self {
        Self::new(KernelShape::Linear { half_width })
    }

    pub fn zero() -> Self {
        Self::new(KernelShape::Zero)
    }

    pub fn tabulated(points: Vec<[f64; 2]>) -> Self {
        Self::new(KernelShape::Tabulated { points, path: None })
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude *= amplitude;
        self
    }

    /// `x ↦ λ f(λx)`.
    pub fn dilated(mut self, lambda: f64) -> Self {
        self.dilation *= lambda;
        self
    }

    /// Loads any `path`-referenced table, relative to `base`.
    pub fn resolve_tables(&mut self, base: &Path) -> Result<()> {
        if let KernelShape::Tabulated { points, path } = &mut self.shape {
            if let Some(p) = path.take() {
                *points = read_table(&base.join(p))?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let raw = |x: f64| self.shape.eval(self.dilation * x);
        let v = match (&self.shape, self.symmetrize) {
            (KernelShape::Tabulated { .. }, Some(Parity::Even)) => 0.5 * (raw(x) + raw(-x)),
            (KernelShape::Tabulated { .. }, Some(Parity::Odd)) => 0.5 * (raw(x) - raw(-x)),
            _ => raw(x),
        };
        self.amplitude * self.dilation * v
    }

    /// Closed-form `∫ f(z) z^k dz`, when the family provides one.
    pub fn closed_form_moment(&self, k: u32) -> Option<f64> {
        self.shape
            .moment(k)
            .map(|m| self.amplitude * m / self.dilation.powi(k as i32))
    }

    /// `∫ f(z) z^k dz` (or of `|f|` when `absolute`) by adaptive quadrature on
    /// the truncation ladder.
    pub fn quadrature_moment(&self, k: i32, absolute: bool) -> Result<f64> {
        let f = |z: f64| {
            let v = self.eval(z) * z.powi(k);
            if absolute {
                v.abs()
            } else {
                v
            }
        };
        integrate_real_line(
            f,
            &self.breakpoints(),
            self.length_scale(),
            1e-14,
            &format!("moment of order {k}"),
        )
    }

    /// Mass of `|f|` outside `[-r, r]`.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        let mut cuts = self.breakpoints();
        cuts.extend([-r, r]);
        integrate_real_line(
            |z| if z.abs() > r { self.eval(z).abs() } else { 0.0 },
            &cuts,
            self.length_scale(),
            1e-14,
            "tail mass",
        )
    }

    pub fn length_scale(&self) -> f64 {
        self.shape.length_scale() / self.dilation
    }

    pub fn support_radius(&self) -> f64 {
        self.shape.support_radius() / self.dilation
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.shape
            .breakpoints()
            .into_iter()
            .map(|b| b / self.dilation)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.dilation > 0.0 && self.dilation.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "dilation must be positive, got {}",
                self.dilation
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::ConfigInvalid("amplitude must be finite".into()));
        }
        Ok(())
    }
}

/// Family tag of a kernel pair, taken from its diffusion kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Gaussian,
    Tophat,
    Tabulated,
    Other,
}

/// The diffusion kernel `K` and the convection kernel `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PairRepr")]
pub struct KernelPair {
    pub k: KernelFn,
    pub g: KernelFn,
}

#[derive(Deserialize)]
struct PairRepr {
    k: KernelFn,
    g: KernelFn,
}

impl From<PairRepr> for KernelPair {
    fn from(r: PairRepr) -> Self {
        KernelPair::new(r.k, r.g)
    }
}

impl KernelPair {
    /// Builds a pair. Tabulated components are symmetrized: `K` to its even
    /// part, `G` to its odd part.
    pub fn new(mut k: KernelFn, mut g: KernelFn) -> Self {
        k.symmetrize = Some(Parity::Even);
        g.symmetrize = Some(Parity::Odd);
        Self { k, g }
    }

    /// `K(x) = e^{-|x|}/2`, `G = K'`: the reference pair with `A = 1`,
    /// `B = -1`, `C_GK = 1`.
    pub fn exponential() -> Self {
        Self::new(KernelFn::exponential(1.0), KernelFn::exponential_derivative(1.0))
    }

    pub fn family(&self) -> Family {
        match self.k.shape {
            KernelShape::Exponential { .. } => Family::Exponential,
            KernelShape::Gaussian { .. } => Family::Gaussian,
            KernelShape::TopHat { .. } => Family::Tophat,
            KernelShape::Tabulated { .. } => Family::Tabulated,
            _ => Family::Other,
        }
    }

    /// `x ↦ λ K(λx)`, `x ↦ λ G(λx)`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        Self::new(self.k.clone().dilated(lambda), self.g.clone().dilated(lambda))
    }

    /// `(K, -G)`.
    pub fn reflected(&self) -> Self {
        Self::new(self.k.clone(), self.g.clone().scaled(-1.0))
    }

    pub fn resolve_tables(&mut self, base: &Path) -> Result<()> {
        self.k.resolve_tables(base)?;
        self.g.resolve_tables(base)
    }

    pub fn validate_parameters(&self) -> Result<()> {
        self.k.validate()?;
        self.g.validate()
    }

    /// Radius containing the numerical support of both components.
    pub fn effective_radius(&self) -> f64 {
        let r = self.k.support_radius().max(self.g.support_radius());
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("kernel pair serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// How [`moment_a`] and [`moment_b`] evaluate their integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentMethod {
    /// Closed form when the family provides one, otherwise quadrature.
    #[default]
    Auto,
    Quadrature,
}

/// `A = ½ ∫ K(z) z² dz`.
pub fn moment_a(pair: &KernelPair, method: MomentMethod) -> Result<f64> {
    let quad = || pair.k.quadrature_moment(2, false).map(|m| 0.5 * m);
    match (method, pair.k.closed_form_moment(2)) {
        (MomentMethod::Auto, Some(m2)) => {
            let a = 0.5 * m2;
            cross_check("A", a, quad()?);
            Ok(a)
        }
        _ => quad(),
    }
}

/// `B = ∫ G(z) z dz`.
pub fn moment_b(pair: &KernelPair, method: MomentMethod) -> Result<f64> {
    let quad = || pair.g.quadrature_moment(1, false);
    match (method, pair.g.closed_form_moment(1)) {
        (MomentMethod::Auto, Some(b)) => {
            cross_check("B", b, quad()?);
            Ok(b)
        }
        _ => quad(),
    }
}

fn cross_check(name: &str, closed: f64, quad: f64) {
    if (closed - quad).abs() > 1e-9 * closed.abs().max(1.0) {
        log::warn!("{name}: closed form {closed} disagrees with quadrature {quad}");
    }
}

/// Points symmetric about the origin.
#[derive(Debug, Clone)]
pub struct SampleSet {
    points: Vec<f64>,
}

impl SampleSet {
    /// `{±radius·k/count : k = 0..=count}`.
    pub fn symmetric(radius: f64, count: usize) -> Self {
        let count = count.max(1);
        let mut points = Vec::with_capacity(2 * count + 1);
        points.push(0.0);
        for k in 1..=count {
            let x = radius * k as f64 / count as f64;
            points.push(x);
            points.push(-x);
        }
        Self { points }
    }

    /// 10⁵ points on each side over the effective support of the pair.
    pub fn default_for(pair: &KernelPair) -> Self {
        Self::symmetric(pair.effective_radius(), 100_000)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn positive(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|&x| x >= 0.0)
    }
}

/// Which structural hypotheses hold for a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub k_nonnegative: bool,
    pub k_even: bool,
    pub k_unit_mass: bool,
    pub g_odd: bool,
    pub dominated: bool,
    pub finite_moments: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.k_nonnegative
            && self.k_even
            && self.k_unit_mass
            && self.g_odd
            && self.dominated
            && self.finite_moments
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub a: f64,
    pub b: f64,
    pub c_gk: f64,
    pub mass_k: f64,
    pub hypotheses: Hypotheses,
}

/// Checks the structural hypotheses on `pair` and computes `A`, `B`, `C_GK`
/// and the mass of `K`.
///
/// `C_GK` is `max |G(x)| / K(x)` over samples with `K(x) > 0`. A sample with
/// `K(x) = 0 < |G(x)|` is a [`Error::DominationFailure`].
pub fn validate_kernel_pair(pair: &KernelPair, samples: &SampleSet, tol: f64) -> Result<MomentReport> {
    assert!(tol > 0.0, "tolerance must be positive");
    pair.validate_parameters()?;

    let mut k_nonnegative = true;
    let mut k_even = true;
    let mut g_odd = true;
    let mut c_gk: f64 = 0.0;
    let k_peak = samples
        .points()
        .iter()
        .map(|&x| pair.k.eval(x).abs())
        .fold(0.0, f64::max);
    let g_peak = samples
        .points()
        .iter()
        .map(|&x| pair.g.eval(x).abs())
        .fold(0.0, f64::max);

    for x in samples.positive() {
        let (kp, km) = (pair.k.eval(x), pair.k.eval(-x));
        let (gp, gm) = (pair.g.eval(x), pair.g.eval(-x));
        if kp < 0.0 || km < 0.0 {
            k_nonnegative = false;
        }
        if (kp - km).abs() > tol * k_peak.max(f64::MIN_POSITIVE) {
            k_even = false;
        }
        if (gp + gm).abs() > tol * g_peak.max(f64::MIN_POSITIVE) {
            g_odd = false;
        }
        for (kv, gv, at) in [(kp, gp, x), (km, gm, -x)] {
            if kv > 0.0 {
                c_gk = c_gk.max(gv.abs() / kv);
            } else if gv != 0.0 {
                return Err(Error::DominationFailure { x: at, g: gv.abs() });
            }
        }
    }

    let mass_k = match pair.k.closed_form_moment(0) {
        Some(m) => m,
        None => pair.k.quadrature_moment(0, false)?,
    };
    // Finite second moments: K z² and |G|(1 + z²).
    pair.k.quadrature_moment(2, true)?;
    pair.g.quadrature_moment(0, true)?;
    pair.g.quadrature_moment(2, true)?;

    let a = moment_a(pair, MomentMethod::Auto)?;
    let b = moment_b(pair, MomentMethod::Auto)?;

    Ok(MomentReport {
        a,
        b,
        c_gk,
        mass_k,
        hypotheses: Hypotheses {
            k_nonnegative,
            k_even,
            k_unit_mass: (mass_k - 1.0).abs() <= tol,
            g_odd,
            dominated: c_gk.is_finite(),
            finite_moments: true,
        },
    })
}
