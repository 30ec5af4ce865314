//! Symbols `psi(omega) = b(omega) * prod_j psi_{alpha_j, beta_j}(omega - omega_j)`:
//! pure Fisher-Hartwig factors, the physical model symbols and the smooth
//! remainder `b`.

use crate::error::{invalid, Error, Result};
use crate::specfun::{principal_ln, C64};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for the removability check on `b`.
pub const REMOVABILITY_TOL: f64 = 1e-6;

/// Gaussian regulator cut: `exp(-x^2 / L^2)` is below 1e-17 past this many `L`.
const REGULATOR_CUT: f64 = 6.3;

/// Terms kept in the Landau-level sum: stop once `exp(-a n) < 1e-16`.
const LANDAU_TAIL: f64 = 1e-16;

/// One Fisher-Hartwig singularity `psi_{alpha,beta}(omega - location)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhSingularity {
    pub location: f64,
    pub alpha: C64,
    pub beta: C64,
}

impl FhSingularity {
    /// Requires `|Re(alpha + beta)| < 1` and `|Re(alpha - beta)| < 1`.
    pub fn new(location: f64, alpha: C64, beta: C64) -> Result<Self> {
        if !location.is_finite() {
            return Err(invalid("location", "must be finite"));
        }
        if (alpha + beta).re.abs() >= 1.0 || (alpha - beta).re.abs() >= 1.0 {
            return Err(invalid(
                "alpha/beta",
                format!("need |Re(alpha +- beta)| < 1, got alpha={alpha}, beta={beta}"),
            ));
        }
        Ok(Self {
            location,
            alpha,
            beta,
        })
    }

    pub fn factor(&self, omega: f64) -> Result<C64> {
        fh_factor(omega - self.location, self.alpha, self.beta)
    }

    pub fn log_factor(&self, omega: f64) -> Result<C64> {
        log_fh_factor(omega - self.location, self.alpha, self.beta)
    }

    /// Contribution `alpha * beta` to the power-law exponent.
    pub fn exponent(&self) -> C64 {
        self.alpha * self.beta
    }
}

/// Analytic logarithm of `((w - 0i)/(w - i))^alpha ((w + 0i)/(w + i))^beta`,
/// with both arguments vanishing as `w -> +inf`.
///
/// Written as `(alpha+beta) ln(|w| / |w - i|) + i (alpha-beta) sgn(w) atan(1/|w|)`,
/// which avoids the cancellation of the four separate arguments.
pub fn log_fh_factor(omega: f64, alpha: C64, beta: C64) -> Result<C64> {
    if omega == 0.0 {
        return Err(Error::SingularPoint { omega });
    }
    if !omega.is_finite() {
        return Err(Error::NonFinite("fh_factor argument"));
    }
    let x = omega.abs();
    let modulus = if x < 1.0 {
        x.ln() - 0.5 * (x * x).ln_1p()
    } else {
        -0.5 * (1.0 / (x * x)).ln_1p()
    };
    let phase = omega.signum() * (1.0 / x).atan();
    Ok((alpha + beta) * modulus + (alpha - beta) * I * phase)
}

/// The pure Fisher-Hartwig factor `psi_{alpha,beta}(omega)`.
pub fn fh_factor(omega: f64, alpha: C64, beta: C64) -> Result<C64> {
    Ok(log_fh_factor(omega, alpha, beta)?.exp())
}

/// `alpha - beta = ln(limit_plus / limit_minus) / (i pi)`, principal log.
pub fn jump_parameters(limit_plus: C64, limit_minus: C64) -> Result<C64> {
    if limit_plus.norm() == 0.0 || limit_minus.norm() == 0.0 {
        return Err(Error::ZeroLimit);
    }
    Ok(principal_ln(limit_plus / limit_minus) / (I * PI))
}

/// Physical parameters of the model symbols.
///
/// `landau_cutoff` is the high-energy cut-off in the Landau-level sum and `a0`
/// the real part of the flat-band Green's function in units of `d0`; both
/// are renamed to keep `alpha`, `beta` for Fisher-Hartwig exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub fermi_energy: f64,
    pub coupling: f64,
    pub regulator_scale: f64,
    pub omega_c: f64,
    pub landau_cutoff: f64,
    pub delta: f64,
    pub d0: f64,
    pub a0: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            fermi_energy: 1.0,
            coupling: 0.5,
            regulator_scale: 10.0,
            omega_c: 0.4,
            landau_cutoff: 0.5,
            delta: 0.05,
            d0: 0.1,
            a0: 1.0,
        }
    }
}

impl PhysicalParams {
    /// Gaussian regulator `Omega(x) = exp(-x^2 / Lambda^2)`, `Omega(0) = 1`.
    pub fn regulator(&self, x: f64) -> f64 {
        let r = x / self.regulator_scale;
        (-r * r).exp()
    }

    /// `tan(theta) = v Omega(0) sqrt(m / (2 eps_F))` for the X-ray edge.
    pub fn xray_tan_theta(&self) -> f64 {
        self.coupling * (self.mass / (2.0 * self.fermi_energy)).sqrt()
    }

    pub fn xray_theta(&self) -> f64 {
        self.xray_tan_theta().atan()
    }

    fn check_positive(&self, name: &'static str, value: f64) -> Result<()> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            Err(invalid(name, format!("must be positive and finite, got {value}")))
        }
    }

    fn check_xray(&self) -> Result<()> {
        self.check_positive("mass", self.mass)?;
        self.check_positive("fermi_energy", self.fermi_energy)?;
        self.check_positive("regulator_scale", self.regulator_scale)?;
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(invalid("coupling", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Gaussian smooth part `b(omega) = 1 + amplitude * exp(-(omega/width)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianBump {
    pub fn new(amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude > -1.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", "must exceed -1 so that b stays positive"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", "must be positive"));
        }
        Ok(Self { amplitude, width })
    }

    fn minus_one(&self, omega: f64) -> f64 {
        let r = omega / self.width;
        self.amplitude * (-r * r).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `b * prod psi_j` with `b` = 1 or a Gaussian bump.
    Product { bump: Option<GaussianBump> },
    XRay(PhysicalParams),
    FlatBand(PhysicalParams),
    /// `crossings`: zeros of `Re psi` away from the levels, where `psi`
    /// passes within `O(delta)` of the origin.
    Magnetic { params: PhysicalParams, levels: usize, crossings: Vec<f64> },
}

/// Where `psi - 1` lives in frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// `psi - 1` is below roundoff outside `[lo, hi]`.
    Compact { lo: f64, hi: f64 },
    /// `psi - 1` has a convergent expansion in `1/omega` for `|omega| > radius`.
    Algebraic { radius: f64 },
}

/// Quadrature hints for integrals over frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLayout {
    /// Points toward which panels must be graded.
    pub graded: Vec<f64>,
    pub support: Support,
    /// Widest panel that resolves the non-oscillatory structure.
    pub max_width: f64,
}

/// A symbol `psi = b * prod_j psi_{alpha_j, beta_j}(omega - omega_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSpec {
    label: String,
    kind: Kind,
    singularities: Vec<FhSingularity>,
}

impl SymbolSpec {
    /// `psi == 1`.
    pub fn trivial() -> Self {
        Self {
            label: "trivial".into(),
            kind: Kind::Product { bump: None },
            singularities: Vec::new(),
        }
    }

    /// Product of pure Fisher-Hartwig factors and an optional Gaussian bump.
    pub fn product(singularities: Vec<FhSingularity>, bump: Option<GaussianBump>) -> Self {
        let label = match (&bump, singularities.len()) {
            (None, 0) => "trivial".to_string(),
            (Some(_), 0) => "gaussian_bump".to_string(),
            (None, _) => "pure_fh".to_string(),
            (Some(_), _) => "custom".to_string(),
        };
        let singularities = singularities
            .into_iter()
            .filter(|s| s.alpha.norm() != 0.0 || s.beta.norm() != 0.0)
            .collect();
        Self {
            label,
            kind: Kind::Product { bump },
            singularities,
        }
    }

    /// `psi(omega) = 1 + amplitude * exp(-omega^2)`.
    pub fn gaussian_bump(amplitude: f64) -> Result<Self> {
        Ok(Self::product(Vec::new(), Some(GaussianBump::new(amplitude, 1.0)?)))
    }

    /// Pure Fisher-Hartwig symbol with a single singularity at the origin.
    pub fn pure_fh(alpha: C64, beta: C64) -> Result<Self> {
        Ok(Self::product(vec![FhSingularity::new(0.0, alpha, beta)?], None))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn singularities(&self) -> &[FhSingularity] {
        &self.singularities
    }

    /// `sum_j alpha_j beta_j`.
    pub fn exponent(&self) -> C64 {
        self.singularities.iter().map(FhSingularity::exponent).sum()
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, Kind::Product { bump: None }) && self.singularities.is_empty()
    }

    /// Physical parameters behind a model symbol.
    pub fn physical_params(&self) -> Option<&PhysicalParams> {
        match &self.kind {
            Kind::XRay(p) | Kind::FlatBand(p) | Kind::Magnetic { params: p, .. } => Some(p),
            Kind::Product { .. } => None,
        }
    }

    fn check_regular(&self, omega: f64) -> Result<()> {
        if !omega.is_finite() {
            return Err(Error::NonFinite("symbol argument"));
        }
        if self.singularities.iter().any(|s| s.location == omega) {
            return Err(Error::SingularPoint { omega });
        }
        Ok(())
    }

    /// `psi(omega)`.
    pub fn eval(&self, omega: f64) -> Result<C64> {
        Ok(self.eval_minus_one(omega)? + 1.0)
    }

    /// `psi(omega) - 1` without cancellation for weak symbols.
    pub fn eval_minus_one(&self, omega: f64) -> Result<C64> {
        self.check_regular(omega)?;
        Ok(match &self.kind {
            Kind::Product { bump } => {
                let mut log_fh = C64::new(0.0, 0.0);
                for s in &self.singularities {
                    log_fh += s.log_factor(omega)?;
                }
                let fh_minus_one = expm1(log_fh);
                match bump {
                    None => fh_minus_one,
                    Some(b) => {
                        let bm = b.minus_one(omega);
                        fh_minus_one * (1.0 + bm) + bm
                    }
                }
            }
            Kind::XRay(p) => -p.coupling * xray_f(p, omega),
            Kind::FlatBand(p) => -p.coupling * flatband_f(p, omega),
            Kind::Magnetic { params, levels, .. } => -params.coupling * magnetic_f(params, *levels, omega),
        })
    }

    /// `ln psi(omega)` on the branch continuous off the singular points and
    /// vanishing at infinity.
    pub fn log_eval(&self, omega: f64) -> Result<C64> {
        match &self.kind {
            Kind::Product { bump } => {
                self.check_regular(omega)?;
                let mut acc = C64::new(0.0, 0.0);
                for s in &self.singularities {
                    acc += s.log_factor(omega)?;
                }
                if let Some(b) = bump {
                    acc += b.minus_one(omega).ln_1p();
                }
                Ok(acc)
            }
            _ => Ok(log1p(self.eval_minus_one(omega)?)),
        }
    }

    /// `ln psi - psi + 1`, accurate when `psi` is close to 1.
    pub fn log_minus_linear(&self, omega: f64) -> Result<C64> {
        let x = self.eval_minus_one(omega)?;
        match &self.kind {
            Kind::Product { .. } => Ok(self.log_eval(omega)? - x),
            _ => Ok(log1p_minus_x(x)),
        }
    }

    /// The raw smooth part `b = psi / prod psi_j` (no extrapolation at the
    /// singular points; see [`SmoothRemainder`]).
    pub fn smooth_part(&self, omega: f64) -> Result<C64> {
        Ok(self.log_smooth_part(omega)?.exp())
    }

    /// `ln b = ln psi - sum_j ln psi_j`.
    pub fn log_smooth_part(&self, omega: f64) -> Result<C64> {
        match &self.kind {
            Kind::Product { bump } => {
                self.check_regular(omega)?;
                Ok(bump.map_or(C64::new(0.0, 0.0), |b| C64::new(b.minus_one(omega).ln_1p(), 0.0)))
            }
            _ => {
                let mut acc = self.log_eval(omega)?;
                for s in &self.singularities {
                    acc -= s.log_factor(omega)?;
                }
                Ok(acc)
            }
        }
    }

    /// The Gaussian smooth part of a `Product` symbol.
    pub fn bump(&self) -> Option<GaussianBump> {
        match self.kind {
            Kind::Product { bump } => bump,
            _ => None,
        }
    }

    /// `ln psi` minus its Fisher-Hartwig part decays fast at infinity for
    /// model symbols; `Product` symbols expose `ln b` directly.
    pub fn has_explicit_smooth_part(&self) -> bool {
        matches!(self.kind, Kind::Product { .. })
    }

    /// Quadrature layout for integrals of `psi - 1` and `ln psi`.
    pub fn layout(&self) -> FrequencyLayout {
        let mut graded: Vec<f64> = self.singularities.iter().map(|s| s.location).collect();
        let (support, max_width) = match &self.kind {
            Kind::Product { bump } => {
                let width = bump.map_or(0.5, |b| (0.25 * b.width).min(0.5));
                if self.singularities.is_empty() {
                    let cut = bump.map_or(1.0, |b| 6.5 * b.width);
                    (Support::Compact { lo: -cut, hi: cut }, width)
                } else {
                    (Support::Algebraic { radius: self.expansion_radius() }, width)
                }
            }
            Kind::XRay(p) => {
                graded.extend([0.0, p.fermi_energy]);
                let cut = REGULATOR_CUT * p.regulator_scale;
                let support = Support::Compact {
                    lo: p.fermi_energy - cut,
                    hi: p.fermi_energy + cut,
                };
                (support, (0.125 * p.regulator_scale).min(1.0))
            }
            Kind::FlatBand(p) => {
                graded.push(0.0);
                let cut = REGULATOR_CUT * p.regulator_scale;
                (Support::Compact { lo: -cut, hi: cut }, (0.125 * p.regulator_scale).min(1.0))
            }
            Kind::Magnetic { params: p, levels, crossings } => {
                graded.push(p.fermi_energy);
                graded.extend(crossings);
                let cut = REGULATOR_CUT * p.regulator_scale;
                let (lo, hi) = (p.fermi_energy - cut, p.fermi_energy + cut);
                graded.extend(
                    (0..*levels)
                        .map(|n| n as f64 * p.omega_c)
                        .filter(|&w| w > lo && w < hi),
                );
                let width = (0.125 * p.regulator_scale).min(0.25 * p.omega_c).min(1.0);
                (Support::Compact { lo, hi }, width)
            }
        };
        graded.sort_by(f64::total_cmp);
        graded.dedup();
        FrequencyLayout {
            graded,
            support,
            max_width,
        }
    }

    fn expansion_radius(&self) -> f64 {
        // singular points of psi: a_j and a_j +- i; expansions are taken in
        // powers of 1/(omega + i)
        self.singularities
            .iter()
            .map(|s| s.location.abs() + 2.0)
            .fold(2.0, f64::max)
    }

    /// Coefficients `L_1..L_m` of `ln psi = sum L_n omega^{-n}` for `Product`
    /// symbols with singularities (the bump decays faster than any power).
    pub fn inverse_power_log_coefficients(&self, m: usize) -> Option<Vec<C64>> {
        if !matches!(self.kind, Kind::Product { .. }) || self.singularities.is_empty() {
            return None;
        }
        let mut log_coeffs = vec![C64::new(0.0, 0.0); m];
        for s in &self.singularities {
            let a = C64::new(s.location, 0.0);
            for (k, slot) in log_coeffs.iter_mut().enumerate() {
                let n = k as i32 + 1;
                let up = (a + I).powi(n) - a.powi(n);
                let down = (a - I).powi(n) - a.powi(n);
                *slot += (s.alpha * up + s.beta * down) / n as f64;
            }
        }
        Some(log_coeffs)
    }

    /// Coefficients `P_1..P_m` of `psi - 1 = sum P_n omega^{-n}`, see
    /// [`Self::inverse_power_log_coefficients`].
    pub fn inverse_power_coefficients(&self, m: usize) -> Option<Vec<C64>> {
        let log_coeffs = self.inverse_power_log_coefficients(m)?;
        // exponentiate the power series
        let mut p = vec![C64::new(0.0, 0.0); m + 1];
        p[0] = C64::new(1.0, 0.0);
        for n in 1..=m {
            let mut acc = C64::new(0.0, 0.0);
            for k in 1..=n {
                acc += log_coeffs[k - 1] * p[n - k] * k as f64;
            }
            p[n] = acc / n as f64;
        }
        Some(p[1..].to_vec())
    }

    /// Radius beyond which [`Self::inverse_power_coefficients`] converge.
    pub fn algebraic_radius(&self) -> Option<f64> {
        match self.layout().support {
            Support::Algebraic { radius } => Some(radius),
            Support::Compact { .. } => None,
        }
    }
}

/// `exp(z) - 1` without cancellation near 0.
pub fn expm1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    // e^re cos(im) - 1 = em1 cos(im) - 2 sin^2(im/2)
    C64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// Principal `ln(1 + x)`, accurate for small `x`.
pub fn log1p(x: C64) -> C64 {
    if x.norm() < 0.1 {
        log1p_minus_x(x) + x
    } else {
        principal_ln(x + 1.0)
    }
}

/// `ln(1 + x) - x`, accurate for small `x`.
pub fn log1p_minus_x(x: C64) -> C64 {
    if x.norm() < 0.1 {
        // -x^2/2 + x^3/3 - ...
        let mut pow = x * x;
        let mut acc = C64::new(0.0, 0.0);
        for n in 2..40 {
            let term = pow / n as f64;
            acc += if n % 2 == 0 { -term } else { term };
            if term.norm() < 1e-18 * acc.norm() {
                break;
            }
            pow *= x;
        }
        acc
    } else {
        principal_ln(x + 1.0) - x
    }
}

/// The X-ray Green's function `F(omega - eps_F)` read as a function of `omega`.
fn xray_f(p: &PhysicalParams, omega: f64) -> C64 {
    let reg = p.regulator(omega - p.fermi_energy);
    if omega >= 0.0 {
        let sgn = (omega - p.fermi_energy).signum();
        I * (sgn * reg * (p.mass / (2.0 * omega)).sqrt())
    } else {
        C64::new(-reg * (p.mass / (-2.0 * omega)).sqrt(), 0.0)
    }
}

/// Flat-band `F(omega) = D0 (a0 + i pi sgn omega)`, regulated by `Omega(omega)`.
fn flatband_f(p: &PhysicalParams, omega: f64) -> C64 {
    C64::new(p.a0, PI * omega.signum()) * (p.d0 * p.regulator(omega))
}

/// Landau-level Green's function `F(omega - eps_F)` read as a function of `omega`.
fn magnetic_f(p: &PhysicalParams, levels: usize, omega: f64) -> C64 {
    let s = (omega - p.fermi_energy).signum();
    let reg = p.regulator(omega - p.fermi_energy);
    if reg == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..levels {
        let weight = (-p.landau_cutoff * n as f64).exp();
        acc += weight / C64::new(omega - n as f64 * p.omega_c, p.delta * s);
    }
    acc * reg
}

/// Evaluates `F(omega - eps_F)` of the X-ray model; `g0` is its transform.
pub fn xray_green_function(p: &PhysicalParams, omega: f64) -> Result<C64> {
    p.check_xray()?;
    if omega == 0.0 || omega == p.fermi_energy {
        return Err(Error::SingularPoint { omega });
    }
    Ok(xray_f(p, omega))
}

/// X-ray edge symbol `psi = 1 - v F(omega - eps_F)` with singularities
/// `(0, 0, -1/2)` at the band edge and `(eps_F, -theta/pi, theta/pi)` at the
/// Fermi level.
pub fn xray_symbol(params: &PhysicalParams) -> Result<SymbolSpec> {
    params.check_xray()?;
    if params.coupling == 0.0 {
        return Ok(SymbolSpec::trivial());
    }
    let t = params.xray_theta() / PI;
    let singularities = vec![
        FhSingularity::new(0.0, C64::new(0.0, 0.0), C64::new(-0.5, 0.0))?,
        FhSingularity::new(params.fermi_energy, C64::new(-t, 0.0), C64::new(t, 0.0))?,
    ];
    Ok(SymbolSpec {
        label: "xray".into(),
        kind: Kind::XRay(*params),
        singularities,
    })
}

/// Flat-band symbol `1 - v Omega(omega) D0 (a0 + i pi sgn omega)` with one
/// jump at the origin split symmetrically, `alpha = -beta`.
pub fn flatband_symbol(params: &PhysicalParams) -> Result<SymbolSpec> {
    params.check_positive("regulator_scale", params.regulator_scale)?;
    params.check_positive("d0", params.d0)?;
    if !params.coupling.is_finite() || !params.a0.is_finite() {
        return Err(invalid("coupling/a0", "must be finite"));
    }
    if params.coupling == 0.0 {
        return Ok(SymbolSpec::trivial());
    }
    let (plus, minus) = flatband_limits(params);
    if plus.norm() < 1e-12 || minus.norm() < 1e-12 {
        return Err(Error::VanishingSymbol { omega: 0.0 });
    }
    if 1.0 - params.coupling * params.d0 * params.a0 <= 0.0 {
        // the symbol's argument passes +-pi/2 at the jump and the principal
        // jump no longer matches the continuous one
        return Err(invalid(
            "coupling",
            "flat-band symbol needs v D0 a0 < 1 for a principal-branch jump",
        ));
    }
    let half = jump_parameters(plus, minus)? / 2.0;
    Ok(SymbolSpec {
        label: "flatband".into(),
        kind: Kind::FlatBand(*params),
        singularities: vec![FhSingularity::new(0.0, half, -half)?],
    })
}

/// Limits `psi(0+)`, `psi(0-)` of the flat-band symbol.
pub fn flatband_limits(p: &PhysicalParams) -> (C64, C64) {
    let vd = p.coupling * p.d0;
    (
        C64::new(1.0 - vd * p.a0, -vd * PI),
        C64::new(1.0 - vd * p.a0, vd * PI),
    )
}

/// Jump data of the magnetic-field symbol at the Fermi level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticJump {
    pub c: f64,
    pub d: f64,
    /// `theta = arctan(d / (1 - c))`.
    pub theta: f64,
}

impl MagneticJump {
    /// `-theta^2 / pi^2`.
    pub fn exponent(&self) -> f64 {
        -(self.theta / PI).powi(2)
    }
}

fn landau_levels(p: &PhysicalParams) -> Result<usize> {
    if !(p.landau_cutoff > 0.0) || !p.landau_cutoff.is_finite() {
        return Err(Error::NonConvergentSum(format!(
            "Landau-level cut-off must be positive, got {}",
            p.landau_cutoff
        )));
    }
    Ok((-LANDAU_TAIL.ln() / p.landau_cutoff).ceil() as usize + 1)
}

fn check_magnetic(p: &PhysicalParams) -> Result<usize> {
    p.check_positive("omega_c", p.omega_c)?;
    p.check_positive("delta", p.delta)?;
    p.check_positive("fermi_energy", p.fermi_energy)?;
    if !p.coupling.is_finite() {
        return Err(invalid("coupling", "must be finite"));
    }
    landau_levels(p)
}

/// `c = -v Omega(0) sum e^{-a n} (eps_F - n w_c) / ((eps_F - n w_c)^2 + delta^2)`,
/// `d = -v Omega(0) delta sum e^{-a n} / ((eps_F - n w_c)^2 + delta^2)`.
pub fn magnetic_jump(p: &PhysicalParams) -> Result<MagneticJump> {
    let levels = check_magnetic(p)?;
    let (mut c, mut d) = (0.0, 0.0);
    for n in 0..levels {
        let weight = (-p.landau_cutoff * n as f64).exp();
        let x = p.fermi_energy - n as f64 * p.omega_c;
        let den = x * x + p.delta * p.delta;
        c += weight * x / den;
        d += weight / den;
    }
    // Omega(0) = 1
    let c = -p.coupling * c;
    let d = -p.coupling * p.delta * d;
    Ok(MagneticJump {
        c,
        d,
        theta: (d / (1.0 - c)).atan(),
    })
}

/// Magnetic-field symbol `1 - v Omega(omega - eps_F) sum_n e^{-a n} /
/// (omega - n w_c + i delta sgn(omega - eps_F))` with its Fermi-level jump.
///
/// The exponents `(alpha, -alpha)` come from the symbol's own one-sided
/// limits at `eps_F`.
pub fn magnetic_symbol(p: &PhysicalParams) -> Result<SymbolSpec> {
    let levels = check_magnetic(p)?;
    p.check_positive("regulator_scale", p.regulator_scale)?;
    if p.coupling == 0.0 {
        return Ok(SymbolSpec::trivial());
    }
    let ef = p.fermi_energy;
    let f_plus = magnetic_f_limit(p, levels, 1.0);
    let f_minus = magnetic_f_limit(p, levels, -1.0);
    let (plus, minus) = (1.0 - p.coupling * f_plus, 1.0 - p.coupling * f_minus);
    let half = jump_parameters(plus, minus)? / 2.0;
    Ok(SymbolSpec {
        label: "magnetic".into(),
        kind: Kind::Magnetic {
            params: *p,
            levels,
            crossings: magnetic_crossings(p, levels),
        },
        singularities: vec![FhSingularity::new(ef, half, -half)?],
    })
}

/// Zeros of `Re psi`, located by bisection between samples that are uniform
/// at spacing `w_c / 64` and geometric toward every level. `Re psi` is
/// continuous for `delta > 0`, so every sign change brackets a zero.
fn magnetic_crossings(p: &PhysicalParams, levels: usize) -> Vec<f64> {
    let cut = REGULATOR_CUT * p.regulator_scale;
    let (lo, hi) = (p.fermi_energy - cut, p.fermi_energy + cut);
    let re = |w: f64| 1.0 - p.coupling * magnetic_f(p, levels, w).re;
    let step = p.omega_c / 64.0;
    let mut samples: Vec<f64> = (0..=((hi - lo) / step).ceil() as usize)
        .map(|i| (lo + i as f64 * step).min(hi))
        .collect();
    for n in 0..levels {
        let level = n as f64 * p.omega_c;
        if level <= lo || level >= hi {
            continue;
        }
        for j in 0..60 {
            let d = step * 0.5f64.powi(j);
            samples.extend([level - d, level + d]);
        }
    }
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    let mut out = Vec::new();
    for pair in samples.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        let fa = re(a);
        if fa.signum() == re(b).signum() {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if re(m).signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

fn magnetic_f_limit(p: &PhysicalParams, levels: usize, side: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..levels {
        let weight = (-p.landau_cutoff * n as f64).exp();
        acc += weight / C64::new(p.fermi_energy - n as f64 * p.omega_c, p.delta * side);
    }
    acc
}

/// One-sided limit of `f` at `at` from `side` (+1 or -1), extrapolated from
/// `f(at + side 10^-k)` by Aitken's process, k = 4..8. At the origin no ulp
/// floor applies and k = 20, 24, .., 36 reaches past slowly emerging limits
/// such as `1 + c / (v sqrt|omega|)` at small `v`.
pub fn one_sided_limit<F: Fn(f64) -> Result<C64>>(f: F, at: f64, side: f64) -> Result<C64> {
    let scale = at.abs().max(1.0);
    let (first, stride) = if at == 0.0 { (20, 4) } else { (4, 1) };
    let mut values = Vec::with_capacity(5);
    for i in 0..5 {
        let h = scale * 10f64.powi(-(first + stride * i));
        values.push(f(at + side * h)?);
    }
    let n = values.len();
    let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
    let den = x2 - x1 * 2.0 + x0;
    let d = x2 - x1;
    if den.norm() <= 1e-14 * x2.norm().max(1.0) || d.norm() >= (x1 - x0).norm() {
        // converged already, or not in the geometric regime
        return Ok(x2);
    }
    // Aitken with a real ratio estimate keeps the extrapolation along the
    // direction of the differences
    let ratio = (d.norm() / (x1 - x0).norm()).min(0.99);
    Ok(x2 + d * (ratio / (1.0 - ratio)))
}

/// The smooth part `b` of a symbol, with removable singular points filled
/// in by their one-sided limits.
#[derive(Debug, Clone)]
pub struct SmoothRemainder {
    spec: SymbolSpec,
    /// `(location, ln b at location)`.
    limits: Vec<(f64, C64)>,
}

/// Builds `b = psi / prod psi_j` and checks that every singular point of
/// the spec is removable for `b` (one-sided limits of `ln b` agree).
pub fn smooth_remainder(spec: &SymbolSpec) -> Result<SmoothRemainder> {
    let mut limits = Vec::new();
    for s in spec.singularities() {
        let at = s.location;
        let f = |w: f64| spec.log_smooth_part(w);
        let plus = one_sided_limit(f, at, 1.0)?;
        let minus = one_sided_limit(f, at, -1.0)?;
        let gap = (plus - minus).norm();
        if gap > REMOVABILITY_TOL * plus.exp().norm().max(1.0) {
            return Err(Error::NonRemovable { location: at, gap });
        }
        limits.push((at, (plus + minus) * 0.5));
    }
    Ok(SmoothRemainder {
        spec: spec.clone(),
        limits,
    })
}

impl SmoothRemainder {
    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// `ln b(omega)`, continuous across the singular points.
    pub fn log_eval(&self, omega: f64) -> C64 {
        for &(at, value) in &self.limits {
            if (omega - at).abs() <= 4.0 * f64::EPSILON * at.abs().max(f64::MIN_POSITIVE) {
                return value;
            }
        }
        match self.spec.log_smooth_part(omega) {
            Ok(v) => v,
            Err(_) => self
                .limits
                .iter()
                .min_by(|a, b| (a.0 - omega).abs().total_cmp(&(b.0 - omega).abs()))
                .map_or(C64::new(0.0, 0.0), |l| l.1),
        }
    }

    pub fn eval(&self, omega: f64) -> C64 {
        self.log_eval(omega).exp()
    }

    /// `ln b` at a singular location (the extrapolated limit).
    pub fn log_limit_at(&self, location: f64) -> Option<C64> {
        self.limits
            .iter()
            .find(|l| l.0 == location)
            .map(|l| l.1)
    }
}

/// Net change of `arg f` over `[lo, hi]` divided by `2 pi`, by unwrapping on
/// `samples` equispaced points (skipping points where `f` fails).
pub fn winding_number<F: Fn(f64) -> Result<C64>>(f: F, lo: f64, hi: f64, samples: usize) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for i in 0..=samples {
        let w = lo + (hi - lo) * i as f64 / samples as f64;
        let Ok(v) = f(w) else { continue };
        let arg = v.arg();
        if let Some(p) = prev {
            let mut step = arg - p;
            while step > PI {
                step -= 2.0 * PI;
            }
            while step < -PI {
                step += 2.0 * PI;
            }
            total += step;
        }
        prev = Some(arg);
    }
    total / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fh_factor_trivial_exponents() {
        for &w in &[-3.0, -1e-5, 2e-7, 0.4, 120.0] {
            assert_eq!(fh_factor(w, c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        }
        assert!(matches!(
            fh_factor(0.0, c(0.3, 0.0), c(0.1, 0.0)),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn fh_factor_normalized_at_plus_infinity() {
        let v = fh_factor(1e9, c(0.3, 0.0), c(0.1, 0.0)).unwrap();
        assert!((v - 1.0).norm() < 1e-9);
    }

    #[test]
    fn fh_factor_matches_definition() {
        // direct evaluation with explicit branch choices
        let (a, b) = (c(0.3, 0.2), c(-0.4, 0.1));
        for &w in &[-2.5f64, -0.3, 0.7, 4.0] {
            let arg_minus_0 = if w > 0.0 { 0.0 } else { -PI };
            let arg_plus_0 = if w > 0.0 { 0.0 } else { PI };
            let z1 = c(w, -1.0);
            let z2 = c(w, 1.0);
            let l1 = c(w.abs().ln() - z1.norm().ln(), arg_minus_0 - z1.arg());
            let l2 = c(w.abs().ln() - z2.norm().ln(), arg_plus_0 - z2.arg());
            let expected = (a * l1 + b * l2).exp();
            let got = fh_factor(w, a, b).unwrap();
            assert!((got - expected).norm() < 1e-14, "{w}");
        }
    }

    #[test]
    fn fh_factor_small_omega_behaviour() {
        let (a, b) = (c(0.3, 0.0), c(0.1, 0.0));
        for &w in &[1e-6f64, -1e-6] {
            let expected = C64::from_polar(w.abs().powf(0.4), 0.1 * PI * w.signum());
            let ratio = fh_factor(w, a, b).unwrap() / expected;
            assert!((ratio - 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn jump_parameter_examples() {
        let z = c(0.3, -0.8);
        assert_eq!(jump_parameters(z, z).unwrap(), c(0.0, 0.0));
        let p = PhysicalParams {
            coupling: 1.0,
            d0: 0.1,
            a0: 1.0,
            ..Default::default()
        };
        let (plus, minus) = flatband_limits(&p);
        let j = jump_parameters(plus, minus).unwrap();
        // -(2/pi) atan(0.1 pi / 0.9)
        assert!((j.re + 0.213_803_894_774_615_06).abs() < 1e-14);
        assert!(j.im.abs() < 1e-15);
        let theta = 0.6f64;
        let j = jump_parameters(c(1.0, -theta.tan()), c(1.0, theta.tan())).unwrap();
        assert!((j.re + 2.0 * theta / PI).abs() < 1e-14);
        assert_eq!(jump_parameters(c(0.0, 0.0), z), Err(Error::ZeroLimit));
    }

    #[test]
    fn xray_symbol_structure() {
        let p = PhysicalParams {
            coupling: 2f64.sqrt(),
            ..Default::default()
        };
        let spec = xray_symbol(&p).unwrap();
        assert!((p.xray_theta() - PI / 4.0).abs() < 1e-15);
        let s = spec.singularities();
        assert_eq!(s[0].beta, c(-0.5, 0.0));
        assert!((s[1].alpha.re + 0.25).abs() < 1e-15);
        assert!((spec.exponent().re + 0.0625).abs() < 1e-15);
        // psi(eps_F / 2) from the formula
        let w = 0.5;
        let f = C64::new(0.0, -p.regulator(w - 1.0) * (1.0f64 / (2.0 * w)).sqrt());
        let expected = 1.0 - p.coupling * f;
        assert!((spec.eval(w).unwrap() - expected).norm() < 1e-15);
        let trivial = xray_symbol(&PhysicalParams {
            coupling: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(trivial.is_trivial());
        assert_eq!(trivial.eval(0.3).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn xray_smooth_part_is_removable() {
        let p = PhysicalParams {
            coupling: 0.5,
            ..Default::default()
        };
        let spec = xray_symbol(&p).unwrap();
        let b = smooth_remainder(&spec).unwrap();
        let f = |w: f64| spec.smooth_part(w);
        for &at in &[0.0, 1.0] {
            let plus = one_sided_limit(f, at, 1.0).unwrap();
            let minus = one_sided_limit(f, at, -1.0).unwrap();
            assert!((plus - minus).norm() < 1e-8, "at {at}: {plus} vs {minus}");
        }
        for &h in &[1e-3, 1e-5, 1e-7] {
            assert!((b.eval(1.0 + h) - b.eval(1.0 - h)).norm() < 10.0 * h);
        }
        // psi -> 1 exponentially, the FH factors like 1/omega
        let far = 20.0 * p.regulator_scale;
        assert!((b.eval(far) - 1.0).norm() < 1.0 / far);
        assert!((b.eval(-far) - 1.0).norm() < 1.0 / far);
    }

    #[test]
    fn wrong_exponents_are_not_removable() {
        let p = PhysicalParams::default();
        let mut spec = xray_symbol(&p).unwrap();
        spec.singularities[1].alpha = c(-0.1, 0.0);
        spec.singularities[1].beta = c(0.1, 0.0);
        assert!(matches!(
            smooth_remainder(&spec),
            Err(Error::NonRemovable { .. })
        ));
    }

    #[test]
    fn flatband_symbol_examples() {
        let p = PhysicalParams {
            coupling: 1.0,
            d0: 0.1,
            a0: 1.0,
            ..Default::default()
        };
        let spec = flatband_symbol(&p).unwrap();
        let s = spec.singularities()[0];
        assert!(((s.alpha - s.beta).re + 0.213_803_894_774_615_06).abs() < 1e-14);
        let near = spec.eval(1e-12).unwrap();
        assert!((near - c(0.9, -0.1 * PI)).norm() < 1e-12);
        smooth_remainder(&spec).unwrap();
        let zero = flatband_symbol(&PhysicalParams {
            coupling: 0.0,
            ..p
        })
        .unwrap();
        assert!(zero.is_trivial());
    }

    #[test]
    fn magnetic_examples() {
        let base = PhysicalParams {
            omega_c: 1.0,
            landau_cutoff: 0.3,
            ..Default::default()
        };
        let j = magnetic_jump(&PhysicalParams {
            coupling: 0.0,
            ..base
        })
        .unwrap();
        assert_eq!((j.c, j.d, j.theta), (0.0, 0.0, 0.0));
        let off = magnetic_jump(&PhysicalParams {
            fermi_energy: 1.5,
            delta: 1e-6,
            ..base
        })
        .unwrap();
        assert!(off.theta.abs() < 1e-3);
        let on = magnetic_jump(&PhysicalParams {
            fermi_energy: 2.0,
            delta: 1e-6,
            ..base
        })
        .unwrap();
        assert!((on.theta + PI / 2.0).abs() < 1e-3);
        assert!(matches!(
            magnetic_jump(&PhysicalParams {
                landau_cutoff: 0.0,
                ..base
            }),
            Err(Error::NonConvergentSum(_))
        ));
    }

    #[test]
    fn magnetic_symbol_jump_is_removed() {
        let p = PhysicalParams {
            omega_c: 0.4,
            delta: 0.05,
            landau_cutoff: 0.5,
            coupling: 0.3,
            ..Default::default()
        };
        let spec = magnetic_symbol(&p).unwrap();
        smooth_remainder(&spec).unwrap();
        let s = spec.singularities()[0];
        assert_eq!(s.alpha, -s.beta);
    }

    #[test]
    fn inverse_power_expansion_matches_symbol() {
        let spec = SymbolSpec::product(
            vec![
                FhSingularity::new(0.0, c(0.2, 0.1), c(-0.3, 0.0)).unwrap(),
                FhSingularity::new(1.5, c(0.1, 0.0), c(0.25, 0.0)).unwrap(),
            ],
            None,
        );
        let coeffs = spec.inverse_power_coefficients(24).unwrap();
        for &w in &[60.0, -75.0, 200.0] {
            let series: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(n, p)| p * (w as f64).powi(-(n as i32 + 1)))
                .sum();
            let direct = spec.eval_minus_one(w).unwrap();
            assert!((series - direct).norm() < 1e-15, "{w}: {series} vs {direct}");
        }
    }

    #[test]
    fn expm1_and_log1p_small_arguments() {
        let z = c(1e-9, -2e-9);
        assert!((expm1(z) - z).norm() < 1e-17);
        assert!((log1p(z) - z).norm() < 1e-17);
        let x = c(0.05, 0.02);
        let direct = principal_ln(x + 1.0) - x;
        assert!((log1p_minus_x(x) - direct).norm() < 1e-15);
    }
}
