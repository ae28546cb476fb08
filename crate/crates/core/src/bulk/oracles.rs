//! Closed-form solution families used as oracles: C^∞ bump profiles,
//! spherical waves of the flat d = 3 wave equation, and Dirichlet-compatible
//! separable standing waves.

/// The classic C^∞ bump `exp(1 − 1/(1 − q²))` on `|x − center| < half_width`
/// (and 0 outside), with analytic derivatives. Smoothness matters: the
/// finite-difference residual checks need all derivatives bounded, which
/// rules out merely C¹/C² windows.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    pub center: f64,
    pub half_width: f64,
}

impl BumpProfile {
    pub fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    pub fn value(&self, x: f64) -> f64 {
        let q = (x - self.center) / self.half_width;
        let m = 1.0 - q * q;
        if m <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / m).exp()
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let q = (x - self.center) / self.half_width;
        let m = 1.0 - q * q;
        if m <= 0.0 {
            0.0
        } else {
            // d/dx [1 − 1/m] = −2q / (half_width · m²)
            self.value(x) * (-2.0 * q) / (self.half_width * m * m)
        }
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let q = (x - self.center) / self.half_width;
        let m = 1.0 - q * q;
        if m <= 0.0 {
            0.0
        } else {
            let hw = self.half_width;
            let u = -2.0 * q / (hw * m * m);
            let du = (-2.0 / (hw * hw)) * (1.0 / (m * m) + 4.0 * q * q / (m * m * m));
            self.value(x) * (u * u + du)
        }
    }

    /// Support interval `[center − half_width, center + half_width]`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Exact spherical solution `φ = (g(t−r) − g(t+r))/r` of the flat wave
/// equation in d = 3, regular at the origin.
#[derive(Debug, Clone, Copy)]
pub struct SphericalWave {
    pub profile: BumpProfile,
}

impl SphericalWave {
    pub fn new(center: f64, half_width: f64) -> Self {
        Self {
            profile: BumpProfile::new(center, half_width),
        }
    }

    fn radius(x: &[f64]) -> f64 {
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn phi(&self, t: f64, x: &[f64]) -> f64 {
        let r = Self::radius(x);
        let g = &self.profile;
        if r < 1e-7 {
            -2.0 * g.deriv(t)
        } else {
            (g.value(t - r) - g.value(t + r)) / r
        }
    }

    pub fn phi_t(&self, t: f64, x: &[f64]) -> f64 {
        let r = Self::radius(x);
        let g = &self.profile;
        if r < 1e-7 {
            -2.0 * g.second_deriv(t)
        } else {
            (g.deriv(t - r) - g.deriv(t + r)) / r
        }
    }

    /// Value of the cone trace in the flat null coordinate:
    /// `u(v) = (φ/β)|_{t=r=v/2} = −g(v)`.
    pub fn trace(&self, v: f64) -> f64 {
        -self.profile.value(v)
    }
}

/// Separable standing wave `cos(ωt + phase) Π_a sin(k (x_a + half))` with
/// `k = mode·π/(2·half)` and `ω = √d·k`: an exact flat solution vanishing at
/// the walls (compatible with the solver's Dirichlet closure).
#[derive(Debug, Clone, Copy)]
pub struct StandingWave {
    pub mode: usize,
    pub half: f64,
    pub phase: f64,
}

impl StandingWave {
    pub fn new(mode: usize, half: f64, phase: f64) -> Self {
        Self { mode, half, phase }
    }

    pub fn wavenumber(&self) -> f64 {
        self.mode as f64 * std::f64::consts::PI / (2.0 * self.half)
    }

    fn spatial(&self, x: &[f64]) -> f64 {
        let k = self.wavenumber();
        x.iter().map(|c| (k * (c + self.half)).sin()).product()
    }

    pub fn omega(&self, d: usize) -> f64 {
        (d as f64).sqrt() * self.wavenumber()
    }

    pub fn phi(&self, t: f64, x: &[f64]) -> f64 {
        let om = self.omega(x.len());
        (om * t + self.phase).cos() * self.spatial(x)
    }

    pub fn phi_t(&self, t: f64, x: &[f64]) -> f64 {
        let om = self.omega(x.len());
        -om * (om * t + self.phase).sin() * self.spatial(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = BumpProfile::new(0.4, 0.3);
        for x in [0.15, 0.3, 0.45, 0.6, 0.68] {
            assert!((b.deriv(x) - fd(|u| b.value(u), x)).abs() <= 1e-6 * (1.0 + b.deriv(x).abs()));
            assert!(
                (b.second_deriv(x) - fd(|u| b.deriv(u), x)).abs()
                    <= 1e-5 * (1.0 + b.second_deriv(x).abs())
            );
        }
        assert_eq!(b.value(0.09), 0.0);
        assert_eq!(b.deriv(0.71), 0.0);
    }

    #[test]
    fn spherical_wave_is_continuous_at_origin() {
        let w = SphericalWave::new(0.5, 0.35);
        let near = w.phi(0.4, &[1e-6, 0.0, 0.0]);
        let at = w.phi(0.4, &[0.0, 0.0, 0.0]);
        assert!((near - at).abs() <= 1e-5 * (1.0 + at.abs()));
    }

    #[test]
    fn standing_wave_solves_flat_equation() {
        let w = StandingWave::new(1, 1.5, 0.3);
        // φ_tt = Δφ at a sample point, via finite differences.
        let x = [0.2, -0.4, 0.7];
        let t = 0.35;
        let h = 1e-4;
        let tt = (w.phi(t + h, &x) - 2.0 * w.phi(t, &x) + w.phi(t - h, &x)) / (h * h);
        let mut lap = 0.0;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            lap += (w.phi(t, &xp) - 2.0 * w.phi(t, &x) + w.phi(t, &xm)) / (h * h);
        }
        assert!((tt - lap).abs() <= 1e-5);
        // And walls vanish.
        assert!(w.phi(t, &[1.5, 0.2, 0.1]).abs() <= 1e-14);
    }
}
