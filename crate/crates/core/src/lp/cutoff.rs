use std::sync::OnceLock;

use crate::numerics::gauss_legendre;

/// Radial cutoff `χ`: 1 on `[0, plateau]`, 0 on `[support, ∞)`, and a
/// `C^∞` monotone transition in between built from the normalized integral of
/// the bump `exp(-1 / (t (1 - t)))`.
///
/// The dyadic profile is `φ(ξ) = χ(ξ/2) - χ(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    plateau: f64,
    support: f64,
}

pub const PLATEAU: f64 = 0.75;
pub const SUPPORT: f64 = 1.0;

impl Default for CutoffProfile {
    fn default() -> Self {
        Self::standard()
    }
}

impl CutoffProfile {
    pub const fn standard() -> Self {
        Self {
            plateau: PLATEAU,
            support: SUPPORT,
        }
    }

    /// Profile with a non-standard plateau, used for mutation checks.
    pub fn with_plateau(plateau: f64) -> Self {
        assert!(plateau > 0.0 && plateau < SUPPORT);
        Self {
            plateau,
            support: SUPPORT,
        }
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn chi(&self, xi: f64) -> f64 {
        if xi <= self.plateau {
            1.0
        } else if xi >= self.support {
            0.0
        } else {
            1.0 - smooth_step((xi - self.plateau) / (self.support - self.plateau))
        }
    }

    pub fn phi(&self, xi: f64) -> f64 {
        self.chi(0.5 * xi) - self.chi(xi)
    }

    /// `φ(2^{-j} ξ)`.
    pub fn phi_j(&self, j: i32, xi: f64) -> f64 {
        let s = 2f64.powi(-j) * xi;
        self.chi(0.5 * s) - self.chi(s)
    }
}

/// Evaluates the standard cutoff `χ(|ξ|)`.
pub fn chi_eval(xi_mag: f64) -> f64 {
    CutoffProfile::standard().chi(xi_mag)
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

const PANELS: usize = 8;

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(20);
        let mut r = Rule {
            nodes,
            weights,
            total: 0.0,
        };
        r.total = integrate_bump(&r, 1.0);
        r
    })
}

fn integrate_bump(r: &Rule, upper: f64) -> f64 {
    let h = upper / PANELS as f64;
    let mut acc = 0.0;
    for p in 0..PANELS {
        let a = p as f64 * h;
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            acc += w * 0.5 * h * bump(a + 0.5 * h * (x + 1.0));
        }
    }
    acc
}

/// `∫_0^t bump / ∫_0^1 bump`, evaluated on the shorter side of `t = 1/2` so
/// that `S(t) + S(1 - t) = 1` holds exactly.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let r = rule();
    if t <= 0.5 {
        integrate_bump(r, t) / r.total
    } else {
        1.0 - integrate_bump(r, 1.0 - t) / r.total
    }
}
