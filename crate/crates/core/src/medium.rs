//! Parametric phantoms and acoustic media.
//!
//! Both are built from three primitives: a disk indicator, the compactly
//! supported C-infinity bump `amp * exp(1 - 1/(1 - s^2))`, `s = |x - x0| / r < 1`,
//! and a plateau (flat top with a C-infinity rim).
//! Specs have a compact text form used by the config files and the CLI, e.g.
//! `disk:0,0,0.2,1; bump:0.3,-0.2,0.25,0.5` or, for a coefficient,
//! `1.0; bump:0.3,0,0.4,0.2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, PatError, Result};
use crate::grid::{Grid2D, ScalarField, OMEGA0_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk,
    Bump,
    /// Flat top with a C-infinity rim, see [`PLATEAU_RIM`].
    Plateau,
}

/// Fraction of a plateau's radius taken by its smooth rim.
pub const PLATEAU_RIM: f64 = 0.4;

/// C-infinity step: 0 for `u <= 0`, 1 for `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let e = |t: f64| (-1.0 / t).exp();
    e(u) / (e(u) + e(1.0 - u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub center: (f64, f64),
    pub radius: f64,
    pub amplitude: f64,
}

impl Primitive {
    pub fn disk(cx: f64, cy: f64, radius: f64, amplitude: f64) -> Self {
        Self { shape: Shape::Disk, center: (cx, cy), radius, amplitude }
    }

    pub fn bump(cx: f64, cy: f64, radius: f64, amplitude: f64) -> Self {
        Self { shape: Shape::Bump, center: (cx, cy), radius, amplitude }
    }

    pub fn plateau(cx: f64, cy: f64, radius: f64, amplitude: f64) -> Self {
        Self { shape: Shape::Plateau, center: (cx, cy), radius, amplitude }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let s2 = (dx * dx + dy * dy) / (self.radius * self.radius);
        match self.shape {
            Shape::Disk => {
                if s2 <= 1.0 {
                    self.amplitude
                } else {
                    0.0
                }
            }
            Shape::Bump => {
                if s2 < 1.0 {
                    self.amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
                } else {
                    0.0
                }
            }
            Shape::Plateau => self.amplitude * smooth_step((1.0 - s2.sqrt()) / PLATEAU_RIM),
        }
    }

    /// Distance from the origin to the farthest point of the support.
    pub fn outer_radius(&self) -> f64 {
        self.center.0.hypot(self.center.1) + self.radius
    }

    fn validate(&self) -> Result<()> {
        let finite = self.center.0.is_finite()
            && self.center.1.is_finite()
            && self.amplitude.is_finite();
        if !finite || !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid(format!("malformed primitive {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.shape {
            Shape::Disk => "disk",
            Shape::Bump => "bump",
            Shape::Plateau => "plateau",
        };
        write!(
            f,
            "{name}:{},{},{},{}",
            self.center.0, self.center.1, self.radius, self.amplitude
        )
    }
}

impl FromStr for Primitive {
    type Err = PatError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| invalid(format!("expected `disk:`, `bump:` or `plateau:` primitive, got `{s}`")))?;
        let shape = match name.trim() {
            "disk" => Shape::Disk,
            "bump" => Shape::Bump,
            "plateau" => Shape::Plateau,
            other => return Err(invalid(format!("unknown primitive `{other}`"))),
        };
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("bad number in `{s}`: {e}")))?;
        let [cx, cy, radius, amplitude] = nums[..] else {
            return Err(invalid(format!("`{s}` needs 4 values: cx,cy,radius,amplitude")));
        };
        let p = Primitive { shape, center: (cx, cy), radius, amplitude };
        p.validate()?;
        Ok(p)
    }
}

/// A sum of primitives supported inside the radius-0.9 ball.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhantomSpec {
    pub primitives: Vec<Primitive>,
}

impl PhantomSpec {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    /// Three flat-topped plateaus plus one smooth bump, away from the domain
    /// boundary and overlapping the strongly damped region.
    pub fn default_phantom() -> Self {
        Self::new(vec![
            Primitive::plateau(-0.3, 0.2, 0.3, 1.0),
            Primitive::plateau(0.35, -0.25, 0.25, 0.7),
            Primitive::plateau(0.15, 0.5, 0.15, 0.5),
            Primitive::bump(-0.05, -0.45, 0.3, 0.8),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.primitives {
            p.validate()?;
            if p.outer_radius() > OMEGA0_RADIUS + 1e-12 {
                return Err(invalid(format!(
                    "primitive {p} extends outside the radius-{OMEGA0_RADIUS} support ball"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.primitives.iter().map(|p| p.eval(x, y)).sum()
    }
}

impl fmt::Display for PhantomSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.primitives.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl FromStr for PhantomSpec {
    type Err = PatError;

    fn from_str(s: &str) -> Result<Self> {
        let primitives = s
            .split(';')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { primitives })
    }
}

/// Samples a phantom on the grid.
pub fn make_phantom(grid: Grid2D, spec: &PhantomSpec) -> Result<ScalarField> {
    spec.validate()?;
    let mut field = ScalarField::from_fn(grid, |x, y| spec.eval(x, y));
    // the sampled support must stay inside the closed radius-0.9 ball
    let mask = grid.omega0_mask();
    field.values *= &mask;
    Ok(field)
}

/// A coefficient of the form `base + sum of primitives`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub base: f64,
    pub terms: Vec<Primitive>,
}

impl CoefficientSpec {
    pub fn constant(base: f64) -> Self {
        Self { base, terms: Vec::new() }
    }

    pub fn with(mut self, term: Primitive) -> Self {
        self.terms.push(term);
        self
    }

    /// `c = 1 + 0.2 * bump((0.3, 0), 0.4)`.
    pub fn default_speed() -> Self {
        Self::constant(1.0).with(Primitive::bump(0.3, 0.0, 0.4, 0.2))
    }

    /// `a = 0.5 * bump((-0.2, 0.1), 0.5)`.
    pub fn default_damping() -> Self {
        Self::constant(0.0).with(Primitive::bump(-0.2, 0.1, 0.5, 0.5))
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.base + self.terms.iter().map(|p| p.eval(x, y)).sum::<f64>()
    }

    pub fn sample(&self, grid: Grid2D) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| self.eval(x, y))
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for t in &self.terms {
            write!(f, "; {t}")?;
        }
        Ok(())
    }
}

impl FromStr for CoefficientSpec {
    type Err = PatError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(';').map(str::trim).filter(|t| !t.is_empty());
        let head = parts.next().ok_or_else(|| invalid("empty coefficient spec"))?;
        let base = head
            .parse::<f64>()
            .map_err(|e| invalid(format!("coefficient spec must start with a constant, got `{head}`: {e}")))?;
        let terms = parts.map(str::parse).collect::<Result<Vec<_>>>()?;
        Ok(Self { base, terms })
    }
}

/// Sound speed `c` and damping `a` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub c: ScalarField,
    pub a: ScalarField,
    pub c_plus: f64,
    pub c0: f64,
}

impl Medium {
    pub fn new(c: ScalarField, a: ScalarField) -> Result<Self> {
        c.grid.check_same(&a.grid)?;
        if !c.is_finite() || !a.is_finite() {
            return Err(invalid("medium coefficients must be finite"));
        }
        let c_min = c.min();
        if c_min <= 0.0 {
            return Err(invalid(format!("sound speed must be positive, min c = {c_min}")));
        }
        let a_min = a.min();
        if a_min < 0.0 {
            return Err(invalid(format!("damping must be nonnegative, min a = {a_min}")));
        }
        let c_plus = c.max();
        Ok(Self { c, a, c_plus, c0: c_plus })
    }

    pub fn homogeneous(grid: Grid2D, c: f64, a: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid, c), ScalarField::constant(grid, a))
    }

    pub fn grid(&self) -> Grid2D {
        self.c.grid
    }
}

pub fn make_medium(grid: Grid2D, c_spec: &CoefficientSpec, a_spec: &CoefficientSpec) -> Result<Medium> {
    Medium::new(c_spec.sample(grid), a_spec.sample(grid))
}
