//! Scenario configuration: domain, datum, parameters and requested checks.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use talenti_core::analysis::admissible_k;
use talenti_core::PdeParameters64;

use crate::CliError;

/// Default measure of every catalog domain, so that disks have unit radius.
pub const DEFAULT_AREA: f64 = std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    Disk,
    Square,
    /// Semi-axes in the ratio `a : b`.
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Sides in the ratio `a : b`.
    Rectangle {
        a: f64,
        b: f64,
    },
    Lshape,
    /// Vertex list, one `x y` or `x,y` pair per line.
    Polygon {
        path: PathBuf,
    },
}

impl Domain {
    /// Whether the domain is a ball up to its polygonal approximation.
    pub fn is_ball(&self) -> bool {
        match self {
            Domain::Disk => true,
            Domain::Ellipse { a, b } => a == b,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Datum {
    One,
    /// `r,value` profile centred at the origin.
    RadialDecreasing {
        path: PathBuf,
    },
    /// Solution sidecar (mesh and vertex values) interpolated onto the scenario mesh.
    MeshField {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Lorentz,
    Pointwise,
    Talenti,
    IntegralIdentity,
    PolyaSzego,
    RigiditySweep,
    Dirichlet,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Lorentz,
        Check::Pointwise,
        Check::Talenti,
        Check::IntegralIdentity,
        Check::PolyaSzego,
        Check::RigiditySweep,
        Check::Dirichlet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Lorentz => "lorentz",
            Check::Pointwise => "pointwise",
            Check::Talenti => "talenti",
            Check::IntegralIdentity => "integral-identity",
            Check::PolyaSzego => "polya-szego",
            Check::RigiditySweep => "rigidity-sweep",
            Check::Dirichlet => "dirichlet",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        Check::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| CliError::Config(format!("unknown check {s:?}")))
    }
}

/// Splits `name(args)` or `name:args` into the name and its comma-separated arguments.
fn split_call(s: &str) -> (String, Vec<String>) {
    let s = s.trim();
    let (name, rest) = if let Some(open) = s.find('(') {
        (&s[..open], s[open + 1..].trim_end_matches(')'))
    } else if let Some((a, b)) = s.split_once(':') {
        (a, b)
    } else {
        (s, "")
    };
    let args = if rest.is_empty() { Vec::new() } else { rest.split(',').map(|a| a.trim().to_string()).collect() };
    (name.trim().to_ascii_lowercase(), args)
}

fn two_numbers(name: &str, args: &[String]) -> Result<(f64, f64), CliError> {
    match args {
        [a, b] => Ok((parse_number(a, name)?, parse_number(b, name)?)),
        _ => Err(CliError::Config(format!("{name} takes two numbers, as in {name}(2,1)"))),
    }
}

/// Decimal number parsing shared by flags and list arguments.
pub fn parse_number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("{what}: {s:?} is not a decimal number")))
}

/// Comma-separated decimal list.
pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| parse_number(x, what)).collect()
}

impl FromStr for Domain {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, args) = split_call(s);
        let none = |d: Domain| if args.is_empty() { Ok(d) } else { Err(CliError::Config(format!("{name} takes no arguments"))) };
        match name.as_str() {
            "disk" | "ball" => none(Domain::Disk),
            "square" => none(Domain::Square),
            "lshape" | "l-shape" => none(Domain::Lshape),
            "ellipse" => {
                let (a, b) = two_numbers(&name, &args)?;
                Ok(Domain::Ellipse { a, b })
            }
            "rectangle" => {
                let (a, b) = two_numbers(&name, &args)?;
                Ok(Domain::Rectangle { a, b })
            }
            "polygon" => match args.as_slice() {
                [p] => Ok(Domain::Polygon { path: PathBuf::from(p) }),
                _ => Err(CliError::Config("polygon takes a file, as in polygon(shape.txt)".into())),
            },
            _ => Err(CliError::Config(format!("unknown domain {s:?}"))),
        }
    }
}

impl FromStr for Datum {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (name, args) = split_call(s);
        let path = || match args.as_slice() {
            [p] => Ok(PathBuf::from(p)),
            _ => Err(CliError::Config(format!("{name} takes a file, as in {name}(data.csv)"))),
        };
        match name.as_str() {
            "one" | "1" => Ok(Datum::One),
            "radial-decreasing" | "radial" => Ok(Datum::RadialDecreasing { path: path()? }),
            "mesh-field" => Ok(Datum::MeshField { path: path()? }),
            _ => Err(CliError::Config(format!("unknown datum {s:?}"))),
        }
    }
}

fn default_n() -> usize {
    2
}

fn default_area() -> f64 {
    DEFAULT_AREA
}

fn default_h() -> f64 {
    0.03
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: Domain,
    pub datum: Datum,
    #[serde(default = "default_n")]
    pub n: usize,
    pub p: f64,
    pub beta: f64,
    #[serde(default = "default_h")]
    pub mesh_h: f64,
    /// Empty means `0.5 k_max` and `k_max` of the general bound.
    #[serde(default)]
    pub k_list: Vec<f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default = "default_area")]
    pub area: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn new(domain: Domain, p: f64, beta: f64, mesh_h: f64) -> Self {
        Self { domain, datum: Datum::One, n: 2, p, beta, mesh_h, k_list: Vec::new(), checks: Vec::new(), area: DEFAULT_AREA, seed: 0 }
    }

    pub fn with_checks(mut self, checks: &[Check]) -> Self {
        self.checks = checks.to_vec();
        self
    }

    pub fn with_k(mut self, k: &[f64]) -> Self {
        self.k_list = k.to_vec();
        self
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = area;
        self
    }

    pub fn params(&self) -> Result<PdeParameters64, CliError> {
        Ok(PdeParameters64::new(self.n, self.p, self.beta)?)
    }

    pub fn f_is_one(&self) -> bool {
        self.datum == Datum::One
    }

    /// The tested `k`, defaulting to half and all of the general bound.
    pub fn k_values(&self) -> Result<Vec<f64>, CliError> {
        if !self.k_list.is_empty() {
            return Ok(self.k_list.clone());
        }
        let k_max = admissible_k(&self.params()?, false);
        Ok(vec![0.5 * k_max, k_max])
    }

    /// Short label used in reports, e.g. `ellipse(2,1) p=2 beta=1 h=0.03`.
    pub fn label(&self) -> String {
        let shape = match &self.domain {
            Domain::Disk => "disk".to_string(),
            Domain::Square => "square".to_string(),
            Domain::Lshape => "lshape".to_string(),
            Domain::Ellipse { a, b } => format!("ellipse({a},{b})"),
            Domain::Rectangle { a, b } => format!("rectangle({a},{b})"),
            Domain::Polygon { path } => format!("polygon({})", path.display()),
        };
        let area = if self.area == DEFAULT_AREA { String::new() } else { format!(" area={}", self.area) };
        format!("{shape}{area} p={} beta={} h={}", self.p, self.beta, self.mesh_h)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let params = self.params()?;
        if !(self.mesh_h > 0.0) || !self.mesh_h.is_finite() {
            return Err(CliError::Config(format!("mesh_h must be positive (got {})", self.mesh_h)));
        }
        if !(self.area > 0.0) || !self.area.is_finite() {
            return Err(CliError::Config(format!("area must be positive (got {})", self.area)));
        }
        if let Domain::Ellipse { a, b } | Domain::Rectangle { a, b } = self.domain {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(CliError::Config("shape ratios must be positive".into()));
            }
        }
        let bound = admissible_k(&params, self.f_is_one());
        for &k in &self.k_list {
            if !(k > 0.0) || k > bound {
                return Err(CliError::Config(format!("k = {k} lies outside the admissible range (0, {bound}]")));
            }
        }
        if self.n != 2 {
            if self.domain != Domain::Disk || !self.f_is_one() {
                return Err(CliError::Config(format!("n = {} is only supported on the disk with f = one (radial closed forms)", self.n)));
            }
            if let Some(c) = self.checks.iter().find(|c| !matches!(c, Check::Lorentz | Check::IntegralIdentity)) {
                return Err(CliError::Config(format!("check {c} needs a planar solve (n = 2)")));
            }
        }
        if self.checks.contains(&Check::RigiditySweep) {
            return Err(CliError::Config("rigidity-sweep runs through the sweep command".into()));
        }
        if self.checks.contains(&Check::Pointwise) {
            if !self.f_is_one() {
                return Err(CliError::Config("the pointwise comparison needs f = one".into()));
            }
            let limit = self.n as f64 / (self.n as f64 - 1.0);
            if self.p > limit {
                return Err(CliError::Config(format!("the pointwise comparison needs p <= n/(n-1) = {limit}")));
            }
        }
        Ok(())
    }
}
