//! Built-in metrics with their known geometric facts.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use crate::metricdsl::{parse_expr, Expr, MetricSpec};
use crate::riemann::Geometry;
use crate::tensor::{Contra, JetTensor};

const PI: f64 = core::f64::consts::PI;

/// Names accepted by [`builtin`].
pub const NAMES: [&str; 10] = [
    "flat4",
    "minkowski4",
    "sphere4",
    "hyperbolic4",
    "conf_flat_poly4",
    "schwarzschild",
    "s2xs2",
    "generic_bump4",
    "flat3",
    "sphere3",
];

/// Margin kept between polar sample regions and coordinate poles.
pub const POLE_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Facts {
    pub flat: bool,
    pub conformally_flat: bool,
    pub einstein: bool,
    pub ricci_flat: bool,
    pub bach_flat_expected: bool,
}

/// Vector field `v^a ∂_a` in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub label: String,
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn jet(&self, spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>) -> Result<JetTensor> {
        let coords = spec.coordinate_jets(point, space)?;
        let comps: Vec<Jet> = self.components.iter().map(|e| e.eval_jet(&coords)).collect::<Result<_>>()?;
        Ok(JetTensor::from_fn(spec.dim, &[Contra], |i| comps[i[0]].clone()))
    }
}

/// Density `σ` in the trivialization of the entry's own metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub text: String,
    pub expr: Expr,
}

impl ScalarField {
    pub fn jet(&self, spec: &MetricSpec, point: &[f64], space: &Arc<JetSpace>) -> Result<Jet> {
        self.expr.eval_jet(&spec.coordinate_jets(point, space)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: MetricSpec,
    pub facts: Facts,
    pub killing_fields: Vec<VectorField>,
    pub einstein_scales: Vec<ScalarField>,
    /// Coordinate box for sampling.
    pub region: Vec<(f64, f64)>,
}

impl CatalogEntry {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Metric file text; parses back to the same spec.
    pub fn export(&self) -> String {
        self.spec.to_file_string()
    }

    pub fn is_riemannian(&self) -> bool {
        self.spec.signature.iter().all(|&s| s > 0)
    }
}

pub fn names() -> &'static [&'static str] {
    &NAMES
}

struct Builder {
    name: &'static str,
    description: &'static str,
    signature: &'static str,
    coords: &'static [&'static str],
    diag: &'static [&'static str],
    off: &'static [(usize, usize, &'static str)],
    facts: Facts,
    killing: &'static [(&'static str, &'static [&'static str])],
    scales: &'static [&'static str],
    region: Vec<(f64, f64)>,
}

impl Builder {
    fn build(self) -> Result<CatalogEntry> {
        let mut entries: Vec<(usize, usize, &str)> = self.diag.iter().enumerate().map(|(i, &e)| (i, i, e)).collect();
        entries.extend_from_slice(self.off);
        let spec = MetricSpec::from_strs(self.name, self.signature, self.coords, &entries)?;
        let killing_fields = self
            .killing
            .iter()
            .map(|(label, comps)| {
                Ok(VectorField {
                    label: label.to_string(),
                    components: comps.iter().map(|c| parse_expr(c, &spec.coords)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        let einstein_scales = self
            .scales
            .iter()
            .map(|s| Ok(ScalarField { text: s.to_string(), expr: parse_expr(s, &spec.coords)? }))
            .collect::<Result<_>>()?;
        Ok(CatalogEntry {
            name: self.name,
            description: self.description,
            spec,
            facts: self.facts,
            killing_fields,
            einstein_scales,
            region: self.region,
        })
    }
}

const fn facts(flat: bool, conformally_flat: bool, einstein: bool, ricci_flat: bool, bach_flat_expected: bool) -> Facts {
    Facts { flat, conformally_flat, einstein, ricci_flat, bach_flat_expected }
}

const FLAT: Facts = facts(true, true, true, true, true);

fn polar() -> (f64, f64) {
    (POLE_MARGIN, PI - POLE_MARGIN)
}

pub fn builtin(name: &str) -> Result<CatalogEntry> {
    let cube = |n: usize| (0..n).map(|_| (-1.0, 1.0)).collect::<Vec<_>>();
    let b = match name {
        "flat4" => Builder {
            name: "flat4",
            description: "Euclidean R^4",
            signature: "++++",
            coords: &["x", "y", "z", "w"],
            diag: &["1", "1", "1", "1"],
            off: &[],
            facts: FLAT,
            killing: &[
                ("translation x", &["1", "0", "0", "0"]),
                ("translation w", &["0", "0", "0", "1"]),
                ("rotation xy", &["-y", "x", "0", "0"]),
                ("rotation zw", &["0", "0", "-w", "z"]),
            ],
            scales: &["1", "x", "1 + x^2 + y^2 + z^2 + w^2"],
            region: cube(4),
        },
        "minkowski4" => Builder {
            name: "minkowski4",
            description: "Minkowski space, signature (1,3)",
            signature: "-+++",
            coords: &["t", "x", "y", "z"],
            diag: &["-1", "1", "1", "1"],
            off: &[],
            facts: FLAT,
            killing: &[
                ("time translation", &["1", "0", "0", "0"]),
                ("boost x", &["x", "t", "0", "0"]),
                ("rotation yz", &["0", "0", "-z", "y"]),
            ],
            scales: &["1", "t", "x"],
            region: cube(4),
        },
        "sphere4" => Builder {
            name: "sphere4",
            description: "unit round S^4 in polar angles",
            signature: "++++",
            coords: &["a", "b", "c", "d"],
            diag: &["1", "sin(a)^2", "sin(a)^2*sin(b)^2", "sin(a)^2*sin(b)^2*sin(c)^2"],
            off: &[],
            facts: facts(false, true, true, false, true),
            killing: &[
                ("axial d", &["0", "0", "0", "1"]),
                ("rotation cd", &["0", "0", "sin(d)", "cos(c)/sin(c)*cos(d)"]),
            ],
            scales: &["1", "cos(a)"],
            region: alloc::vec![polar(), polar(), polar(), (0.0, 2.0 * PI)],
        },
        "hyperbolic4" => Builder {
            name: "hyperbolic4",
            description: "hyperbolic 4-space, upper half-space model",
            signature: "++++",
            coords: &["x", "y", "z", "w"],
            diag: &["w^-2", "w^-2", "w^-2", "w^-2"],
            off: &[],
            facts: facts(false, true, true, false, true),
            killing: &[
                ("translation x", &["1", "0", "0", "0"]),
                ("rotation xy", &["-y", "x", "0", "0"]),
                ("dilation", &["x", "y", "z", "w"]),
            ],
            scales: &["1", "w^-1"],
            region: alloc::vec![(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)],
        },
        "conf_flat_poly4" => Builder {
            name: "conf_flat_poly4",
            description: "u^2 times the flat metric, u = 1 + 0.2x + 0.1y^2 + 0.05zw",
            signature: "++++",
            coords: &["x", "y", "z", "w"],
            diag: &[
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)^2",
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)^2",
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)^2",
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)^2",
            ],
            off: &[],
            facts: facts(false, true, false, false, true),
            killing: &[],
            scales: &[
                "1 + 0.2*x + 0.1*y^2 + 0.05*z*w",
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)*y",
                "(1 + 0.2*x + 0.1*y^2 + 0.05*z*w)*(x^2 + y^2 + z^2 + w^2)",
            ],
            region: cube(4),
        },
        "schwarzschild" => Builder {
            name: "schwarzschild",
            description: "Schwarzschild exterior, m = 1, r in [3, 10]",
            signature: "-+++",
            coords: &["t", "r", "th", "ph"],
            diag: &["-(1 - 2/r)", "1/(1 - 2/r)", "r^2", "r^2*sin(th)^2"],
            off: &[],
            facts: facts(false, false, true, true, true),
            killing: &[
                ("time translation", &["1", "0", "0", "0"]),
                ("axial", &["0", "0", "0", "1"]),
                ("rotation", &["0", "0", "sin(ph)", "cos(th)/sin(th)*cos(ph)"]),
                ("rotation'", &["0", "0", "cos(ph)", "-cos(th)/sin(th)*sin(ph)"]),
            ],
            scales: &["1"],
            region: alloc::vec![(0.0, 1.0), (3.0, 10.0), polar(), (0.0, 2.0 * PI)],
        },
        "s2xs2" => Builder {
            name: "s2xs2",
            description: "product of two unit 2-spheres",
            signature: "++++",
            coords: &["a", "b", "c", "d"],
            diag: &["1", "sin(a)^2", "1", "sin(c)^2"],
            off: &[],
            facts: facts(false, false, true, false, true),
            killing: &[
                ("axial b", &["0", "1", "0", "0"]),
                ("axial d", &["0", "0", "0", "1"]),
                ("rotation ab", &["sin(b)", "cos(a)/sin(a)*cos(b)", "0", "0"]),
                ("rotation cd", &["0", "0", "cos(d)", "-cos(c)/sin(c)*sin(d)"]),
            ],
            scales: &["1"],
            region: alloc::vec![polar(), (0.0, 2.0 * PI), polar(), (0.0, 2.0 * PI)],
        },
        "generic_bump4" => Builder {
            name: "generic_bump4",
            description: "flat metric plus a 0.05-amplitude polynomial bump",
            signature: "++++",
            coords: &["x", "y", "z", "w"],
            diag: &[
                "1 + 0.05*(x^2*y^2 + z*w)",
                "1 + 0.05*(z^2*w - x*y)",
                "1 + 0.05*(x^3*w + y^2)",
                "1 + 0.05*(y*z^2*x + x^2)",
            ],
            off: &[(0, 1, "0.05*y*z*w"), (1, 3, "0.05*x^2*z^2"), (0, 2, "0.05*(w^2 - x*y)")],
            facts: Facts::default(),
            killing: &[],
            scales: &[],
            region: cube(4),
        },
        "flat3" => Builder {
            name: "flat3",
            description: "Euclidean R^3",
            signature: "+++",
            coords: &["x", "y", "z"],
            diag: &["1", "1", "1"],
            off: &[],
            facts: FLAT,
            killing: &[
                ("translation z", &["0", "0", "1"]),
                ("rotation xy", &["-y", "x", "0"]),
                ("rotation yz", &["0", "-z", "y"]),
            ],
            scales: &["1", "x", "x^2 + y^2 + z^2"],
            region: cube(3),
        },
        "sphere3" => Builder {
            name: "sphere3",
            description: "unit round S^3 in polar angles",
            signature: "+++",
            coords: &["a", "b", "c"],
            diag: &["1", "sin(a)^2", "sin(a)^2*sin(b)^2"],
            off: &[],
            facts: facts(false, true, true, false, true),
            killing: &[
                ("axial c", &["0", "0", "1"]),
                ("rotation bc", &["0", "sin(c)", "cos(b)/sin(b)*cos(c)"]),
            ],
            scales: &["1", "cos(a)"],
            region: alloc::vec![polar(), polar(), (0.0, 2.0 * PI)],
        },
        other => return Err(Error::UnknownMetric(other.to_string())),
    };
    b.build()
}

/// Tolerance used when recomputing facts; curvature sizes here are `O(1)`.
pub const FACT_TOL: f64 = 1e-8;

/// Facts measured at `points`, plus the largest residual behind each flag
/// (`[riemann, conformal, einstein, ricci, bach]`).
pub fn measure_facts(spec: &MetricSpec, points: &[Vec<f64>]) -> Result<(Facts, [f64; 5])> {
    let n = spec.dim;
    if n < 3 {
        return Err(crate::error::usage("facts need dimension at least 3"));
    }
    let space = JetSpace::new(n, 4);
    let mut m = [0.0_f64; 5];
    for p in points {
        let geom = Geometry::new(spec, p, &space)?;
        let pack = geom.curvature_pack()?;
        let trace_free_ric = geom.trace_free(geom.ricci()?).value();
        m[0] = m[0].max(pack.riemann.max_abs());
        m[1] = m[1].max(if n == 3 { pack.cotton.max_abs() } else { pack.weyl.max_abs() });
        m[2] = m[2].max(trace_free_ric.max_abs());
        m[3] = m[3].max(pack.ricci.max_abs());
        m[4] = m[4].max(pack.bach.max_abs());
    }
    let f = Facts {
        flat: m[0] < FACT_TOL,
        conformally_flat: m[1] < FACT_TOL,
        einstein: m[2] < FACT_TOL,
        ricci_flat: m[3] < FACT_TOL,
        bach_flat_expected: m[4] < FACT_TOL,
    };
    Ok((f, m))
}

/// Uniform sample points in the entry's region.
pub fn sample_points(entry: &CatalogEntry, count: usize, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| crate::sampling::random_point(&entry.region, rng)).collect()
}

impl core::fmt::Display for Facts {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let flags = [
            ("flat", self.flat),
            ("conformally_flat", self.conformally_flat),
            ("einstein", self.einstein),
            ("ricci_flat", self.ricci_flat),
            ("bach_flat", self.bach_flat_expected),
        ];
        let on: Vec<&str> = flags.iter().filter(|(_, v)| *v).map(|(k, _)| *k).collect();
        if on.is_empty() {
            write!(f, "-")
        } else {
            write!(f, "{}", on.join(","))
        }
    }
}

/// Short description used by listings.
pub fn summary(entry: &CatalogEntry) -> String {
    format!("{:<16} n={} sig={} {} [{}]", entry.name, entry.dim(), entry.spec.signature_string(), entry.description, entry.facts)
}
