//! Problem descriptions: the serializable input of every check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, ChartPatch, LocalChart};
use crate::calculus::{FormField, ScalarField};
use crate::dynamics::{Gauge, GridAxis, HdwSystem};
use crate::hj::Section;
use crate::region::{sample_phase_point, seeded_rng, Region, DEFAULT_SEED};
use crate::structure::PhaseBundle;
use crate::{Error, Result};

/// A named section, `forms[κ][i]` being the `dq^i` coefficient of `γ^κ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionSpec {
    pub name: String,
    pub forms: Vec<Vec<String>>,
}

/// Alternate coordinates on a patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coordinates: Vec<String>,
    /// Reference coordinates in terms of `coordinates`.
    pub map: Vec<String>,
    /// Domain in the local coordinates.
    pub domain: Region,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub name: String,
    pub region: Region,
    /// Conformal factor over the reference base coordinates.
    pub sigma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasSpec {
    /// Sampling region for overlaps; the problem domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Region>,
    pub patches: Vec<PatchSpec>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    crate::atlas::DEFAULT_BUDGET
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_points() -> usize {
    100
}

fn default_radius() -> f64 {
    10.0
}

fn default_grid() -> Vec<GridAxis> {
    vec![GridAxis { steps: 1000, h: 1e-3 }]
}

fn default_hj_grid() -> Vec<GridAxis> {
    vec![GridAxis { steps: 400, h: 2.5e-4 }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    #[serde(default)]
    pub gauge: Gauge,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Integration grid; a single axis is repeated for every κ.
    #[serde(default = "default_grid")]
    pub grid: Vec<GridAxis>,
    /// Start of integration, a phase point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of sampled points for pointwise checks.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Sampled momenta lie in the ball of this radius.
    #[serde(default = "default_radius")]
    pub momentum_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            gauge: Gauge::default(),
            tolerance: default_tolerance(),
            grid: default_grid(),
            start: None,
            seed: default_seed(),
            points: default_points(),
            momentum_radius: default_radius(),
        }
    }
}

/// Settings of the Hamilton–Jacobi check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSpec {
    /// Base region for sample points and the integral section.
    pub region: Region,
    /// Base start point of the integral section.
    pub start: Vec<f64>,
    #[serde(default = "default_hj_grid")]
    pub grid: Vec<GridAxis>,
}

/// The JSON problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub k: usize,
    /// Base coordinate names; `q1..qn` are always available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    pub domain: Region,
    /// Lee form coefficients `ϑ_i`.
    pub vartheta: Vec<String>,
    pub hamiltonian: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sections: Vec<SectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atlas: Option<AtlasSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hj: Option<HjSpec>,
}

/// A loaded problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub file: ProblemFile,
    pub system: HdwSystem,
    pub sections: Vec<(String, Section)>,
    pub atlas: Option<Atlas>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("problem file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    /// The punctured plane with Lee form `ϑ = 2dφ` and the quadratic
    /// Hamiltonian, `k` momentum blocks.
    ///
    /// Ships the sections `positive` (`γ^κ = κ e^{φ}(dr − r dφ)`) and
    /// `negative` (`γ^κ = e^{2φ}dx`), a three-patch angular atlas whose first
    /// patch uses polar coordinates, and an HJ region in the first quadrant.
    pub fn punctured_plane(k: usize) -> ProblemFile {
        let r = "sqrt(x^2 + y^2)";
        let positive = (1..=k)
            .map(|a| {
                vec![
                    format!("{a}*exp(atan2(y, x))*(x + y)/{r}"),
                    format!("{a}*exp(atan2(y, x))*(y - x)/{r}"),
                ]
            })
            .collect();
        let negative = (1..=k).map(|_| vec!["exp(2*atan2(y, x))".to_string(), "0".to_string()]).collect();
        let hamiltonian = if k == 1 {
            "(px^2 + py^2)/2".to_string()
        } else {
            (1..=k)
                .map(|a| format!("(p{a}_x^2 + p{a}_y^2)/2"))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let sector = |lo: f64, hi: f64| Region::Sector {
            radius: [0.1, 3.0],
            angle: [lo, hi],
        };
        let mut start = vec![1.0, 0.0];
        for _ in 0..k {
            start.extend([1.0, 0.0]);
        }
        ProblemFile {
            name: Some(format!("punctured-plane-k{k}")),
            n: 2,
            k,
            coordinates: Some(vec!["x".into(), "y".into()]),
            domain: Region::Box {
                lo: vec![-2.0, -2.0],
                hi: vec![2.0, 2.0],
                exclude_radius: 0.1,
            },
            vartheta: vec!["-2*y/(x^2 + y^2)".into(), "2*x/(x^2 + y^2)".into()],
            hamiltonian,
            sections: vec![
                SectionSpec {
                    name: "positive".into(),
                    forms: positive,
                },
                SectionSpec {
                    name: "negative".into(),
                    forms: negative,
                },
            ],
            atlas: Some(AtlasSpec {
                bounds: None,
                patches: vec![
                    PatchSpec {
                        name: "A".into(),
                        region: sector(-0.75 * PI, 0.75 * PI),
                        sigma: "2*atan2(y, x)".into(),
                        chart: Some(ChartSpec {
                            coordinates: vec!["r".into(), "phi".into()],
                            map: vec!["r*cos(phi)".into(), "r*sin(phi)".into()],
                            domain: Region::Box {
                                lo: vec![0.1, -0.75 * PI],
                                hi: vec![3.0, 0.75 * PI],
                                exclude_radius: 0.0,
                            },
                        }),
                    },
                    PatchSpec {
                        name: "B".into(),
                        region: sector(0.25 * PI, 1.75 * PI),
                        sigma: format!("2*(atan2(-y, -x) + {PI})"),
                        chart: None,
                    },
                    PatchSpec {
                        name: "C".into(),
                        region: sector(0.125 * PI, 1.375 * PI),
                        sigma: format!("2*(atan2(-x, y) + {})", PI / 2.0),
                        chart: None,
                    },
                ],
                budget: default_budget(),
            }),
            solver: SolverOptions {
                start: Some(start),
                ..SolverOptions::default()
            },
            hj: Some(HjSpec {
                region: Region::Sector {
                    radius: [0.5, 2.0],
                    angle: [0.0, 0.5 * PI],
                },
                start: vec![0.5, 0.75_f64.sqrt()],
                grid: default_hj_grid(),
            }),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        if self.vartheta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: self.vartheta.len(),
            });
        }
        let aliases = self.coordinates.as_deref();
        let base = crate::structure::base_scope(self.n, aliases)?;
        let coeffs = self
            .vartheta
            .iter()
            .enumerate()
            .map(|(i, e)| ScalarField::parse(e, &base).map_err(|e| Error::from(e).in_field(format!("vartheta[{i}]"))))
            .collect::<Result<Vec<_>>>()?;
        let vartheta = FormField::one_form(coeffs)?;
        let bundle = PhaseBundle::build(self.n, self.k, vartheta, self.domain.clone(), aliases)?;
        let h = ScalarField::parse(&self.hamiltonian, bundle.scope())
            .map_err(|e| Error::from(e).in_field("hamiltonian"))?;
        let system = HdwSystem::new(&bundle, h)?;
        let sections = self
            .sections
            .iter()
            .map(|s| {
                let section = Section::parse(&bundle, &s.forms).map_err(|e| e.in_field(format!("sections.{}", s.name)))?;
                Ok((s.name.clone(), section))
            })
            .collect::<Result<Vec<_>>>()?;
        let atlas = match &self.atlas {
            Some(spec) => {
                let patches = spec
                    .patches
                    .iter()
                    .map(|p| {
                        let field = format!("atlas.{}", p.name);
                        let patch = ChartPatch::parse(&bundle, p.name.clone(), p.region.clone(), &p.sigma)
                            .map_err(|e| e.in_field(format!("{field}.sigma")))?;
                        Ok(match &p.chart {
                            Some(c) => patch.with_chart(
                                LocalChart::parse(&bundle, &c.coordinates, &c.map, c.domain.clone())
                                    .map_err(|e| e.in_field(format!("{field}.chart")))?,
                            ),
                            None => patch,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bounds = spec.bounds.clone().unwrap_or_else(|| self.domain.clone());
                Some(Atlas::new(patches, bounds))
            }
            None => None,
        };
        if let Some(start) = &self.solver.start {
            if start.len() != bundle.dim() {
                return Err(Error::DimensionMismatch {
                    expected: bundle.dim(),
                    found: start.len(),
                });
            }
        }
        Ok(Problem {
            file: self.clone(),
            system,
            sections,
            atlas,
        })
    }
}

impl Problem {
    pub fn bundle(&self) -> &PhaseBundle {
        self.system.bundle()
    }

    /// Seeded phase points from the domain with momenta in the ball.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded_rng(seed);
        let b = self.bundle();
        (0..count)
            .map(|_| sample_phase_point(b.domain(), b.dim() - b.n(), self.file.solver.momentum_radius, &mut rng))
            .collect()
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// The integration grid with one axis per κ.
    pub fn grid(&self) -> Result<Vec<GridAxis>> {
        expand_grid(&self.file.solver.grid, self.file.k)
    }
}

/// Repeats a single axis `k` times; otherwise requires exactly `k` axes.
pub fn expand_grid(grid: &[GridAxis], k: usize) -> Result<Vec<GridAxis>> {
    match grid.len() {
        1 => Ok(vec![grid[0]; k]),
        len if len == k => Ok(grid.to_vec()),
        len => Err(Error::DimensionMismatch { expected: k, found: len }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_round_trips() {
        for k in 1..=3 {
            let file = ProblemFile::punctured_plane(k);
            let back = ProblemFile::from_json(&file.to_json()).unwrap();
            assert_eq!(back, file);
            let p = back.build().unwrap();
            assert_eq!(p.bundle().dim(), 2 + 2 * k);
            assert_eq!(p.sections.len(), 2);
        }
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"{"n": 1, "k": 1, "domain": {"box": {"lo": [-1], "hi": [1]}},
                      "vartheta": ["0"], "hamiltonian": "p_1_1^2/2"}"#;
        let file = ProblemFile::from_json(text).unwrap();
        assert_eq!(file.solver.seed, 42);
        assert_eq!(file.solver.points, 100);
        assert!(file.build().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"n": 1, "k": 1, "domain": {"box": {"lo": [-1], "hi": [1]}},
                      "vartheta": ["0"], "hamiltonian": "0", "extra": 1}"#;
        assert!(ProblemFile::from_json(text).is_err());
    }

    #[test]
    fn non_closed_lee_form_is_rejected() {
        let mut file = ProblemFile::punctured_plane(1);
        file.vartheta = vec!["y".into(), "0".into()];
        assert!(matches!(file.build(), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let mut file = ProblemFile::punctured_plane(1);
        file.hamiltonian = "px^2 + z".into();
        let err = file.build().unwrap_err();
        assert!(err.is_input());
        assert_eq!(err.to_string(), "hamiltonian: unknown variable `z` at offset 7");
    }

    #[test]
    fn grid_expansion() {
        let axis = GridAxis { steps: 3, h: 0.1 };
        assert_eq!(expand_grid(&[axis], 2).unwrap(), vec![axis, axis]);
        assert!(expand_grid(&[axis, axis], 3).is_err());
    }
}
