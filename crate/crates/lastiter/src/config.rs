//! Run configuration: one JSON document with sections `privacy`,
//! `curvature`, `regularizer`, `dataset`, `oracle`, `targets` and `sweep`.
//! Unknown keys are rejected and every cross-field constraint is checked at
//! parse time.

use std::path::Path;

use lastiter_core::sim::{
    generate_quadratic_dataset, DMatrix, DVector, QuadraticLoss, RegularizerSpec, SyntheticDataset,
};
use lastiter_core::{CurvatureSpec, PrivacyParams};
use serde::{Deserialize, Deserializer};

use crate::error::{config_err, Result};
use crate::oracle::{GridSpec, DEFAULT_CELLS};

/// Seed offset for the replacement record drawn in [`Replacement::Generated`].
const REPLACEMENT_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;
/// `|gradient| / C` of the linear records used by [`Replacement::Saturating`].
const SATURATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    pub alpha: f64,
    pub sigma: f64,
    pub lam: f64,
    pub clip_norm: f64,
    pub batch_size: u64,
    pub dataset_size: u64,
    pub iterations: u64,
}

/// Reals that may be written as a number, `"inf"` or `null` (unbounded).
fn extended_real<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Option::<Repr>::deserialize(d)? {
        None => Ok(Some(f64::INFINITY)),
        Some(Repr::Num(v)) => Ok(Some(v)),
        Some(Repr::Text(s)) if s == "inf" => Ok(Some(f64::INFINITY)),
        Some(Repr::Text(s)) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got {s:?}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSection {
    pub m: f64,
    pub upper: f64,
    /// Defaults to the diameter of the regularizer's domain.
    #[serde(default, deserialize_with = "extended_real")]
    pub diameter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSection {
    #[default]
    Zero,
    L1 {
        weight: f64,
    },
    Ball {
        radius: f64,
    },
}

impl From<RegularizerSection> for RegularizerSpec {
    fn from(r: RegularizerSection) -> Self {
        match r {
            RegularizerSection::Zero => RegularizerSpec::Zero,
            RegularizerSection::L1 { weight } => RegularizerSpec::L1 { weight },
            RegularizerSection::Ball { radius } => RegularizerSpec::Ball { radius },
        }
    }
}

/// How the neighboring dataset replaces the differing record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    /// Both versions of the record are linear losses whose gradients point
    /// in opposite directions along the first axis and are always clipped.
    #[default]
    Saturating,
    /// The neighbor's record is a fresh draw from the same generator.
    Generated,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub dim: usize,
    /// Generator seed; defaults to the run seed.
    pub seed: Option<u64>,
    /// Start point, broadcast to every coordinate.
    pub x0: f64,
    /// 1-based record that differs in the neighboring dataset; defaults to
    /// the last record.
    pub differing_index: Option<usize>,
    pub replacement: Replacement,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            dim: 1,
            seed: None,
            x0: 0.0,
            differing_index: None,
            replacement: Replacement::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lipschitz,
    Displacement,
    Prox,
    ResidualQp,
    DensityBound,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Lipschitz,
        Suite::Displacement,
        Suite::Prox,
        Suite::ResidualQp,
        Suite::DensityBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lipschitz => "lipschitz",
            Suite::Displacement => "displacement",
            Suite::Prox => "prox",
            Suite::ResidualQp => "residual-qp",
            Suite::DensityBound => "density-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Adds the 1-D density oracle's divergence to sweep rows.
    pub enabled: bool,
    pub cells: usize,
    pub suites: Vec<Suite>,
    pub n_pairs: usize,
    /// Multiplies the Lipschitz constant the `lipschitz` suite compares
    /// against. Values below 1 deliberately corrupt it to exercise the gate.
    pub lipschitz_scale: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            enabled: false,
            cells: DEFAULT_CELLS,
            suites: Suite::ALL.to_vec(),
            n_pairs: 10_000,
            lipschitz_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetsSection {
    /// Target RDP level for `plan`.
    pub epsilon: Option<f64>,
    /// Number of passes for `plan`; defaults to `T / ell` of the privacy section.
    pub epochs: Option<u64>,
    /// `delta` values for the (eps, delta)-DP conversion.
    pub deltas: Vec<f64>,
    /// Gradient norm bound `Q` for the PABI comparison line.
    pub pabi_lipschitz: f64,
    /// Evaluate the position-dependent bound at this `t*`.
    pub t_star: Option<u64>,
}

impl Default for TargetsSection {
    fn default() -> Self {
        Self {
            epsilon: None,
            epochs: None,
            deltas: vec![1e-5],
            pabi_lipschitz: 1.0,
            t_star: None,
        }
    }
}

/// Parameters a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Sigma,
    Lam,
    ClipNorm,
    BatchSize,
    DatasetSize,
    Iterations,
    M,
    Upper,
    Diameter,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Sigma => "sigma",
            SweepParam::Lam => "lam",
            SweepParam::ClipNorm => "clip_norm",
            SweepParam::BatchSize => "batch_size",
            SweepParam::DatasetSize => "dataset_size",
            SweepParam::Iterations => "iterations",
            SweepParam::M => "m",
            SweepParam::Upper => "upper",
            SweepParam::Diameter => "diameter",
        }
    }

    fn is_integer(self) -> bool {
        matches!(
            self,
            SweepParam::BatchSize | SweepParam::DatasetSize | SweepParam::Iterations
        )
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub privacy: PrivacySection,
    pub curvature: CurvatureSection,
    #[serde(default)]
    pub regularizer: RegularizerSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub targets: TargetsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Root seed for noise and, unless overridden, dataset generation.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> PrivacyParams {
        let p = &self.privacy;
        PrivacyParams {
            alpha: p.alpha,
            sigma: p.sigma,
            lam: p.lam,
            clip_norm: p.clip_norm,
            batch_size: p.batch_size,
            dataset_size: p.dataset_size,
            iterations: p.iterations,
        }
    }

    pub fn curvature(&self) -> CurvatureSpec {
        CurvatureSpec {
            m: self.curvature.m,
            upper: self.curvature.upper,
            diameter: self
                .curvature
                .diameter
                .unwrap_or_else(|| self.regularizer().diameter()),
        }
    }

    pub fn regularizer(&self) -> RegularizerSpec {
        self.regularizer.into()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::with_cells(self.oracle.cells)
    }

    pub fn dataset_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(self.seed)
    }

    pub fn differing_index(&self) -> usize {
        self.dataset
            .differing_index
            .unwrap_or(self.privacy.dataset_size as usize)
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::from_element(self.dataset.dim, self.dataset.x0)
    }

    /// Epochs for the planner.
    pub fn plan_epochs(&self) -> u64 {
        self.targets
            .epochs
            .unwrap_or_else(|| self.params().epochs())
    }

    fn validate(&self) -> Result<()> {
        let p = self.params();
        p.validate()?;
        self.curvature().validate()?;
        self.regularizer().validate()?;

        let d = &self.dataset;
        if d.dim == 0 {
            return Err(config_err("dataset.dim must be positive"));
        }
        if !d.x0.is_finite() {
            return Err(config_err("dataset.x0 must be finite"));
        }
        let i = self.differing_index();
        if i == 0 || i as u64 > p.dataset_size {
            return Err(config_err(format!(
                "dataset.differing_index must lie in 1..={}, got {i}",
                p.dataset_size
            )));
        }
        if !self.regularizer().contains(&self.x0()) {
            return Err(config_err(
                "dataset.x0 lies outside the regularizer's domain",
            ));
        }

        let o = &self.oracle;
        if o.cells < 16 {
            return Err(config_err("oracle.cells must be at least 16"));
        }
        if o.n_pairs == 0 {
            return Err(config_err("oracle.n_pairs must be positive"));
        }
        if !(o.lipschitz_scale.is_finite() && o.lipschitz_scale > 0.0) {
            return Err(config_err("oracle.lipschitz_scale must be positive"));
        }

        let t = &self.targets;
        if let Some(eps) = t.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(config_err(format!(
                    "targets.epsilon must be positive, got {eps}"
                )));
            }
        }
        if t.epochs == Some(0) {
            return Err(config_err("targets.epochs must be positive"));
        }
        if let Some(&bad) = t.deltas.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(config_err(format!(
                "targets.deltas must lie in (0, 1), got {bad}"
            )));
        }
        if !(t.pabi_lipschitz.is_finite() && t.pabi_lipschitz > 0.0) {
            return Err(config_err("targets.pabi_lipschitz must be positive"));
        }

        for axis in &self.sweep.axes {
            let name = axis.param.name();
            if axis.values.is_empty() {
                return Err(config_err(format!("sweep axis {name} has no values")));
            }
            if axis.param.is_integer() {
                if let Some(v) = axis
                    .values
                    .iter()
                    .find(|v| !(v.fract() == 0.0 && **v >= 0.0))
                {
                    return Err(config_err(format!(
                        "sweep axis {name} needs nonnegative integers, got {v}"
                    )));
                }
            }
        }
        let mut names: Vec<_> = self.sweep.axes.iter().map(|a| a.param.name()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("sweep axes must name distinct parameters"));
        }
        Ok(())
    }

    /// Config with one sweep point applied and re-validated.
    pub fn with_point(&self, point: &[(SweepParam, f64)]) -> Result<Self> {
        let mut cfg = self.clone();
        for &(param, v) in point {
            let pr = &mut cfg.privacy;
            match param {
                SweepParam::Alpha => pr.alpha = v,
                SweepParam::Sigma => pr.sigma = v,
                SweepParam::Lam => pr.lam = v,
                SweepParam::ClipNorm => pr.clip_norm = v,
                SweepParam::BatchSize => pr.batch_size = v as u64,
                SweepParam::DatasetSize => pr.dataset_size = v as u64,
                SweepParam::Iterations => pr.iterations = v as u64,
                SweepParam::M => cfg.curvature.m = v,
                SweepParam::Upper => cfg.curvature.upper = v,
                SweepParam::Diameter => cfg.curvature.diameter = Some(v),
            }
        }
        cfg.sweep.axes.clear();
        if cfg
            .dataset
            .differing_index
            .is_some_and(|i| i as u64 > cfg.privacy.dataset_size)
        {
            cfg.dataset.differing_index = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sweep points in lexicographic order: the first axis varies slowest.
    pub fn sweep_points(&self) -> Vec<Vec<(SweepParam, f64)>> {
        let mut points = vec![Vec::new()];
        for axis in &self.sweep.axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((axis.param, v));
                        p
                    })
                })
                .collect();
        }
        points
    }

    /// The generated dataset and its neighbor.
    pub fn datasets(&self) -> Result<(SyntheticDataset, SyntheticDataset)> {
        let d = &self.dataset;
        let (m, upper) = (self.curvature.m, self.curvature.upper);
        let k = self.privacy.dataset_size as usize;
        let i = self.differing_index();
        let base = generate_quadratic_dataset(d.dim, k, m, upper, self.dataset_seed())?;
        match d.replacement {
            Replacement::Generated => {
                let fresh = generate_quadratic_dataset(
                    d.dim,
                    1,
                    m,
                    upper,
                    self.dataset_seed().wrapping_add(REPLACEMENT_SEED_OFFSET),
                )?;
                let neighbor = base.make_neighbor(i, fresh.component(1).clone())?;
                Ok((base, neighbor))
            }
            Replacement::Saturating => {
                let linear = |sign: f64| {
                    let mut c = DVector::zeros(d.dim);
                    c[0] = sign * SATURATION * self.privacy.clip_norm;
                    QuadraticLoss::new(DMatrix::zeros(d.dim, d.dim), c)
                };
                let original = base.make_neighbor(i, linear(1.0)?)?;
                let neighbor = base.make_neighbor(i, linear(-1.0)?)?;
                Ok((original, neighbor))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "privacy": {"alpha": 2, "sigma": 1, "lam": 0.25, "clip_norm": 1,
                    "batch_size": 1, "dataset_size": 4, "iterations": 8},
        "curvature": {"m": 0.5, "upper": 1.5}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.regularizer(), RegularizerSpec::Zero);
        assert_eq!(cfg.curvature().diameter, f64::INFINITY);
        assert_eq!(cfg.differing_index(), 4);
        assert_eq!(cfg.oracle.suites, Suite::ALL);
        assert_eq!(cfg.sweep_points(), vec![Vec::new()]);
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let extra = MINIMAL.replace("\"m\": 0.5", "\"m\": 0.5, \"bogus\": 1");
        assert!(RunConfig::parse(&extra)
            .unwrap_err()
            .to_string()
            .contains("bogus"));
        let missing = MINIMAL.replace("\"sigma\": 1, ", "");
        assert!(RunConfig::parse(&missing)
            .unwrap_err()
            .to_string()
            .contains("sigma"));
    }

    #[test]
    fn cross_field_constraints_are_checked() {
        let bad_batch = MINIMAL.replace("\"batch_size\": 1", "\"batch_size\": 3");
        assert!(RunConfig::parse(&bad_batch).is_err());
        let bad_sigma = MINIMAL.replace("\"sigma\": 1", "\"sigma\": -1");
        assert!(RunConfig::parse(&bad_sigma).is_err());
        let outside = MINIMAL.replace(
            "\"curvature\"",
            "\"regularizer\": {\"kind\": \"ball\", \"radius\": 1}, \"dataset\": {\"x0\": 2}, \"curvature\"",
        );
        assert!(RunConfig::parse(&outside).is_err());
    }

    #[test]
    fn diameter_accepts_inf_and_defaults_to_ball() {
        let cfg = RunConfig::parse(
            &MINIMAL.replace("\"upper\": 1.5", "\"upper\": 1.5, \"diameter\": \"inf\""),
        )
        .unwrap();
        assert_eq!(cfg.curvature().diameter, f64::INFINITY);
        let cfg = RunConfig::parse(&MINIMAL.replace(
            "\"curvature\"",
            "\"regularizer\": {\"kind\": \"ball\", \"radius\": 1.5}, \"curvature\"",
        ))
        .unwrap();
        assert_eq!(cfg.curvature().diameter, 3.0);
    }

    #[test]
    fn sweep_points_are_lexicographic() {
        let text = MINIMAL.replace(
            "\"curvature\"",
            "\"sweep\": {\"axes\": [{\"param\": \"sigma\", \"values\": [1, 2]}, {\"param\": \"alpha\", \"values\": [2, 4, 8]}]}, \"curvature\"",
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 6);
        assert_eq!(
            pts[0],
            vec![(SweepParam::Sigma, 1.0), (SweepParam::Alpha, 2.0)]
        );
        assert_eq!(
            pts[1],
            vec![(SweepParam::Sigma, 1.0), (SweepParam::Alpha, 4.0)]
        );
        assert_eq!(
            pts[3],
            vec![(SweepParam::Sigma, 2.0), (SweepParam::Alpha, 2.0)]
        );
        let p = cfg.with_point(&pts[5]).unwrap();
        assert_eq!((p.privacy.sigma, p.privacy.alpha), (2.0, 8.0));
    }

    #[test]
    fn saturating_neighbors_differ_in_one_record() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let (a, b) = cfg.datasets().unwrap();
        assert_eq!(a.differing_indices(&b), [4]);
        assert_eq!(a.component(4).linear[0], 4.0);
        assert_eq!(b.component(4).linear[0], -4.0);
    }
}
