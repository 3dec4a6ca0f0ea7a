//! Scenario files: one TOML document fully determines a run.

use std::path::PathBuf;

use kreinwedge::gns::DEFAULT_TOL_NULL;
use kreinwedge::modular::{ModularSettings, ModularTolerances};
use kreinwedge::quadrature::RapidityGrid;
use kreinwedge::states::{AxiomSettings, MassShellDensity, QuasiFreeState, Shell};
use kreinwedge::testfunctions::{SpacetimePoint, WavePacket, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Axioms,
    Mollifier,
    Gns,
    Modular,
    Controls,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Mollifier => "mollifier",
            Suite::Gns => "gns",
            Suite::Modular => "modular",
            Suite::Controls => "controls",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub model: ModelBlock,
    #[serde(default)]
    pub majorant: MajorantBlock,
    #[serde(default)]
    pub axioms: AxiomSettings,
    #[serde(default)]
    pub gns: GnsBlock,
    #[serde(default)]
    pub modular: ModularBlock,
    #[serde(default)]
    pub mollifier: MollifierBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub shells: Vec<Shell>,
    #[serde(default)]
    pub grid: RapidityGrid,
}

/// Degree weights (N per slot) and highest calibrated degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MajorantBlock {
    pub n_weight: u32,
    pub max_degree: usize,
}

impl Default for MajorantBlock {
    fn default() -> Self {
        MajorantBlock { n_weight: 2, max_degree: 4 }
    }
}

/// Basis recipe for the GNS suite. The slots are the union of the wedge
/// family, shell-resolved packets and seeded random packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnsBlock {
    /// ε of the mollified wedge and anti-wedge packets; none leaves them out.
    pub wedge_epsilon: Option<f64>,
    /// Spatial momenta of modulated packets centered at the origin.
    pub shell_momenta: Vec<f64>,
    pub shell_width: f64,
    pub random_packets: usize,
    /// Add every ordered product of two slots.
    pub products: bool,
    pub n_weight: u32,
    pub max_degree: usize,
    pub tol_null: f64,
    pub domination_samples: usize,
    /// Basis elements (after the unit) used as vacuum-tool samples.
    pub vacuum_samples: usize,
    /// ε of the degree-1 wedge basis on which J is checked; none skips it.
    pub symmetry_epsilon: Option<f64>,
    /// Require at least one negative metric direction (true) or none (false).
    pub expect_indefinite: Option<bool>,
}

impl Default for GnsBlock {
    fn default() -> Self {
        GnsBlock {
            wedge_epsilon: None,
            shell_momenta: vec![],
            shell_width: 3.0,
            random_packets: 0,
            products: false,
            n_weight: 1,
            max_degree: 4,
            tol_null: DEFAULT_TOL_NULL,
            domination_samples: 50,
            vacuum_samples: 6,
            symmetry_epsilon: Some(0.5),
            expect_indefinite: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModularBlock {
    pub settings: ModularSettings,
    /// Also rerun at coarse resolution and check the defect ratios.
    pub trend: bool,
    /// Imaginary parts φ of the F(t + iφ) traces.
    pub trace_phis: Vec<f64>,
    pub trace_ts: Vec<f64>,
}

impl Default for ModularBlock {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        ModularBlock {
            settings: ModularSettings::default(),
            trend: false,
            trace_phis: vec![0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi],
            trace_ts: (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect(),
        }
    }
}

/// A modulated Gaussian: amplitude [re, im], center [x0, x1], light-cone
/// widths [wu, wv] and momentum [k0, k1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
    pub center: [f64; 2],
    pub widths: [f64; 2],
    #[serde(default)]
    pub momentum: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl PacketSpec {
    pub fn packet(&self) -> WavePacket {
        WavePacket::modulated(
            C64::new(self.amplitude[0], self.amplitude[1]),
            SpacetimePoint::new(self.center[0], self.center[1]),
            self.widths[0],
            self.widths[1],
            SpacetimePoint::new(self.momentum[0], self.momentum[1]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierBlock {
    pub packets: Vec<PacketSpec>,
    pub epsilons: Vec<f64>,
    /// (L, N) pairs of the Schwartz norms.
    pub norms: Vec<[u32; 2]>,
}

impl Default for MollifierBlock {
    fn default() -> Self {
        MollifierBlock {
            packets: vec![PacketSpec { amplitude: [1.0, 0.0], center: [0.0, 0.0], widths: [0.5, 0.5], momentum: [0.0, 0.0] }],
            epsilons: vec![1.0, 0.3, 0.1],
            norms: vec![[0, 0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnsTolerances {
    pub eta: f64,
    pub form: f64,
    pub symmetry: f64,
    pub vacuum: f64,
}

impl Default for GnsTolerances {
    fn default() -> Self {
        GnsTolerances { eta: 1e-10, form: 1e-9, symmetry: 1e-8, vacuum: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub modular: ModularTolerances,
    pub gns: GnsTolerances,
    /// Smallest defect a control run must show.
    pub control_min: f64,
    /// Required coarse/standard ratio of the trend check.
    pub trend_factor: f64,
    /// ‖f_ε − f‖/‖f‖ required at the smallest ε.
    pub mollifier_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            modular: ModularTolerances::default(),
            gns: GnsTolerances::default(),
            control_min: 1e-2,
            trend_factor: 2.0,
            mollifier_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn state(&self) -> QuasiFreeState {
        QuasiFreeState::new(MassShellDensity { shells: self.model.shells.clone() }).with_grid(self.model.grid)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return bad(format!("name {:?} must be non-empty and use only [A-Za-z0-9_-]", self.name));
        }
        if self.suites.is_empty() {
            return bad("no suites requested".into());
        }
        MassShellDensity::new(self.model.shells.clone()).map_err(|e| ConfigError::Invalid(format!("model: {e}")))?;
        let g = self.model.grid;
        if !(g.theta_max > 0.0) || g.panels == 0 || g.order == 0 {
            return bad("model.grid needs theta_max > 0 and nonzero panels and order".into());
        }
        if self.majorant.n_weight > 2 || self.gns.n_weight > 2 {
            return bad("weight order above 2".into());
        }
        if self.majorant.max_degree == 0 || self.gns.max_degree == 0 {
            return bad("max_degree must be at least 1".into());
        }
        for eps in self.gns.wedge_epsilon.iter().chain(&self.gns.symmetry_epsilon).chain(&self.mollifier.epsilons) {
            if !(*eps > 0.0 && eps.is_finite()) {
                return bad(format!("mollifier width {eps} must be positive"));
            }
        }
        let m = &self.modular.settings;
        if !(m.epsilon > 0.0) || !(m.kms_epsilon > 0.0) || !(m.width > 0.0) || !(m.radius > 0.0) {
            return bad("modular.settings needs positive epsilon, kms_epsilon, width and radius".into());
        }
        if m.t_samples.is_empty() {
            return bad("modular.settings.t_samples is empty".into());
        }
        for p in &self.mollifier.packets {
            if !(p.widths[0] > 0.0 && p.widths[1] > 0.0) {
                return bad("mollifier packet widths must be positive".into());
            }
        }
        if self.mollifier.norms.iter().any(|[l, n]| *l > 2 || *n > 4) {
            return bad("mollifier norms need L ≤ 2 and N ≤ 4".into());
        }
        if self.suites.contains(&Suite::Mollifier) && (self.mollifier.packets.is_empty() || self.mollifier.epsilons.is_empty()) {
            return bad("mollifier suite needs packets and epsilons".into());
        }
        if self.suites.contains(&Suite::Gns)
            && self.gns.wedge_epsilon.is_none()
            && self.gns.shell_momenta.is_empty()
            && self.gns.random_packets == 0
        {
            return bad("gns basis recipe is empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"m\"\nsuites = [\"axioms\"]\n[model]\nshells = [{ mass = 1.0, weight = 1.0 }]\n";

    #[test]
    fn bundled_scenarios_parse() {
        for (name, text) in crate::bundled::ALL {
            let s = Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
            assert!(!s.description.is_empty());
        }
    }

    #[test]
    fn defaults_fill_missing_blocks() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.modular.settings, ModularSettings::default());
        assert_eq!(s.tolerances, Tolerances::default());
        assert_eq!(s.gns.wedge_epsilon, None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Scenario::parse(&format!("{MINIMAL}colour = 1\n")), Err(ConfigError::Parse(_))));
        let typo = MINIMAL.replace("[model]", "[gns]\nproduct = true\n[model]");
        assert!(matches!(Scenario::parse(&typo), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn invalid_models_are_rejected() {
        for bad in [
            MINIMAL.replace("mass = 1.0", "mass = 0.0"),
            MINIMAL.replace("weight = 1.0", "weight = 0.0"),
            MINIMAL.replace("[\"axioms\"]", "[]"),
            MINIMAL.replace("\"m\"", "\"a b\""),
            MINIMAL.replace("[\"axioms\"]", "[\"gns\"]"),
        ] {
            assert!(matches!(Scenario::parse(&bad), Err(ConfigError::Invalid(_))), "{bad}");
        }
        assert!(matches!(Scenario::parse(&MINIMAL.replace("\"axioms\"", "\"everything\"")), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn packet_spec_defaults_to_a_real_gaussian() {
        let s = Scenario::parse(&format!("{MINIMAL}[[mollifier.packets]]\ncenter = [0.1, 0.2]\nwidths = [0.5, 0.6]\n")).unwrap();
        let p = s.mollifier.packets[0].packet();
        assert_eq!(p, WavePacket::gaussian(SpacetimePoint::new(0.1, 0.2), 0.5, 0.6));
    }
}
