//! Experiment specifications: scenario catalogue, solver parameters, and the
//! key=value config format.
//!
//! Every scenario ships with complete defaults (dimensions, SNR grids, trial
//! counts), so a bare subcommand runs the canonical setup; a config file
//! overrides individual keys. Parsing is strict — unknown keys, duplicates,
//! and malformed values are errors with line numbers — because a silently
//! ignored typo in an experiment sweep wastes hours.

use anyhow::{anyhow, bail, Result};
use cas_core::SystemConfig;

/// The experiment catalogue. Each entry pins which designs run and over
/// which channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Separated waveform on an IID sensing channel: distortion-vs-split
    /// sweep plus the golden-section optimum, across comm SNRs.
    SwIid,
    /// Separated waveform on a general sensing covariance: sweep plus the
    /// refinement-search optimum, across sensing SNRs.
    SwSweep,
    /// Dual waveform via the weighted-MI sweep on a general covariance,
    /// coarse vs fine weight grids.
    DwHmi,
    /// Dual waveform on independent subchannels: weighted-MI sweeps vs the
    /// direct gradient-projection solver.
    DwMgp,
    /// Separated vs dual vs idealized-dual comparison over a wide sensing
    /// SNR range.
    DwCompare,
    /// Two-subchannel instances where an exhaustive lattice search certifies
    /// both dual solvers.
    Oracle2d,
    /// Winning MI weight across an SNR grid (the extreme-point table).
    TableAlpha,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::SwIid,
        Scenario::SwSweep,
        Scenario::DwHmi,
        Scenario::DwMgp,
        Scenario::DwCompare,
        Scenario::Oracle2d,
        Scenario::TableAlpha,
    ];

    /// Name used in config files, CSV rows, and default output filenames.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SwIid => "sw-iid",
            Scenario::SwSweep => "sw-sweep",
            Scenario::DwHmi => "dw-hmi",
            Scenario::DwMgp => "dw-mgp",
            Scenario::DwCompare => "compare",
            Scenario::Oracle2d => "oracle2d",
            Scenario::TableAlpha => "table-alpha",
        }
    }

    pub fn from_name(name: &str) -> Result<Scenario> {
        Scenario::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                anyhow!(
                    "unknown scenario `{name}` (expected one of: {})",
                    Scenario::ALL.map(Scenario::name).join(", ")
                )
            })
    }
}

/// Knobs shared by the solvers across scenarios.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Points in the distortion-vs-split sweep (endpoints included).
    pub split_grid: usize,
    /// Cells per round in the split refinement search.
    pub alg1_grid: usize,
    /// Refinement stop: rounds end once the per-round improvement drops
    /// below this fraction of the prior distortion.
    pub alg1_eps_scale: f64,
    /// Points in the fine MI-weight grid (the coarse grid is always
    /// {0, 0.5, 1}).
    pub hmi_points: usize,
    /// Lattice points per axis in the two-subchannel exhaustive search.
    pub oracle_grid: usize,
    /// Per-antenna variance of the IID sensing channel.
    pub lambda_s_iid: f64,
    /// Scatterer count behind randomly drawn sensing covariances.
    pub k_paths: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            split_grid: 101,
            alg1_grid: 20,
            alg1_eps_scale: 1e-6,
            hmi_points: 11,
            oracle_grid: 200,
            lambda_s_iid: 1.0,
            k_paths: 10,
        }
    }
}

/// A fully resolved experiment: scenario, system dimensions, SNR grids,
/// trial count, and solver knobs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub config: SystemConfig,
    /// Sensing SNRs in dB (SNR = 10·log₁₀(P_T/σ²)).
    pub snr_s_db: Vec<f64>,
    /// Communication SNRs in dB.
    pub snr_c_db: Vec<f64>,
    /// Independent channel draws per SNR point.
    pub trials: usize,
    pub params: SolverParams,
}

impl ExperimentSpec {
    /// The canonical setup for a scenario: 10 transmit antennas, 5 receive
    /// antennas per function, 100 symbols with unit per-symbol power
    /// (P_T = 100), and the SNR grids the scenario is meant to map.
    pub fn defaults(scenario: Scenario) -> ExperimentSpec {
        let config = SystemConfig {
            n_tx: if scenario == Scenario::Oracle2d { 2 } else { 10 },
            ..SystemConfig::default()
        };
        let (snr_s_db, snr_c_db, trials): (Vec<f64>, Vec<f64>, usize) = match scenario {
            Scenario::SwIid => (vec![20.0], vec![0.0, 5.0, 10.0, 15.0, 20.0], 1),
            Scenario::SwSweep => (vec![0.0, 5.0, 10.0, 15.0, 20.0], vec![20.0], 1),
            Scenario::DwHmi => {
                ((-5..=5).map(|k| 2.0 * k as f64).collect(), vec![-5.0, 5.0], 1)
            }
            Scenario::DwMgp => {
                (vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0], vec![0.0, 10.0, 20.0], 1)
            }
            Scenario::DwCompare => {
                ((-2..=5).map(|k| 10.0 * k as f64).collect(), vec![20.0], 20)
            }
            Scenario::Oracle2d => (vec![15.0], vec![0.0], 10),
            Scenario::TableAlpha => {
                (vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0], vec![0.0, 10.0, 20.0], 3)
            }
        };
        ExperimentSpec {
            scenario,
            config,
            snr_s_db,
            snr_c_db,
            trials,
            params: SolverParams::default(),
        }
    }

    /// Sanity checks shared by the CLI and the runner.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.snr_s_db.is_empty() || self.snr_c_db.is_empty() {
            bail!("both SNR grids must be nonempty");
        }
        if self.trials == 0 {
            bail!("need at least one trial");
        }
        if self.params.split_grid < 2 {
            bail!("split_grid needs at least 2 points");
        }
        if self.params.alg1_grid < 2 {
            bail!("alg1_grid needs at least 2 cells");
        }
        if !(self.params.alg1_eps_scale >= 0.0) || !self.params.alg1_eps_scale.is_finite() {
            bail!("alg1_eps_scale must be finite and nonnegative");
        }
        if self.params.hmi_points < 2 {
            bail!("hmi_points needs at least 2 weights");
        }
        if self.params.oracle_grid < 2 {
            bail!("oracle_grid needs at least 2 points per axis");
        }
        if !(self.params.lambda_s_iid >= 0.0) || !self.params.lambda_s_iid.is_finite() {
            bail!("lambda_s_iid must be finite and nonnegative");
        }
        if self.params.k_paths == 0 {
            bail!("k_paths must be at least 1");
        }
        if self.scenario == Scenario::Oracle2d && self.config.n_tx != 2 {
            bail!("the oracle2d scenario requires exactly 2 transmit antennas");
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| {
        anyhow!("line {line}: key `{key}` has malformed value `{value}`")
    })
}

fn parse_f64_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .map(|item| {
            item.parse::<f64>()
                .map_err(|_| anyhow!("line {line}: key `{key}` has malformed entry `{item}`"))
                .and_then(|x| {
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(anyhow!("line {line}: key `{key}` entries must be finite"))
                    }
                })
        })
        .collect()
}

/// Parses the key=value experiment format: one `key = value` pair per line,
/// `#` comments, blank lines ignored, lists comma-separated. `scenario` is
/// required; every other key overrides that scenario's default. Unknown and
/// duplicated keys are rejected with their line numbers.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {line_no}: expected `key = value`, got `{line}`");
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            bail!("line {line_no}: expected `key = value`, got `{line}`");
        }
        if let Some((prev_line, _, _)) = pairs.iter().find(|(_, k, _)| *k == key) {
            bail!("line {line_no}: key `{key}` already set on line {prev_line}");
        }
        pairs.push((line_no, key, value));
    }

    let scenario_entry = pairs
        .iter()
        .find(|(_, k, _)| k == "scenario")
        .ok_or_else(|| anyhow!("config must set `scenario`"))?;
    let scenario = Scenario::from_name(&scenario_entry.2)
        .map_err(|e| anyhow!("line {}: {e}", scenario_entry.0))?;

    let mut spec = ExperimentSpec::defaults(scenario);
    let mut power_budget_set = false;
    let mut n_symbols_line = None;
    for (line, key, value) in &pairs {
        let line = *line;
        match key.as_str() {
            "scenario" => {}
            "n_tx" => spec.config.n_tx = parse_value(key, value, line)?,
            "m_s" => spec.config.m_s = parse_value(key, value, line)?,
            "m_c" => spec.config.m_c = parse_value(key, value, line)?,
            "n_symbols" => {
                spec.config.n_symbols = parse_value(key, value, line)?;
                n_symbols_line = Some(line);
            }
            "power_budget" => {
                spec.config.power_budget = parse_value(key, value, line)?;
                power_budget_set = true;
            }
            "seed" => spec.config.seed = parse_value(key, value, line)?,
            "trials" => spec.trials = parse_value(key, value, line)?,
            "snr_s_db" => spec.snr_s_db = parse_f64_list(key, value, line)?,
            "snr_c_db" => spec.snr_c_db = parse_f64_list(key, value, line)?,
            "split_grid" => spec.params.split_grid = parse_value(key, value, line)?,
            "alg1_grid" => spec.params.alg1_grid = parse_value(key, value, line)?,
            "alg1_eps_scale" => spec.params.alg1_eps_scale = parse_value(key, value, line)?,
            "hmi_points" => spec.params.hmi_points = parse_value(key, value, line)?,
            "oracle_grid" => spec.params.oracle_grid = parse_value(key, value, line)?,
            "lambda_s_iid" => spec.params.lambda_s_iid = parse_value(key, value, line)?,
            "k_paths" => spec.params.k_paths = parse_value(key, value, line)?,
            other => bail!("line {line}: unknown key `{other}`"),
        }
    }
    // The budget convention P_T = T·(unit per-symbol power): a changed
    // symbol count moves the budget along unless the budget was pinned.
    if !power_budget_set && n_symbols_line.is_some() {
        spec.config.power_budget = spec.config.n_symbols as f64;
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_round_trips_its_name() {
        for scenario in Scenario::ALL {
            assert_eq!(Scenario::from_name(scenario.name()).unwrap(), scenario);
        }
        assert!(Scenario::from_name("sw_iid").is_err());
    }

    #[test]
    fn defaults_validate_for_every_scenario() {
        for scenario in Scenario::ALL {
            ExperimentSpec::defaults(scenario).validate().unwrap();
        }
    }

    #[test]
    fn parses_a_full_config() {
        let text = "\
# two-subchannel certification run
scenario = oracle2d
n_tx = 2
m_s = 3      # sensing antennas
seed = 42
trials = 4
snr_s_db = -5, 0, 5
snr_c_db = 10
oracle_grid = 150
";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.scenario, Scenario::Oracle2d);
        assert_eq!(spec.config.n_tx, 2);
        assert_eq!(spec.config.m_s, 3);
        assert_eq!(spec.config.seed, 42);
        assert_eq!(spec.trials, 4);
        assert_eq!(spec.snr_s_db, vec![-5.0, 0.0, 5.0]);
        assert_eq!(spec.snr_c_db, vec![10.0]);
        assert_eq!(spec.params.oracle_grid, 150);
        // untouched keys keep scenario defaults
        assert_eq!(spec.params.hmi_points, 11);
        assert_eq!(spec.config.power_budget, 100.0);
    }

    #[test]
    fn scenario_is_required() {
        let err = parse_config("n_tx = 4\n").unwrap_err().to_string();
        assert!(err.contains("scenario"), "got: {err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("scenario = sw-iid\nsplit_gird = 7\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("split_gird"), "got: {err}");
    }

    #[test]
    fn duplicate_keys_report_both_lines() {
        let text = "scenario = sw-iid\ntrials = 2\n\ntrials = 3\n";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("line 2"), "got: {err}");
    }

    #[test]
    fn malformed_values_are_rejected() {
        let err = parse_config("scenario = sw-iid\ntrials = many\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("many"), "got: {err}");
        assert!(parse_config("scenario = sw-iid\nsnr_s_db = 1, two\n").is_err());
        assert!(parse_config("scenario = sw-iid\nbroken line\n").is_err());
    }

    #[test]
    fn symbol_count_moves_the_power_budget_unless_pinned() {
        let moved = parse_config("scenario = sw-iid\nn_symbols = 50\n").unwrap();
        assert_eq!(moved.config.power_budget, 50.0);
        let pinned =
            parse_config("scenario = sw-iid\nn_symbols = 50\npower_budget = 80\n").unwrap();
        assert_eq!(pinned.config.power_budget, 80.0);
    }

    #[test]
    fn oracle_scenario_insists_on_two_antennas() {
        let err = parse_config("scenario = oracle2d\nn_tx = 3\n").unwrap_err().to_string();
        assert!(err.contains("2 transmit antennas"), "got: {err}");
    }

    #[test]
    fn zero_trials_are_rejected() {
        assert!(parse_config("scenario = dw-hmi\ntrials = 0\n").is_err());
    }
}
