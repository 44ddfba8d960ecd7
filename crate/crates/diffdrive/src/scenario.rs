//! Runs every experiment of a scenario and collects the report.

use diffdrive_core::experiments::{
    run_accuracy_trials, run_compensated_drift_experiment, run_drift_experiment, ExperimentError,
    TrialSpec,
};

use crate::config::{AccuracyExperiment, DriftExperiment, ExperimentConfig, Scenario};
use crate::report::{DriftRow, ScenarioReport, Section, SectionBody, StatsRow};

/// Run all experiments in order. Stops at the first failing trial.
pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<ScenarioReport, ExperimentError> {
    let mut sections = Vec::with_capacity(scenario.experiments.len());
    for exp in &scenario.experiments {
        let body = match exp {
            ExperimentConfig::Accuracy(AccuracyExperiment {
                axis,
                targets,
                repetitions,
                ..
            }) => {
                let axis = (*axis).into();
                let noise = scenario.noise(axis);
                let rows = targets
                    .iter()
                    .map(|&target| {
                        let spec = TrialSpec {
                            axis,
                            target,
                            repetitions: *repetitions,
                        };
                        run_accuracy_trials(&spec, noise, &scenario.sim).map(|s| StatsRow::from(&s))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SectionBody::Accuracy {
                    axis: axis.into(),
                    rows,
                }
            }
            &ExperimentConfig::Drift(DriftExperiment {
                revolutions,
                epsilon,
                compensated,
                ..
            }) => {
                let r = if compensated {
                    run_compensated_drift_experiment(revolutions, epsilon, &scenario.sim)?
                } else {
                    run_drift_experiment(revolutions, epsilon, &scenario.sim)?
                };
                SectionBody::Drift {
                    rows: vec![DriftRow::new(revolutions, epsilon, compensated, &r)],
                }
            }
        };
        sections.push(Section {
            title: exp.title(),
            body,
        });
    }
    Ok(ScenarioReport { seed, sections })
}
