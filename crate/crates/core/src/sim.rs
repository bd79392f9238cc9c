//! One simulated transmission period per scheme: scenario, schedule, power
//! control, ground-truth decoding and metrics.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, LinkModel};
use crate::config::{Config, Scheme};
use crate::ids::{SlotId, UserId};
use crate::metrics::{
    count_decoded, evaluate_period, latency_satisfaction_ratio, packet_reception_probability,
    Decoder, Delivery, MetricsError, PeriodOutcome,
};
use crate::powerctrl::{control_period, PowerError, PowerTable};
use crate::scenario::{Geometry, Scenario, ScenarioError};
use crate::scheduler::baselines::{noma_gga, oma};
use crate::scheduler::constraints::{check_schedule, ConstraintReport, Limits};
use crate::scheduler::influence::CrossInfluence;
use crate::scheduler::rmsa::LinkParams;
use crate::scheduler::{noma_schedule, Schedule, ScheduleOutcome, SchedulerError};
use crate::seed;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("scheduler: {0}")]
    Scheduler(#[from] SchedulerError),
    #[error("power control: {0}")]
    Power(#[from] PowerError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
}

/// Seeds of one run, all derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSeeds {
    pub run: u64,
    pub fading: u64,
}

impl RunSeeds {
    pub fn new(run: u64) -> Self {
        RunSeeds {
            run,
            fading: seed::mix(run, &[seed::label("fading")]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub prp: Option<f64>,
    pub latency_ratio: Option<f64>,
    pub required_rate: f64,
    pub intended: usize,
    pub decoded: usize,
    pub rotations_utsa: usize,
    pub rotations_rmsa: usize,
    pub n_users: usize,
    pub n_vehicles: usize,
    pub unsatisfied_power: usize,
    pub silenced: usize,
    pub violations: usize,
}

/// Everything one run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scheme: Scheme,
    pub seeds: RunSeeds,
    pub scenario: Scenario,
    pub outcome: ScheduleOutcome,
    pub powers: PowerTable,
    pub unsatisfied_power: usize,
    pub period: PeriodOutcome,
    pub report: ConstraintReport,
    pub metrics: RunMetrics,
}

pub fn link_params(radio: &crate::channel::RadioConfig) -> LinkParams {
    LinkParams {
        power: radio.max_power_w(),
        rate_threshold: radio.rate_threshold,
        logistic_slope: radio.logistic_slope,
    }
}

/// Constraint limits a scheme's schedules are held to.
pub fn limits(config: &Config, scheme: Scheme) -> Limits {
    match scheme {
        Scheme::Oma => Limits::oma(&config.scheduler),
        _ => Limits::noma(&config.scheduler),
    }
}

fn decoder(scheme: Scheme) -> Decoder {
    match scheme {
        Scheme::Oma => Decoder::InterferenceAsNoise,
        _ => Decoder::Sic,
    }
}

/// Failed deliveries of transmitters that were scheduled but left silent.
pub fn silenced_deliveries(
    geometry: &Geometry,
    silenced: &[(SlotId, UserId)],
) -> Vec<Delivery> {
    silenced
        .iter()
        .flat_map(|&(slot, tx)| {
            geometry.neighbors(tx, slot).iter().map(move |&rx| Delivery {
                slot,
                tx,
                rx,
                decoded: false,
                best_rate: None,
            })
        })
        .collect()
}

/// Scenario of run `seed`.
pub fn scenario_for(config: &Config, seed: u64) -> Result<Scenario, ScenarioError> {
    let mut sc = config.scenario.clone();
    sc.seed = seed;
    Scenario::generate(&sc)
}

/// Runs one scheme on the scenario of `seed`.
pub fn run_scheme(config: &Config, scheme: Scheme, seed: u64) -> Result<RunOutput, SimError> {
    let scenario = scenario_for(config, seed)?;
    run_on(config, scheme, scenario, RunSeeds::new(seed))
}

/// Runs one scheme on a given scenario.
pub fn run_on(
    config: &Config,
    scheme: Scheme,
    scenario: Scenario,
    seeds: RunSeeds,
) -> Result<RunOutput, SimError> {
    let geometry = Geometry::new(&scenario, config.scenario.range_m);
    let vehicles = scenario.vehicles();
    let influence = CrossInfluence::new(&geometry, config.scheduler.epsilon);
    let radio = match scheme {
        Scheme::Oma => config.oma_radio(),
        _ => config.radio.clone(),
    };
    radio.validate()?;
    let link = LinkModel::new(&geometry, &radio, seeds.fading);
    let params = link_params(&radio);
    let mut rng = seed::stream(seeds.run, "schedule");
    let outcome = match scheme {
        Scheme::NomaMcd => noma_schedule(
            &link,
            &influence,
            &vehicles,
            params,
            &config.scheduler,
            &mut rng,
        )?,
        Scheme::NomaGga => noma_gga(&geometry, &influence, &vehicles, &config.scheduler)?,
        Scheme::Oma => oma(&link, &influence, &vehicles, params, &config.scheduler)?,
    };
    let (powers, unsatisfied_power) = match scheme {
        Scheme::Oma => (PowerTable::uniform(&outcome.schedule, params.power), 0),
        _ => {
            let p = control_period(
                &link,
                &outcome.schedule,
                radio.rate_threshold,
                params.power,
                &config.power,
            )?;
            let unsatisfied = p.unsatisfied();
            (p.table, unsatisfied)
        }
    };
    let report = check_schedule(
        &geometry,
        &outcome.schedule,
        &vehicles,
        &limits(config, scheme),
    );
    let period = evaluate_on(
        &link,
        &outcome.schedule,
        &powers,
        &outcome.silenced,
        scheme,
        radio.rate_threshold,
    )?;
    let required_rate = config.required_rate(scheme);
    let metrics = RunMetrics {
        prp: packet_reception_probability(&period, required_rate),
        latency_ratio: latency_satisfaction_ratio(&period, radio.rate_threshold, required_rate),
        required_rate,
        intended: period.deliveries.len(),
        decoded: count_decoded(&period),
        rotations_utsa: outcome.time_rotations.len(),
        rotations_rmsa: outcome.channel_rotations.iter().map(Vec::len).sum(),
        n_users: scenario.len(),
        n_vehicles: vehicles.len(),
        unsatisfied_power,
        silenced: outcome.silenced.len(),
        violations: report.violations.len(),
    };
    Ok(RunOutput {
        scheme,
        seeds,
        scenario,
        outcome,
        powers,
        unsatisfied_power,
        period,
        report,
        metrics,
    })
}

fn evaluate_on(
    link: &LinkModel<'_>,
    schedule: &Schedule,
    powers: &PowerTable,
    silenced: &[(SlotId, UserId)],
    scheme: Scheme,
    rate_threshold: f64,
) -> Result<PeriodOutcome, SimError> {
    let mut period = evaluate_period(link, schedule, powers, decoder(scheme), rate_threshold)?;
    period
        .deliveries
        .extend(silenced_deliveries(link.geometry(), silenced));
    Ok(period)
}

/// Recomputes PRP and latency ratio from exported artifacts; `silenced`
/// lists transmitters scheduled but left silent.
#[allow(clippy::too_many_arguments)]
pub fn replay_metrics(
    config: &Config,
    scheme: Scheme,
    scenario: &Scenario,
    schedule: &Schedule,
    powers: &PowerTable,
    silenced: &[(SlotId, UserId)],
    fading_seed: u64,
) -> Result<(Option<f64>, Option<f64>), SimError> {
    let geometry = Geometry::new(scenario, config.scenario.range_m);
    let radio = match scheme {
        Scheme::Oma => config.oma_radio(),
        _ => config.radio.clone(),
    };
    let link = LinkModel::new(&geometry, &radio, fading_seed);
    let period = evaluate_on(&link, schedule, powers, silenced, scheme, radio.rate_threshold)?;
    let required = config.required_rate(scheme);
    Ok((
        packet_reception_probability(&period, required),
        latency_satisfaction_ratio(&period, radio.rate_threshold, required),
    ))
}
