//! Per-node time accounting over the four radio/MCU states and the
//! resulting energy and power figures.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerState {
    Cpu,
    Lpm,
    Tx,
    Rx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("ledger holds no time")]
pub struct EmptyLedger;

/// Accumulated time per state, in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnergyLedger {
    pub cpu: u64,
    pub lpm: u64,
    pub tx: u64,
    pub rx: u64,
}

/// Operating currents in milliamperes and supply voltage in volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurrentModel {
    pub cpu_ma: f64,
    pub lpm_ma: f64,
    pub tx_ma: f64,
    pub rx_ma: f64,
    pub voltage: f64,
}

impl Default for CurrentModel {
    fn default() -> Self {
        CurrentModel {
            cpu_ma: 1.8,
            lpm_ma: 0.0545,
            tx_ma: 19.5,
            rx_ma: 21.8,
            voltage: 3.0,
        }
    }
}

impl CurrentModel {
    pub fn validate(&self) -> Result<(), &'static str> {
        let all = [self.cpu_ma, self.lpm_ma, self.tx_ma, self.rx_ma, self.voltage];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err("currents and voltage must be positive")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub power_mw: f64,
    pub energy_mj: f64,
}

pub fn secs(ns: u64) -> f64 {
    ns as f64 / NANOS_PER_SEC as f64
}

pub fn nanos(s: f64) -> u64 {
    debug_assert!(s >= 0.0);
    (s * NANOS_PER_SEC as f64).round() as u64
}

impl EnergyLedger {
    /// Ledger from per-state times in seconds.
    pub fn from_secs(cpu: f64, lpm: f64, tx: f64, rx: f64) -> Self {
        EnergyLedger {
            cpu: nanos(cpu),
            lpm: nanos(lpm),
            tx: nanos(tx),
            rx: nanos(rx),
        }
    }

    pub fn record_ns(&mut self, state: PowerState, dt: u64) {
        *self.slot(state) += dt;
    }

    /// Adds `dt` seconds to `state`.
    pub fn record(&mut self, state: PowerState, dt: f64) {
        self.record_ns(state, nanos(dt));
    }

    fn slot(&mut self, state: PowerState) -> &mut u64 {
        match state {
            PowerState::Cpu => &mut self.cpu,
            PowerState::Lpm => &mut self.lpm,
            PowerState::Tx => &mut self.tx,
            PowerState::Rx => &mut self.rx,
        }
    }

    pub fn total_ns(&self) -> u64 {
        self.cpu + self.lpm + self.tx + self.rx
    }

    pub fn seconds(&self) -> [f64; 4] {
        [secs(self.cpu), secs(self.lpm), secs(self.tx), secs(self.rx)]
    }

    /// Radio-on share of total time.
    pub fn duty_cycle(&self) -> Result<f64, EmptyLedger> {
        match self.total_ns() {
            0 => Err(EmptyLedger),
            t => Ok((self.tx + self.rx) as f64 / t as f64),
        }
    }

    pub fn energy(&self, cm: &CurrentModel) -> Result<EnergyReport, EmptyLedger> {
        let total = self.total_ns();
        if total == 0 {
            return Err(EmptyLedger);
        }
        let [cpu, lpm, tx, rx] = self.seconds();
        // mA * s * V = mJ
        let energy_mj = cm.voltage * (cm.cpu_ma * cpu + cm.lpm_ma * lpm + cm.tx_ma * tx + cm.rx_ma * rx);
        Ok(EnergyReport {
            power_mw: energy_mj / secs(total),
            energy_mj,
        })
    }

    pub fn merge(&mut self, o: &EnergyLedger) {
        self.cpu += o.cpu;
        self.lpm += o.lpm;
        self.tx += o.tx;
        self.rx += o.rx;
    }
}

pub const CSV_HEADER: &str = "run,node,t_cpu,t_lpm,t_tx,t_rx,duty_cycle,power_mw,energy_mj";

/// One CSV row; empty ledgers print empty derived columns.
pub fn csv_row(run: &str, node: &str, l: &EnergyLedger, cm: &CurrentModel) -> String {
    let [cpu, lpm, tx, rx] = l.seconds();
    let mut row = format!("{run},{node},{cpu:.6},{lpm:.6},{tx:.6},{rx:.6}");
    match (l.duty_cycle(), l.energy(cm)) {
        (Ok(d), Ok(e)) => write!(row, ",{d:.6},{:.6},{:.6}", e.power_mw, e.energy_mj).expect("string write"),
        _ => row.push_str(",,,"),
    }
    row
}
