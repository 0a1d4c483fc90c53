//! Published participation, loss-tangent and quality-factor tables.
//!
//! Participations and tangents are stored in units of 10⁻⁴ exactly as
//! printed; accessors return plain numbers.

use super::{Element, InterfaceKind};

/// Fabrication process of a qubit batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    LiftOff,
    Etch,
    Simulated,
}

impl Process {
    pub fn as_str(self) -> &'static str {
        match self {
            Process::LiftOff => "lift-off",
            Process::Etch => "etch",
            Process::Simulated => "simulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lift-off" | "liftoff" => Some(Process::LiftOff),
            "etch" => Some(Process::Etch),
            "simulated" => Some(Process::Simulated),
            _ => None,
        }
    }
}

/// One measured qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredQubit {
    pub name: &'static str,
    pub design: &'static str,
    pub process: Process,
    pub median_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDataset {
    pub designs: [&'static str; 3],
    /// Element totals ×10⁻⁴, `[design][element]`.
    pub participation_table: [[f64; 3]; 3],
    /// Interface entries ×10⁻⁴, `[design][element][MA, MS, SA]`.
    pub interface_participation_table: [[[f64; 3]; 3]; 3],
    /// Extracted tangents ×10⁻⁴, `[lift-off, etch][element]` as (value, 68% half-width).
    pub loss_tangent_table: [[(f64, f64); 3]; 2],
    /// Loss tangents recovered from simulated spectra ×10⁻⁴.
    pub simulated_tangents: [(f64, f64); 3],
    pub measured_median_q: [MeasuredQubit; 6],
    /// Maximum qubit frequency (GHz), `[design][lift-off, etch]`.
    pub max_frequency_ghz: [[f64; 2]; 3],
    /// Anharmonicity (MHz) per design.
    pub anharmonicity_mhz: [f64; 3],
}

const SCALE: f64 = 1e-4;

impl ReferenceDataset {
    pub fn design_index(&self, label: &str) -> Option<usize> {
        self.designs.iter().position(|d| *d == label)
    }

    /// Element total for a design.
    pub fn participation(&self, design: usize, element: Element) -> f64 {
        self.participation_table[design][element.index()] * SCALE
    }

    /// Participation row (pads, leads, SQUID) for a design.
    pub fn participation_row(&self, design: usize) -> [f64; 3] {
        self.participation_table[design].map(|v| v * SCALE)
    }

    pub fn interface_participation(
        &self,
        design: usize,
        element: Element,
        kind: InterfaceKind,
    ) -> f64 {
        self.interface_participation_table[design][element.index()][kind.index()] * SCALE
    }

    /// Tangent values and half-widths for a process.
    pub fn loss_tangents(&self, process: Process) -> [(f64, f64); 3] {
        let row = match process {
            Process::LiftOff => self.loss_tangent_table[0],
            Process::Etch => self.loss_tangent_table[1],
            Process::Simulated => self.simulated_tangents,
        };
        row.map(|(v, e)| (v * SCALE, e * SCALE))
    }

    pub fn qubits(&self, process: Process) -> impl Iterator<Item = &MeasuredQubit> {
        self.measured_median_q.iter().filter(move |q| q.process == process)
    }
}

pub fn reference_dataset() -> ReferenceDataset {
    ReferenceDataset {
        designs: ["long", "regular", "wide"],
        participation_table: [
            [1.852, 3.312, 0.613],
            [1.938, 1.247, 0.694],
            [2.086, 0.652, 0.724],
        ],
        interface_participation_table: [
            [
                [0.0362, 0.5435, 1.2723],
                [0.1905, 1.7733, 1.3484],
                [0.0353, 0.3282, 0.2496],
            ],
            [
                [0.0487, 0.7033, 1.1862],
                [0.0718, 0.6679, 0.5078],
                [0.0399, 0.3714, 0.2824],
            ],
            [
                [0.0170, 0.4105, 1.6588],
                [0.0359, 0.3605, 0.2555],
                [0.0398, 0.4003, 0.2837],
            ],
        ],
        loss_tangent_table: [
            [(10.4, 3.9), (9.2, 4.5), (3.7, 2.1)],
            [(11.3, 3.4), (7.9, 3.8), (4.0, 1.7)],
        ],
        simulated_tangents: [(8.4, 4.4), (6.8, 4.8), (3.2, 2.8)],
        measured_median_q: [
            MeasuredQubit { name: "Q1", design: "long", process: Process::LiftOff, median_q: 1.78e6 },
            MeasuredQubit { name: "Q3", design: "regular", process: Process::LiftOff, median_q: 3.17e6 },
            MeasuredQubit { name: "Q5", design: "wide", process: Process::LiftOff, median_q: 2.99e6 },
            MeasuredQubit { name: "Q6", design: "long", process: Process::Etch, median_q: 1.98e6 },
            MeasuredQubit { name: "Q4", design: "regular", process: Process::Etch, median_q: 2.76e6 },
            MeasuredQubit { name: "Q2", design: "wide", process: Process::Etch, median_q: 3.30e6 },
        ],
        max_frequency_ghz: [[4.825, 4.739], [4.999, 5.164], [4.824, 5.152]],
        anharmonicity_mhz: [179.0, 215.0, 182.0],
    }
}
