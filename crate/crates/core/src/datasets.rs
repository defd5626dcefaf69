//! Measured device data and fixed disorder realizations used by the presets.

/// One fixed disorder realization: name, nominal strength (Hz) and the seven
/// bond offsets (Hz) of an eight-site chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderRow {
    pub name: &'static str,
    pub strength: f64,
    pub deltas: [f64; 7],
}

/// Fifteen integer-valued disorder realizations, five per strength
/// (5, 10 and 15 Hz), rows `d1` … `d15`.
pub const TABLE_V: [DisorderRow; 15] = [
    DisorderRow { name: "d1", strength: 5.0, deltas: [-5.0, 1.0, 1.0, 5.0, 3.0, -2.0, 0.0] },
    DisorderRow { name: "d2", strength: 5.0, deltas: [0.0, -5.0, 4.0, 2.0, -3.0, 5.0, -3.0] },
    DisorderRow { name: "d3", strength: 5.0, deltas: [0.0, 5.0, -3.0, -5.0, 4.0, 2.0, 0.0] },
    DisorderRow { name: "d4", strength: 5.0, deltas: [-4.0, -4.0, -1.0, -3.0, -2.0, -3.0, -1.0] },
    DisorderRow { name: "d5", strength: 5.0, deltas: [-1.0, 2.0, -1.0, -4.0, -1.0, 1.0, -2.0] },
    DisorderRow { name: "d6", strength: 10.0, deltas: [-1.0, -4.0, -8.0, -8.0, 6.0, 1.0, 9.0] },
    DisorderRow { name: "d7", strength: 10.0, deltas: [-5.0, -8.0, -2.0, 0.0, -4.0, 4.0, -1.0] },
    DisorderRow { name: "d8", strength: 10.0, deltas: [-8.0, -2.0, 9.0, 6.0, 10.0, 3.0, -10.0] },
    DisorderRow { name: "d9", strength: 10.0, deltas: [7.0, 5.0, 5.0, 10.0, -1.0, 6.0, -2.0] },
    DisorderRow { name: "d10", strength: 10.0, deltas: [3.0, 9.0, -10.0, 5.0, 6.0, 9.0, 10.0] },
    DisorderRow { name: "d11", strength: 15.0, deltas: [-10.0, -4.0, 4.0, 9.0, -13.0, 13.0, 9.0] },
    DisorderRow { name: "d12", strength: 15.0, deltas: [10.0, -2.0, 10.0, 9.0, -7.0, -13.0, -14.0] },
    DisorderRow { name: "d13", strength: 15.0, deltas: [-3.0, -7.0, 11.0, 14.0, -4.0, -13.0, -10.0] },
    DisorderRow { name: "d14", strength: 15.0, deltas: [-15.0, 5.0, -11.0, 9.0, -3.0, -5.0, 8.0] },
    DisorderRow { name: "d15", strength: 15.0, deltas: [-8.0, -15.0, 5.0, 13.0, 2.0, -11.0, 0.0] },
];

/// Looks up a disorder row by name (`"d1"` … `"d15"`).
pub fn disorder_row(name: &str) -> Option<&'static DisorderRow> {
    TABLE_V.iter().find(|row| row.name == name)
}

/// Fundamental out-of-plane mode of one beam: frequency in kHz and quality factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMode {
    pub frequency_khz: f64,
    pub quality: f64,
}

/// The eight-beam device, beams numbered 1 to 8 (`"beams-8"`).
pub const BEAMS_8: [BeamMode; 8] = [
    BeamMode { frequency_khz: 907.184, quality: 106_300.0 },
    BeamMode { frequency_khz: 905.980, quality: 91_700.0 },
    BeamMode { frequency_khz: 923.843, quality: 101_000.0 },
    BeamMode { frequency_khz: 893.665, quality: 77_400.0 },
    BeamMode { frequency_khz: 922.695, quality: 105_100.0 },
    BeamMode { frequency_khz: 905.627, quality: 71_400.0 },
    BeamMode { frequency_khz: 918.246, quality: 119_600.0 },
    BeamMode { frequency_khz: 873.976, quality: 84_000.0 },
];

/// DC bias applied on every coupling electrode (V).
pub const BIAS_DC_VOLTS: f64 = 4.0;

/// AC coupling amplitudes (V) per bond for one target structure, as used
/// in the two measurement halves (odd-oscillator and even-oscillator circuits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltagePreset {
    pub name: &'static str,
    /// Target couplings per bond (Hz).
    pub target_hz: [f64; 7],
    /// Odd-oscillator circuit.
    pub odd_circuit: [f64; 7],
    /// Even-oscillator circuit.
    pub even_circuit: [f64; 7],
}

/// Intracell 20 Hz, intercell 60 Hz.
pub const TOPOLOGICAL_VOLTAGES: VoltagePreset = VoltagePreset {
    name: "topological",
    target_hz: [20.0, 60.0, 20.0, 60.0, 20.0, 60.0, 20.0],
    odd_circuit: [0.082, 0.222, 0.069, 0.207, 0.072, 0.208, 0.072],
    even_circuit: [0.160, 0.240, 0.079, 0.214, 0.073, 0.220, 0.085],
};

/// Intracell 60 Hz, intercell 20 Hz.
pub const TRIVIAL_VOLTAGES: VoltagePreset = VoltagePreset {
    name: "trivial",
    target_hz: [60.0, 20.0, 60.0, 20.0, 60.0, 20.0, 60.0],
    odd_circuit: [0.250, 0.075, 0.205, 0.070, 0.210, 0.072, 0.230],
    even_circuit: [0.495, 0.079, 0.232, 0.073, 0.222, 0.074, 0.245],
};

pub fn voltage_preset(name: &str) -> Option<&'static VoltagePreset> {
    [&TOPOLOGICAL_VOLTAGES, &TRIVIAL_VOLTAGES]
        .into_iter()
        .find(|p| p.name == name)
}
