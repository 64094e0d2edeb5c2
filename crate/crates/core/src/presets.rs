//! Published parameter sets for the two parametric gates.

use crate::device::{CouplerSpec, DeviceSpec, Occupations, TransmonSpec};
use crate::flux::FluxPulse;
use crate::num::{ghz, mhz, Real};

/// Default truncation: 4 levels per qubit, 3 for the coupler.
pub const DEFAULT_LEVELS: [usize; 4] = [4, 4, 4, 3];

/// Device, drive and analysis defaults for one gate protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Preset<T> {
    pub name: &'static str,
    pub device: DeviceSpec<T>,
    pub pulse: FluxPulse<T>,
    /// Coupler frequency at which the undriven spectrum is evaluated for
    /// resonance attribution (rad/ns).
    pub frozen_coupler: T,
    /// Non-logical states that the protocol populates on purpose.
    pub protocol_states: Vec<Occupations>,
}

fn transmon<T: Real>(freq_ghz: f64, anh_mhz: f64, g_mhz: f64) -> TransmonSpec<T> {
    TransmonSpec {
        frequency: ghz(freq_ghz),
        anharmonicity: mhz(anh_mhz),
        coupling: mhz(g_mhz),
        levels: 4,
    }
}

/// CZ gate via the `|11⟩ ↔ |02⟩` transition.
///
/// The spectator frequency and anharmonicity are swept quantities and are
/// passed in (rad/ns).
pub fn cz_ganzhorn<T: Real>(spectator_frequency: T, spectator_anharmonicity: T) -> Preset<T> {
    let mut q3 = transmon::<T>(5.0, 0.0, 85.0);
    q3.frequency = spectator_frequency;
    q3.anharmonicity = spectator_anharmonicity;
    let device = DeviceSpec {
        qubits: [transmon(5.089, 310.0, 116.0), transmon(6.189, 286.0, 142.0), q3],
        coupler: CouplerSpec { max_frequency: ghz(8.1), anharmonicity: mhz(235.0), levels: 3 },
    };
    let pulse = FluxPulse {
        offset: T::lit(0.15),
        amplitude: T::lit(0.19),
        frequency: mhz(816.58),
        flank_width: T::lit(13.0),
        duration: T::lit(690.0),
    };
    Preset {
        name: "cz_ganzhorn",
        device,
        pulse,
        frozen_coupler: ghz(7.266),
        protocol_states: vec![[0, 2, 0, 0], [0, 2, 1, 0]],
    }
}

/// √iSWAP gate via the `|01⟩ ↔ |10⟩` transition. Spectator anharmonicity is
/// fixed at 100 MHz.
pub fn iswap_mckay<T: Real>(spectator_frequency: T) -> Preset<T> {
    let mut q3 = transmon::<T>(5.0, 100.0, 85.0);
    q3.frequency = spectator_frequency;
    let device = DeviceSpec {
        qubits: [transmon(5.8899, 324.0, 100.0), transmon(5.0311, 235.0, 71.4), q3],
        coupler: CouplerSpec { max_frequency: ghz(7.445), anharmonicity: mhz(230.0), levels: 3 },
    };
    let pulse = FluxPulse {
        offset: T::lit(-0.108),
        amplitude: T::lit(0.155),
        frequency: mhz(850.6),
        flank_width: T::lit(8.3),
        duration: T::lit(130.0),
    };
    Preset {
        name: "iswap_mckay",
        device,
        pulse,
        frozen_coupler: ghz(7.0),
        protocol_states: Vec::new(),
    }
}
