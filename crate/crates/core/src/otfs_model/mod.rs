//! MIMO-OTFS pilot model: system configuration, pilots, dictionaries, channels,
//! received blocks and evaluation metrics.

mod channel;
mod config;
mod dictionary;
mod metrics;
mod signal;

pub use channel::{
    add_noise, apply_channel, channel_from_taps, draw_cluster_channel, draw_paths_at_angles, full_channel_matrix, noiseless_received,
    reconstruct_channel, sigma2_for_snr, synthesize_received, synthesize_received_snr, ChannelRealization,
    ClusterSpec, PathComponent, ReceivedBlock,
};
pub use config::{SystemConfig, SPEED_OF_LIGHT};
pub use dictionary::DictionaryState;
pub use metrics::{nmse, nmse_single, phase_accumulations, PhaseAccumulations};
pub use signal::{
    array_response, assemble_time_block, atom_matrix, cyclic_shift, delay_doppler_atom, doppler_ramp,
    generate_pilot, shift_matrix, steering_matrices, PilotSignal,
};
