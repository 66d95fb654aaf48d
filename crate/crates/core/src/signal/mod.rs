//! Time-domain waveforms, Fourier transforms, windowing and phase unwrapping.

mod fft;
mod trace;
mod unwrap;
mod window;

pub use fft::{default_transform_len, forward_transform, inverse_transform, FftPlan};
pub use trace::{read_trace_csv, write_trace_csv, PulseTrace, Spectrum};
pub use unwrap::{unwrap_phase, wrap_to_pi, zero_dc_offset, Anchor};
pub use window::{apply_window, Window, WindowKind};
