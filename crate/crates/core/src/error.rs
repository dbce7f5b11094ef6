use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("motion frequency {freq_hz} Hz is not below the Nyquist limit {nyquist_hz} Hz")]
    Nyquist { freq_hz: f64, nyquist_hz: f64 },

    #[error("series too short: {len} samples, at least {min} required")]
    TooShort { len: usize, min: usize },

    #[error("frame {width}x{height} is smaller than the {taps}-tap kernel")]
    FrameTooSmall { width: usize, height: usize, taps: usize },

    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),

    #[error("no feature points detected in the region of interest")]
    NoFeatures,

    #[error("reference signal is flat (zero peak-to-peak range)")]
    FlatReference,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("all deflection amplitudes are zero")]
    ZeroAmplitude,

    #[error("responses differ in orientation or size")]
    ResponseMismatch,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
