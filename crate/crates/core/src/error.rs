use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("node index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty node set")]
    EmptyNodeSet,

    #[error("pure-profile enumeration over {nodes} nodes exceeds the bound of {max}")]
    EnumerationTooLarge { nodes: usize, max: usize },

    /// The closed form only covers equal success and collision slot lengths.
    #[error("closed-form equilibrium needs sigma_succ == sigma_col (got {succ} vs {col}); use general_msne_aon")]
    UnequalSlotLengths { succ: f64, col: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {p} is not a probability")))
    }
}
