//! Command-line surface.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// Unconstrained clustering of the whole data set (alpha = 0.5).
    Cec,
    /// Cluster each half-space independently, then merge and reassign.
    #[value(name = "cec_h")]
    CecH,
}

#[derive(Debug, Parser)]
#[command(
    name = "c3l",
    about = "Boundary-constrained cross-entropy clustering over an alpha sweep",
    long_about = None
)]
pub struct Args {
    /// Input CSV file; a header row is required.
    #[arg(long)]
    pub input: PathBuf,

    /// Feature columns: comma-separated names, zero-based indices, or index
    /// ranges like 2-5. Defaults to every column not used for labels or the
    /// discriminant.
    #[arg(long)]
    pub features: Option<String>,

    /// Decision boundary as "h1,...,hN;a" over the feature columns.
    #[arg(long)]
    pub hyperplane: Option<String>,

    /// Column holding discriminant values; pairs with --threshold. The
    /// column is embedded as an extra leading coordinate.
    #[arg(long)]
    pub discriminant_col: Option<String>,

    /// Decision threshold on the discriminant column.
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Leakage levels to sweep, comma separated, each in (0, 0.5].
    #[arg(long, default_value = "0.01,0.05,0.15,0.25,0.35,0.5")]
    pub alpha: String,

    /// Initial number of clusters.
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// Independent seeded restarts per run.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,

    /// Master seed; every restart derives its stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Baseline methods to run alongside the sweep.
    #[arg(long, value_delimiter = ',')]
    pub baseline: Vec<Baseline>,

    /// Label column used for the NMI column of the summary.
    #[arg(long)]
    pub labels: Option<String>,

    /// Output directory for result documents and the summary table.
    #[arg(long)]
    pub out: PathBuf,

    /// Cap on Hartigan sweeps per restart.
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
}
