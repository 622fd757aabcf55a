//! Parse a run file, run its grid, and write the CSV tables to stdout.

use iecs::config::RunConfig;
use iecs::metrics::{sweep, write_summary_csv};

const RUN: &str = "
# two loss rates, FEC on and off
n = 24
M = 6
lambda = 4
k = 16
p_e = 0.15, 0.25
clients = 4
fec = both
";

fn main() -> iecs::Result<()> {
    let cfg = RunConfig::parse(RUN)?;
    print!("{}", cfg.to_text());
    let reports = sweep(&cfg.grid()?).into_iter().collect::<iecs::Result<Vec<_>>>()?;
    write_summary_csv(std::io::stdout().lock(), &reports)
}
