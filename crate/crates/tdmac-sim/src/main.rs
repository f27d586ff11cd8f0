use std::process::ExitCode;

fn main() -> ExitCode {
    tdmac_sim::cli::main()
}
