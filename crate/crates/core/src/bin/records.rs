use std::io::Write;
use std::panic;

fn main() {
    let code = panic::catch_unwind(|| {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        records_core::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    })
    .unwrap_or_else(|_| {
        let _ = writeln!(std::io::stderr(), "records: internal error");
        records_core::cli::EXIT_FAILURE
    });
    std::process::exit(code);
}
