use liouville::cli::{run, Io};

fn main() {
    let stdin = std::io::stdin();
    let (stdout, stderr) = (std::io::stdout(), std::io::stderr());
    let code = run(
        std::env::args_os(),
        Io { stdin: &mut stdin.lock(), stdout: &mut stdout.lock(), stderr: &mut stderr.lock() },
    );
    std::process::exit(code);
}
