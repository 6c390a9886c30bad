use std::io;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MINCAL_LOG", "warn")).init();
    let stdin = io::stdin();
    let code = mincal_cli::run(std::env::args_os(), &mut stdin.lock(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
