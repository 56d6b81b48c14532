use clap::Parser;

fn main() {
    let argv: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let verbosity = ian_cli::Cli::try_parse_from(&argv).map_or(0, |c| c.verbose);
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = ian_cli::run(argv, &mut std::io::stdout().lock());
    std::process::exit(code);
}
