use clap::Parser;
use magdisplay_service::cli::{error_line, run, Cli};

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()).await {
        eprintln!("{}", error_line(&e));
        std::process::exit(e.exit_code());
    }
}
