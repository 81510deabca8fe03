use std::ffi::OsString;
use std::process::ExitCode;

mod commands;
mod manifest;
mod plot;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<OsString> = std::env::args_os().collect();
    ExitCode::from(commands::dispatch(args))
}
