use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match mqrk_cli::parse_args(std::env::args_os()) {
        Ok(config) => mqrk_cli::run(&config),
        Err(e) => {
            e.print();
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
