// SPDX-License-Identifier: Apache-2.0

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = glsim::cli::main_with_args(std::env::args_os());
    std::process::ExitCode::from(code as u8)
}
