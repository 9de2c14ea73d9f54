use std::process::ExitCode;

fn main() -> ExitCode {
    batprop::main_with_args(std::env::args_os())
}
