use std::process::ExitCode;

#[global_allocator]
static ALLOC: condgrad_bench::alloc::CountingAlloc = condgrad_bench::alloc::CountingAlloc;

fn main() -> ExitCode {
    condgrad_bench::cli::main(std::env::args_os())
}
