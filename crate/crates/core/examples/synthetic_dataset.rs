//! Writes the synthetic evaluation dataset: `cargo run --example synthetic_dataset -- <dir>`.

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "synthetic".to_string());
    match flowqa::synth::write_synthetic_dataset(std::path::Path::new(&dir)) {
        Ok(path) => println!("{}", path.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
