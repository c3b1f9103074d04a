//! Print the gate decision, candidates and fingerprint for every sentence of
//! a configured document, or build a replay cassette from scripted responses.
//!
//!     cargo run -p ontoscaffold --example fixture_cassette -- CONFIG
//!     cargo run -p ontoscaffold --example fixture_cassette -- CONFIG RESPONSES OUT
//!
//! RESPONSES is a JSON object mapping sentence ids to the list of raw model
//! outputs for successive attempts.

use std::collections::BTreeMap;
use std::path::Path;

use ontoscaffold::config::RunConfig;
use ontoscaffold::mining::BuiltinTagger;
use ontoscaffold::pipeline::{plan, scripted_cassette};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = RunConfig::load(Path::new(&args[0]))?;
    let planned = plan(&config, &BuiltinTagger)?;
    if args.len() < 3 {
        for p in &planned {
            println!("{}  {:?}  {}", p.sentence_id, p.gate, p.text);
            println!("    terms: {:?}", p.candidates.terms);
            println!("    verbs: {:?}", p.candidates.verbs);
        }
        return Ok(());
    }
    let script: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&std::fs::read_to_string(&args[1])?)?;
    std::fs::write(&args[2], scripted_cassette(&planned, &script)?)?;
    Ok(())
}
