//! The whole batch pipeline on generated data, the same way the
//! `playerseg` binary runs it. Artifacts land in the directory given as the
//! first argument (default: a temporary directory).

use playerseg::pipeline::{run, Command, PipelineConfig};

fn main() -> playerseg::Result<()> {
    let tmp;
    let out = match std::env::args().nth(1) {
        Some(dir) => std::path::PathBuf::from(dir),
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let mut config = PipelineConfig::load(None, &[("synth.n_players".into(), "200".into())])?;
    config.out = out.clone();
    config.seed = 2024;

    for cmd in [
        Command::Synth,
        Command::Ingest,
        Command::ScoreFeatures,
        Command::ClusterTemporal,
        Command::ClusterStatic,
        Command::EmbedGraph,
        Command::GraphMetrics,
        Command::Kol,
        Command::Project,
        Command::Report,
    ] {
        let log = run(cmd, &config)?;
        for line in &log.summary {
            println!("  {line}");
        }
        println!("{:<17} -> {}", cmd.name(), log.artifacts.join(", "));
    }
    println!();
    print!("{}", std::fs::read_to_string(out.join("metrics.csv"))?);
    Ok(())
}
