//! Parse a snapshot table, derive `mode_choice_ratio` from the raw game
//! counters and assemble the player × time × feature tensor.

use playerseg::ingest::{assemble_tensor, derive_mode_choice_ratio, mode_choice_ratio, parse_snapshots, FUNNY_MODE_GAMES, TOTAL_GAMES};

const CSV: &str = "\
player_id,time_point,chicken_rate,avg_damage,funny_mode_games,total_games
p1,2023-10-01,0.10,210.5,3,12
p1,2023-10-08,0.15,230.0,0,8
p2,2023-10-01,0.02,120.0,9,9
p2,2023-10-08,0.05,95.5,4,6
p3,2023-10-08,0.30,400.0,1,20
";

fn main() -> playerseg::Result<()> {
    let mut snaps = parse_snapshots(CSV.as_bytes(), &["chicken_rate", "avg_damage", FUNNY_MODE_GAMES, TOTAL_GAMES])?;
    let filled = derive_mode_choice_ratio(&mut snaps)?;
    println!("{} snapshots, mode_choice_ratio derived for {filled}", snaps.len());
    for s in &snaps {
        let problems = s.violations();
        if !problems.is_empty() {
            println!("  {} {}: {}", s.player_id, s.time_point, problems.join("; "));
        }
    }

    // More funny-mode games than games in total is rejected.
    if let Err(e) = mode_choice_ratio(4, 0) {
        println!("mode_choice_ratio(4, 0): {e}");
    }

    let tensor = assemble_tensor(&snaps, &["chicken_rate", "avg_damage", "mode_choice_ratio"])?;
    println!(
        "tensor: {} players x {} time points x {} features",
        tensor.n_players(),
        tensor.n_times(),
        tensor.n_features()
    );
    // p3 has no row for the first week, so that cell is zero.
    for (p, id) in tensor.player_ids().iter().enumerate() {
        let series: Vec<String> = (0..tensor.n_times())
            .map(|t| format!("{:.3}", tensor.get(p, t, 2)))
            .collect();
        println!("  {id} mode_choice_ratio: [{}]", series.join(", "));
    }
    Ok(())
}
